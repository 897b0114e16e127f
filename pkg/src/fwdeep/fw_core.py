"""Frank-Wolfe over the L1 ball: oracle, update, step-size rules and the main loop.

The feasible set is the closed ball ``{x : sum_i |x_i| <= radius}``. Its
vertices are ``+/- radius * e_i``, so the linear minimization oracle reduces
to an argmax over gradient magnitudes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from fwdeep.errors import InvalidInputError, NumericalError
from fwdeep.objective import Objective, ParamVector, as_param_vector

# Exhaustive enumeration beyond this is pointless for a test oracle.
BRUTE_FORCE_MAX_DIM = 10_000


@dataclass(frozen=True)
class L1Ball:
    radius: float

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise InvalidInputError(f"radius must be a positive finite number, got {self.radius!r}")

    def contains(self, x: ArrayLike, tol: float = 0.0) -> bool:
        return float(np.sum(np.abs(x))) <= self.radius + tol


@dataclass(frozen=True)
class LmoVertex:
    """A ball vertex ``signed_magnitude * e_index`` living in ``R^dim``."""

    index: int
    signed_magnitude: float
    dim: int

    def densify(self) -> ParamVector:
        v = np.zeros(self.dim)
        v[self.index] = self.signed_magnitude
        return v


def l1_lmo(gradient: ArrayLike, ball: L1Ball) -> LmoVertex:
    """Return the ball vertex minimizing ``<gradient, s>``.

    Ties on ``|g_i|`` go to the lowest index (``np.argmax`` semantics) and a
    zero entry is treated as positive, so a zero gradient gives ``-radius * e_0``.
    """
    g = as_param_vector(gradient, "gradient")
    j = int(np.argmax(np.abs(g)))
    sign = 1.0 if g[j] >= 0 else -1.0
    return LmoVertex(j, -sign * ball.radius, g.size)


def brute_force_lmo(gradient: ArrayLike, ball: L1Ball) -> LmoVertex:
    """Evaluate ``<gradient, v>`` at all ``2n`` vertices and keep the smallest.

    Reference oracle for :func:`l1_lmo`. Vertices are visited by ascending
    index, ``-radius`` before ``+radius``, and only a strictly smaller value
    replaces the incumbent, which reproduces the same tie-breaking.
    """
    g = as_param_vector(gradient, "gradient")
    n = g.size
    if n > BRUTE_FORCE_MAX_DIM:
        raise InvalidInputError(f"brute_force_lmo supports dimension <= {BRUTE_FORCE_MAX_DIM}, got {n}")
    best = None
    best_val = math.inf
    for i in range(n):
        gi = float(g[i])
        for magnitude in (-ball.radius, ball.radius):
            val = gi * magnitude
            if val < best_val:
                best_val = val
                best = (i, magnitude)
    return LmoVertex(best[0], best[1], n)


def fw_step(x: ArrayLike, s: LmoVertex, gamma: float) -> ParamVector:
    """Convex combination ``(1 - gamma) * x + gamma * s``."""
    if not (0.0 <= gamma <= 1.0):
        raise InvalidInputError(f"gamma must lie in [0, 1], got {gamma!r}")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (s.dim,):
        raise InvalidInputError(f"dimension mismatch: x has shape {x.shape}, vertex has dim {s.dim}")
    out = (1.0 - gamma) * x
    out[s.index] += gamma * s.signed_magnitude
    return out


def duality_gap(gradient: ArrayLike, x: ArrayLike, s: LmoVertex) -> float:
    """``<gradient, x - s>``; an upper bound on ``f(x) - f*`` for convex ``f``."""
    g = np.asarray(gradient, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if g.shape != x.shape or x.shape != (s.dim,):
        raise InvalidInputError("gradient, x and vertex dimensions must match")
    gap = float(np.dot(g, x)) - float(g[s.index]) * s.signed_magnitude
    if not math.isfinite(gap):
        raise NumericalError("duality gap is not finite")
    return gap


def gamma_decreasing(t: int) -> float:
    """The classical ``2 / (t + 2)`` schedule."""
    if t < 0:
        raise InvalidInputError(f"iteration counter must be >= 0, got {t}")
    return 2.0 / (2.0 + t)


def gamma_proportional(gradient: ArrayLike, constant: float) -> float:
    """``min(1, constant * ||gradient||_2)``."""
    if not constant > 0:
        raise InvalidInputError(f"constant must be > 0, got {constant!r}")
    g = as_param_vector(gradient, "gradient")
    return min(1.0, constant * float(np.linalg.norm(g)))


@dataclass(frozen=True)
class LineSearchConfig:
    """Grid scan followed by projected gradient descent on ``gamma``.

    The grid is ``{0, 1/grid_points, ..., (grid_points - 1)/grid_points}``;
    ``gamma = 1`` itself is never on the grid but refinement may reach it.
    With ``backtrack`` set, a refinement step that fails the Armijo test is
    halved (at most ``max_halvings`` times) instead of being taken.
    """

    grid_points: int = 100
    steps: int = 100
    step_size: float = 0.01
    backtrack: bool = True
    max_halvings: int = 40

    def __post_init__(self):
        if self.grid_points < 1:
            raise InvalidInputError("grid_points must be >= 1")
        if self.steps < 0:
            raise InvalidInputError("steps must be >= 0")
        if not self.step_size > 0:
            raise InvalidInputError("step_size must be > 0")
        if self.max_halvings < 0:
            raise InvalidInputError("max_halvings must be >= 0")


# Armijo sufficient-decrease constant.
_ARMIJO = 1e-4


def _phi(objective: Objective, x: ParamVector, s: LmoVertex, gamma: float) -> float:
    val = objective.value(fw_step(x, s, gamma))
    if not math.isfinite(val):
        raise NumericalError(f"line-search objective not finite at gamma={gamma}", gamma=gamma)
    return val


def _phi_and_slope(objective: Objective, x: ParamVector, s: LmoVertex, gamma: float) -> tuple[float, float]:
    val, grad = objective.value_and_gradient(fw_step(x, s, gamma))
    # d/dgamma f((1-gamma) x + gamma s) = <grad, s - x>
    slope = float(grad[s.index]) * s.signed_magnitude - float(np.dot(grad, x))
    if not (math.isfinite(val) and math.isfinite(slope)):
        raise NumericalError(f"line-search objective or slope not finite at gamma={gamma}", gamma=gamma)
    return val, slope


def line_search_gamma(
    objective: Objective,
    x: ArrayLike,
    s: LmoVertex,
    config: LineSearchConfig = LineSearchConfig(),
) -> float:
    """Approximately minimize ``phi(gamma) = f((1 - gamma) x + gamma s)`` on [0, 1].

    Scans the grid, then runs up to ``config.steps`` projected gradient steps
    from the best grid point, clamping to [0, 1] after each step, and returns
    the last iterate.

    Without backtracking the refinement is only monotone while the slope of
    ``phi`` is Lipschitz with constant below ``2 / config.step_size``. On a
    network with a radius-10 ball that bound is routinely violated: the
    iterate bounces between 0 and a point above the minimizer and can end
    exactly where it started. Backtracking makes every accepted step decrease
    ``phi``, so the result is never worse than the best grid point.
    """
    x = np.asarray(x, dtype=np.float64)
    gamma, best_val = 0.0, math.inf
    for k in range(config.grid_points):
        g = k / config.grid_points
        val = _phi(objective, x, s, g)
        if val < best_val:
            gamma, best_val = g, val

    for _ in range(config.steps):
        val, slope = _phi_and_slope(objective, x, s, gamma)
        step = config.step_size
        trial = min(1.0, max(0.0, gamma - step * slope))
        if not config.backtrack:
            gamma = trial
            continue
        for _ in range(config.max_halvings + 1):
            if trial == gamma:
                break
            if _phi(objective, x, s, trial) <= val + _ARMIJO * slope * (trial - gamma):
                break
            step *= 0.5
            trial = min(1.0, max(0.0, gamma - step * slope))
        else:
            trial = gamma
        if trial == gamma:
            break
        gamma = trial
    return gamma


class StepKind(str, enum.Enum):
    FIXED = "fixed"
    PROPORTIONAL = "prop"
    DECREASING = "decreasing"
    LINE_SEARCH = "linesearch"


@dataclass(frozen=True)
class StepSizeRule:
    """How ``gamma_t`` is chosen at each iteration.

    Use the constructors :meth:`fixed`, :meth:`proportional`,
    :meth:`decreasing` and :meth:`line_search` rather than filling fields
    by hand.
    """

    kind: StepKind
    constant: float | None = None
    line_search: LineSearchConfig = field(default_factory=LineSearchConfig)

    def __post_init__(self):
        if self.kind is StepKind.FIXED:
            # 0 is allowed: it makes every step the identity
            if self.constant is None or not (0.0 <= self.constant <= 1.0):
                raise InvalidInputError(f"fixed step needs a constant in [0, 1], got {self.constant!r}")
        elif self.kind is StepKind.PROPORTIONAL:
            if self.constant is None or not (math.isfinite(self.constant) and self.constant > 0):
                raise InvalidInputError(f"proportional step needs a constant > 0, got {self.constant!r}")

    @classmethod
    def fixed(cls, constant: float) -> StepSizeRule:
        return cls(StepKind.FIXED, constant)

    @classmethod
    def proportional(cls, constant: float) -> StepSizeRule:
        return cls(StepKind.PROPORTIONAL, constant)

    @classmethod
    def decreasing(cls) -> StepSizeRule:
        return cls(StepKind.DECREASING)

    @classmethod
    def line_search_rule(cls, config: LineSearchConfig | None = None) -> StepSizeRule:
        return cls(StepKind.LINE_SEARCH, None, config or LineSearchConfig())

    def gamma(
        self,
        t: int,
        gradient: ParamVector,
        objective: Objective | None = None,
        x: ParamVector | None = None,
        s: LmoVertex | None = None,
    ) -> float:
        """Step size for iteration ``t``; line search also needs ``objective``, ``x`` and ``s``."""
        if self.kind is StepKind.FIXED:
            return float(self.constant)
        if self.kind is StepKind.PROPORTIONAL:
            return gamma_proportional(gradient, self.constant)
        if self.kind is StepKind.DECREASING:
            return gamma_decreasing(t)
        if objective is None or x is None or s is None:
            raise InvalidInputError("line search needs the objective, the iterate and the vertex")
        return line_search_gamma(objective, x, s, self.line_search)


@dataclass(frozen=True)
class FwState:
    """Iterate ``x`` at step ``t`` with its value and gap.

    ``gamma`` is the step taken *from* this iterate; it is ``None`` on the
    final state of a run.
    """

    t: int
    x: ParamVector
    value: float
    gamma: float | None
    gap: float


def fw_run(
    objective: Objective,
    ball: L1Ball,
    x0: ArrayLike,
    rule: StepSizeRule,
    iterations: int,
) -> list[FwState]:
    """Run ``iterations`` Frank-Wolfe steps from ``x0``.

    Returns ``iterations + 1`` states, ``t = 0 .. iterations``.
    """
    x = as_param_vector(x0, "x0").copy()
    if iterations < 1:
        raise InvalidInputError(f"iterations must be >= 1, got {iterations}")
    if not ball.contains(x, tol=1e-12 * ball.radius):
        raise InvalidInputError(f"x0 is outside the L1 ball of radius {ball.radius}")

    trajectory = []
    for t in range(iterations + 1):
        value, grad = objective.value_and_gradient(x)
        if not (math.isfinite(value) and np.all(np.isfinite(grad))):
            raise NumericalError(f"objective not finite at iteration {t}", iteration=t)
        s = l1_lmo(grad, ball)
        gap = duality_gap(grad, x, s)
        if t == iterations:
            trajectory.append(FwState(t, x, value, None, gap))
            break
        gamma = rule.gamma(t, grad, objective, x, s)
        trajectory.append(FwState(t, x, value, gamma, gap))
        x = fw_step(x, s, gamma)
    return trajectory
