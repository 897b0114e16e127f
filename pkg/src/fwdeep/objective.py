"""Differentiable objectives over a flat parameter vector."""

from __future__ import annotations

from typing import TypeAlias

import numpy as np
from numpy.typing import ArrayLike, NDArray

from fwdeep.errors import InvalidInputError

ParamVector: TypeAlias = NDArray[np.float64]


def as_param_vector(values: ArrayLike, name: str = "x") -> ParamVector:
    """Convert ``values`` to a 1-D float64 array, rejecting NaN/Inf and empty input."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidInputError(f"{name} must have dimension >= 1")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


class Objective:
    """Base class for objectives: subclasses implement ``value`` and ``gradient``.

    ``value_and_gradient`` exists so that implementations sharing a forward
    pass between the two can override it; line search calls it at every
    refinement step.
    """

    def value(self, x: ParamVector) -> float:
        raise NotImplementedError

    def gradient(self, x: ParamVector) -> ParamVector:
        raise NotImplementedError

    def value_and_gradient(self, x: ParamVector) -> tuple[float, ParamVector]:
        return self.value(x), self.gradient(x)


class QuadraticObjective(Objective):
    """Sum of squares ``f(x) = sum_i x_i**2``; the 2-D case is the benchmark bowl."""

    def value(self, x: ParamVector) -> float:
        return quadratic_eval(x)

    def gradient(self, x: ParamVector) -> ParamVector:
        return quadratic_grad(x)


def quadratic_eval(x: ArrayLike) -> float:
    x = as_param_vector(x)
    return float(np.dot(x, x))


def quadratic_grad(x: ArrayLike) -> ParamVector:
    return 2.0 * as_param_vector(x)
