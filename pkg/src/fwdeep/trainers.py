"""Training loops for the circle classifier: Frank-Wolfe and penalized gradient descent.

Both optimizers come in a full-batch and a mini-batch flavour. Metrics are
always measured on the full train and test sets once per epoch.
"""

from __future__ import annotations

import csv
import enum
import math
import os
import time
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from fwdeep import dataset as ds
from fwdeep.dataset import Dataset
from fwdeep.errors import InvalidInputError, NumericalError
from fwdeep.fw_core import (
    L1Ball,
    LineSearchConfig,
    LmoVertex,
    StepSizeRule,
    duality_gap,
    fw_step,
    l1_lmo,
    line_search_gamma,
)
from fwdeep.neural_net import DEFAULT_MODEL, MlpModel, MlpObjective, init_params, penalized_loss_and_grad
from fwdeep.objective import Objective, ParamVector

# Called with (iteration, params) after every parameter update.
Observer = Callable[[int, ParamVector], None]

HISTORY_HEADER = ("epoch", "train_loss", "test_acc", "gamma", "gap", "l1norm", "ms")

DEFAULT_SEED_INIT = 7
DEFAULT_SEED_SHUFFLE = 11


class Method(str, enum.Enum):
    FW = "fw"
    GD = "gd"


@dataclass(frozen=True)
class TrainConfig:
    """Everything that determines a training run.

    ``batch_size=None`` means full batch. ``rule`` and ``radius`` apply to
    Frank-Wolfe only; ``learning_rate`` and ``penalty`` to gradient descent.

    ``penalty`` weighs ``||w||_1`` against the squared error *summed* over
    the training set. Gradient descent minimizes that objective divided by
    the training-set size ``N``, i.e. ``MSE + (penalty / N) * ||w||_1``, so
    the learning rate keeps its per-sample meaning.
    """

    method: Method
    epochs: int
    rule: StepSizeRule | None = None
    learning_rate: float = 0.1
    penalty: float = 0.1
    radius: float = 10.0
    batch_size: int | None = None
    seed_init: int = DEFAULT_SEED_INIT
    seed_train: int = ds.DEFAULT_TRAIN_SEED
    seed_test: int = ds.DEFAULT_TEST_SEED
    seed_shuffle: int = DEFAULT_SEED_SHUFFLE
    include_biases: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise InvalidInputError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size is not None and self.batch_size < 1:
            raise InvalidInputError(f"batch size must be >= 1, got {self.batch_size}")
        if self.method is Method.FW and self.rule is None:
            raise InvalidInputError("Frank-Wolfe needs a step-size rule")
        if self.method is Method.GD and not self.learning_rate > 0:
            raise InvalidInputError(f"learning rate must be > 0, got {self.learning_rate}")
        if self.penalty < 0:
            raise InvalidInputError(f"penalty must be >= 0, got {self.penalty}")
        if not self.radius > 0:
            raise InvalidInputError(f"radius must be > 0, got {self.radius}")

    @property
    def ball(self) -> L1Ball:
        return L1Ball(self.radius)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    test_accuracy: float
    gamma: float | None
    duality_gap: float | None
    l1_norm: float
    wall_time_ms: float


@dataclass
class RunHistory:
    label: str
    records: list[EpochRecord] = field(default_factory=list)

    @property
    def final(self) -> EpochRecord:
        return self.records[-1]

    def best_test_accuracy(self) -> float:
        return max(r.test_accuracy for r in self.records)

    def to_csv(self, path: str | os.PathLike, timing: bool = True) -> None:
        """Write one row per epoch; with ``timing=False`` the ``ms`` column is 0 so output is reproducible."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(HISTORY_HEADER)
            for r in self.records:
                writer.writerow(
                    (
                        r.epoch,
                        repr(r.train_loss),
                        repr(r.test_accuracy),
                        "" if r.gamma is None else repr(r.gamma),
                        "" if r.duality_gap is None else repr(r.duality_gap),
                        repr(r.l1_norm),
                        f"{r.wall_time_ms:.3f}" if timing else "0",
                    )
                )


def evaluate_accuracy(params: ParamVector, data: Dataset, model: MlpModel = DEFAULT_MODEL) -> float:
    """Fraction of samples whose predicted sign matches the label; output 0 counts as +1."""
    if len(data) == 0:
        raise InvalidInputError("dataset must not be empty")
    pred = np.where(model.predict(params, data.x) >= 0.0, 1.0, -1.0)
    return float(np.mean(pred == data.y))


def deep_line_search(
    params: ParamVector,
    s: LmoVertex,
    data: Dataset | Objective,
    config: LineSearchConfig = LineSearchConfig(),
) -> float:
    """Grid scan over {0, .01, ..., .99}, then projected GD on gamma (step .01, Armijo backtracking).

    ``data`` is normally the training set (or the current mini-batch); any
    :class:`Objective` is accepted so the procedure can be checked on a
    function with a known minimizer.
    """
    objective = data if isinstance(data, Objective) else MlpObjective(data)
    return line_search_gamma(objective, params, s, config)


class _Restricted(Objective):
    """View of ``base`` over the masked coordinates, with the rest held fixed."""

    def __init__(self, base: Objective, full: ParamVector, mask: NDArray[np.bool_]):
        self.base = base
        self.full = full
        self.mask = mask

    def _embed(self, x: ParamVector) -> ParamVector:
        full = self.full.copy()
        full[self.mask] = x
        return full

    def value(self, x: ParamVector) -> float:
        return self.base.value(self._embed(x))

    def gradient(self, x: ParamVector) -> ParamVector:
        return self.base.gradient(self._embed(x))[self.mask]

    def value_and_gradient(self, x: ParamVector) -> tuple[float, ParamVector]:
        val, grad = self.base.value_and_gradient(self._embed(x))
        return val, grad[self.mask]


def _fw_iteration(
    objective: Objective,
    params: ParamVector,
    t: int,
    rule: StepSizeRule,
    ball: L1Ball,
    mask: NDArray[np.bool_] | None,
    epoch: int,
) -> tuple[ParamVector, float, float]:
    """One Frank-Wolfe step; returns ``(new_params, gamma, gap)``."""
    loss, grad = objective.value_and_gradient(params)
    if not (math.isfinite(loss) and np.all(np.isfinite(grad))):
        raise NumericalError(f"training loss is not finite in epoch {epoch}", iteration=epoch)
    if mask is None:
        s = l1_lmo(grad, ball)
        gap = duality_gap(grad, params, s)
        gamma = rule.gamma(t, grad, objective, params, s)
        return fw_step(params, s, gamma), gamma, gap

    sub_obj = _Restricted(objective, params, mask)
    sub_x = params[mask]
    sub_g = grad[mask]
    s = l1_lmo(sub_g, ball)
    gap = duality_gap(sub_g, sub_x, s)
    gamma = rule.gamma(t, sub_g, sub_obj, sub_x, s)
    new = params.copy()
    new[mask] = fw_step(sub_x, s, gamma)
    return new, gamma, gap


def _constraint_mask(config: TrainConfig, model: MlpModel) -> NDArray[np.bool_] | None:
    return None if config.include_biases else model.weight_mask()


def _l1(params: ParamVector, mask: NDArray[np.bool_] | None) -> float:
    return float(np.sum(np.abs(params if mask is None else params[mask])))


def _datasets(config: TrainConfig, train: Dataset | None, test: Dataset | None) -> tuple[Dataset, Dataset]:
    if train is None:
        train = ds.generate(ds.DEFAULT_SIZE, config.seed_train)
    if test is None:
        test = ds.generate(ds.DEFAULT_SIZE, config.seed_test)
    return train, test


def _batches(n: int, batch_size: int | None, rng: np.random.Generator | None) -> list[NDArray[np.intp]]:
    """Partition ``range(n)`` into shuffled batches, each sorted so summation order follows sample index."""
    if batch_size is None or rng is None:
        return [np.arange(n)]
    perm = rng.permutation(n)
    return [np.sort(perm[i : i + batch_size]) for i in range(0, n, batch_size)]


def _record(epoch, params, train_obj, test, mask, gamma, gap, t0, model) -> EpochRecord:
    ms = (time.perf_counter() - t0) * 1000.0
    loss = train_obj.value(params)
    if not math.isfinite(loss):
        raise NumericalError(f"training loss is not finite in epoch {epoch}", iteration=epoch)
    return EpochRecord(epoch, loss, evaluate_accuracy(params, test, model), gamma, gap, _l1(params, mask), ms)


def run_label(config: TrainConfig) -> str:
    if config.method is Method.GD:
        return "gd"
    return config.rule.kind.value


def train_full_fw(
    config: TrainConfig,
    train: Dataset | None = None,
    test: Dataset | None = None,
    model: MlpModel = DEFAULT_MODEL,
    observer: Observer | None = None,
) -> RunHistory:
    """Full-batch Frank-Wolfe: one iteration per epoch on the whole training set."""
    if config.method is not Method.FW:
        raise InvalidInputError("train_full_fw needs method FW")
    train, test = _datasets(config, train, test)
    ball = config.ball
    mask = _constraint_mask(config, model)
    params = init_params(config.seed_init, ball, model)
    objective = MlpObjective(train, model)
    history = RunHistory(run_label(config))
    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        params, gamma, gap = _fw_iteration(objective, params, epoch - 1, config.rule, ball, mask, epoch)
        if observer:
            observer(epoch - 1, params)
        history.records.append(_record(epoch, params, objective, test, mask, gamma, gap, t0, model))
    return history


def train_stochastic_fw(
    config: TrainConfig,
    train: Dataset | None = None,
    test: Dataset | None = None,
    model: MlpModel = DEFAULT_MODEL,
    observer: Observer | None = None,
) -> RunHistory:
    """Mini-batch Frank-Wolfe: one iteration per batch, gradient and line search on that batch.

    The decreasing rule's counter runs over iterations, not epochs. The
    recorded ``gamma`` and ``gap`` are means over the epoch's batches.
    """
    if config.method is not Method.FW:
        raise InvalidInputError("train_stochastic_fw needs method FW")
    train, test = _datasets(config, train, test)
    batch_size = len(train) if config.batch_size is None else config.batch_size
    if batch_size > len(train):
        raise InvalidInputError(f"batch size {batch_size} exceeds training set size {len(train)}")
    ball = config.ball
    mask = _constraint_mask(config, model)
    params = init_params(config.seed_init, ball, model)
    full_objective = MlpObjective(train, model)
    rng = np.random.default_rng(config.seed_shuffle)
    history = RunHistory(run_label(config))
    t = 0
    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        gammas, gaps = [], []
        for idx in _batches(len(train), batch_size, rng):
            objective = MlpObjective(train.subset(idx), model)
            params, gamma, gap = _fw_iteration(objective, params, t, config.rule, ball, mask, epoch)
            gammas.append(gamma)
            gaps.append(gap)
            if observer:
                observer(t, params)
            t += 1
        history.records.append(
            _record(epoch, params, full_objective, test, mask, sum(gammas) / len(gammas), sum(gaps) / len(gaps), t0, model)
        )
    return history


def gd_step(params: ParamVector, grad: ParamVector, learning_rate: float) -> ParamVector:
    """Plain gradient step ``params - learning_rate * grad``."""
    return params - learning_rate * grad


def train_gd(
    config: TrainConfig,
    train: Dataset | None = None,
    test: Dataset | None = None,
    model: MlpModel = DEFAULT_MODEL,
    observer: Observer | None = None,
) -> RunHistory:
    """Unconstrained (S)GD on ``MSE + (penalty / N) * ||w||_1``; ``batch_size=None`` for full batch."""
    if config.method is not Method.GD:
        raise InvalidInputError("train_gd needs method GD")
    train, test = _datasets(config, train, test)
    if config.batch_size is not None and config.batch_size > len(train):
        raise InvalidInputError(f"batch size {config.batch_size} exceeds training set size {len(train)}")
    mask = _constraint_mask(config, model)
    penalty = config.penalty / len(train)
    params = init_params(config.seed_init, config.ball, model)
    full_objective = MlpObjective(train, model)
    rng = None if config.batch_size is None else np.random.default_rng(config.seed_shuffle)
    history = RunHistory(run_label(config))
    t = 0
    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        for idx in _batches(len(train), config.batch_size, rng):
            batch = train if config.batch_size is None else train.subset(idx)
            step = penalized_loss_and_grad(params, batch, penalty, model, mask)
            if not (math.isfinite(step.loss) and np.all(np.isfinite(step.grad))):
                raise NumericalError(f"training loss is not finite in epoch {epoch}", iteration=epoch)
            params = gd_step(params, step.grad, config.learning_rate)
            if observer:
                observer(t, params)
            t += 1
        history.records.append(_record(epoch, params, full_objective, test, mask, None, None, t0, model))
    return history


def train(
    config: TrainConfig,
    train: Dataset | None = None,
    test: Dataset | None = None,
    observer: Observer | None = None,
) -> RunHistory:
    """Dispatch on method and batch size."""
    if config.method is Method.GD:
        return train_gd(config, train, test, observer=observer)
    if config.batch_size is None:
        return train_full_fw(config, train, test, observer=observer)
    return train_stochastic_fw(config, train, test, observer=observer)

