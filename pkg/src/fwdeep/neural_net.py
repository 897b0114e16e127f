"""A small fully connected ReLU network with a tanh output, trained by MSE.

All weights and biases live in one flat vector so that the optimizers in
:mod:`fwdeep.fw_core` can treat the network like any other objective. Layer
``k`` occupies ``W_k`` (shape ``(fan_out, fan_in)``, row-major) followed by
``b_k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from fwdeep.dataset import Dataset
from fwdeep.errors import InvalidInputError
from fwdeep.fw_core import L1Ball
from fwdeep.objective import Objective, ParamVector

LAYER_DIMS = (2, 25, 25, 25, 1)

# Random init is rescaled to this fraction of the ball radius so it starts strictly inside.
INIT_RADIUS_FRACTION = 0.99
INIT_ACTIVE_UNITS = 3
INIT_HIDDEN_BIAS = 0.3


class MlpModel:
    """Layout of the flat parameter vector for a given stack of layer widths."""

    def __init__(self, layer_dims: tuple[int, ...] = LAYER_DIMS):
        if len(layer_dims) < 2 or any(d < 1 for d in layer_dims):
            raise InvalidInputError(f"invalid layer dims {layer_dims!r}")
        self.layer_dims = tuple(layer_dims)
        self._slices = []
        offset = 0
        for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
            w = slice(offset, offset + fan_in * fan_out)
            offset = w.stop
            b = slice(offset, offset + fan_out)
            offset = b.stop
            self._slices.append((w, b, fan_in, fan_out))
        self.n_params = offset

    @property
    def n_layers(self) -> int:
        return len(self._slices)

    def unflatten(self, params: ArrayLike) -> list[tuple[NDArray, NDArray]]:
        """Views ``(W_k, b_k)`` into ``params``; no copies are made."""
        params = self._check(params)
        return [(params[w].reshape(fan_out, fan_in), params[b]) for w, b, fan_in, fan_out in self._slices]

    def flatten(self, layers: list[tuple[NDArray, NDArray]]) -> ParamVector:
        if len(layers) != self.n_layers:
            raise InvalidInputError(f"expected {self.n_layers} layers, got {len(layers)}")
        out = np.empty(self.n_params)
        for (w, b, fan_in, fan_out), (weight, bias) in zip(self._slices, layers):
            if np.shape(weight) != (fan_out, fan_in) or np.shape(bias) != (fan_out,):
                raise InvalidInputError("layer shape mismatch")
            out[w] = np.ravel(weight)
            out[b] = bias
        return out

    def weight_mask(self) -> NDArray[np.bool_]:
        """True on weight-matrix entries, False on biases."""
        mask = np.zeros(self.n_params, dtype=bool)
        for w, _, _, _ in self._slices:
            mask[w] = True
        return mask

    def _check(self, params: ArrayLike) -> ParamVector:
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (self.n_params,):
            raise InvalidInputError(f"expected {self.n_params} parameters, got shape {params.shape}")
        return params

    # forward / backward

    def _forward(self, params: ParamVector, x: NDArray) -> tuple[NDArray, list[NDArray]]:
        """Returns outputs of shape ``(B,)`` and the layer inputs needed by backprop."""
        layers = self.unflatten(params)
        h = x
        inputs = []
        for k, (weight, bias) in enumerate(layers):
            inputs.append(h)
            z = h @ weight.T + bias
            h = np.tanh(z) if k == self.n_layers - 1 else np.maximum(z, 0.0)
        return h[:, 0], inputs

    def predict(self, params: ArrayLike, x: ArrayLike) -> NDArray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        out, _ = self._forward(self._check(params), x)
        return out

    def loss_and_grad(self, params: ArrayLike, x: NDArray, y: NDArray) -> tuple[float, ParamVector]:
        params = self._check(params)
        if len(y) == 0:
            raise InvalidInputError("batch must not be empty")
        out, inputs = self._forward(params, x)
        resid = out - y
        loss = float(np.mean(resid * resid))

        layers = self.unflatten(params)
        grad = np.empty_like(params)
        # dL/dz at the output, through tanh
        delta = (2.0 / len(y)) * resid * (1.0 - out * out)
        delta = delta[:, None]
        for k in range(self.n_layers - 1, -1, -1):
            w_slice, b_slice, _, _ = self._slices[k]
            h = inputs[k]
            grad[w_slice] = (delta.T @ h).ravel()
            grad[b_slice] = delta.sum(axis=0)
            if k > 0:
                weight = layers[k][0]
                # relu'(z) = 1 where z > 0, else 0; h == relu(z) so h > 0 <=> z > 0
                delta = (delta @ weight) * (h > 0)
        return loss, grad


DEFAULT_MODEL = MlpModel()


@dataclass(frozen=True)
class BatchGradient:
    grad: ParamVector
    loss: float


def init_params(
    seed: int,
    ball: L1Ball,
    model: MlpModel = DEFAULT_MODEL,
    active_units: int = INIT_ACTIVE_UNITS,
    hidden_bias: float = INIT_HIDDEN_BIAS,
) -> ParamVector:
    """Sparse start: a narrow Glorot-initialized sub-network, everything else zero.

    ``numpy.random.default_rng(seed)`` picks ``active_units`` units in each
    hidden layer; weights between consecutive active sets are drawn from
    ``U(-a, a)`` with ``a = sqrt(6 / (n_in + n_out))`` counted over the
    active units. Active hidden units get bias ``hidden_bias``; the output
    bias is 0. If the L1 norm exceeds ``0.99 * radius`` the vector is
    rescaled onto that norm.

    A dense random start cannot fit in a radius-10 ball with 1401 entries
    without shrinking every layer ~25x, which leaves four stacked layers with
    vanishing gradients. Concentrating the budget on a few connected units
    keeps the per-layer gain near 1.
    """
    if active_units < 1:
        raise InvalidInputError(f"active_units must be >= 1, got {active_units}")
    rng = np.random.default_rng(seed)
    dims = model.layer_dims
    active = [np.arange(dims[0])]
    active += [np.sort(rng.choice(d, min(active_units, d), replace=False)) for d in dims[1:-1]]
    active.append(np.arange(dims[-1]))
    layers = []
    for k, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        rows, cols = active[k + 1], active[k]
        a = np.sqrt(6.0 / (len(rows) + len(cols)))
        weight = np.zeros((fan_out, fan_in))
        weight[np.ix_(rows, cols)] = rng.uniform(-a, a, size=(len(rows), len(cols)))
        bias = np.zeros(fan_out)
        if k < model.n_layers - 1:
            bias[rows] = hidden_bias
        layers.append((weight, bias))
    params = model.flatten(layers)
    limit = INIT_RADIUS_FRACTION * ball.radius
    norm = float(np.sum(np.abs(params)))
    if norm > limit:
        params *= limit / norm
    return params


def forward(params: ArrayLike, point: ArrayLike, model: MlpModel = DEFAULT_MODEL) -> float:
    """Network output for a single 2-D input."""
    return float(model.predict(params, np.asarray(point, dtype=np.float64).reshape(1, -1))[0])


def batch_loss_and_grad(params: ArrayLike, batch: Dataset, model: MlpModel = DEFAULT_MODEL) -> BatchGradient:
    """Mean squared error over ``batch`` and its exact gradient."""
    if len(batch) == 0:
        raise InvalidInputError("batch must not be empty")
    loss, grad = model.loss_and_grad(params, batch.x, batch.y)
    return BatchGradient(grad, loss)


def penalized_loss_and_grad(
    params: ArrayLike,
    batch: Dataset,
    penalty: float,
    model: MlpModel = DEFAULT_MODEL,
    mask: NDArray[np.bool_] | None = None,
) -> BatchGradient:
    """MSE plus ``penalty * ||params||_1`` (restricted to ``mask`` when given).

    The subgradient of ``|w|`` at zero is taken as 0.
    """
    if penalty < 0:
        raise InvalidInputError(f"penalty must be >= 0, got {penalty!r}")
    params = np.asarray(params, dtype=np.float64)
    base = batch_loss_and_grad(params, batch, model)
    if penalty == 0:
        return base
    penalized = params if mask is None else np.where(mask, params, 0.0)
    loss = base.loss + penalty * float(np.sum(np.abs(penalized)))
    grad = base.grad + penalty * np.sign(penalized)
    return BatchGradient(grad, loss)


class MlpObjective(Objective):
    """Training MSE on a fixed dataset, as a function of the flat parameters."""

    def __init__(self, data: Dataset, model: MlpModel = DEFAULT_MODEL):
        if len(data) == 0:
            raise InvalidInputError("dataset must not be empty")
        self.data = data
        self.model = model

    def value(self, x: ParamVector) -> float:
        out = self.model.predict(x, self.data.x)
        resid = out - self.data.y
        return float(np.mean(resid * resid))

    def gradient(self, x: ParamVector) -> ParamVector:
        return self.value_and_gradient(x)[1]

    def value_and_gradient(self, x: ParamVector) -> tuple[float, ParamVector]:
        return self.model.loss_and_grad(x, self.data.x, self.data.y)
