"""Dense tanh networks with hand-rolled parameter and input differentiation.

All arrays are float64. Parameters live as per-layer (weight, bias) pairs
with an exact flat-vector view consumed by the optimizers and the binary
checkpoint format. Reverse mode supplies parameter gradients, forward mode
(batched dual numbers) supplies first derivatives with respect to the
network inputs; both are verified against finite differences in the tests.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, ContractError


@dataclass(frozen=True)
class NetworkConfig:
    """Shape of a dense feed-forward network: input -> hidden*L -> output."""

    input_dim: int
    output_dim: int
    hidden_layers: int
    hidden_width: int
    activation: str = "tanh"

    def __post_init__(self):
        if self.input_dim < 2:
            raise ConfigError(f"input_dim must be >= 2, got {self.input_dim}")
        if self.output_dim < 1:
            raise ConfigError(f"output_dim must be >= 1, got {self.output_dim}")
        if self.hidden_layers < 1:
            raise ConfigError(f"hidden_layers must be >= 1, got {self.hidden_layers}")
        if self.hidden_width < 1:
            raise ConfigError(f"hidden_width must be >= 1, got {self.hidden_width}")
        if self.activation != "tanh":
            raise ConfigError(f"unsupported activation {self.activation!r}")

    def layer_sizes(self) -> list[int]:
        return [self.input_dim] + [self.hidden_width] * self.hidden_layers + [self.output_dim]


class NetworkParams:
    """Per-layer weights/biases plus an exact flat-vector view of length P."""

    __slots__ = ("weights", "biases")

    def __init__(self, weights: Sequence[np.ndarray], biases: Sequence[np.ndarray]):
        if len(weights) != len(biases) or not weights:
            raise ConfigError("weights and biases must be nonempty and aligned")
        for i, (w, b) in enumerate(zip(weights, biases)):
            if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
                raise ConfigError(f"layer {i}: weight {w.shape} / bias {b.shape} mismatch")
            if i > 0 and w.shape[1] != weights[i - 1].shape[0]:
                raise ConfigError(f"layer {i}: fan-in {w.shape[1]} does not chain")
        self.weights = tuple(np.asarray(w, dtype=np.float64) for w in weights)
        self.biases = tuple(np.asarray(b, dtype=np.float64) for b in biases)

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def flatten(self) -> np.ndarray:
        """Flat view in layer order: W0.ravel(), b0, W1, b1, ..."""
        return np.concatenate(
            [a for w, b in zip(self.weights, self.biases) for a in (w.ravel(), b)]
        )

    @staticmethod
    def from_flat(layer_sizes: Sequence[int], vec: np.ndarray) -> "NetworkParams":
        vec = np.asarray(vec, dtype=np.float64)
        expected = sum((fi + 1) * fo for fi, fo in zip(layer_sizes[:-1], layer_sizes[1:]))
        if vec.size != expected:
            raise ContractError(f"flat vector length {vec.size} != expected {expected}")
        weights, biases = [], []
        k = 0
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            weights.append(vec[k : k + fan_out * fan_in].reshape(fan_out, fan_in).copy())
            k += fan_out * fan_in
            biases.append(vec[k : k + fan_out].copy())
            k += fan_out
        return NetworkParams(weights, biases)

    def copy(self) -> "NetworkParams":
        return NetworkParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])


def init_network(config: NetworkConfig, seed: int) -> NetworkParams:
    """Glorot-uniform weights (limit sqrt(6/(fan_in+fan_out))), zero biases."""
    rng = np.random.default_rng(seed)
    sizes = config.layer_sizes()
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return NetworkParams(weights, biases)


@dataclass(frozen=True)
class AffineMaps:
    """Fixed input normalization and per-component output scaling.

    The raw network sees z = (input - in_shift) * in_scale and its output is
    multiplied componentwise by out_scale. Constants only; they never carry
    gradient state and are reconstructed from the experiment config.
    """

    in_shift: np.ndarray
    in_scale: np.ndarray
    out_scale: np.ndarray

    @staticmethod
    def identity(input_dim: int, output_dim: int) -> "AffineMaps":
        return AffineMaps(np.zeros(input_dim), np.ones(input_dim), np.ones(output_dim))


def _identity_maps(params: NetworkParams) -> AffineMaps:
    sizes = params.layer_sizes()
    return AffineMaps.identity(sizes[0], sizes[-1])


def eval_batch(params: NetworkParams, X: np.ndarray, maps: AffineMaps | None = None) -> np.ndarray:
    """Batched forward pass: X (n, input_dim) -> (n, output_dim)."""
    Y, _ = _eval_cached(params, X, maps)
    return Y


def _eval_cached(params, X, maps):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.layer_sizes()[0]:
        raise ContractError(f"input shape {X.shape} incompatible with network")
    if maps is None:
        maps = _identity_maps(params)
    A = (X - maps.in_shift) * maps.in_scale
    acts = [A]
    for W, b in zip(params.weights[:-1], params.biases[:-1]):
        Z = A @ W.T
        Z += b
        A = np.tanh(Z, out=Z)
        acts.append(A)
    Y = A @ params.weights[-1].T + params.biases[-1]
    Y *= maps.out_scale
    return Y, acts


def grad_batch(
    params: NetworkParams,
    X: np.ndarray,
    cotangents: np.ndarray,
    maps: AffineMaps | None = None,
    acts: list[np.ndarray] | None = None,
) -> np.ndarray:
    """Reverse-mode parameter gradient of sum_i cot_i . net(X_i); flat (P,).

    A supplied ``acts`` cache is consumed (overwritten in place).
    """
    if maps is None:
        maps = _identity_maps(params)
    if acts is None:
        _, acts = _eval_cached(params, X, maps)
    C = np.asarray(cotangents, dtype=np.float64)
    if C.shape != (acts[0].shape[0], params.layer_sizes()[-1]):
        raise ContractError("cotangent batch does not match input batch")
    C = C * maps.out_scale
    gw = [None] * params.n_layers
    gb = [None] * params.n_layers
    gw[-1] = C.T @ acts[-1]
    gb[-1] = C.sum(axis=0)
    D = C @ params.weights[-1]
    for i in range(params.n_layers - 2, -1, -1):
        # acts[i + 1] is dead after this layer; reuse it for 1 - tanh^2
        S = acts[i + 1]
        np.multiply(S, S, out=S)
        np.subtract(1.0, S, out=S)
        Z = np.multiply(D, S, out=S)
        gw[i] = Z.T @ acts[i]
        gb[i] = Z.sum(axis=0)
        if i > 0:
            D = Z @ params.weights[i]
    return np.concatenate([a for w, b in zip(gw, gb) for a in (w.ravel(), b)])


def jet_batch(
    params: NetworkParams, X: np.ndarray, maps: AffineMaps | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Forward-mode values and input derivatives.

    Returns (Y (n, m), J (n, m, k)) with J[i, :, j] = d net(X_i) / d X_i[j].
    """
    Y, J, _ = _jet_cached(params, X, maps)
    return Y, J


def _jet_cached(params, X, maps):
    X = np.asarray(X, dtype=np.float64)
    k = X.shape[1]
    if maps is None:
        maps = _identity_maps(params)
    A = (X - maps.in_shift) * maps.in_scale
    J = np.broadcast_to(np.diag(maps.in_scale), (X.shape[0], k, k))
    acts, tans, pre_tans = [A], [J], []
    for W, b in zip(params.weights[:-1], params.biases[:-1]):
        Jz = np.einsum("npk,hp->nhk", J, W, optimize=True)
        A = np.tanh(A @ W.T + b)
        J = (1.0 - A**2)[:, :, None] * Jz
        acts.append(A)
        pre_tans.append(Jz)
        tans.append(J)
    Wl = params.weights[-1]
    Y = (A @ Wl.T + params.biases[-1]) * maps.out_scale
    Jy = np.einsum("npk,op->nok", J, Wl, optimize=True) * maps.out_scale[None, :, None]
    return Y, Jy, (acts, tans, pre_tans)


def jet_grad_batch(
    params: NetworkParams,
    X: np.ndarray,
    val_cot: np.ndarray,
    jet_cot: np.ndarray,
    maps: AffineMaps | None = None,
    cache=None,
) -> np.ndarray:
    """Parameter gradient of sum_i (val_cot_i . Y_i + jet_cot_i : J_i).

    Reverse pass through the forward-mode computation of jet_batch; needed by
    the strong-form collocation loss whose residual contains input derivatives.
    """
    if maps is None:
        maps = _identity_maps(params)
    if cache is None:
        _, _, cache = _jet_cached(params, X, maps)
    acts, tans, pre_tans = cache
    Ybar = np.asarray(val_cot, dtype=np.float64) * maps.out_scale
    Jbar = np.asarray(jet_cot, dtype=np.float64) * maps.out_scale[None, :, None]
    gw = [None] * params.n_layers
    gb = [None] * params.n_layers
    Wl = params.weights[-1]
    gw[-1] = Ybar.T @ acts[-1] + np.einsum("nok,npk->op", Jbar, tans[-1], optimize=True)
    gb[-1] = Ybar.sum(axis=0)
    Abar = Ybar @ Wl
    Jbar = np.einsum("nok,op->npk", Jbar, Wl, optimize=True)
    for i in range(params.n_layers - 2, -1, -1):
        A, S_t = acts[i + 1], 1.0 - acts[i + 1] ** 2
        # J_out = S * Jz with S = 1 - A^2, A = tanh(Z)
        Sbar = np.einsum("nhk,nhk->nh", Jbar, pre_tans[i], optimize=True)
        Jzbar = S_t[:, :, None] * Jbar
        Abar = Abar - 2.0 * A * Sbar
        Zbar = S_t * Abar
        W = params.weights[i]
        gw[i] = Zbar.T @ acts[i] + np.einsum("nhk,npk->hp", Jzbar, tans[i], optimize=True)
        gb[i] = Zbar.sum(axis=0)
        if i > 0:
            Abar = Zbar @ W
            Jbar = np.einsum("nhk,hp->npk", Jzbar, W, optimize=True)
    return np.concatenate([a for w, b in zip(gw, gb) for a in (w.ravel(), b)])


def forward(params: NetworkParams, inp: np.ndarray) -> np.ndarray:
    """Single-point forward pass: affine+tanh layers, final layer affine."""
    inp = np.asarray(inp, dtype=np.float64)
    if inp.shape != (params.layer_sizes()[0],):
        raise ContractError(f"input shape {inp.shape} incompatible with network")
    return eval_batch(params, inp[None, :])[0]


def linear_ramp(horizon: float) -> tuple[Callable, Callable]:
    """The default ramp t/T with its derivative; maps [0, T] onto [0, 1]."""
    T = float(horizon)
    return (lambda t: np.asarray(t, dtype=np.float64) / T,
            lambda t: np.full_like(np.asarray(t, dtype=np.float64), 1.0 / T))


@dataclass
class Ansatz:
    """Network field blended with the initial condition by a time ramp.

    u(x, t) = (1 - ramp(t)) * ic(x) + ramp(t) * net(x, t), so evaluation at
    t = 0 reproduces ic(x) bitwise. ``initial_condition`` must be vectorized:
    (n, d) -> (n, m). ``initial_condition_grad`` ((n, d) -> (n, m, d)) is only
    required by input_jet.
    """

    params: NetworkParams
    initial_condition: Callable[[np.ndarray], np.ndarray]
    horizon: float
    ramp: Callable = None
    ramp_dt: Callable = None
    maps: AffineMaps = None
    initial_condition_grad: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if not self.horizon > 0.0:
            raise ConfigError(f"horizon must be positive, got {self.horizon}")
        if (self.ramp is None) != (self.ramp_dt is None):
            raise ConfigError("ramp and ramp_dt must be given together")
        if self.ramp is None:
            self.ramp, self.ramp_dt = linear_ramp(self.horizon)
        if self.maps is None:
            sizes = self.params.layer_sizes()
            self.maps = AffineMaps.identity(sizes[0], sizes[-1])

    @property
    def input_dim(self) -> int:
        return self.params.layer_sizes()[0]

    @property
    def output_dim(self) -> int:
        return self.params.layer_sizes()[-1]


def _ansatz_cached(a: Ansatz, X: np.ndarray, T: np.ndarray):
    """Blended evaluation that keeps the forward cache for a reverse pass."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    T = np.asarray(T, dtype=np.float64)
    XT = np.concatenate([X, T[:, None]], axis=1)
    net, acts = _eval_cached(a.params, XT, a.maps)
    tau = a.ramp(T)[:, None]
    u = (1.0 - tau) * a.initial_condition(X) + tau * net
    return u, XT, tau, acts


def ansatz_eval_batch(a: Ansatz, X: np.ndarray, T: np.ndarray) -> np.ndarray:
    """Evaluate the blended field at X (n, d), T (n,); returns (n, m)."""
    u, _, _, _ = _ansatz_cached(a, X, T)
    return u


def ansatz_eval(a: Ansatz, x: np.ndarray, t: float) -> np.ndarray:
    """Single-point evaluation; t must lie in [0, horizon]."""
    if not 0.0 <= t <= a.horizon:
        raise ContractError(f"t={t} outside [0, {a.horizon}]")
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    return ansatz_eval_batch(a, x[None, :], np.array([t]))[0]


def backward(a: Ansatz, batch: np.ndarray, cotangents: np.ndarray) -> np.ndarray:
    """Parameter gradient of sum_i cot_i . u(x_i, t_i) via reverse mode.

    ``batch`` holds space-time rows (n, d+1) with time last; the initial
    condition term carries no parameters, so only ramp(t) * net contributes.
    """
    batch = np.asarray(batch, dtype=np.float64).reshape(-1, a.input_dim)
    cot = np.asarray(cotangents, dtype=np.float64).reshape(-1, a.output_dim)
    if batch.shape[0] != cot.shape[0]:
        raise ContractError("batch and cotangents must have the same length")
    if batch.shape[0] == 0:
        return np.zeros(a.params.n_params)
    tau = a.ramp(batch[:, -1])
    return grad_batch(a.params, batch, cot * tau[:, None], a.maps)


def ansatz_jet_batch(a: Ansatz, X: np.ndarray, T: np.ndarray):
    """Values and exact first input derivatives of the blended field.

    Returns (u (n, m), du_dt (n, m), du_dx (n, m, d)). Requires a
    differentiable initial condition (initial_condition_grad).
    """
    if a.initial_condition_grad is None:
        raise ContractError("input_jet requires initial_condition_grad")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    T = np.asarray(T, dtype=np.float64)
    u0 = a.initial_condition(X)
    du0 = a.initial_condition_grad(X)
    tau = a.ramp(T)
    dtau = a.ramp_dt(T)
    net, J = jet_batch(a.params, np.concatenate([X, T[:, None]], axis=1), a.maps)
    val = (1.0 - tau)[:, None] * u0 + tau[:, None] * net
    dt = dtau[:, None] * (net - u0) + tau[:, None] * J[:, :, -1]
    dx = (1.0 - tau)[:, None, None] * du0 + tau[:, None, None] * J[:, :, :-1]
    return val, dt, dx


def input_jet(a: Ansatz, x: np.ndarray, t: float):
    """Single-point value plus d/dt and d/dx of the blended field."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    val, dt, dx = ansatz_jet_batch(a, x[None, :], np.array([t]))
    return val[0], dt[0], dx[0]


def save_params(params: NetworkParams, path) -> None:
    """Checkpoint: int32 LE count, int32 LE layer sizes, float64 LE flat vector."""
    sizes = params.layer_sizes()
    with open(path, "wb") as fh:
        fh.write(struct.pack("<i", len(sizes)))
        fh.write(np.asarray(sizes, dtype="<i4").tobytes())
        fh.write(params.flatten().astype("<f8").tobytes())


def load_params(path) -> NetworkParams:
    with open(path, "rb") as fh:
        raw = fh.read()
    (count,) = struct.unpack_from("<i", raw, 0)
    if count < 2:
        raise ContractError(f"checkpoint header has {count} layer sizes")
    sizes = np.frombuffer(raw, dtype="<i4", count=count, offset=4).tolist()
    vec = np.frombuffer(raw, dtype="<f8", offset=4 + 4 * count)
    return NetworkParams.from_flat(sizes, vec)
