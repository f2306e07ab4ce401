"""Adam, limited-memory BFGS, and the two-phase training loop.

Training follows the standard recipe for this family of solvers: an Adam
phase over freshly sampled control volumes and variation clouds each
iteration, then an L-BFGS refinement on one large frozen sample so the line
search sees a deterministic objective. Both optimizers are written out here
(bias-corrected Adam; two-loop recursion with Armijo backtracking) and are
exercised on standard test problems in the suite.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import losses, network
from .errors import ConfigError, TrainingError
from .geometry import (
    QuadRule,
    SamplerConfig,
    SpaceTimeDomain,
    sample_tvd_cloud,
    sample_volume_set,
)
from .models import ConservationLaw

log = logging.getLogger(__name__)


@dataclass
class AdamState:
    step: int
    m1: np.ndarray
    m2: np.ndarray
    lr: float
    beta1: float
    beta2: float
    eps: float


def adam_init(n_params: int, lr: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    return AdamState(0, np.zeros(n_params), np.zeros(n_params), lr, beta1, beta2, eps)


def adam_step(state: AdamState, params: np.ndarray, grad: np.ndarray):
    """One bias-corrected Adam update; returns (new state, new params)."""
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != params.shape:
        raise TrainingError(f"gradient shape {grad.shape} != params {params.shape}")
    if not np.all(np.isfinite(grad)):
        bad = int(np.sum(~np.isfinite(grad)))
        raise TrainingError(f"non-finite gradient ({bad}/{grad.size} entries)")
    t = state.step + 1
    m1 = state.beta1 * state.m1 + (1.0 - state.beta1) * grad
    m2 = state.beta2 * state.m2 + (1.0 - state.beta2) * grad**2
    m1_hat = m1 / (1.0 - state.beta1**t)
    m2_hat = m2 / (1.0 - state.beta2**t)
    new_params = params - state.lr * m1_hat / (np.sqrt(m2_hat) + state.eps)
    return AdamState(t, m1, m2, state.lr, state.beta1, state.beta2, state.eps), new_params


@dataclass
class LbfgsState:
    history_size: int = 20
    s_history: list = field(default_factory=list)
    y_history: list = field(default_factory=list)
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    max_trials: int = 30


def two_loop_direction(grad: np.ndarray, s_history, y_history) -> np.ndarray:
    """Descent direction -H g from the stored curvature pairs.

    H0 is the usual scaled identity gamma I with gamma = s.y / y.y of the
    most recent pair; with no history this reduces to steepest descent.
    """
    q = grad.copy()
    alphas = []
    rhos = [1.0 / float(np.dot(s, y)) for s, y in zip(s_history, y_history)]
    for s, y, rho in zip(reversed(s_history), reversed(y_history), reversed(rhos)):
        alpha = rho * float(np.dot(s, q))
        q -= alpha * y
        alphas.append(alpha)
    if s_history:
        s, y = s_history[-1], y_history[-1]
        q *= float(np.dot(s, y)) / float(np.dot(y, y))
    for (s, y, rho), alpha in zip(zip(s_history, y_history, rhos), reversed(alphas)):
        beta = rho * float(np.dot(y, q))
        q += s * (alpha - beta)
    return -q


def _line_search(fg, x, f, g, d, state: LbfgsState, curvature_c: float = 0.9):
    """Weak-Wolfe search by bracketing: backtrack (bisect) on a sufficient-
    decrease failure, extend when the slope is still too negative.

    Guarantees s.y > 0 for accepted pairs except when the trial budget runs
    out, in which case the best sufficient-decrease point is returned.
    """
    slope = float(np.dot(g, d))
    lo, hi = 0.0, np.inf
    step = 1.0
    armijo_pt = None
    for _ in range(state.max_trials):
        x_new = x + step * d
        f_new, g_new = fg(x_new)
        if not np.isfinite(f_new) or f_new > f + state.armijo_c * step * slope:
            hi = step
        elif float(np.dot(g_new, d)) < curvature_c * slope:
            armijo_pt = (x_new, f_new, g_new)
            lo = step
        else:
            return x_new, f_new, g_new, True
        if np.isfinite(hi):
            step = lo + state.backtrack * (hi - lo)
        else:
            step = step / state.backtrack
        if step <= 0.0:
            break
    if armijo_pt is not None:
        return armijo_pt[0], armijo_pt[1], armijo_pt[2], True
    return x, f, g, False


def lbfgs_run(state: LbfgsState, fg: Callable, params: np.ndarray, max_iters: int,
              grad_tol: float = 1e-12, on_step: Callable | None = None) -> np.ndarray:
    """Minimize a deterministic fg(x) -> (f, grad); returns best-seen params.

    Two-loop-recursion directions with the bracketing weak-Wolfe search
    above; curvature pairs with s.y <= 1e-10 are discarded. A failed line
    search falls back to one steepest-descent attempt; two consecutive
    failures terminate.
    """
    x = np.asarray(params, dtype=np.float64).copy()
    if max_iters <= 0:
        return x
    f, g = fg(x)
    if not np.any(g):
        return x
    best_x, best_f = x.copy(), f
    failures = 0
    for k in range(max_iters):
        if float(np.linalg.norm(g)) <= grad_tol:
            break
        d = two_loop_direction(g, state.s_history, state.y_history)
        if float(np.dot(d, g)) >= 0.0:
            d = -g
        x_new, f_new, g_new, ok = _line_search(fg, x, f, g, d, state)
        if not ok:
            x_new, f_new, g_new, ok = _line_search(fg, x, f, g, -g, state)
            if not ok:
                failures += 1
                if failures >= 2:
                    log.warning("L-BFGS line search failed twice; returning best seen")
                    break
                continue
            state.s_history.clear()
            state.y_history.clear()
        failures = 0
        s = x_new - x
        y = g_new - g
        if float(np.dot(s, y)) > 1e-10:
            state.s_history.append(s)
            state.y_history.append(y)
            if len(state.s_history) > state.history_size:
                state.s_history.pop(0)
                state.y_history.pop(0)
        x, f, g = x_new, f_new, g_new
        if f < best_f:
            best_f, best_x = f, x.copy()
        if on_step is not None:
            on_step(k, x, f, g)
    return best_x


@dataclass
class TrainConfig:
    adam_iters: int
    lbfgs_iters: int
    adam_lr: float = 1e-3
    seed: int = 0
    checkpoint_every: int = 500
    grad_clip: float = 10.0
    lbfgs_history: int = 20
    lbfgs_volumes: int = 5000

    def __post_init__(self):
        if self.adam_iters < 0 or self.lbfgs_iters < 0 or self.checkpoint_every < 1:
            raise ConfigError("iteration counts must be >= 0 and cadence >= 1")


@dataclass
class TrainSetup:
    """Everything the training loop needs about one experiment."""

    law: ConservationLaw
    domain: SpaceTimeDomain
    network_config: network.NetworkConfig
    initial_condition: Callable
    sampler: SamplerConfig
    rule: QuadRule
    boundary: losses.BoundaryCondition | None = None
    maps: network.AffineMaps | None = None
    cloud_nt: int = 16
    cloud_nx: int = 256


@dataclass
class IterRecord:
    iteration: int
    phase: str
    cons: float
    ent: float
    tvd: float
    total: float
    grad_norm: float
    wall_ms: float
    clamp_count: int = 0


@dataclass
class CheckpointRecord:
    iteration: int
    phase: str
    cons: float
    ent: float
    tvd: float
    params_vec: np.ndarray


@dataclass
class TrainResult:
    ansatz: network.Ansatz
    history: list
    checkpoints: list
    aborted: bool = False


def _stream(seed: int, tag: int, i: int) -> np.random.Generator:
    # counter-based generator keyed by (seed, tag, iteration): streams are
    # disjoint and independent of evaluation order
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(tag, i))))


def train(cfg: TrainConfig, setup: TrainSetup,
          on_checkpoint: Callable | None = None) -> TrainResult:
    """Run the two-phase loop; bit-reproducible for a fixed config and seed.

    Each Adam iteration resamples volumes and the variation cloud; the
    L-BFGS phase freezes one large sample. Gradients are clipped to global
    norm ``grad_clip`` during Adam. A non-finite loss aborts the run and
    restores the last checkpointed parameters.
    """
    params = network.init_network(setup.network_config, cfg.seed)
    sizes = params.layer_sizes()
    ansatz = network.Ansatz(params, setup.initial_condition, setup.domain.t_end,
                            maps=setup.maps)
    vec = params.flatten()
    history: list[IterRecord] = []
    checkpoints: list[CheckpointRecord] = []

    def checkpoint(iteration, phase, lb):
        rec = CheckpointRecord(iteration, phase, lb.cons, lb.ent, lb.tvd, vec.copy())
        checkpoints.append(rec)
        if on_checkpoint is not None:
            ansatz.params = network.NetworkParams.from_flat(sizes, rec.params_vec)
            on_checkpoint(ansatz, rec)

    adam = adam_init(vec.size, lr=cfg.adam_lr)
    aborted = False
    for it in range(cfg.adam_iters):
        t0 = time.perf_counter()
        volumes = sample_volume_set(setup.domain, setup.sampler, _stream(cfg.seed, 1, it))
        cloud = sample_tvd_cloud(setup.domain, setup.cloud_nt, setup.cloud_nx,
                                 _stream(cfg.seed, 2, it))
        ansatz.params = network.NetworkParams.from_flat(sizes, vec)
        lb = losses.total_loss(ansatz, setup.law, volumes, cloud, setup.rule,
                               setup.boundary)
        if not np.isfinite(lb.total):
            log.error("non-finite loss at adam iteration %d; aborting", it)
            aborted = True
            break
        if it % cfg.checkpoint_every == 0:
            checkpoint(it, "adam", lb)
        grad = lb.grad
        gnorm = float(np.linalg.norm(grad))
        if cfg.grad_clip > 0.0 and gnorm > cfg.grad_clip:
            grad = grad * (cfg.grad_clip / gnorm)
        try:
            adam, vec = adam_step(adam, vec, grad)
        except TrainingError:
            log.error("non-finite gradient at adam iteration %d; aborting", it)
            aborted = True
            break
        history.append(IterRecord(it, "adam", lb.cons, lb.ent, lb.tvd, lb.total,
                                  gnorm, (time.perf_counter() - t0) * 1e3,
                                  lb.clamp_count))

    if aborted and checkpoints:
        vec = checkpoints[-1].params_vec.copy()

    if not aborted and cfg.lbfgs_iters > 0:
        frozen_sampler = SamplerConfig(cfg.lbfgs_volumes, setup.sampler.lx_min,
                                       setup.sampler.lx_max, setup.sampler.lt_min,
                                       setup.sampler.lt_max)
        volumes = sample_volume_set(setup.domain, frozen_sampler, _stream(cfg.seed, 3, 0))
        cloud = sample_tvd_cloud(setup.domain, setup.cloud_nt, setup.cloud_nx,
                                 _stream(cfg.seed, 4, 0))
        last = {}

        def fg(v):
            ansatz.params = network.NetworkParams.from_flat(sizes, v)
            lb = losses.total_loss(ansatz, setup.law, volumes, cloud, setup.rule,
                                   setup.boundary)
            last["lb"] = lb
            last["t0"] = last.get("t0", time.perf_counter())
            return lb.total, lb.grad

        base_iter = cfg.adam_iters

        def on_step(k, x, f, g):
            lb = last["lb"]
            t0 = last.pop("t0", time.perf_counter())
            history.append(IterRecord(base_iter + k, "lbfgs", lb.cons, lb.ent, lb.tvd,
                                      lb.total, float(np.linalg.norm(g)),
                                      (time.perf_counter() - t0) * 1e3,
                                      lb.clamp_count))
            if (k + 1) % cfg.checkpoint_every == 0:
                nonlocal vec
                vec = x.copy()
                checkpoint(base_iter + k, "lbfgs", lb)

        state = LbfgsState(history_size=cfg.lbfgs_history)
        vec = lbfgs_run(state, fg, vec, cfg.lbfgs_iters, on_step=on_step)

    ansatz.params = network.NetworkParams.from_flat(sizes, vec)
    if cfg.adam_iters or cfg.lbfgs_iters:
        final_lb = losses.total_loss(
            ansatz, setup.law,
            sample_volume_set(setup.domain, setup.sampler, _stream(cfg.seed, 5, 0)),
            sample_tvd_cloud(setup.domain, setup.cloud_nt, setup.cloud_nx,
                             _stream(cfg.seed, 6, 0)),
            setup.rule, setup.boundary)
        checkpoint(cfg.adam_iters + cfg.lbfgs_iters, "final", final_lb)
    return TrainResult(ansatz, history, checkpoints, aborted)


@dataclass
class BaselineSetup:
    """Strong-form collocation baseline: plain network, no time ramp."""

    law: ConservationLaw
    domain: SpaceTimeDomain
    network_config: network.NetworkConfig
    initial_condition: Callable
    left_state: np.ndarray
    right_state: np.ndarray
    maps: network.AffineMaps | None = None
    n_interior: int = 2048
    n_ic: int = 256
    n_bc: int = 128


@dataclass
class BaselineIterRecord:
    iteration: int
    phase: str
    residual: float
    ic: float
    bc: float
    total: float
    grad_norm: float
    wall_ms: float


@dataclass
class BaselineResult:
    params: network.NetworkParams
    maps: network.AffineMaps | None
    history: list
    aborted: bool = False


def _baseline_batches(setup: BaselineSetup, rng: np.random.Generator):
    dom = setup.domain
    xi = rng.uniform(dom.x_lo[0], dom.x_hi[0], size=setup.n_interior)
    ti = rng.uniform(0.0, dom.t_end, size=setup.n_interior)
    interior = np.column_stack([xi, ti])
    x0 = rng.uniform(dom.x_lo[0], dom.x_hi[0], size=setup.n_ic)
    ic_pts = np.column_stack([x0, np.zeros_like(x0)])
    ic_targets = setup.initial_condition(x0[:, None])
    nb = setup.n_bc // 2
    tb = rng.uniform(0.0, dom.t_end, size=2 * nb)
    bc_pts = np.column_stack([
        np.concatenate([np.full(nb, dom.x_lo[0]), np.full(nb, dom.x_hi[0])]), tb])
    bc_targets = np.vstack([np.tile(setup.left_state, (nb, 1)),
                            np.tile(setup.right_state, (nb, 1))])
    return interior, ic_pts, ic_targets, bc_pts, bc_targets


def train_baseline(cfg: TrainConfig, setup: BaselineSetup) -> BaselineResult:
    """Two-phase training of the pointwise-residual baseline.

    Same optimizer schedule as the main method; collocation, initial, and
    boundary batches are resampled per Adam iteration and frozen for L-BFGS.
    """
    params = network.init_network(setup.network_config, cfg.seed)
    sizes = params.layer_sizes()
    vec = params.flatten()
    history: list[BaselineIterRecord] = []
    adam = adam_init(vec.size, lr=cfg.adam_lr)
    aborted = False
    for it in range(cfg.adam_iters):
        t0 = time.perf_counter()
        batches = _baseline_batches(setup, _stream(cfg.seed, 11, it))
        p = network.NetworkParams.from_flat(sizes, vec)
        res, ic, bc, grad = losses.strong_pinn_terms(p, setup.law, *batches,
                                                     maps=setup.maps)
        total = res + ic + bc
        if not np.isfinite(total):
            log.error("non-finite baseline loss at iteration %d; aborting", it)
            aborted = True
            break
        gnorm = float(np.linalg.norm(grad))
        if cfg.grad_clip > 0.0 and gnorm > cfg.grad_clip:
            grad = grad * (cfg.grad_clip / gnorm)
        try:
            adam, vec = adam_step(adam, vec, grad)
        except TrainingError:
            aborted = True
            break
        history.append(BaselineIterRecord(it, "adam", res, ic, bc, total, gnorm,
                                          (time.perf_counter() - t0) * 1e3))

    if not aborted and cfg.lbfgs_iters > 0:
        batches = _baseline_batches(setup, _stream(cfg.seed, 13, 0))
        last = {}

        def fg(v):
            p = network.NetworkParams.from_flat(sizes, v)
            res, ic, bc, grad = losses.strong_pinn_terms(p, setup.law, *batches,
                                                         maps=setup.maps)
            last["parts"] = (res, ic, bc)
            return res + ic + bc, grad

        def on_step(k, x, f, g):
            res, ic, bc = last["parts"]
            history.append(BaselineIterRecord(cfg.adam_iters + k, "lbfgs", res, ic,
                                              bc, f, float(np.linalg.norm(g)), 0.0))

        state = LbfgsState(history_size=cfg.lbfgs_history)
        vec = lbfgs_run(state, fg, vec, cfg.lbfgs_iters, on_step=on_step)

    return BaselineResult(network.NetworkParams.from_flat(sizes, vec), setup.maps,
                          history, aborted)
