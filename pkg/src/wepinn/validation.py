"""Training-free property suite behind the ``validate`` CLI command.

Each property measures one number and compares it against a fixed threshold:
quadrature exactness, residual nullity on constants, Rankine-Hugoniot balance
and entropy signs on exact shocks, gradient/jet agreement with finite
differences, optimizer behavior on standard problems, agreement between the
exact solvers and the finite-volume oracle, and a determinism spot check.
Fault-injection hooks deliberately corrupt one ingredient so the suite's
failure reporting can itself be tested.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry, losses, metrics, network, optim, reference
from .experiments import get_benchmark, make_config, build_setup, train_config
from .models import burgers_law, euler_law, swe_law

FAULTS = ("quadrature-weights",)


@dataclass(frozen=True)
class PropertyResult:
    name: str
    measured: float
    threshold: float
    passed: bool


def _check(name, measured, threshold):
    return PropertyResult(name, float(measured), float(threshold),
                          bool(measured <= threshold))


def shock_straddling_boxes(n: int, rng: np.random.Generator,
                           side_lo: float = 0.05, side_hi: float = 0.15,
                           x0: float = -0.25, speed: float = 0.5,
                           t_end: float = 1.0):
    """Random boxes the shock line x0 + speed*t crosses through both time faces."""
    out = []
    margin = 1e-3
    while len(out) < n:
        lx = rng.uniform(side_lo, side_hi)
        lt = rng.uniform(side_lo, min(side_hi, lx))
        t1 = rng.uniform(margin, t_end - lt - margin)
        s1 = x0 + speed * t1
        s2 = x0 + speed * (t1 + lt)
        lo_max = min(s1, s2) - margin
        lo_min = max(s1, s2) - lx + margin
        if lo_min >= lo_max:
            continue
        x1 = rng.uniform(lo_min, lo_max)
        out.append(geometry.ControlVolume(np.array([x1]), np.array([x1 + lx]),
                                          t1, t1 + lt))
    return out


def random_volumes(n, rng, x_lo, x_hi, t_lo, t_hi, side_lo, side_hi):
    out = []
    for _ in range(n):
        lx = rng.uniform(side_lo, side_hi)
        lt = rng.uniform(side_lo, side_hi)
        x1 = rng.uniform(x_lo, x_hi - lx)
        t1 = rng.uniform(t_lo, t_hi - lt)
        out.append(geometry.ControlVolume(np.array([x1]), np.array([x1 + lx]),
                                          t1, t1 + lt))
    return out


def fd_gradient(f, vec, h=1e-6):
    g = np.empty(vec.size)
    for j in range(vec.size):
        e = np.zeros(vec.size)
        e[j] = h
        g[j] = (f(vec + e) - f(vec - e)) / (2.0 * h)
    return g


def _quadrature_property(rule):
    errs = []
    for k in range(12):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        errs.append(abs(float(np.sum(rule.weights * rule.nodes**k)) - exact))
    for a, b in ((3, 5), (11, 11), (0, 7)):
        got = geometry.integrate_face_2d(rule, rule, (0.0, 1.0, 0.0, 1.0),
                                         lambda x, y: x**a * y**b)
        errs.append(abs(got - 1.0 / ((a + 1) * (b + 1))))
    return max(errs)


def _constant_nullity(rng):
    worst = 0.0
    cases = [
        (burgers_law(), np.array([0.7])),
        (euler_law(), np.array([1.0, 0.3, 2.5])),
        (swe_law(), np.array([2.0, 1.0])),
    ]
    for law, state in cases:
        vols = random_volumes(30, rng, -1.0, 1.0, 0.0, 1.0, 0.05, 0.6)
        u = lambda x, t: state
        for v in vols:
            worst = max(worst, float(np.max(np.abs(
                losses.weak_residual(u, law, v, geometry.gauss_legendre(6))))))
            worst = max(worst, abs(losses.entropy_residual(
                u, law, v, geometry.gauss_legendre(6))))
    return worst


def _shock_profiles():
    law = burgers_law()
    entropic = lambda x, t: np.atleast_1d(reference.burgers_exact("shock", x, t))
    expansion = lambda x, t: np.where(x <= -0.25 + 0.5 * t, 0.0, 1.0) * np.ones(1)
    return law, entropic, expansion


def _rankine_hugoniot(rng, fine_rule):
    # composite panels resolve the step integrands on shock-crossing faces;
    # a single Gauss panel is quadrature-limited at ~0.13 * side * jump
    law, entropic, _ = _shock_profiles()
    boxes = shock_straddling_boxes(20, rng)
    return max(float(np.max(np.abs(losses.weak_residual(entropic, law, v, fine_rule))))
               for v in boxes)


def _entropy_signs(rng, fine_rule):
    law, entropic, expansion = _shock_profiles()
    boxes = shock_straddling_boxes(20, rng, side_lo=0.1, side_hi=0.2)
    worst_shock = max(losses.entropy_residual(entropic, law, v, fine_rule)
                      for v in boxes)
    least_expansion = min(losses.entropy_residual(expansion, law, v, fine_rule)
                          for v in boxes)
    return worst_shock, least_expansion


def _small_smooth_problem(seed=3):
    law = burgers_law()
    domain = geometry.SpaceTimeDomain(np.array([-1.0]), np.array([1.0]), 1.0)
    cfg = network.NetworkConfig(2, 1, 2, 6)
    params = network.init_network(cfg, seed)
    ic = lambda X: 0.5 + 0.3 * np.sin(np.pi * X)
    ansatz = network.Ansatz(params, ic, domain.t_end)
    rng = np.random.default_rng(seed)
    vols = random_volumes(25, rng, -1.0, 1.0, 0.0, 1.0, 0.1, 0.5)
    cloud = geometry.sample_tvd_cloud(domain, 4, 32, np.random.default_rng(seed + 1))
    return law, domain, ansatz, vols, cloud


def _gradient_check():
    law, domain, ansatz, vols, cloud = _small_smooth_problem()
    rule = geometry.gauss_legendre(4)
    sizes = ansatz.params.layer_sizes()
    lb = losses.total_loss(ansatz, law, vols, cloud, rule)

    def f(vec):
        ansatz.params = network.NetworkParams.from_flat(sizes, vec)
        return losses.total_loss(ansatz, law, vols, cloud, rule).total

    vec = ansatz.params.flatten()
    g_fd = fd_gradient(f, vec)
    ansatz.params = network.NetworkParams.from_flat(sizes, vec)
    return float(np.linalg.norm(g_fd - lb.grad) / np.linalg.norm(g_fd))


def _jet_check():
    cfg = network.NetworkConfig(2, 2, 2, 7)
    params = network.init_network(cfg, 11)
    X = np.random.default_rng(12).uniform(-0.8, 0.8, size=(40, 2))
    _, J = network.jet_batch(params, X)
    h = 1e-6
    worst = 0.0
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        fd = (network.eval_batch(params, X + e) - network.eval_batch(params, X - e)) / (2 * h)
        worst = max(worst, float(np.max(np.abs(fd - J[:, :, j])) / np.max(np.abs(J))))
    return worst


def _optimizer_sanity():
    def rosen_fg(v):
        x, y = v
        f = (1.0 - x) ** 2 + 100.0 * (y - x**2) ** 2
        g = np.array([-2.0 * (1.0 - x) - 400.0 * x * (y - x**2),
                      200.0 * (y - x**2)])
        return f, g

    x = optim.lbfgs_run(optim.LbfgsState(), rosen_fg, np.array([-1.2, 1.0]), 200)
    return rosen_fg(x)[0]


def _oracle_agreement(n_cells=1000):
    out = {}
    bench = get_benchmark("burgers-shock")
    law = bench.make_law()
    sol = reference.fv_oracle(law, bench.ic_conserved, -1.0, 1.0, 1.0, n_cells)
    exact = reference.burgers_exact("shock", sol.x, 1.0)[:, None]
    dx = 2.0 / n_cells
    out["burgers"] = float(np.sum(np.abs(sol.at(1.0) - exact)) * dx)

    for name, comp in (("sod", 0), ("dambreak", 0)):
        bench = get_benchmark(name)
        law = bench.make_law()
        sol = reference.fv_oracle(law, bench.ic_conserved, bench.x_lo, bench.x_hi,
                                  bench.t_end, n_cells)
        table = bench.exact_table(sol.x, bench.t_end)
        model = bench.model_to_table(sol.at(bench.t_end))
        dx = (bench.x_hi - bench.x_lo) / n_cells
        out[name] = float(np.sum(np.abs(model[:, comp] - table[:, comp])) * dx)
    return out


def _determinism_check():
    cfg = make_config("burgers-shock", "desk", seed=5, adam_iters=3, lbfgs_iters=2,
                      n_volumes=40, hidden_layers=2, hidden_width=8,
                      lbfgs_volumes=60, cloud_nt=4, cloud_nx=32)
    runs = [optim.train(train_config(cfg), build_setup(cfg)) for _ in range(2)]
    a = np.array([[r.cons, r.ent, r.tvd, r.total] for r in runs[0].history])
    b = np.array([[r.cons, r.ent, r.tvd, r.total] for r in runs[1].history])
    if a.shape != b.shape:
        return np.inf
    return float(np.max(np.abs(a - b), initial=0.0))


def run_validation(fault: str | None = None):
    """Run every property; returns (all_passed, [PropertyResult])."""
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; choose from {FAULTS}")
    rule = geometry.gauss_legendre(6)
    if fault == "quadrature-weights":
        bad = rule.weights.copy()
        bad[0] *= 1.0 + 1e-6
        object.__setattr__(rule, "weights", bad)

    fine = geometry.composite_rule(geometry.gauss_legendre(6), 32)
    rng = np.random.default_rng(2024)
    results = [_check("quadrature-exactness", _quadrature_property(rule), 1e-12)]
    results.append(_check("constant-state-nullity", _constant_nullity(rng), 1e-12))
    results.append(_check("rankine-hugoniot-balance", _rankine_hugoniot(rng, fine), 1e-2))
    worst_shock, least_expansion = _entropy_signs(rng, fine)
    results.append(_check("entropy-sign-shock", worst_shock, 1e-6))
    results.append(PropertyResult("entropy-sign-expansion", float(least_expansion),
                                  1e-3, bool(least_expansion >= 1e-3)))
    results.append(_check("loss-gradient-vs-fd", _gradient_check(), 1e-4))
    results.append(_check("input-jet-vs-fd", _jet_check(), 1e-6))
    results.append(_check("lbfgs-rosenbrock", _optimizer_sanity(), 1e-8))
    oracle = _oracle_agreement()
    for name, val in oracle.items():
        results.append(_check(f"oracle-agreement-{name}", val, 2e-2))
    results.append(_check("train-determinism", _determinism_check(), 0.0))
    return all(r.passed for r in results), results
