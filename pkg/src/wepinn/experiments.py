"""Benchmark registry and experiment configuration.

Five 1D benchmarks: three Burgers Riemann problems on [-1, 1] with T = 1,
the gamma-law shock tube on [0, 1] with T = 0.2, and the dam break on
[0, 1] with T = 0.12. Each entry bundles the law, the conserved initial
condition, far-field boundary states, the exact solution mapped to the
reported variables, snapshot times, and network input/output scalings.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import reference
from .errors import ConfigError
from .geometry import QuadRule, SamplerConfig, SpaceTimeDomain, gauss_legendre
from .losses import BoundaryCondition
from .models import EulerParams, SweParams, law_by_name
from .network import AffineMaps, NetworkConfig
from .optim import TrainConfig, TrainSetup

GAMMA = 1.4
GRAVITY = 9.81


@dataclass(frozen=True)
class Benchmark:
    name: str
    law_name: str
    x_lo: float
    x_hi: float
    t_end: float
    variables: tuple
    times: tuple
    primary: str
    out_scale: tuple
    ic_conserved: Callable
    left_state: np.ndarray
    right_state: np.ndarray
    exact_table: Callable
    model_to_table: Callable

    def make_law(self):
        if self.law_name == "euler":
            return law_by_name("euler", EulerParams(GAMMA))
        if self.law_name == "swe":
            return law_by_name("swe", SweParams(GRAVITY))
        return law_by_name(self.law_name)


def _burgers_benchmark(name, case, x0, lo_val, hi_val=None):
    def ic(X):
        x = X[..., 0]
        if case == "interaction":
            return np.where((x > -0.5) & (x <= 0.0), 1.0, 0.0)[..., None]
        return np.where(x <= x0, lo_val, hi_val)[..., None]

    def exact_table(x, t):
        return reference.burgers_exact(case, x, t)[..., None]

    left = ic(np.array([[-1.0]]))[0]
    right = ic(np.array([[1.0]]))[0]
    return Benchmark(name, "burgers", -1.0, 1.0, 1.0, ("u",), (0.0, 0.5, 1.0), "u",
                     (1.0,), ic, left, right, exact_table, lambda U: U.copy())


def _sod_benchmark():
    setup = reference.RiemannSetup("euler", (1.0, 0.0, 1.0), (0.125, 0.0, 0.1),
                                   0.5, 0.0, 1.0, 0.2, gamma=GAMMA)

    def prim_to_cons(w):
        rho, u, p = w
        return np.array([rho, rho * u, 0.5 * rho * u**2 + p / (GAMMA - 1.0)])

    left = prim_to_cons(setup.left)
    right = prim_to_cons(setup.right)

    def ic(X):
        return np.where((X[..., 0] <= setup.x0)[..., None], left, right)

    def exact_table(x, t):
        w = reference.sod_exact(setup, x, t)
        rho, u, p = w[..., 0], w[..., 1], w[..., 2]
        E = 0.5 * rho * u**2 + p / (GAMMA - 1.0)
        return np.stack([rho, u, p, E], axis=-1)

    def model_to_table(U):
        rho, mom, E = U[..., 0], U[..., 1], U[..., 2]
        u = mom / rho
        p = (GAMMA - 1.0) * (E - 0.5 * mom * u)
        return np.stack([rho, u, p, E], axis=-1)

    return Benchmark("sod", "euler", 0.0, 1.0, 0.2, ("rho", "u", "p", "E"),
                     (0.01, 0.13, 0.2), "rho", (1.0, 1.0, 2.5), ic, left, right,
                     exact_table, model_to_table)


def _dambreak_benchmark():
    setup = reference.RiemannSetup("swe", (5.0, 0.0), (1.0, 0.0), 0.5, 0.0, 1.0,
                                   0.12, g=GRAVITY)
    left = np.array([5.0, 0.0])
    right = np.array([1.0, 0.0])

    def ic(X):
        return np.where((X[..., 0] <= setup.x0)[..., None], left, right)

    def exact_table(x, t):
        return reference.stoker_exact(setup, x, t)

    def model_to_table(U):
        return np.stack([U[..., 0], U[..., 1] / U[..., 0]], axis=-1)

    # depth up to 5, momentum peaks near h_m u_m ~ 10 behind the bore
    return Benchmark("dambreak", "swe", 0.0, 1.0, 0.12, ("h", "u"),
                     (0.0, 0.05, 0.12), "h", (5.0, 10.0), ic, left, right,
                     exact_table, model_to_table)


_REGISTRY = {
    "burgers-shock": _burgers_benchmark("burgers-shock", "shock", -0.25, 1.0, 0.0),
    "burgers-rarefaction": _burgers_benchmark("burgers-rarefaction", "rarefaction",
                                              -0.25, 0.0, 1.0),
    "burgers-interaction": _burgers_benchmark("burgers-interaction", "interaction",
                                              None, None),
    "sod": _sod_benchmark(),
    "dambreak": _dambreak_benchmark(),
}

EXPERIMENTS = tuple(sorted(_REGISTRY))


def get_benchmark(name: str) -> Benchmark:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ConfigError(f"unknown experiment {name!r}; choose from {EXPERIMENTS}") from None


PRESETS = {
    "desk": dict(hidden_layers=4, hidden_width=40, n_volumes=500, adam_iters=5000,
                 lbfgs_iters=250, lbfgs_volumes=2000, checkpoint_every=500),
    "paper": dict(hidden_layers=8, hidden_width=80, n_volumes=1000, adam_iters=20000,
                  lbfgs_iters=2000, lbfgs_volumes=5000, checkpoint_every=2000),
}


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one run; JSON-serializable."""

    experiment: str
    preset: str = "desk"
    seed: int = 0
    out_dir: str = "out"
    quad_q: int = 6
    boundary_mode: str = "dirichlet-state"
    x_lo: float | None = None
    x_hi: float | None = None
    horizon: float | None = None
    hidden_layers: int = 4
    hidden_width: int = 40
    n_volumes: int = 500
    lx_frac: tuple = (0.02, 0.5)
    lt_frac: tuple = (0.02, 0.5)
    cloud_nt: int = 16
    cloud_nx: int = 256
    adam_iters: int = 5000
    lbfgs_iters: int = 250
    adam_lr: float = 1e-3
    checkpoint_every: int = 500
    lbfgs_volumes: int = 2000
    baseline_interior: int = 2048
    baseline_ic: int = 256
    baseline_bc: int = 128

    def __post_init__(self):
        get_benchmark(self.experiment)
        if self.quad_q < 1 or self.quad_q > 32:
            raise ConfigError("quad_q must be in [1, 32]")
        if self.boundary_mode not in ("dirichlet-state", "network-value"):
            raise ConfigError(f"unknown boundary mode {self.boundary_mode!r}")


def make_config(experiment: str, preset: str = "desk", seed: int = 0,
                out_dir: str = "out", **overrides) -> ExperimentConfig:
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    fields = dict(PRESETS[preset])
    fields.update(overrides)
    return ExperimentConfig(experiment=experiment, preset=preset, seed=seed,
                            out_dir=out_dir, **fields)


def load_config(path, **overrides) -> ExperimentConfig:
    """Read a JSON config file; keyword overrides win over file fields."""
    with open(path) as fh:
        data = json.load(fh)
    preset = overrides.pop("preset", None) or data.pop("preset", "desk")
    experiment = overrides.pop("experiment", None) or data.pop("experiment", None)
    if experiment is None:
        raise ConfigError("config must name an experiment")
    for key in ("lx_frac", "lt_frac"):
        if key in data:
            data[key] = tuple(data[key])
    data.update(overrides)
    seed = data.pop("seed", 0)
    out_dir = data.pop("out_dir", "out")
    return make_config(experiment, preset, seed, out_dir, **data)


def config_to_json(cfg: ExperimentConfig) -> str:
    return json.dumps(asdict(cfg), indent=2, sort_keys=True)


def domain_of(cfg: ExperimentConfig) -> SpaceTimeDomain:
    bench = get_benchmark(cfg.experiment)
    x_lo = bench.x_lo if cfg.x_lo is None else cfg.x_lo
    x_hi = bench.x_hi if cfg.x_hi is None else cfg.x_hi
    t_end = bench.t_end if cfg.horizon is None else cfg.horizon
    return SpaceTimeDomain(np.array([x_lo]), np.array([x_hi]), t_end)


def input_maps(domain: SpaceTimeDomain, out_scale) -> AffineMaps:
    """Normalize x to [-1, 1] and t to [0, 1]; scale outputs per component."""
    in_shift = np.array([0.5 * float(domain.x_lo[0] + domain.x_hi[0]), 0.0])
    in_scale = np.array([2.0 / float(domain.extent[0]), 1.0 / domain.t_end])
    return AffineMaps(in_shift, in_scale, np.asarray(out_scale, dtype=np.float64))


def build_setup(cfg: ExperimentConfig) -> TrainSetup:
    bench = get_benchmark(cfg.experiment)
    law = bench.make_law()
    domain = domain_of(cfg)
    sampler = SamplerConfig(
        cfg.n_volumes,
        cfg.lx_frac[0] * domain.extent,
        cfg.lx_frac[1] * domain.extent,
        cfg.lt_frac[0] * domain.t_end,
        cfg.lt_frac[1] * domain.t_end,
    )
    boundary = None
    if cfg.boundary_mode == "dirichlet-state":
        boundary = BoundaryCondition(domain, "dirichlet-state",
                                     bench.left_state, bench.right_state)
    net_cfg = NetworkConfig(2, law.m, cfg.hidden_layers, cfg.hidden_width)
    return TrainSetup(
        law=law,
        domain=domain,
        network_config=net_cfg,
        initial_condition=bench.ic_conserved,
        sampler=sampler,
        rule=gauss_legendre(cfg.quad_q),
        boundary=boundary,
        maps=input_maps(domain, bench.out_scale),
        cloud_nt=cfg.cloud_nt,
        cloud_nx=cfg.cloud_nx,
    )


def train_config(cfg: ExperimentConfig) -> TrainConfig:
    return TrainConfig(
        adam_iters=cfg.adam_iters,
        lbfgs_iters=cfg.lbfgs_iters,
        adam_lr=cfg.adam_lr,
        seed=cfg.seed,
        checkpoint_every=cfg.checkpoint_every,
        lbfgs_volumes=cfg.lbfgs_volumes,
    )
