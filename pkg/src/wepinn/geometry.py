"""Space-time boxes, multi-scale sampling, and Gauss-Legendre face quadrature.

Control volumes are axis-aligned boxes [x_lo, x_hi] x [t_lo, t_hi] inside the
space-time domain. Quadrature rules are built from scratch: Legendre roots by
Newton iteration from Chebyshev initial guesses, weights 2/((1-x^2) P'(x)^2).
Faces carry constant outward unit normals (n_x, n_t), which keeps every
boundary integral a plain (tensor-product) Gauss sum. Dimension-generic for
d in {1, 2}; the batched training path below is specialized to d = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError

NEWTON_TOL = 1e-15
NEWTON_MAX_ITERS = 100


@dataclass(frozen=True)
class SpaceTimeDomain:
    """Omega x (0, T) with Omega a product of intervals."""

    x_lo: np.ndarray
    x_hi: np.ndarray
    t_end: float

    def __post_init__(self):
        object.__setattr__(self, "x_lo", np.atleast_1d(np.asarray(self.x_lo, dtype=np.float64)))
        object.__setattr__(self, "x_hi", np.atleast_1d(np.asarray(self.x_hi, dtype=np.float64)))
        if self.x_lo.shape != self.x_hi.shape or not np.all(self.x_lo < self.x_hi):
            raise ConfigError("domain requires x_lo < x_hi componentwise")
        if not self.t_end > 0.0:
            raise ConfigError("domain requires t_end > 0")

    @property
    def d(self) -> int:
        return self.x_lo.size

    @property
    def extent(self) -> np.ndarray:
        return self.x_hi - self.x_lo

    @property
    def measure(self) -> float:
        return float(np.prod(self.extent) * self.t_end)


@dataclass(frozen=True)
class ControlVolume:
    """Axis-aligned space-time box with positive measure."""

    x_lo: np.ndarray
    x_hi: np.ndarray
    t_lo: float
    t_hi: float

    def __post_init__(self):
        object.__setattr__(self, "x_lo", np.atleast_1d(np.asarray(self.x_lo, dtype=np.float64)))
        object.__setattr__(self, "x_hi", np.atleast_1d(np.asarray(self.x_hi, dtype=np.float64)))
        if self.x_lo.shape != self.x_hi.shape or not np.all(self.x_lo < self.x_hi):
            raise ConfigError("control volume requires x_lo < x_hi componentwise")
        if not self.t_lo < self.t_hi:
            raise ConfigError("control volume requires t_lo < t_hi")

    @property
    def d(self) -> int:
        return self.x_lo.size

    @property
    def measure(self) -> float:
        return float(np.prod(self.x_hi - self.x_lo) * (self.t_hi - self.t_lo))


@dataclass(frozen=True)
class SamplerConfig:
    """Multi-scale box sampler: side lengths per axis and volume count."""

    n_volumes: int
    lx_min: np.ndarray
    lx_max: np.ndarray
    lt_min: float
    lt_max: float

    def __post_init__(self):
        object.__setattr__(self, "lx_min", np.atleast_1d(np.asarray(self.lx_min, dtype=np.float64)))
        object.__setattr__(self, "lx_max", np.atleast_1d(np.asarray(self.lx_max, dtype=np.float64)))
        if self.n_volumes < 0:
            raise ConfigError("n_volumes must be nonnegative")
        if not (np.all(self.lx_min > 0.0) and np.all(self.lx_min <= self.lx_max)):
            raise ConfigError("need 0 < lx_min <= lx_max per axis")
        if not (0.0 < self.lt_min <= self.lt_max):
            raise ConfigError("need 0 < lt_min <= lt_max")


def default_sampler(domain: SpaceTimeDomain, n_volumes: int = 1000) -> SamplerConfig:
    """Side-length bounds at 2% to 50% of each axis extent, log-uniform draw."""
    return SamplerConfig(
        n_volumes=n_volumes,
        lx_min=0.02 * domain.extent,
        lx_max=0.5 * domain.extent,
        lt_min=0.02 * domain.t_end,
        lt_max=0.5 * domain.t_end,
    )


@dataclass(frozen=True)
class QuadRule:
    """Nodes in (-1, 1), strictly increasing and symmetric; weights sum to 2."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.asarray(self.nodes, dtype=np.float64))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.float64))
        if self.nodes.shape != self.weights.shape or self.nodes.ndim != 1:
            raise ConfigError("nodes and weights must be 1D of equal length")
        if np.any(np.diff(self.nodes) <= 0.0):
            raise ConfigError("nodes must be strictly increasing")
        if abs(float(self.weights.sum()) - 2.0) > 1e-12:
            raise ConfigError("weights must sum to 2")


def _legendre_and_derivative(q: int, x: np.ndarray):
    """P_q(x) and P_q'(x) by the three-term recurrence."""
    p0 = np.ones_like(x)
    p1 = x.copy()
    if q == 0:
        return p0, np.zeros_like(x)
    for k in range(2, q + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = q * (x * p1 - p0) / (x**2 - 1.0)
    return p1, dp


def gauss_legendre(q: int) -> QuadRule:
    """Gauss-Legendre rule on [-1, 1], exact for polynomials up to degree 2q-1.

    Roots of P_q found by Newton iteration seeded at the Chebyshev points
    cos(pi (i - 1/4) / (q + 1/2)); the computed half is mirrored so the rule
    is symmetric about 0 exactly.
    """
    if not 1 <= q <= 32:
        raise ConfigError(f"quadrature order must be in [1, 32], got {q}")
    if q == 1:
        return QuadRule(np.zeros(1), np.full(1, 2.0))
    i = np.arange(1, q // 2 + 1)
    x = np.cos(np.pi * (i - 0.25) / (q + 0.5))
    for _ in range(NEWTON_MAX_ITERS):
        p, dp = _legendre_and_derivative(q, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < NEWTON_TOL:
            break
    _, dp = _legendre_and_derivative(q, x)
    w_half = 2.0 / ((1.0 - x**2) * dp**2)
    if q % 2:
        _, dp0 = _legendre_and_derivative(q, np.zeros(1))
        nodes = np.concatenate([-x, [0.0], x[::-1]])
        weights = np.concatenate([w_half, 2.0 / dp0**2, w_half[::-1]])
    else:
        nodes = np.concatenate([-x, x[::-1]])
        weights = np.concatenate([w_half, w_half[::-1]])
    return QuadRule(nodes, weights)


def composite_rule(rule: QuadRule, panels: int) -> QuadRule:
    """Concatenate ``panels`` affine copies of ``rule`` tiling [-1, 1].

    Used where integrands have kinks or jumps that a single Gauss panel
    cannot resolve (validation against exact solutions, not training).
    """
    if panels < 1:
        raise ConfigError("panels must be >= 1")
    edges = np.linspace(-1.0, 1.0, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * rule.nodes).ravel()
    weights = (half[:, None] * rule.weights).ravel()
    return QuadRule(nodes, weights)


def integrate_interval(rule: QuadRule, a: float, b: float, f) -> float:
    """Affine-mapped Gauss sum (b-a)/2 * sum w_q f(mid + half * xi_q)."""
    if not a < b:
        raise ContractError(f"integration bounds require a < b, got [{a}, {b}]")
    half = 0.5 * (b - a)
    x = 0.5 * (a + b) + half * rule.nodes
    return float(half * np.sum(rule.weights * f(x)))


def integrate_face_2d(rule_x: QuadRule, rule_y: QuadRule, rect, f) -> float:
    """Tensor-product Gauss sum over the rectangle (x1, x2, y1, y2)."""
    x1, x2, y1, y2 = rect
    if not (x1 < x2 and y1 < y2):
        raise ContractError(f"degenerate rectangle {rect}")
    hx, hy = 0.5 * (x2 - x1), 0.5 * (y2 - y1)
    x = 0.5 * (x1 + x2) + hx * rule_x.nodes
    y = 0.5 * (y1 + y2) + hy * rule_y.nodes
    vals = f(x[:, None], y[None, :])
    return float(hx * hy * np.sum(rule_x.weights[:, None] * rule_y.weights[None, :] * vals))


@dataclass(frozen=True)
class VolumeSet:
    """A batch of boxes held as arrays; cheap view for the training path."""

    x_lo: np.ndarray  # (n, d)
    x_hi: np.ndarray
    t_lo: np.ndarray  # (n,)
    t_hi: np.ndarray

    def __len__(self) -> int:
        return self.t_lo.size

    def __getitem__(self, i: int) -> ControlVolume:
        return ControlVolume(self.x_lo[i], self.x_hi[i],
                             float(self.t_lo[i]), float(self.t_hi[i]))

    @property
    def measures(self) -> np.ndarray:
        return np.prod(self.x_hi - self.x_lo, axis=1) * (self.t_hi - self.t_lo)


def sample_volume_set(domain: SpaceTimeDomain, cfg: SamplerConfig,
                      rng: np.random.Generator) -> VolumeSet:
    """Draw boxes with log-uniform side lengths and uniform centers.

    Centers falling too close to the domain boundary are translated inward so
    the box always fits; translation (not shrinking) preserves the size
    distribution and makes boundary-touching faces common.
    """
    lx_min = np.broadcast_to(cfg.lx_min, (domain.d,))
    lx_max = np.broadcast_to(cfg.lx_max, (domain.d,))
    if np.any(lx_max > domain.extent * (1.0 + 1e-12)) or cfg.lt_max > domain.t_end * (1.0 + 1e-12):
        raise ConfigError("side-length bounds exceed the domain extent")
    n = cfg.n_volumes
    lx = np.exp(rng.uniform(np.log(lx_min), np.log(lx_max), size=(n, domain.d)))
    lt = np.exp(rng.uniform(np.log(cfg.lt_min), np.log(cfg.lt_max), size=n))
    cx = rng.uniform(domain.x_lo, domain.x_hi, size=(n, domain.d))
    ct = rng.uniform(0.0, domain.t_end, size=n)
    cx = np.clip(cx, domain.x_lo + 0.5 * lx, domain.x_hi - 0.5 * lx)
    ct = np.clip(ct, 0.5 * lt, domain.t_end - 0.5 * lt)
    return VolumeSet(cx - 0.5 * lx, cx + 0.5 * lx, ct - 0.5 * lt, ct + 0.5 * lt)


def sample_volumes(domain: SpaceTimeDomain, cfg: SamplerConfig,
                   rng: np.random.Generator) -> list[ControlVolume]:
    """sample_volume_set materialized as validated ControlVolume objects."""
    vs = sample_volume_set(domain, cfg, rng)
    return [vs[i] for i in range(len(vs))]


@dataclass(frozen=True)
class Face:
    """One box face: a fixed space-time axis plus bounds for the free axes.

    ``axis`` indexes the space-time coordinate (0..d-1 spatial, d temporal);
    ``normal`` is the outward unit vector, constant over the face.
    """

    axis: int
    value: float
    free_axes: tuple[int, ...]
    free_lo: np.ndarray
    free_hi: np.ndarray
    normal: np.ndarray

    @property
    def measure(self) -> float:
        return float(np.prod(self.free_hi - self.free_lo))


def faces(v: ControlVolume) -> list[Face]:
    """The 2(d+1) faces with outward normals; time faces first."""
    d = v.d
    lo = np.concatenate([v.x_lo, [v.t_lo]])
    hi = np.concatenate([v.x_hi, [v.t_hi]])
    out = []
    for axis in [d] + list(range(d)):
        free = tuple(a for a in range(d + 1) if a != axis)
        flo = lo[list(free)]
        fhi = hi[list(free)]
        for side, value in ((-1.0, lo[axis]), (+1.0, hi[axis])):
            normal = np.zeros(d + 1)
            normal[axis] = side
            out.append(Face(axis, float(value), free, flo, fhi, normal))
    return out


@dataclass(frozen=True)
class FaceQuadrature:
    """Quadrature points on one face; weights sum to the face measure."""

    points: np.ndarray
    weights: np.ndarray
    normal: np.ndarray


def face_quadrature(face: Face, rule: QuadRule) -> FaceQuadrature:
    """Tensor-product Gauss points on the face, in C order over free axes."""
    grids, wgrids = [], []
    for lo, hi in zip(face.free_lo, face.free_hi):
        half = 0.5 * (hi - lo)
        grids.append(0.5 * (lo + hi) + half * rule.nodes)
        wgrids.append(half * rule.weights)
    mesh = np.meshgrid(*grids, indexing="ij")
    wmesh = np.meshgrid(*wgrids, indexing="ij")
    n_pts = mesh[0].size
    pts = np.empty((n_pts, len(face.free_axes) + 1))
    pts[:, face.axis] = face.value
    for a, g in zip(face.free_axes, mesh):
        pts[:, a] = g.ravel()
    w = np.ones(n_pts)
    for wg in wmesh:
        w = w * wg.ravel()
    return FaceQuadrature(pts, w, face.normal)


def sample_tvd_cloud(domain: SpaceTimeDomain, n_t: int, n_x: int, rng: np.random.Generator):
    """Random time levels, each with a sorted batch of random spatial points.

    Returns (times (n_t,), xs (n_t, n_x)); sorting makes adjacent differences
    approximate the spatial total variation at each level. 1D domains only.
    """
    if domain.d != 1:
        raise ConfigError("total-variation cloud is defined for d = 1")
    if n_t < 2 or n_x < 2:
        raise ConfigError("cloud needs at least 2 time levels and 2 points per level")
    times = rng.uniform(0.0, domain.t_end, size=n_t)
    xs = rng.uniform(domain.x_lo[0], domain.x_hi[0], size=(n_t, n_x))
    xs.sort(axis=1)
    return times, xs


@dataclass(frozen=True)
class VolumeQuadBatch:
    """Flattened face quadrature for a batch of 1D volumes.

    Arrays are (N, 4Q): the four faces per volume in the fixed order
    [t_lo, t_hi, x_lo, x_hi], each carrying Q Gauss points. ``boundary_side``
    is -1/+1 where the spatial face lies on the domain boundary, else 0.
    """

    points: np.ndarray      # (N, 4Q, 2) columns (x, t)
    weights: np.ndarray     # (N, 4Q)
    n_x: np.ndarray         # (N, 4Q)
    n_t: np.ndarray         # (N, 4Q)
    measures: np.ndarray    # (N,)
    boundary_side: np.ndarray  # (N, 4Q) int8


def volume_batch_quadrature(
    volumes, rule: QuadRule, domain: SpaceTimeDomain | None = None
) -> VolumeQuadBatch:
    """Assemble the training-path quadrature arrays for d = 1 volumes.

    Accepts a VolumeSet or a list of ControlVolume.
    """
    if len(volumes) == 0:
        raise ConfigError("empty volume list")
    if isinstance(volumes, VolumeSet):
        if volumes.x_lo.shape[1] != 1:
            raise ContractError("batched quadrature supports d = 1 volumes only")
        x_lo, x_hi = volumes.x_lo[:, 0], volumes.x_hi[:, 0]
        t_lo, t_hi = volumes.t_lo, volumes.t_hi
        measures = volumes.measures
    else:
        if any(v.d != 1 for v in volumes):
            raise ContractError("batched quadrature supports d = 1 volumes only")
        x_lo = np.array([v.x_lo[0] for v in volumes])
        x_hi = np.array([v.x_hi[0] for v in volumes])
        t_lo = np.array([v.t_lo for v in volumes])
        t_hi = np.array([v.t_hi for v in volumes])
        measures = np.array([v.measure for v in volumes])
    n = len(volumes)
    q = rule.nodes.size
    hx = 0.5 * (x_hi - x_lo)
    ht = 0.5 * (t_hi - t_lo)
    xq = 0.5 * (x_lo + x_hi)[:, None] + hx[:, None] * rule.nodes
    tq = 0.5 * (t_lo + t_hi)[:, None] + ht[:, None] * rule.nodes

    pts = np.empty((n, 4 * q, 2))
    w = np.empty((n, 4 * q))
    nx = np.zeros((n, 4 * q))
    nt = np.zeros((n, 4 * q))
    bnd = np.zeros((n, 4 * q), dtype=np.int8)

    # time faces: integrand u(x, t_lo/hi), weight hx * w_q
    pts[:, :q, 0] = xq
    pts[:, :q, 1] = t_lo[:, None]
    pts[:, q : 2 * q, 0] = xq
    pts[:, q : 2 * q, 1] = t_hi[:, None]
    w[:, : 2 * q] = np.tile(hx[:, None] * rule.weights, 2)
    nt[:, :q] = -1.0
    nt[:, q : 2 * q] = +1.0
    # spatial faces: integrand F(u(x_lo/hi, t)), weight ht * w_q
    pts[:, 2 * q : 3 * q, 0] = x_lo[:, None]
    pts[:, 2 * q : 3 * q, 1] = tq
    pts[:, 3 * q :, 0] = x_hi[:, None]
    pts[:, 3 * q :, 1] = tq
    w[:, 2 * q :] = np.tile(ht[:, None] * rule.weights, 2)
    nx[:, 2 * q : 3 * q] = -1.0
    nx[:, 3 * q :] = +1.0

    if domain is not None:
        tol = 1e-12 * float(domain.extent[0])
        bnd[:, 2 * q : 3 * q] = np.where(np.abs(x_lo - domain.x_lo[0]) <= tol, -1, 0)[:, None]
        bnd[:, 3 * q :] = np.where(np.abs(x_hi - domain.x_hi[0]) <= tol, +1, 0)[:, None]

    return VolumeQuadBatch(pts, w, nx, nt, measures, bnd)
