"""Control-volume flux-balance and entropy losses, plus the strong-form baseline.

Per space-time box the conservation residual is the boundary integral of
(u n_t + F(u) . n_x) and the entropy residual the boundary integral of
(eta(u) n_t + q(u) . n_x); both are evaluated by Gauss quadrature face by
face. The losses are volume-weighted means: conservation penalizes |R|^2/|D|,
entropy one-sidedly penalizes max(0, E)^2/|D| (entropy production across
shocks must stay unpenalized), and a discrete total-variation term bounds
max_t TV(u(., t)) via sorted point clouds. Gradients come from one reverse
pass with hand-assembled cotangents; they are finite-difference checked in
the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import network
from .errors import ConfigError, ContractError
from .geometry import (
    ControlVolume,
    QuadRule,
    SpaceTimeDomain,
    face_quadrature,
    faces,
    volume_batch_quadrature,
)
from .models import ConservationLaw


@dataclass(frozen=True)
class BoundaryCondition:
    """How flux integrands behave on faces lying on the spatial boundary.

    "dirichlet-state": use the prescribed far-field state instead of the
    network value (Riemann-type problems); "network-value": no substitution.
    """

    domain: SpaceTimeDomain
    mode: str = "dirichlet-state"
    left_state: np.ndarray | None = None
    right_state: np.ndarray | None = None

    def __post_init__(self):
        if self.mode not in ("dirichlet-state", "network-value"):
            raise ConfigError(f"unknown boundary mode {self.mode!r}")
        if self.mode == "dirichlet-state":
            if self.domain.d != 1:
                raise ConfigError("dirichlet-state boundary handling is 1D only")
            if self.left_state is None or self.right_state is None:
                raise ConfigError("dirichlet-state mode needs left and right states")


@dataclass
class LossBreakdown:
    cons: float
    ent: float
    tvd: float
    total: float
    grad: np.ndarray
    clamp_count: int = 0


def _boundary_state(boundary, face, d):
    """Prescribed state for a spatial face on the domain boundary, else None."""
    if boundary is None or boundary.mode != "dirichlet-state" or face.axis >= d:
        return None
    dom = boundary.domain
    tol = 1e-12 * float(dom.extent[face.axis])
    if face.normal[face.axis] < 0 and abs(face.value - dom.x_lo[face.axis]) <= tol:
        return boundary.left_state
    if face.normal[face.axis] > 0 and abs(face.value - dom.x_hi[face.axis]) <= tol:
        return boundary.right_state
    return None


def _surface_integral(u, law, volume, rule, boundary, time_density, space_density):
    d = volume.d
    acc = None
    for face in faces(volume):
        fq = face_quadrature(face, rule)
        state = _boundary_state(boundary, face, d)
        if state is not None:
            U = np.broadcast_to(np.asarray(state, dtype=np.float64), (fq.points.shape[0], law.m))
        else:
            U = np.stack([np.atleast_1d(u(p[:-1], p[-1])) for p in fq.points])
        n_t = fq.normal[-1]
        n_x = fq.normal[:d]
        contrib = n_t * time_density(U)
        if np.any(n_x != 0.0):
            contrib = contrib + np.einsum("n...d,d->n...", space_density(U), n_x)
        term = fq.weights @ contrib
        acc = term if acc is None else acc + term
    return acc


def weak_residual(u, law: ConservationLaw, volume: ControlVolume, rule: QuadRule,
                  boundary: BoundaryCondition | None = None) -> np.ndarray:
    """Boundary flux imbalance of u over one box; zero for exact solutions.

    ``u`` maps (x (d,), t) to a state (m,). Vector-valued: one component per
    conserved quantity, so Rankine-Hugoniot balance is tested implicitly.
    """
    return _surface_integral(u, law, volume, rule, boundary,
                             lambda U: U, law.flux)


def entropy_residual(u, law: ConservationLaw, volume: ControlVolume, rule: QuadRule,
                     boundary: BoundaryCondition | None = None) -> float:
    """Boundary integral of the entropy pair; <= 0 for admissible solutions."""
    val = _surface_integral(u, law, volume, rule, boundary,
                            law.entropy, law.entropy_flux)
    return float(val)


def _volume_terms(a: network.Ansatz, law: ConservationLaw, volumes, rule, boundary,
                  need_grad: bool):
    """Shared batched evaluation of the conservation and entropy terms (d=1)."""
    if not volumes:
        raise ConfigError("volume list must be nonempty")
    domain = boundary.domain if boundary is not None else None
    batch = volume_batch_quadrature(volumes, rule, domain)
    n, npts, _ = batch.points.shape
    pts = batch.points.reshape(-1, 2)
    u_raw, XT, tau, acts = network._ansatz_cached(a, pts[:, :1], pts[:, 1])
    U, clamp_count = law.clamp(u_raw)

    frozen = np.zeros(pts.shape[0], dtype=bool)
    if boundary is not None and boundary.mode == "dirichlet-state":
        side = batch.boundary_side.reshape(-1)
        if np.any(side != 0):
            U = U.copy()
            U[side == -1] = boundary.left_state
            U[side == +1] = boundary.right_state
            frozen = side != 0

    w = batch.weights
    nx = batch.n_x
    nt = batch.n_t
    m = law.m
    Um = U.reshape(n, npts, m)
    F = law.flux(U).reshape(n, npts, m)
    R = np.einsum("nq,nqi->ni", w, nt[..., None] * Um + nx[..., None] * F, optimize=True)
    cons = float(np.mean(np.sum(R**2, axis=1) / batch.measures))

    eta = law.entropy(U).reshape(n, npts)
    qflux = law.entropy_flux(U).reshape(n, npts)
    E = np.sum(w * (nt * eta + nx * qflux), axis=1)
    Epos = np.maximum(E, 0.0)
    ent = float(np.mean(Epos**2 / batch.measures))

    if not need_grad:
        return cons, ent, None, clamp_count

    coef_c = (2.0 / (n * batch.measures))[:, None, None]
    A = law.flux_jac(U)[..., 0, :, :].reshape(n, npts, m, m)
    cot = coef_c * w[..., None] * (
        nt[..., None] * R[:, None, :]
        + nx[..., None] * np.einsum("nqij,ni->nqj", A, R, optimize=True)
    )
    coef_e = (2.0 * Epos / (n * batch.measures))[:, None, None]
    deta = law.entropy_grad(U).reshape(n, npts, m)
    dq = law.entropy_flux_grad(U)[..., 0, :].reshape(n, npts, m)
    cot = cot + coef_e * w[..., None] * (nt[..., None] * deta + nx[..., None] * dq)

    cot = cot.reshape(-1, m)
    if np.any(frozen):
        cot[frozen] = 0.0
    grad = network.grad_batch(a.params, XT, cot * tau, a.maps, acts=acts)
    return cons, ent, grad, clamp_count


def cons_loss(a: network.Ansatz, law: ConservationLaw, volumes, rule: QuadRule,
              boundary: BoundaryCondition | None = None) -> float:
    """Volume-weighted mean of |R(D)|^2 / |D| over the sampled boxes."""
    cons, _, _, _ = _volume_terms(a, law, volumes, rule, boundary, need_grad=False)
    return cons


def ent_loss(a: network.Ansatz, law: ConservationLaw, volumes, rule: QuadRule,
             boundary: BoundaryCondition | None = None) -> float:
    """One-sided mean of max(0, E(D))^2 / |D|; entropy production is free."""
    _, ent, _, _ = _volume_terms(a, law, volumes, rule, boundary, need_grad=False)
    return ent


def _cloud_values(a, cloud):
    times, xs = cloud
    times = np.asarray(times, dtype=np.float64)
    xs = np.asarray(xs, dtype=np.float64)
    if np.any(np.diff(xs, axis=1) < 0.0):
        raise ContractError("total-variation cloud must be sorted per time level")
    n_t, n_x = xs.shape
    X = xs.reshape(-1, 1)
    T = np.repeat(times, n_x)
    return times, xs, X, T, n_t, n_x


def tvd_loss(a: network.Ansatz, cloud) -> float:
    """max over time levels of the summed absolute adjacent differences.

    ``cloud`` is (times (n_t,), xs (n_t, n_x)) with each row sorted; system
    components contribute their variations additively.
    """
    _, _, X, T, n_t, n_x = _cloud_values(a, cloud)
    V = network.ansatz_eval_batch(a, X, T).reshape(n_t, n_x, -1)
    tv = np.abs(np.diff(V, axis=1)).sum(axis=(1, 2))
    return float(tv.max())


def total_loss(a: network.Ansatz, law: ConservationLaw, volumes, cloud, rule: QuadRule,
               boundary: BoundaryCondition | None = None) -> LossBreakdown:
    """All three terms with unit weights plus the parameter gradient.

    Subgradient conventions: sign(0) = 0 for the variation term, the max over
    time levels routes gradient only through the argmax level, and
    max(0, E) contributes only where E > 0.
    """
    cons, ent, grad, clamp_count = _volume_terms(a, law, volumes, rule, boundary,
                                                 need_grad=True)

    times, xs, X, T, n_t, n_x = _cloud_values(a, cloud)
    u_raw, XT, tau, acts = network._ansatz_cached(a, X, T)
    V = u_raw.reshape(n_t, n_x, -1)
    D = np.diff(V, axis=1)
    tv = np.abs(D).sum(axis=(1, 2))
    j = int(np.argmax(tv))
    tvd = float(tv[j])
    cot = np.zeros_like(V)
    s = np.sign(D[j])
    cot[j, 1:, :] += s
    cot[j, :-1, :] -= s
    grad = grad + network.grad_batch(
        a.params, XT, cot.reshape(-1, V.shape[-1]) * tau, a.maps, acts=acts
    )

    total = cons + ent + tvd
    return LossBreakdown(cons, ent, tvd, total, grad, clamp_count)


def strong_pinn_terms(params: network.NetworkParams, law: ConservationLaw,
                      interior_pts, ic_pts, ic_targets, bc_pts, bc_targets,
                      maps: network.AffineMaps | None = None):
    """Pointwise-residual baseline terms: (residual, ic, bc, grad).

    The residual is u_t + dF/du . u_x at each collocation point via
    forward-mode input derivatives; initial and boundary mismatches are mean
    squared with unit weights. States are clamped to the admissible set
    (straight-through) before flux Jacobians are taken.
    """
    P = params.n_params
    grad = np.zeros(P)

    interior_pts = np.asarray(interior_pts, dtype=np.float64)
    n_i = interior_pts.shape[0]
    if n_i:
        Y, J, cache = network._jet_cached(params, interior_pts, maps)
        u_x = J[:, :, 0]
        u_t = J[:, :, 1]
        Uc, _ = law.clamp(Y)
        A = law.flux_jac(Uc)[:, 0, :, :]
        r = u_t + np.einsum("nij,nj->ni", A, u_x, optimize=True)
        res = float(np.mean(np.sum(r**2, axis=1)))
        rbar = 2.0 * r / n_i
        H2 = law.flux_hess(Uc)[:, 0, :, :, :]
        val_cot = np.einsum("ni,nijk,nj->nk", rbar, H2, u_x, optimize=True)
        jet_cot = np.zeros_like(J)
        jet_cot[:, :, 0] = np.einsum("nij,ni->nj", A, rbar, optimize=True)
        jet_cot[:, :, 1] = rbar
        grad += network.jet_grad_batch(params, interior_pts, val_cot, jet_cot, maps, cache)
    else:
        res = 0.0

    def _mismatch(pts, targets):
        pts = np.asarray(pts, dtype=np.float64)
        if pts.shape[0] == 0:
            return 0.0, np.zeros(P)
        Y, acts = network._eval_cached(params, pts, maps)
        diff = Y - np.asarray(targets, dtype=np.float64)
        loss = float(np.mean(np.sum(diff**2, axis=1)))
        g = network.grad_batch(params, pts, 2.0 * diff / pts.shape[0], maps, acts=acts)
        return loss, g

    ic, g_ic = _mismatch(ic_pts, ic_targets)
    bc, g_bc = _mismatch(bc_pts, bc_targets)
    return res, ic, bc, grad + g_ic + g_bc


def strong_pinn_loss(params: network.NetworkParams, law: ConservationLaw,
                     interior_pts, ic_pts, ic_targets, bc_pts, bc_targets,
                     maps: network.AffineMaps | None = None):
    """Total strong-form loss (residual + ic + bc, unit weights) and gradient."""
    res, ic, bc, grad = strong_pinn_terms(params, law, interior_pts, ic_pts,
                                          ic_targets, bc_pts, bc_targets, maps)
    return res + ic + bc, grad
