"""Exact entropy solutions for the benchmarks plus a finite-volume oracle.

The Riemann solvers follow the standard constructions: Burgers shocks move at
the Rankine-Hugoniot speed (u_l + u_r)/2 and rarefactions are self-similar
fans in x/t; the gamma-law solver Newton-iterates the pressure function for
the star state; the dam-break solution solves the depth compatibility
equation between a left rarefaction and a right bore. A first-order
Godunov/HLL scheme provides an independent cross-check and supplies derived
reference values for the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AdmissibilityError, ConfigError, ContractError, NumericsError
from .models import ConservationLaw

BURGERS_CASES = ("shock", "rarefaction", "interaction")


@dataclass(frozen=True)
class RiemannSetup:
    """Two-state initial data for one of the benchmark problems.

    ``left``/``right`` are primitive states: (u,) for burgers, (rho, u, p)
    for euler, (h, u) for swe.
    """

    law_name: str
    left: np.ndarray
    right: np.ndarray
    x0: float
    x_lo: float
    x_hi: float
    t_end: float
    gamma: float = 1.4
    g: float = 9.81

    def __post_init__(self):
        object.__setattr__(self, "left", np.atleast_1d(np.asarray(self.left, dtype=np.float64)))
        object.__setattr__(self, "right", np.atleast_1d(np.asarray(self.right, dtype=np.float64)))
        if not self.x_lo < self.x0 < self.x_hi:
            raise ConfigError("interface must lie inside the domain")
        if self.law_name == "euler":
            for w in (self.left, self.right):
                if w[0] <= 0.0 or w[2] <= 0.0:
                    raise AdmissibilityError("Euler Riemann data needs rho, p > 0")
        if self.law_name == "swe":
            if self.left[0] <= 0.0 or self.right[0] <= 0.0:
                raise AdmissibilityError("dam break needs positive depths")


def burgers_exact(case: str, x, t: float):
    """Exact entropy solution of the three Burgers benchmarks.

    shock:        1 / 0 data at -0.25, shock speed 1/2.
    rarefaction:  0 / 1 data at -0.25, fan (x + 0.25)/t.
    interaction:  1 on (-0.5, 0], fan from -0.5 and a shock at t/2 that decays
                  along sqrt(t) - 1/2 once the fan catches it (t > 1).
    """
    if case not in BURGERS_CASES:
        raise ConfigError(f"unknown case {case!r}")
    if t < 0.0:
        raise ContractError("t must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    if case == "shock":
        return np.where(x <= -0.25 + 0.5 * t, 1.0, 0.0)
    if case == "rarefaction":
        if t == 0.0:
            return np.where(x <= -0.25, 0.0, 1.0)
        return np.clip((x + 0.25) / t, 0.0, 1.0)
    if t == 0.0:
        return np.where((x > -0.5) & (x <= 0.0), 1.0, 0.0)
    xs = 0.5 * t if t <= 1.0 else np.sqrt(t) - 0.5
    return np.where(x <= xs, np.clip((x + 0.5) / t, 0.0, 1.0), 0.0)


def _gamma_law_star(wl, wr, gamma, tol=1e-14, max_iters=100):
    """Star pressure and velocity by Newton on the standard pressure function."""
    rho_l, u_l, p_l = wl
    rho_r, u_r, p_r = wr
    c_l = np.sqrt(gamma * p_l / rho_l)
    c_r = np.sqrt(gamma * p_r / rho_r)
    if 2.0 * (c_l + c_r) / (gamma - 1.0) <= u_r - u_l:
        raise NumericsError("vacuum-generating Riemann data is unsupported")

    def f_side(p, rho_k, p_k, c_k):
        if p > p_k:  # shock branch
            a = 2.0 / ((gamma + 1.0) * rho_k)
            b = (gamma - 1.0) / (gamma + 1.0) * p_k
            root = np.sqrt(a / (p + b))
            return (p - p_k) * root, root * (1.0 - 0.5 * (p - p_k) / (p + b))
        # rarefaction branch
        pr = (p / p_k) ** ((gamma - 1.0) / (2.0 * gamma))
        return (2.0 * c_k / (gamma - 1.0)) * (pr - 1.0), pr / (rho_k * c_k) * (p_k / p)

    # PVRS guess keeps Newton in the basin for mildly nonlinear data
    p = 0.5 * (p_l + p_r) - 0.125 * (u_r - u_l) * (rho_l + rho_r) * (c_l + c_r)
    p = max(p, tol)
    for _ in range(max_iters):
        fl, dl = f_side(p, rho_l, p_l, c_l)
        fr, dr = f_side(p, rho_r, p_r, c_r)
        f = fl + fr + (u_r - u_l)
        dp = f / (dl + dr)
        p_new = p - dp
        if p_new <= 0.0:
            p_new = 0.5 * p
        if abs(p_new - p) <= tol * max(p, p_new):
            p = p_new
            break
        p = p_new
    else:
        raise NumericsError("pressure iteration did not converge")
    fl, _ = f_side(p, rho_l, p_l, c_l)
    fr, _ = f_side(p, rho_r, p_r, c_r)
    u = 0.5 * (u_l + u_r) + 0.5 * (fr - fl)
    return p, u, abs(fl + fr + (u_r - u_l))


def sod_exact(setup: RiemannSetup, x, t: float):
    """Exact gamma-law Riemann solution sampled at (x, t); primitives (rho, u, p).

    t = 0 returns the initial data (limit convention). Assembles left/right
    waves (shock or fan) around the star state by the similarity variable.
    """
    if setup.law_name != "euler":
        raise ContractError("sod_exact expects an euler setup")
    if t < 0.0:
        raise ContractError("t must be nonnegative")
    g = setup.gamma
    x = np.asarray(x, dtype=np.float64)
    wl, wr = setup.left, setup.right
    if t == 0.0:
        out = np.where((x <= setup.x0)[..., None], wl, wr)
        return out
    p_star, u_star, _ = _gamma_law_star(wl, wr, g)
    xi = (x - setup.x0) / t
    out = np.empty(x.shape + (3,))
    beta = (g - 1.0) / (g + 1.0)

    for side, (rho_k, u_k, p_k) in (("L", wl), ("R", wr)):
        sgn = 1.0 if side == "L" else -1.0
        c_k = np.sqrt(g * p_k / rho_k)
        in_side = xi <= u_star if side == "L" else xi > u_star
        if p_star > p_k:  # shock
            ratio = p_star / p_k
            rho_star = rho_k * (ratio + beta) / (beta * ratio + 1.0)
            speed = u_k - sgn * c_k * np.sqrt((g + 1.0) / (2.0 * g) * ratio + (g - 1.0) / (2.0 * g))
            ahead = in_side & (sgn * xi < sgn * speed)
            behind = in_side & ~ahead
            out[ahead] = (rho_k, u_k, p_k)
            out[behind] = (rho_star, u_star, p_star)
        else:  # rarefaction
            c_star = c_k * (p_star / p_k) ** ((g - 1.0) / (2.0 * g))
            head = u_k - sgn * c_k
            tail = u_star - sgn * c_star
            ahead = in_side & (sgn * xi < sgn * head)
            fan = in_side & (sgn * xi >= sgn * head) & (sgn * xi < sgn * tail)
            behind = in_side & (sgn * xi >= sgn * tail)
            out[ahead] = (rho_k, u_k, p_k)
            rho_star = rho_k * (p_star / p_k) ** (1.0 / g)
            out[behind] = (rho_star, u_star, p_star)
            if np.any(fan):
                xif = xi[fan]
                cf = 2.0 / (g + 1.0) * (c_k + 0.5 * (g - 1.0) * sgn * (u_k - xif))
                uf = xif + sgn * cf
                rf = rho_k * (cf / c_k) ** (2.0 / (g - 1.0))
                pf = p_k * (cf / c_k) ** (2.0 * g / (g - 1.0))
                out[fan] = np.stack([rf, uf, pf], axis=-1)
    return out


def _dam_break_middle(h_l, h_r, g, tol=1e-14, max_iters=200):
    """Middle depth of the dam-break solution by bisection on [h_r, h_l]."""

    def resid(hm):
        # left rarefaction velocity minus right bore velocity at depth hm
        return (2.0 * (np.sqrt(g * h_l) - np.sqrt(g * hm))
                - (hm - h_r) * np.sqrt(0.5 * g * (hm + h_r) / (hm * h_r)))

    a, b = h_r, h_l
    fa, fb = resid(a), resid(b)
    if fa < 0.0 or fb > 0.0:
        raise NumericsError("dam-break bracket does not contain a root")
    for _ in range(max_iters):
        mid = 0.5 * (a + b)
        fm = resid(mid)
        if fm >= 0.0:
            a = mid
        else:
            b = mid
        if b - a <= tol * h_l:
            break
    else:
        raise NumericsError("dam-break bisection did not converge")
    return 0.5 * (a + b)


def stoker_exact(setup: RiemannSetup, x, t: float):
    """Exact dam-break solution sampled at (x, t); primitives (h, u).

    Requires h_l > h_r > 0 with zero initial velocities: a left fan with
    invariant u + 2 sqrt(g h) connects to the middle state, which a bore
    moving at h_m u_m / (h_m - h_r) connects to the right state.
    """
    if setup.law_name != "swe":
        raise ContractError("stoker_exact expects an swe setup")
    if t < 0.0:
        raise ContractError("t must be nonnegative")
    g = setup.g
    h_l, u_l = setup.left
    h_r, u_r = setup.right
    if u_l != 0.0 or u_r != 0.0:
        raise ContractError("dam-break solution requires zero initial velocities")
    x = np.asarray(x, dtype=np.float64)
    if h_l == h_r:
        out = np.empty(x.shape + (2,))
        out[..., 0] = h_l
        out[..., 1] = 0.0
        return out
    if h_l < h_r:
        raise ContractError("dam-break solution requires h_l > h_r")
    if t == 0.0:
        return np.where((x <= setup.x0)[..., None], setup.left, setup.right)

    c_l = np.sqrt(g * h_l)
    h_m = _dam_break_middle(h_l, h_r, g)
    c_m = np.sqrt(g * h_m)
    u_m = 2.0 * (c_l - c_m)
    bore = h_m * u_m / (h_m - h_r)

    xi = (x - setup.x0) / t
    h = np.empty_like(xi)
    u = np.empty_like(xi)
    left = xi <= -c_l
    fan = (xi > -c_l) & (xi < u_m - c_m)
    mid = (xi >= u_m - c_m) & (xi < bore)
    right = xi >= bore
    h[left], u[left] = h_l, 0.0
    uf = 2.0 / 3.0 * (xi[fan] + c_l)
    cf = c_l - 0.5 * uf
    h[fan], u[fan] = cf**2 / g, uf
    h[mid], u[mid] = h_m, u_m
    h[right], u[right] = h_r, 0.0
    return np.stack([h, u], axis=-1)


@dataclass(frozen=True)
class GridSolution:
    """Cell-centered snapshots: x (n,), times (k,), states (k, n, m)."""

    x: np.ndarray
    times: np.ndarray
    states: np.ndarray

    def at(self, t: float) -> np.ndarray:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(float(self.times[i]) - t) > 1e-9:
            raise ContractError(f"time {t} was not recorded")
        return self.states[i]


def _burgers_godunov_flux(ul, ur):
    fl, fr = 0.5 * ul**2, 0.5 * ur**2
    shock = ul > ur
    rare = ~shock
    out = np.where(shock, np.maximum(fl, fr), 0.0)
    # convex flux with sonic point at 0
    out = np.where(rare & (ul > 0.0), fl, out)
    out = np.where(rare & (ur < 0.0), fr, out)
    return out[:, None]


def _hll_flux(law, UL, UR):
    lam_lo_l, lam_hi_l = law.wave_bounds(UL)
    lam_lo_r, lam_hi_r = law.wave_bounds(UR)
    sl = np.minimum(lam_lo_l, lam_lo_r)[:, None]
    sr = np.maximum(lam_hi_l, lam_hi_r)[:, None]
    FL = law.flux(UL)[..., 0]
    FR = law.flux(UR)[..., 0]
    mid = (sr * FL - sl * FR + sl * sr * (UR - UL)) / (sr - sl)
    return np.where(sl >= 0.0, FL, np.where(sr <= 0.0, FR, mid))


def fv_oracle(law: ConservationLaw, u0, x_lo: float, x_hi: float, t_end: float,
              n_cells: int, times=(), bc: str = "transmissive",
              cfl: float = 0.45) -> GridSolution:
    """First-order Godunov-type reference on ``n_cells`` uniform cells.

    Exact Riemann flux for Burgers, HLL for the systems; ghost cells copy the
    edge state ("transmissive") or hold the initial edge state ("dirichlet").
    Returns cell averages at the requested times plus t_end.
    """
    if n_cells < 2:
        raise ConfigError("need at least 2 cells")
    if law.d != 1:
        raise ContractError("oracle is 1D")
    if bc not in ("transmissive", "dirichlet"):
        raise ConfigError(f"unknown boundary treatment {bc!r}")
    dx = (x_hi - x_lo) / n_cells
    x = x_lo + dx * (np.arange(n_cells) + 0.5)
    U = np.atleast_2d(np.asarray(u0(x[:, None]), dtype=np.float64))
    if U.shape != (n_cells, law.m):
        raise ContractError(f"initial condition returned shape {U.shape}")

    record = sorted(set(float(t) for t in times) | {float(t_end)})
    if record[0] < 0.0 or record[-1] > t_end + 1e-12:
        raise ConfigError("record times must lie in [0, t_end]")
    snapshots, recorded = [], []

    left_ghost = U[0].copy()
    right_ghost = U[-1].copy()
    t = 0.0
    pending = list(record)
    if pending and pending[0] == 0.0:
        snapshots.append(U.copy())
        recorded.append(0.0)
        pending.pop(0)
    while pending:
        if not np.all(law.admissible(U)):
            raise NumericsError("oracle produced an inadmissible state")
        lam_lo, lam_hi = law.wave_bounds(U)
        smax = float(np.max(np.maximum(np.abs(lam_lo), np.abs(lam_hi))))
        if smax <= 0.0:
            smax = 1e-12
        dt = min(cfl * dx / smax, pending[0] - t)
        gl = left_ghost if bc == "dirichlet" else U[0]
        gr = right_ghost if bc == "dirichlet" else U[-1]
        Ue = np.vstack([gl, U, gr])
        if law.name == "burgers":
            F = _burgers_godunov_flux(Ue[:-1, 0], Ue[1:, 0])
        else:
            F = _hll_flux(law, Ue[:-1], Ue[1:])
        U = U - dt / dx * (F[1:] - F[:-1])
        t += dt
        if t >= pending[0] - 1e-14:
            snapshots.append(U.copy())
            recorded.append(pending.pop(0))
    return GridSolution(x, np.asarray(recorded), np.stack(snapshots))
