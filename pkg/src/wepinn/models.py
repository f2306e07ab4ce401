"""Conservation-law definitions: fluxes, convex entropy pairs, conversions.

Three 1D laws ship: inviscid Burgers, compressible Euler (gamma law), and
shallow water. Every callable is vectorized over leading axes with states of
shape (..., m); fluxes carry a trailing spatial-direction axis so the types
stay dimension-generic even though only d=1 laws are constructed here.

The entropy-flux/entropy/flux triples satisfy grad q = grad eta . grad F,
which the tests confirm by finite differences on random admissible states.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import AdmissibilityError, ConfigError

CLAMP_FLOOR = 1e-8


@dataclass(frozen=True)
class ConservationLaw:
    """Flux F, convex entropy pair (eta, q), and admissibility for one system.

    flux:               (..., m) -> (..., m, d)
    flux_jac:           (..., m) -> (..., d, m, m), dF^(j)_i/dU_k
    flux_hess:          (..., m) -> (..., d, m, m, m), d2F^(j)_i/dU_j dU_k
    entropy:            (..., m) -> (...)
    entropy_grad:       (..., m) -> (..., m)
    entropy_flux:       (..., m) -> (..., d)
    entropy_flux_grad:  (..., m) -> (..., d, m)
    admissible:         (..., m) -> bool (...)
    clamp:              (..., m) -> ((..., m), clamp count); training-path guard
    wave_bounds:        (..., m) -> ((...), (...)), slowest/fastest speeds (d=1)
    """

    name: str
    m: int
    d: int
    flux: Callable
    flux_jac: Callable
    flux_hess: Callable
    entropy: Callable
    entropy_grad: Callable
    entropy_flux: Callable
    entropy_flux_grad: Callable
    admissible: Callable
    clamp: Callable
    wave_bounds: Callable


@dataclass(frozen=True)
class EulerParams:
    gamma: float = 1.4

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ConfigError(f"gamma must exceed 1, got {self.gamma}")


@dataclass(frozen=True)
class SweParams:
    g: float = 9.81

    def __post_init__(self):
        if not self.g > 0.0:
            raise ConfigError(f"g must be positive, got {self.g}")


def _as_states(U, m):
    U = np.asarray(U, dtype=np.float64)
    if U.shape[-1] != m:
        raise AdmissibilityError(f"state has {U.shape[-1]} components, law expects {m}")
    return U


def burgers_law() -> ConservationLaw:
    """Scalar law u_t + (u^2/2)_x = 0 with entropy pair (u^2/2, u^3/3)."""

    def flux(U):
        U = _as_states(U, 1)
        return (0.5 * U**2)[..., None]

    def flux_jac(U):
        U = _as_states(U, 1)
        return U[..., None, None, :]

    def flux_hess(U):
        U = _as_states(U, 1)
        return np.ones(U.shape[:-1] + (1, 1, 1, 1))

    def entropy(U):
        U = _as_states(U, 1)
        return 0.5 * U[..., 0] ** 2

    def entropy_grad(U):
        return _as_states(U, 1).copy()

    def entropy_flux(U):
        U = _as_states(U, 1)
        return (U[..., 0] ** 3 / 3.0)[..., None]

    def entropy_flux_grad(U):
        U = _as_states(U, 1)
        return (U**2)[..., None, :]

    def admissible(U):
        U = _as_states(U, 1)
        return np.isfinite(U[..., 0])

    def clamp(U):
        return _as_states(U, 1), 0

    def wave_bounds(U):
        u = _as_states(U, 1)[..., 0]
        return u, u

    return ConservationLaw("burgers", 1, 1, flux, flux_jac, flux_hess, entropy,
                           entropy_grad, entropy_flux, entropy_flux_grad,
                           admissible, clamp, wave_bounds)


def euler_law(p: EulerParams = EulerParams()) -> ConservationLaw:
    """1D compressible Euler with ideal-gas EOS E = rho u^2/2 + p/(gamma-1).

    Conserved state (rho, rho u, E); entropy pair eta = -rho s, q = -rho u s
    with s = ln(p / rho^gamma).
    """
    g = p.gamma

    def _split(U, check=True):
        rho, mom, E = U[..., 0], U[..., 1], U[..., 2]
        pres = (g - 1.0) * (E - 0.5 * mom**2 / rho)
        if check and not np.all((rho > 0.0) & (pres > 0.0)):
            raise AdmissibilityError("Euler state with rho<=0 or p<=0")
        return rho, mom, E, pres

    def flux(U):
        U = _as_states(U, 3)
        rho, mom, E, pres = _split(U)
        u = mom / rho
        F = np.stack([mom, mom * u + pres, u * (E + pres)], axis=-1)
        return F[..., None]

    def flux_jac(U):
        U = _as_states(U, 3)
        rho, mom, E, pres = _split(U)
        u = mom / rho
        H = (E + pres) / rho
        A = np.empty(U.shape[:-1] + (3, 3))
        A[..., 0, 0] = 0.0
        A[..., 0, 1] = 1.0
        A[..., 0, 2] = 0.0
        A[..., 1, 0] = 0.5 * (g - 3.0) * u**2
        A[..., 1, 1] = (3.0 - g) * u
        A[..., 1, 2] = g - 1.0
        A[..., 2, 0] = 0.5 * (g - 1.0) * u**3 - u * H
        A[..., 2, 1] = H - (g - 1.0) * u**2
        A[..., 2, 2] = g * u
        return A[..., None, :, :]

    def flux_hess(U):
        # Second derivatives of F2 = (3-g)/2 m^2/rho + (g-1)E and
        # F3 = g m E / rho - (g-1) m^3 / (2 rho^2); F1 is linear.
        U = _as_states(U, 3)
        rho, mom, E, _ = _split(U)
        H2 = np.zeros(U.shape[:-1] + (3, 3, 3))
        H2[..., 1, 0, 0] = (3.0 - g) * mom**2 / rho**3
        H2[..., 1, 0, 1] = -(3.0 - g) * mom / rho**2
        H2[..., 1, 1, 0] = H2[..., 1, 0, 1]
        H2[..., 1, 1, 1] = (3.0 - g) / rho
        H2[..., 2, 0, 0] = 2.0 * g * mom * E / rho**3 - 3.0 * (g - 1.0) * mom**3 / rho**4
        H2[..., 2, 0, 1] = -g * E / rho**2 + 3.0 * (g - 1.0) * mom**2 / rho**3
        H2[..., 2, 1, 0] = H2[..., 2, 0, 1]
        H2[..., 2, 0, 2] = -g * mom / rho**2
        H2[..., 2, 2, 0] = H2[..., 2, 0, 2]
        H2[..., 2, 1, 1] = -3.0 * (g - 1.0) * mom / rho**2
        H2[..., 2, 1, 2] = g / rho
        H2[..., 2, 2, 1] = H2[..., 2, 1, 2]
        return H2[..., None, :, :, :]

    def _s_and_grad(U):
        rho, mom, E, pres = _split(U)
        u = mom / rho
        s = np.log(pres) - g * np.log(rho)
        ds = np.stack(
            [
                (g - 1.0) * 0.5 * u**2 / pres - g / rho,
                -(g - 1.0) * u / pres,
                (g - 1.0) / pres,
            ],
            axis=-1,
        )
        return rho, u, s, ds

    def entropy(U):
        U = _as_states(U, 3)
        rho, _, s, _ = _s_and_grad(U)
        return -rho * s

    def entropy_grad(U):
        U = _as_states(U, 3)
        rho, _, s, ds = _s_and_grad(U)
        grad = -rho[..., None] * ds
        grad[..., 0] -= s
        return grad

    def entropy_flux(U):
        U = _as_states(U, 3)
        rho, u, s, _ = _s_and_grad(U)
        return (-rho * u * s)[..., None]

    def entropy_flux_grad(U):
        U = _as_states(U, 3)
        rho, u, s, ds = _s_and_grad(U)
        eta = -rho * s
        deta = -rho[..., None] * ds
        deta[..., 0] -= s
        du = np.stack([-u / rho, 1.0 / rho, np.zeros_like(rho)], axis=-1)
        return (eta[..., None] * du + u[..., None] * deta)[..., None, :]

    def admissible(U):
        U = _as_states(U, 3)
        rho, mom, E, pres = _split(U, check=False)
        return (rho > 0.0) & (pres > 0.0)

    def clamp(U):
        U = _as_states(U, 3)
        rho, mom, E, pres = _split(U, check=False)
        rho_c = np.maximum(rho, CLAMP_FLOOR)
        pres_c = np.maximum((g - 1.0) * (E - 0.5 * mom**2 / rho_c), CLAMP_FLOOR)
        count = int(np.sum(rho < CLAMP_FLOOR)) + int(
            np.sum((g - 1.0) * (E - 0.5 * mom**2 / rho_c) < CLAMP_FLOOR)
        )
        if count == 0:
            return U, 0
        E_c = 0.5 * mom**2 / rho_c + pres_c / (g - 1.0)
        return np.stack([rho_c, mom, E_c], axis=-1), count

    def wave_bounds(U):
        U = _as_states(U, 3)
        rho, mom, E, pres = _split(U)
        u = mom / rho
        c = np.sqrt(g * pres / rho)
        return u - c, u + c

    return ConservationLaw("euler", 3, 1, flux, flux_jac, flux_hess, entropy,
                           entropy_grad, entropy_flux, entropy_flux_grad,
                           admissible, clamp, wave_bounds)


def swe_law(p: SweParams = SweParams()) -> ConservationLaw:
    """1D shallow water, state (h, hu), F = (hu, hu^2 + g h^2/2).

    Entropy eta = h u^2/2 + g h^2/2 paired with q = (eta + g h^2/2) u, the
    unique flux compatible with grad q = grad eta . grad F.
    """
    g = p.g

    def _split(U, check=True):
        h, mom = U[..., 0], U[..., 1]
        if check and not np.all(h > 0.0):
            raise AdmissibilityError("shallow water state with h<=0")
        return h, mom

    def flux(U):
        U = _as_states(U, 2)
        h, mom = _split(U)
        F = np.stack([mom, mom**2 / h + 0.5 * g * h**2], axis=-1)
        return F[..., None]

    def flux_jac(U):
        U = _as_states(U, 2)
        h, mom = _split(U)
        u = mom / h
        A = np.empty(U.shape[:-1] + (2, 2))
        A[..., 0, 0] = 0.0
        A[..., 0, 1] = 1.0
        A[..., 1, 0] = g * h - u**2
        A[..., 1, 1] = 2.0 * u
        return A[..., None, :, :]

    def flux_hess(U):
        U = _as_states(U, 2)
        h, mom = _split(U)
        H2 = np.zeros(U.shape[:-1] + (2, 2, 2))
        H2[..., 1, 0, 0] = 2.0 * mom**2 / h**3 + g
        H2[..., 1, 0, 1] = -2.0 * mom / h**2
        H2[..., 1, 1, 0] = H2[..., 1, 0, 1]
        H2[..., 1, 1, 1] = 2.0 / h
        return H2[..., None, :, :, :]

    def entropy(U):
        U = _as_states(U, 2)
        h, mom = _split(U)
        return 0.5 * mom**2 / h + 0.5 * g * h**2

    def entropy_grad(U):
        U = _as_states(U, 2)
        h, mom = _split(U)
        return np.stack([-0.5 * mom**2 / h**2 + g * h, mom / h], axis=-1)

    def entropy_flux(U):
        U = _as_states(U, 2)
        h, mom = _split(U)
        return (0.5 * mom**3 / h**2 + g * h * mom)[..., None]

    def entropy_flux_grad(U):
        U = _as_states(U, 2)
        h, mom = _split(U)
        dq = np.stack([-(mom / h) ** 3 + g * mom, 1.5 * (mom / h) ** 2 + g * h], axis=-1)
        return dq[..., None, :]

    def admissible(U):
        U = _as_states(U, 2)
        return U[..., 0] > 0.0

    def clamp(U):
        U = _as_states(U, 2)
        h = U[..., 0]
        count = int(np.sum(h < CLAMP_FLOOR))
        if count == 0:
            return U, 0
        return np.stack([np.maximum(h, CLAMP_FLOOR), U[..., 1]], axis=-1), count

    def wave_bounds(U):
        U = _as_states(U, 2)
        h, mom = _split(U)
        u = mom / h
        c = np.sqrt(g * h)
        return u - c, u + c

    return ConservationLaw("swe", 2, 1, flux, flux_jac, flux_hess, entropy,
                           entropy_grad, entropy_flux, entropy_flux_grad,
                           admissible, clamp, wave_bounds)


def primitive_to_conservative(law: ConservationLaw, w, params=None) -> np.ndarray:
    """Map primitive variables to the conserved state of the given law.

    burgers: (u,) -> (u,); euler: (rho, u, p) -> (rho, rho u, E);
    swe: (h, u) -> (h, hu). ``params`` supplies gamma for Euler (default 1.4).
    """
    w = np.asarray(w, dtype=np.float64)
    if law.name == "burgers":
        return w.copy()
    if law.name == "euler":
        gamma = params.gamma if params is not None else 1.4
        rho, u, p = w[..., 0], w[..., 1], w[..., 2]
        if not np.all((rho > 0.0) & (p > 0.0)):
            raise AdmissibilityError("inadmissible Euler primitive state")
        return np.stack([rho, rho * u, 0.5 * rho * u**2 + p / (gamma - 1.0)], axis=-1)
    if law.name == "swe":
        h, u = w[..., 0], w[..., 1]
        if not np.all(h > 0.0):
            raise AdmissibilityError("inadmissible shallow water primitive state")
        return np.stack([h, h * u], axis=-1)
    raise ConfigError(f"unknown law {law.name!r}")


def conservative_to_primitive(law: ConservationLaw, U, params=None) -> np.ndarray:
    """Inverse of primitive_to_conservative; round trips are exact to 1e-12."""
    U = np.asarray(U, dtype=np.float64)
    if law.name == "burgers":
        return U.copy()
    if law.name == "euler":
        gamma = params.gamma if params is not None else 1.4
        rho, mom, E = U[..., 0], U[..., 1], U[..., 2]
        if not np.all(rho > 0.0):
            raise AdmissibilityError("inadmissible Euler conserved state")
        u = mom / rho
        p = (gamma - 1.0) * (E - 0.5 * mom * u)
        if not np.all(p > 0.0):
            raise AdmissibilityError("inadmissible Euler conserved state")
        return np.stack([rho, u, p], axis=-1)
    if law.name == "swe":
        h = U[..., 0]
        if not np.all(h > 0.0):
            raise AdmissibilityError("inadmissible shallow water conserved state")
        return np.stack([h, U[..., 1] / h], axis=-1)
    raise ConfigError(f"unknown law {law.name!r}")


LAW_FACTORIES = {
    "burgers": lambda params=None: burgers_law(),
    "euler": lambda params=None: euler_law(params or EulerParams()),
    "swe": lambda params=None: swe_law(params or SweParams()),
}


def law_by_name(name: str, params=None) -> ConservationLaw:
    try:
        return LAW_FACTORIES[name](params)
    except KeyError:
        raise ConfigError(f"unknown law {name!r}; expected burgers|euler|swe") from None
