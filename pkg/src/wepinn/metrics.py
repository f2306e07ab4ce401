"""Relative error norms against references and loss-based error diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError


@dataclass(frozen=True)
class ErrorRow:
    time: float
    component: str
    l1: float
    l2: float
    linf: float


@dataclass
class ErrorReport:
    rows: list[ErrorRow]

    def at(self, time: float, component: str) -> ErrorRow:
        for r in self.rows:
            if r.component == component and abs(r.time - time) <= 1e-12:
                return r
        raise KeyError((time, component))


def relative_errors(approx, exact, grid: np.ndarray, times,
                    components=None) -> ErrorReport:
    """Relative L1/L2/Linf errors per snapshot time and component.

    ``approx`` and ``exact`` map (grid (n,), t) to (n, c) arrays; norms are
    uniform-grid Riemann sums so the cell width cancels in the ratios. A
    reference with zero norm raises (the ratio is undefined).
    """
    grid = np.asarray(grid, dtype=np.float64)
    rows = []
    for t in times:
        a = np.atleast_2d(np.asarray(approx(grid, t), dtype=np.float64))
        e = np.atleast_2d(np.asarray(exact(grid, t), dtype=np.float64))
        if a.shape != e.shape or a.shape[0] != grid.size:
            raise ContractError(f"shape mismatch at t={t}: {a.shape} vs {e.shape}")
        names = components or [f"c{i}" for i in range(a.shape[1])]
        for i, name in enumerate(names):
            diff = a[:, i] - e[:, i]
            ref1 = float(np.sum(np.abs(e[:, i])))
            ref2 = float(np.sqrt(np.sum(e[:, i] ** 2)))
            refi = float(np.max(np.abs(e[:, i])))
            if ref1 == 0.0 or ref2 == 0.0 or refi == 0.0:
                raise ZeroDivisionError(
                    f"reference norm of {name!r} vanishes at t={t}")
            rows.append(ErrorRow(float(t), name,
                                 float(np.sum(np.abs(diff))) / ref1,
                                 float(np.sqrt(np.sum(diff**2))) / ref2,
                                 float(np.max(np.abs(diff))) / refi))
    return ErrorReport(rows)


def truncation_bound(l_cons: float, l_ent: float, spacetime_measure: float) -> float:
    """sqrt(|Omega x (0,T)|) (sqrt(L_cons) + sqrt(L_ent)): the weak-error bound."""
    if l_cons < 0.0 or l_ent < 0.0 or spacetime_measure < 0.0:
        raise ContractError("truncation bound needs nonnegative inputs")
    return float(np.sqrt(spacetime_measure) * (np.sqrt(l_cons) + np.sqrt(l_ent)))


def _ranks(v: np.ndarray) -> np.ndarray:
    # average ranks for ties
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size)
    sv = v[order]
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j)
        i = j + 1
    return ranks


def spearman(x, y) -> float | None:
    """Rank correlation; None when either input is constant (undefined)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    rx, ry = _ranks(x), _ranks(y)
    sx, sy = rx.std(), ry.std()
    if sx == 0.0 or sy == 0.0:
        return None
    return float(np.mean((rx - rx.mean()) * (ry - ry.mean())) / (sx * sy))


@dataclass
class BoundDiagnostic:
    k_hat: float
    rank_correlation: float | None
    bounds: np.ndarray
    errors: np.ndarray


def l1_bound_diagnostic(history) -> BoundDiagnostic:
    """Consistency report between losses and the measured terminal L1 error.

    ``history`` holds (l_cons, l_ent, e_l1) per checkpoint. Computes the loss
    functional b = l_cons^(1/4) + l_ent^(1/4), the smallest constant K with
    error <= K b over all checkpoints, and the rank correlation between b and
    the errors (None when degenerate). Reported, not asserted: the underlying
    estimate is an upper bound with an unknown constant.
    """
    rows = [tuple(map(float, r)) for r in history]
    if len(rows) < 5:
        raise ConfigError("diagnostic needs at least 5 checkpoints")
    arr = np.asarray(rows)
    if np.any(arr < 0.0):
        raise ContractError("losses and errors must be nonnegative")
    b = arr[:, 0] ** 0.25 + arr[:, 1] ** 0.25
    err = arr[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(b > 0.0, err / b, np.where(err > 0.0, np.inf, 0.0))
    return BoundDiagnostic(float(np.max(ratios)), spearman(b, err), b, err)


def total_variation(x: np.ndarray, u: np.ndarray) -> float:
    """Sum of absolute adjacent differences of samples sorted by x.

    Components of system profiles contribute additively; any monotone profile
    returns exactly the endpoint difference by telescoping.
    """
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if np.any(np.diff(x) < 0.0):
        raise ContractError("samples must be sorted by x")
    if u.ndim == 1:
        u = u[:, None]
    if u.shape[0] != x.size:
        raise ContractError("x and u must have matching lengths")
    return float(np.abs(np.diff(u, axis=0)).sum())
