"""Comparison estimators: LS adaptive LASSO, LAD LASSO-type and SCAD quantile.

None of these objectives has an intercept; the simulated designs have none
either, so ``FitResult.intercept`` is always 0 here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from numpy.typing import ArrayLike, NDArray

from . import _lp
from .adaptive import DEFAULT_WEIGHT_FLOOR, compute_weights
from .core import DataError, Dataset, FitResult, PenaltySpec, check_loss, validate_tau
from .solver import SolverError, fit

LS_CHI = 9.0 / 40.0
SCAD_A1 = 5.0
CD_TOL = 1e-10
CD_MAX_SWEEPS = 10_000
LLA_TOL = 1e-8
LLA_MAX_ITER = 50

CD_OK = 0
CD_SINGULAR = 1
CD_NOT_CONVERGED = 2


class SingularDesign(DataError):
    pass


class NotConverged(RuntimeError):
    pass


def default_lambda(n: int) -> float:
    return float(n) ** 0.4


@njit(cache=True)
def _ols(y, X):
    G = X.T @ X
    p = G.shape[0]
    scale = 0.0
    for j in range(p):
        scale = max(scale, G[j, j])
    if scale == 0.0:
        return np.zeros(p), False
    # reject designs whose Gram matrix is numerically singular
    eig = np.linalg.eigvalsh(G)
    if eig[0] <= 1e-12 * scale:
        return np.zeros(p), False
    return np.linalg.solve(G, X.T @ y), True


@njit(cache=True)
def _ls_objective(y, X, phi, costs):
    r = y - X @ phi
    total = 0.0
    for i in range(r.shape[0]):
        total += r[i] * r[i]
    for j in range(phi.shape[0]):
        total += costs[j] * abs(phi[j])
    return total


@njit(cache=True)
def coordinate_descent(y, X, costs, phi0, tol, max_sweeps):
    """Cyclic coordinate descent for ``||y - X phi||^2 + sum_j costs_j |phi_j|``.

    Returns ``(phi, sweeps, converged, objective_trace)``.
    """
    n, p = X.shape
    phi = phi0.copy()
    r = y - X @ phi
    ss = np.empty(p)
    for j in range(p):
        acc = 0.0
        for i in range(n):
            acc += X[i, j] * X[i, j]
        ss[j] = acc
    trace = np.empty(max_sweeps + 1)
    trace[0] = _ls_objective(y, X, phi, costs)
    sweeps = 0
    converged = False
    while sweeps < max_sweeps:
        delta = 0.0
        for j in range(p):
            if ss[j] == 0.0:
                continue
            rho = 0.0
            for i in range(n):
                rho += X[i, j] * r[i]
            rho += ss[j] * phi[j]
            half = 0.5 * costs[j]
            if rho > half:
                new = (rho - half) / ss[j]
            elif rho < -half:
                new = (rho + half) / ss[j]
            else:
                new = 0.0
            step = new - phi[j]
            if step != 0.0:
                for i in range(n):
                    r[i] -= X[i, j] * step
                phi[j] = new
                delta = max(delta, abs(step))
        sweeps += 1
        trace[sweeps] = _ls_objective(y, X, phi, costs)
        if delta < tol:
            converged = True
            break
    return phi, sweeps, converged, trace[:sweeps + 1]


@njit(cache=True)
def ls_alasso_core(y, X, chi, lam, floor, tol, max_sweeps):
    """OLS pilot, weights ``|phi_ols|^-chi`` and the penalized LS fit.

    Returns ``(phi, objective, costs, sweeps, status)``.
    """
    p = X.shape[1]
    pilot, ok = _ols(y, X)
    costs = np.empty(p)
    if not ok:
        return pilot, np.inf, costs, 0, CD_SINGULAR
    for j in range(p):
        costs[j] = lam * max(abs(pilot[j]), floor) ** (-chi)
    phi, sweeps, conv, trace = coordinate_descent(y, X, costs, pilot, tol, max_sweeps)
    status = CD_OK if conv else CD_NOT_CONVERGED
    return phi, trace[-1], costs, sweeps, status


@njit(cache=True)
def lad_core(y, X, lam, pilot_lam, floor, h_pilot, h_pen, cap):
    """QLASSO median pilot then the LAD LASSO-type fit (objective in ``|r|`` form).

    Returns ``(phi, objective, pilot_phi, h_pilot, h_pen, status)``.
    """
    p = X.shape[1]
    uniform = np.full(p, pilot_lam)
    _, pphi, _, hp, st, _ = _lp.penalized_qr(y, X, 0.5, uniform, False, h_pilot, cap)
    if st != _lp.OPTIMAL:
        return pphi, np.inf, pphi, hp, hp, st
    half = np.empty(p)
    for j in range(p):
        # sum|r| + c|phi| = 2 * (sum rho_0.5(r) + (c/2)|phi|)
        half[j] = 0.5 * lam / max(abs(pphi[j]), floor)
    start = h_pen if h_pen.shape[0] == hp.shape[0] else hp
    _, phi, obj, hq, st, _ = _lp.penalized_qr(y, X, 0.5, half, False, start, cap)
    return phi, 2.0 * obj, pphi, hp, hq, st


def fit_ls_adaptive_lasso(data: Dataset, chi: float = LS_CHI, lam: float | None = None,
                          weight_floor: float = DEFAULT_WEIGHT_FLOOR) -> FitResult:
    """Adaptive LASSO for least squares, ``sum (y - X phi)^2 + lam * sum |phi_ols|^-chi |phi|``.

    ``lam`` defaults to ``n ** (2/5)``.
    """
    lam = default_lambda(data.n) if lam is None else float(lam)
    phi, obj, costs, sweeps, status = ls_alasso_core(
        data.y, data.x, chi, lam, weight_floor, CD_TOL, CD_MAX_SWEEPS)
    if status == CD_SINGULAR:
        raise SingularDesign("Gram matrix of X is singular; no OLS pilot")
    if status == CD_NOT_CONVERGED:
        raise NotConverged(f"coordinate descent did not converge in {CD_MAX_SWEEPS} sweeps")
    return FitResult.build(data, 0.0, phi, obj, iterations=int(sweeps), method="ls-alasso",
                           extra={"lambda": lam, "weights": (costs / lam if lam else costs).tolist()})


def fit_qlasso_pilot(data: Dataset, tau: float) -> FitResult:
    """Quantile LASSO without intercept, uniform weights and multiplier ``log n``."""
    if data.n < data.p + 2:
        raise DataError(f"need at least p + 2 = {data.p + 2} observations")
    return fit(data, tau, PenaltySpec.uniform(math.log(data.n), data.p),
               intercept=False, method="qlasso")


def fit_lad_lasso_type(data: Dataset, weight_floor: float = DEFAULT_WEIGHT_FLOOR, *,
                       lam: float | None = None,
                       warm_start: tuple[NDArray[np.int64], NDArray[np.int64]] | None = None
                       ) -> FitResult:
    """LAD with penalty ``lam / |phi_qlasso|``, no intercept; ``lam`` defaults to ``n^(2/5)``."""
    if data.n < data.p + 2:
        raise DataError(f"need at least p + 2 = {data.p + 2} observations")
    cap = _lp.iteration_cap(data.n, data.p)
    lam = default_lambda(data.n) if lam is None else float(lam)
    h_pilot, h_pen = warm_start or (_lp.EMPTY_BASIS, _lp.EMPTY_BASIS)
    phi, obj, pphi, _, _, st = lad_core(data.y, data.x, lam, math.log(data.n), weight_floor,
                                        np.asarray(h_pilot, dtype=np.int64),
                                        np.asarray(h_pen, dtype=np.int64), cap)
    if st != _lp.OPTIMAL:
        raise SolverError(_lp.STATUS_NAMES[st], cap)
    weights = lam / np.maximum(np.abs(pphi), weight_floor)
    return FitResult.build(data, 0.0, phi, obj, method="lad-lassotype",
                           extra={"pilot_coefficients": np.asarray(pphi).tolist(), "lambda": lam,
                                  "weights": weights.tolist()})


def scad_penalty_derivative(abs_phi, lam, a1: float = SCAD_A1):
    """SCAD derivative ``lam * {1{t <= lam} + (a1 lam - t)_+ / ((a1 - 1) lam) 1{t > lam}}``.

    Vectorized over ``abs_phi`` and ``lam``.
    """
    if a1 <= 2:
        raise ValueError("SCAD requires a1 > 2")
    t = np.asarray(abs_phi, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        tail = np.maximum(a1 * lam - t, 0.0) / (a1 - 1.0)
    out = np.where(lam <= 0, 0.0, np.where(t <= lam, lam, tail))
    return float(out) if out.ndim == 0 else out


def scad_penalty(abs_phi, lam, a1: float = SCAD_A1):
    """SCAD penalty value, the integral of :func:`scad_penalty_derivative` from 0."""
    t = np.asarray(abs_phi, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    mid = (2 * a1 * lam * t - t * t - lam * lam) / (2 * (a1 - 1))
    out = np.where(t <= lam, lam * t, np.where(t <= a1 * lam, mid, (a1 + 1) * lam * lam / 2))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ScadConfig:
    a1: float
    lam: NDArray[np.float64]

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=np.float64).reshape(-1)
        if self.a1 <= 2:
            raise ValueError("a1 must exceed 2")
        if np.any(lam < 0) or not np.all(np.isfinite(lam)):
            raise ValueError("SCAD lambda entries must be finite and >= 0")
        object.__setattr__(self, "lam", lam)

    @classmethod
    def from_pilot(cls, pilot_coefficients: ArrayLike, a1: float = SCAD_A1,
                   weight_floor: float = DEFAULT_WEIGHT_FLOOR) -> ScadConfig:
        """Component-wise ``lam_j = 1 / |phi_qlasso_j|`` (floored)."""
        return cls(a1, compute_weights(pilot_coefficients, 1.0, weight_floor))


def scad_objective(data: Dataset, phi: ArrayLike, tau: float, cfg: ScadConfig) -> float:
    phi = np.asarray(phi, dtype=np.float64)
    loss = float(np.sum(check_loss(data.y - data.x @ phi, tau)))
    return loss + float(np.sum(scad_penalty(np.abs(phi), cfg.lam, cfg.a1)))


def fit_scad_quantile(data: Dataset, tau: float, cfg: ScadConfig | None = None, *,
                      start: ArrayLike | None = None, max_iter: int = LLA_MAX_ITER,
                      tol: float = LLA_TOL) -> FitResult:
    """SCAD-penalized quantile regression by local linear approximation.

    Starts at the QLASSO pilot (which also supplies the default ``cfg``).
    Each step solves the weighted-L1 problem with weights equal to the SCAD
    derivative at the current iterate. If ``max_iter`` steps pass without the
    coefficients settling, the best iterate by SCAD objective is returned
    with ``converged=False``; solver failures are reported the same way.
    """
    tau = validate_tau(tau)
    if start is None or cfg is None:
        pilot = fit_qlasso_pilot(data, tau).coefficients
        cfg = cfg or ScadConfig.from_pilot(pilot)
        phi = np.array(pilot if start is None else start, dtype=np.float64)
    else:
        phi = np.array(start, dtype=np.float64)
    best_phi, best_obj = phi.copy(), scad_objective(data, phi, tau, cfg)
    trace = [best_obj]
    converged = False
    failure = None
    it = 0
    while it < max_iter:
        weights = scad_penalty_derivative(np.abs(phi), cfg.lam, cfg.a1)
        try:
            step = fit(data, tau, PenaltySpec(1.0, weights), intercept=False).coefficients
        except SolverError as exc:
            failure = exc.status
            break
        it += 1
        change = float(np.max(np.abs(step - phi)))
        phi = np.array(step)
        obj = scad_objective(data, phi, tau, cfg)
        trace.append(obj)
        if obj <= best_obj:
            best_phi, best_obj = phi.copy(), obj
        if change < tol:
            converged = True
            break
    final_phi, final_obj = (phi, trace[-1]) if converged else (best_phi, best_obj)
    extra = {"lambda": cfg.lam.tolist(), "a1": cfg.a1, "objective_trace": trace}
    if failure:
        extra["failure"] = failure
    return FitResult.build(data, 0.0, final_phi, final_obj, converged=converged,
                           iterations=it, method="scad", extra=extra)
