"""Exact weighted-L1 penalized quantile regression.

Every quantile-based estimator in the package funnels through :func:`fit`,
which solves

    min_{b, phi}  sum_i rho_tau(y_i - b - x_i' phi) + sum_j c_j |phi_j|

as a linear program and returns a vertex (basic) optimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from . import _lp
from .core import DataError, Dataset, FitResult, PenaltySpec, objective_value, validate_tau


class SolverError(RuntimeError):
    """The simplex run did not reach an optimal vertex."""

    def __init__(self, status: str, iterations: int):
        super().__init__(f"simplex stopped with status {status!r} after {iterations} pivots")
        self.status = status
        self.iterations = iterations


class SegmentTooShort(DataError):
    pass


@dataclass(frozen=True)
class LpSolution:
    """Split-variable form of an LP optimum.

    ``y - b - X @ (phi_plus - phi_minus) == u_plus - u_minus`` with at most
    one of each split pair nonzero.
    """

    b: float
    phi_plus: NDArray[np.float64]
    phi_minus: NDArray[np.float64]
    u_plus: NDArray[np.float64]
    u_minus: NDArray[np.float64]
    status: str
    basis: NDArray[np.int64]
    iterations: int

    @property
    def phi(self) -> NDArray[np.float64]:
        return self.phi_plus - self.phi_minus


def solve_lp(data: Dataset, tau: float, penalty: PenaltySpec | None = None, *,
             intercept: bool = True, basis: NDArray[np.int64] | None = None) -> LpSolution:
    """Solve the penalized check-loss LP; raises :class:`SolverError` unless optimal."""
    tau = validate_tau(tau)
    if penalty is None:
        penalty = PenaltySpec.zero(data.p)
    if penalty.weights.shape[0] != data.p:
        raise DataError(f"penalty has {penalty.weights.shape[0]} weights, dataset has p={data.p}")
    h0 = _lp.EMPTY_BASIS if basis is None else np.asarray(basis, dtype=np.int64)
    cap = _lp.iteration_cap(data.n, data.p)
    b, phi, _, h, status, iters = _lp.penalized_qr(
        data.y, data.x, tau, penalty.costs, intercept, h0, cap)
    if status != _lp.OPTIMAL:
        raise SolverError(_lp.STATUS_NAMES[status], iters)
    resid = data.y - b - data.x @ phi
    return LpSolution(
        b=float(b),
        phi_plus=np.maximum(phi, 0.0),
        phi_minus=np.maximum(-phi, 0.0),
        u_plus=np.maximum(resid, 0.0),
        u_minus=np.maximum(-resid, 0.0),
        status="optimal",
        basis=h,
        iterations=int(iters),
    )


def fit(data: Dataset, tau: float, penalty: PenaltySpec | None = None, *,
        intercept: bool = True, method: str = "quantile") -> FitResult:
    """Global minimizer of the (penalized) check-loss objective.

    With ``intercept=False`` the intercept is fixed at zero.
    """
    sol = solve_lp(data, tau, penalty, intercept=intercept)
    phi = sol.phi
    obj = objective_value(data, sol.b, phi, tau, penalty)
    return FitResult.build(data, sol.b, phi, obj, iterations=sol.iterations, method=method)


def fit_subsample(data: Dataset, l: int, k: int, tau: float,
                  penalty: PenaltySpec | None = None) -> FitResult:
    """:func:`fit` restricted to observations ``l+1 .. k``."""
    if not 0 <= l < k <= data.n:
        raise DataError(f"invalid segment ({l}, {k}] for n={data.n}")
    if k - l < data.p + 2:
        raise SegmentTooShort(f"segment ({l}, {k}] has {k - l} rows, need at least {data.p + 2}")
    return fit(data.rows(l, k), tau, penalty)
