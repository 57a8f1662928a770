from __future__ import annotations

import itertools

import numpy as np
import pytest

from quantseg import solver
from quantseg.core import Dataset, PenaltySpec, check_loss, zero_residual_mask


def brute_force_qr(data: Dataset, tau: float, costs=None, intercept: bool = True) -> float:
    """Minimum objective over all basic solutions, by enumeration.

    A vertex of the LP interpolates q of the augmented rows: data rows
    (y_i, [1, x_i]) and penalty pseudo-rows (0, e_j). Every optimum is
    attained at some vertex, so the smallest objective found is the minimum.
    """
    n, p = data.n, data.p
    costs = np.zeros(p) if costs is None else np.asarray(costs, dtype=float)
    off = 1 if intercept else 0
    q = p + off
    Z = np.zeros((n + p, q))
    yy = np.zeros(n + p)
    if intercept:
        Z[:n, 0] = 1.0
    Z[:n, off:] = data.x
    yy[:n] = data.y
    Z[n:, off:] = np.eye(p)
    best = np.inf
    for rows in itertools.combinations(range(n + p), q):
        A = Z[list(rows)]
        if abs(np.linalg.det(A)) < 1e-10:
            continue
        beta = np.linalg.solve(A, yy[list(rows)])
        b = beta[0] if intercept else 0.0
        phi = beta[off:]
        obj = float(np.sum(check_loss(data.y - b - data.x @ phi, tau)) + costs @ np.abs(phi))
        best = min(best, obj)
    return best


def sign_counts(data: Dataset, tau: float, b: float, phi) -> tuple[int, int]:
    resid = data.y - b - data.x @ np.asarray(phi)
    zero = zero_residual_mask(data.y, resid)
    return int(np.sum((resid < 0) & ~zero)), int(np.sum(zero))


def sign_condition_holds(data: Dataset, tau: float, b: float, phi) -> bool:
    n_neg, n_zero = sign_counts(data, tau, b, phi)
    return n_neg <= tau * data.n <= n_neg + n_zero


@pytest.fixture(autouse=True)
def _enforce_sign_counts(monkeypatch):
    """Every unpenalized intercept fit made through the solver must satisfy
    N- <= tau * n <= N- + N0."""
    original = solver.solve_lp

    def checked(data, tau, penalty=None, *, intercept=True, basis=None):
        sol = original(data, tau, penalty, intercept=intercept, basis=basis)
        if intercept and (penalty is None or penalty.is_zero):
            assert sign_condition_holds(data, tau, sol.b, sol.phi), "residual sign counts violated"
        return sol

    monkeypatch.setattr(solver, "solve_lp", checked)


def random_dataset(rng: np.random.Generator, n: int, p: int, ties: bool = False) -> Dataset:
    x = rng.normal(size=(n, p))
    y = x @ rng.normal(size=p) + rng.standard_t(3, size=n)
    if ties:
        x = np.round(x)
        y = np.round(y)
    return Dataset(y, x)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def d1_normal():
    from quantseg.simulation import NORMAL, d1, generate
    return generate(d1(NORMAL), 7, 0)
