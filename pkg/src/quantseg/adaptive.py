"""Two-stage adaptive-LASSO quantile regression.

An unpenalized quantile fit (the pilot) supplies data-driven weights
``|phi_pilot|^(-g)``; the final estimate minimizes the check loss plus
``lambda * sum_j w_j |phi_j|`` with an unpenalized intercept.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit
from numpy.typing import ArrayLike, NDArray

from . import _lp
from .core import Dataset, FitResult, PenaltySpec, validate_tau, zero_residual_mask
from .solver import SolverError, fit

DEFAULT_G = 1.225
DEFAULT_WEIGHT_FLOOR = 1e-10


@dataclass(frozen=True)
class PowerRule:
    """Tuning sequence ``scale * m ** exponent`` for a sample of size ``m``."""

    exponent: float = 0.4
    scale: float = 1.0

    def __call__(self, m: int) -> float:
        return self.scale * float(m) ** self.exponent

    def __str__(self):
        base = f"n^{self.exponent:g}"
        return base if self.scale == 1.0 else f"{self.scale:g}*{base}"


_RULE_RE = re.compile(r"^\s*(?:(?P<scale>[0-9.eE+-]+)\s*\*\s*)?n\s*\^\s*(?P<exp>[0-9.eE+-]+(?:/[0-9.]+)?)\s*$")


def parse_lambda_rule(text: str) -> Callable[[int], float]:
    """Parse ``"n^0.4"``, ``"2*n^2/5"`` or a constant such as ``"3.5"``."""
    m = _RULE_RE.match(text)
    if m:
        exp = m.group("exp")
        if "/" in exp:
            num, den = exp.split("/")
            exponent = float(num) / float(den)
        else:
            exponent = float(exp)
        return PowerRule(exponent, float(m.group("scale") or 1.0))
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"cannot parse lambda rule {text!r}") from None
    return PowerRule(0.0, value)


@dataclass(frozen=True)
class AdaptiveConfig:
    g: float = DEFAULT_G
    lambda_rule: Callable[[int], float] = PowerRule()
    weight_floor: float = DEFAULT_WEIGHT_FLOOR

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError("weight exponent g must be positive")
        if not self.weight_floor > 0:
            raise ValueError("weight_floor must be positive")

    def multiplier(self, m: int) -> float:
        lam = float(self.lambda_rule(m))
        if lam < 0:
            raise ValueError(f"lambda rule returned {lam} for m={m}")
        return lam


def compute_weights(pilot_coefficients: ArrayLike, g: float,
                    weight_floor: float = DEFAULT_WEIGHT_FLOOR) -> NDArray[np.float64]:
    """Adaptive weights ``max(|phi|, floor) ** -g``."""
    if not g > 0:
        raise ValueError("g must be positive")
    phi = np.abs(np.asarray(pilot_coefficients, dtype=np.float64))
    return np.maximum(phi, weight_floor) ** (-g)


def pilot_fit(data: Dataset, tau: float) -> FitResult:
    return fit(data, tau, PenaltySpec.zero(data.p))


@njit(cache=True)
def adaptive_core(y, X, tau, g, lam, floor, h_pilot, h_pen, cap):
    """Pilot fit, weights and penalized fit in one compiled call.

    Returns ``(b, phi, objective, pilot_phi, h_pilot, h_pen, status)``.
    """
    p = X.shape[1]
    zero = np.zeros(p)
    _, pphi, _, hp, st, _ = _lp.penalized_qr(y, X, tau, zero, True, h_pilot, cap)
    if st != _lp.OPTIMAL:
        return 0.0, pphi, np.inf, pphi, hp, hp, st
    costs = np.empty(p)
    for j in range(p):
        costs[j] = lam * max(abs(pphi[j]), floor) ** (-g)
    start = h_pen if h_pen.shape[0] == hp.shape[0] else hp
    b, phi, obj, hq, st, _ = _lp.penalized_qr(y, X, tau, costs, True, start, cap)
    return b, phi, obj, pphi, hp, hq, st


def fit_adaptive(data: Dataset, tau: float, cfg: AdaptiveConfig | None = None, *,
                 warm_start: tuple[NDArray[np.int64], NDArray[np.int64]] | None = None) -> FitResult:
    """Adaptive-LASSO quantile fit with ``lambda = cfg.lambda_rule(n)``.

    The returned result carries the pilot coefficients and the penalty
    in ``extra`` so callers can rebuild the exact problem that was solved.
    ``warm_start`` optionally gives simplex bases ``(pilot, penalized)`` to
    start from; it changes the work done, not the optimum.
    """
    cfg = cfg or AdaptiveConfig()
    tau = validate_tau(tau)
    lam = cfg.multiplier(data.n)
    cap = _lp.iteration_cap(data.n, data.p)
    h_pilot, h_pen = warm_start or (_lp.EMPTY_BASIS, _lp.EMPTY_BASIS)
    b, phi, obj, pphi, _, _, st = adaptive_core(
        data.y, data.x, tau, cfg.g, lam, cfg.weight_floor,
        np.asarray(h_pilot, dtype=np.int64), np.asarray(h_pen, dtype=np.int64), cap)
    if st != _lp.OPTIMAL:
        raise SolverError(_lp.STATUS_NAMES[st], cap)
    pilot_phi = np.asarray(pphi)
    weights = compute_weights(pilot_phi, cfg.g, cfg.weight_floor)
    return FitResult.build(
        data, b, phi, obj, method="alasso-quantile",
        extra={"pilot_coefficients": pilot_phi.tolist(), "lambda": lam,
               "weights": weights.tolist(), "g": cfg.g})


def adaptive_penalty(fit_result: FitResult) -> PenaltySpec:
    """Penalty actually used by an adaptive fit (from its ``extra`` record)."""
    return PenaltySpec(fit_result.extra["lambda"], np.asarray(fit_result.extra["weights"]))


@dataclass(frozen=True)
class KktReport:
    """Per-coefficient subgradient check of a penalized quantile fit."""

    side: tuple[str, ...]
    score: NDArray[np.float64]
    bound: NDArray[np.float64]
    slack_tolerance: NDArray[np.float64]
    satisfied: NDArray[np.bool_]

    @property
    def all_satisfied(self) -> bool:
        return bool(np.all(self.satisfied))

    def to_dict(self) -> dict:
        return {
            "side": list(self.side),
            "score": self.score.tolist(),
            "bound": self.bound.tolist(),
            "slack_tolerance": self.slack_tolerance.tolist(),
            "satisfied": self.satisfied.tolist(),
            "all_satisfied": self.all_satisfied,
        }


def kkt_verify(data: Dataset, tau: float, penalty: PenaltySpec, fit_result: FitResult) -> KktReport:
    """Check first-order optimality of ``fit_result`` for the penalized problem.

    The score of coordinate ``j`` is ``tau * sum_i X_ij - sum_i X_ij 1{y_i < fitted_i}``
    with fitted values including the intercept. Active coordinates need
    ``score == bound * sign(phi_j)``, inactive ones ``|score| <= bound``,
    both up to the slack contributed by observations with zero residual.
    """
    tau = validate_tau(tau)
    phi = fit_result.coefficients
    resid = fit_result.residuals(data)
    below = resid < 0
    zero = zero_residual_mask(data.y, resid)
    below &= ~zero
    score = tau * data.x.sum(axis=0) - data.x[below].sum(axis=0)
    bound = penalty.costs.copy()
    slack = np.abs(data.x[zero]).sum(axis=0) + 1e-6
    active = np.array([j in fit_result.active_set for j in range(data.p)])
    ok = np.where(active,
                  np.abs(score - bound * np.sign(phi)) <= slack,
                  np.abs(score) <= bound + slack)
    side = tuple("active" if a else "inactive" for a in active)
    return KktReport(side, score, bound, slack, ok)
