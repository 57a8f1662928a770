"""Zero-selection rates, bias/spread summaries and other Monte Carlo statistics.

Sums use :func:`math.fsum`, so every aggregate is independent of the order
in which replications are combined.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike

from .core import check_loss, validate_tau
from .simulation import ErrorLaw


@dataclass(frozen=True)
class SelectionRates:
    true_zero_rate: float
    false_zero_rate: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SelectionCounts:
    """Raw counts behind :class:`SelectionRates`; these add across replications."""

    true_zero: int
    n_zero: int
    false_zero: int
    n_nonzero: int

    def __add__(self, other: SelectionCounts) -> SelectionCounts:
        return SelectionCounts(self.true_zero + other.true_zero, self.n_zero + other.n_zero,
                               self.false_zero + other.false_zero,
                               self.n_nonzero + other.n_nonzero)

    @property
    def rates(self) -> SelectionRates:
        tz = self.true_zero / self.n_zero if self.n_zero else math.nan
        fz = self.false_zero / self.n_nonzero if self.n_nonzero else math.nan
        return SelectionRates(tz, fz)


def selection_counts(estimate: ArrayLike, truth: ArrayLike, zero_tol: float = 0.0) -> SelectionCounts:
    est = np.asarray(estimate, dtype=np.float64)
    tru = np.asarray(truth, dtype=np.float64)
    if est.shape != tru.shape:
        raise ValueError(f"estimate has shape {est.shape}, truth {tru.shape}")
    est_zero = np.abs(est) <= zero_tol
    tru_zero = tru == 0
    return SelectionCounts(int(np.sum(est_zero & tru_zero)), int(np.sum(tru_zero)),
                           int(np.sum(est_zero & ~tru_zero)), int(np.sum(~tru_zero)))


def selection_rates(estimate: ArrayLike, truth: ArrayLike, zero_tol: float = 0.0) -> SelectionRates:
    """Share of true zeros estimated as zero and of true nonzeros estimated as zero.

    A coefficient counts as zero when ``|estimate| <= zero_tol``.
    """
    counts = selection_counts(estimate, truth, zero_tol)
    if counts.n_zero == 0 or counts.n_nonzero == 0:
        raise ValueError("truth needs at least one zero and one nonzero coefficient")
    return counts.rates


@dataclass(frozen=True)
class SpreadStats:
    mean_diff: float
    mean_abs_diff: float
    msqe: float

    def to_dict(self) -> dict:
        return asdict(self)


def spread_from_diffs(diffs: Iterable[ArrayLike], m: int) -> SpreadStats:
    """Summaries of per-replication error vectors already restricted to the support.

    ``diffs`` yields one array per (replication, phase); ``m`` is the number
    of replications that divides the squared-error total.
    """
    flat = [float(v) for d in diffs for v in np.ravel(d)]
    if m < 1:
        raise ValueError("need at least one replication")
    if not flat:
        return SpreadStats(math.nan, math.nan, 0.0)
    return SpreadStats(math.fsum(flat) / len(flat),
                       math.fsum(abs(v) for v in flat) / len(flat),
                       math.fsum(v * v for v in flat) / m)


def spread_stats(estimates: ArrayLike, truth: ArrayLike) -> SpreadStats:
    """Bias and spread of ``estimates`` (one row per replication) on the true support."""
    est = np.atleast_2d(np.asarray(estimates, dtype=np.float64))
    tru = np.asarray(truth, dtype=np.float64)
    if est.shape[0] < 1:
        raise ValueError("need at least one replication")
    support = tru != 0
    return spread_from_diffs([row[support] - tru[support] for row in est], est.shape[0])


def lower_median(values: Sequence[float]) -> float:
    """Median that picks the lower middle element for even counts."""
    if len(values) == 0:
        return math.nan
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def excess_loss_sample(law: ErrorLaw, tau: float, b: float, phi_diff: ArrayLike,
                       x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draws of ``rho(e - b - x'(phi - phi0)) - rho(e - b0)``, ``b0`` the law's quantile.

    ``x`` holds one covariate row per draw. Its expectation is nonnegative
    because ``b0`` minimizes the expected check loss.
    """
    tau = validate_tau(tau)
    b0 = law.quantile(tau)
    if math.isnan(b0):
        raise ValueError(f"{law} has no closed-form quantile")
    e = law.sample(rng, x.shape[0])
    shift = b + x @ np.asarray(phi_diff, dtype=np.float64)
    return check_loss(e - shift, tau) - check_loss(e - b0, tau)


def mean_and_se(values: ArrayLike) -> tuple[float, float]:
    v = np.asarray(values, dtype=np.float64)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))
