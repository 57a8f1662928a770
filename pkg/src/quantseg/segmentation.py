"""Multiphase estimation by exact dynamic programming over change-points.

A segmentation with breaks ``0 < l_1 < ... < l_K < n`` costs the sum of
per-segment penalized fit minima, each segment using its own length in the
tuning rule. Because that total is additive over segments, the optimal
breaks for fixed ``K`` follow from the prefix recursion

    D(k, j) = min_l  D(l, j - 1) + cost(l, k).

Segment costs are computed lazily, one start index ``l`` at a time, in a
compiled loop over increasing ends ``k`` that warm-starts each simplex
from the previous end's optimal basis. The final bases are kept so a
segment's full :class:`FitResult` can be rebuilt later with identical
numbers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from . import _lp
from .adaptive import AdaptiveConfig, adaptive_core, fit_adaptive
from .baselines import (CD_MAX_SWEEPS, CD_TOL, LS_CHI, fit_lad_lasso_type, fit_ls_adaptive_lasso,
                        lad_core, ls_alasso_core)
from .core import DataError, Dataset, FitResult, validate_tau
from .solver import SegmentTooShort

METHODS = ("aQ", "Lt", "aLS")
DEFAULT_TAU = 0.55

_AQ, _LT, _ALS = 0, 1, 2


def default_min_len(n: int, p: int) -> int:
    return max(p + 2, math.ceil(n ** 0.51))


@dataclass(frozen=True)
class SegmentationConfig:
    """Settings shared by every segment of a multiphase fit.

    ``method`` picks the per-segment estimator: ``"aQ"`` (adaptive-LASSO
    quantile, the default), ``"Lt"`` (LAD LASSO-type, always at the median)
    or ``"aLS"`` (least-squares adaptive LASSO). ``min_len=None`` resolves to
    ``max(p + 2, ceil(n ** 0.51))``. The per-segment multiplier is
    ``adaptive.lambda_rule`` applied to the segment length.
    """

    tau: float = DEFAULT_TAU
    min_len: int | None = None
    adaptive: AdaptiveConfig = field(default_factory=AdaptiveConfig)
    method: str = "aQ"

    def __post_init__(self):
        validate_tau(self.tau)
        if self.method not in METHODS:
            raise ValueError(f"unknown segmentation method {self.method!r}; expected one of {METHODS}")
        if self.min_len is not None and self.min_len < 1:
            raise ValueError("min_len must be positive")

    def resolve_min_len(self, n: int, p: int) -> int:
        if self.min_len is None:
            return default_min_len(n, p)
        if self.min_len < p + 2:
            raise DataError(f"min_len={self.min_len} is below p + 2 = {p + 2}")
        return int(self.min_len)

    def to_dict(self) -> dict:
        return {"tau": self.tau, "min_len": self.min_len, "method": self.method,
                "g": self.adaptive.g, "lambda_rule": str(self.adaptive.lambda_rule)}


@njit(cache=True)
def _cost_row(y, X, l, k_lo, k_hi, method, tau, g, chi, floor, lam_by_len, hp0, hq0,
              cost_out, hp_out, hq_out):
    """Costs of segments ``(l, k]`` for ``k = k_lo..k_hi``, warm-started along ``k``."""
    p = X.shape[1]
    hp = hp0
    hq = hq0
    empty = np.empty(0, dtype=np.int64)
    for k in range(k_lo, k_hi + 1):
        m = k - l
        idx = k - k_lo
        ys = y[l:k]
        Xs = X[l:k]
        lam = lam_by_len[m]
        if method == 2:
            _, obj, _, _, st = ls_alasso_core(ys, Xs, chi, lam, floor, 1e-10, 10_000)
            cost_out[idx] = obj if st == 0 else np.inf
            continue
        cap = 50 * (m + p)
        if method == 0:
            _, _, obj, _, hp, hq, st = adaptive_core(ys, Xs, tau, g, lam, floor, hp, hq, cap)
        else:
            _, obj, _, hp, hq, st = lad_core(ys, Xs, lam, math.log(m), floor, hp, hq, cap)
        if st == 0:
            cost_out[idx] = obj
            hp_out[idx, :] = hp
            hq_out[idx, :] = hq
        else:
            cost_out[idx] = np.inf
            hp = empty
            hq = empty


class SegmentCostTable:
    """Lazily filled, memoized table of segment costs for one dataset.

    Entries are written once; later requests never overwrite them.
    """

    def __init__(self, data: Dataset, cfg: SegmentationConfig | None = None):
        self.data = data
        self.cfg = cfg or SegmentationConfig()
        self.min_len = self.cfg.resolve_min_len(data.n, data.p)
        n, p = data.n, data.p
        self._method = METHODS.index(self.cfg.method)
        self._q = p + 1 if self._method == _AQ else p
        self._lam = np.array([self.cfg.adaptive.multiplier(m) if m else 0.0 for m in range(n + 1)])
        self._cost = np.full((n + 1, n + 1), np.nan)
        self._hp = np.zeros((n + 1, n + 1, self._q), dtype=np.int64)
        self._hq = np.zeros((n + 1, n + 1, self._q), dtype=np.int64)
        self._fits: dict[tuple[int, int], FitResult] = {}

    @property
    def n_computed(self) -> int:
        return int(np.count_nonzero(~np.isnan(self._cost)))

    def _check(self, l: int, k: int) -> None:
        if not 0 <= l < k <= self.data.n:
            raise DataError(f"invalid segment ({l}, {k}] for n={self.data.n}")
        if k - l < self.min_len:
            raise SegmentTooShort(f"segment ({l}, {k}] has {k - l} rows, min_len is {self.min_len}")

    def ensure(self, l: int, k_lo: int, k_hi: int) -> None:
        """Make sure costs ``(l, k]`` exist for every ``k`` in ``[k_lo, k_hi]``."""
        k_lo = max(k_lo, l + self.min_len)
        k_hi = min(k_hi, self.data.n)
        if k_lo > k_hi:
            return
        missing = np.flatnonzero(np.isnan(self._cost[l, k_lo:k_hi + 1]))
        if missing.size == 0:
            return
        a, b = k_lo + int(missing[0]), k_lo + int(missing[-1])
        if a > l + self.min_len and not np.isnan(self._cost[l, a - 1]) and np.isfinite(self._cost[l, a - 1]) \
                and self._method != _ALS:
            hp0, hq0 = self._hp[l, a - 1].copy(), self._hq[l, a - 1].copy()
        else:
            hp0 = hq0 = _lp.EMPTY_BASIS
        cnt = b - a + 1
        costs = np.empty(cnt)
        hp = np.zeros((cnt, self._q), dtype=np.int64)
        hq = np.zeros((cnt, self._q), dtype=np.int64)
        _cost_row(self.data.y, self.data.x, l, a, b, self._method, self.cfg.tau,
                  self.cfg.adaptive.g, LS_CHI, self.cfg.adaptive.weight_floor, self._lam,
                  hp0, hq0, costs, hp, hq)
        fresh = np.isnan(self._cost[l, a:b + 1])
        self._cost[l, a:b + 1][fresh] = costs[fresh]
        self._hp[l, a:b + 1][fresh] = hp[fresh]
        self._hq[l, a:b + 1][fresh] = hq[fresh]

    def cost(self, l: int, k: int) -> float:
        self._check(l, k)
        self.ensure(l, k, k)
        return float(self._cost[l, k])

    def costs_to(self, ls: np.ndarray, k: int) -> np.ndarray:
        """Vector of ``cost(l, k)`` for already-ensured starts ``ls``."""
        return self._cost[ls, k]

    def fit(self, l: int, k: int) -> FitResult:
        """Full fit of segment ``(l, k]``; its objective equals ``cost(l, k)`` exactly."""
        key = (l, k)
        if key not in self._fits:
            c = self.cost(l, k)
            rows = self.data.rows(l, k)
            lam = float(self._lam[k - l])
            if self._method == _AQ:
                warm = (self._hp[l, k], self._hq[l, k]) if np.isfinite(c) else None
                res = fit_adaptive(rows, self.cfg.tau, self.cfg.adaptive, warm_start=warm)
            elif self._method == _LT:
                warm = (self._hp[l, k], self._hq[l, k]) if np.isfinite(c) else None
                res = fit_lad_lasso_type(rows, self.cfg.adaptive.weight_floor, lam=lam,
                                         warm_start=warm)
            else:
                res = fit_ls_adaptive_lasso(rows, LS_CHI, lam, self.cfg.adaptive.weight_floor)
            self._fits[key] = res
        return self._fits[key]


def segment_cost(data: Dataset, l: int, k: int,
                 cfg: SegmentationConfig | None = None) -> tuple[float, FitResult]:
    """Penalized fit of observations ``l+1..k`` alone, computed from scratch."""
    cfg = cfg or SegmentationConfig()
    min_len = cfg.resolve_min_len(data.n, data.p)
    if not 0 <= l < k <= data.n:
        raise DataError(f"invalid segment ({l}, {k}] for n={data.n}")
    if k - l < min_len:
        raise SegmentTooShort(f"segment ({l}, {k}] has {k - l} rows, min_len is {min_len}")
    rows = data.rows(l, k)
    lam = cfg.adaptive.multiplier(k - l)
    if cfg.method == "aQ":
        res = fit_adaptive(rows, cfg.tau, cfg.adaptive)
    elif cfg.method == "Lt":
        res = fit_lad_lasso_type(rows, cfg.adaptive.weight_floor, lam=lam)
    else:
        res = fit_ls_adaptive_lasso(rows, LS_CHI, lam, cfg.adaptive.weight_floor)
    return res.objective, res


@dataclass(frozen=True)
class Segmentation:
    change_points: tuple[int, ...]
    segment_fits: tuple[FitResult, ...]
    total_objective: float
    n: int
    min_len: int
    config: SegmentationConfig = field(default_factory=SegmentationConfig)

    @property
    def k(self) -> int:
        return len(self.change_points)

    @property
    def bounds(self) -> list[tuple[int, int]]:
        edges = (0, *self.change_points, self.n)
        return list(zip(edges[:-1], edges[1:]))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "change_points": list(self.change_points),
            "min_len": self.min_len,
            "config": self.config.to_dict(),
            "total_objective": self.total_objective,
            "segments": [
                {"start": l + 1, "end": k, "intercept": f.intercept,
                 "coefficients": f.coefficients.tolist(), "active_set": sorted(f.active_set),
                 "objective": f.objective}
                for (l, k), f in zip(self.bounds, self.segment_fits)
            ],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _assemble(table: SegmentCostTable, breaks: Sequence[int]) -> Segmentation:
    edges = (0, *breaks, table.data.n)
    fits = tuple(table.fit(l, k) for l, k in zip(edges[:-1], edges[1:]))
    total = float(sum(f.objective for f in fits))
    return Segmentation(tuple(int(b) for b in breaks), fits, total, table.data.n,
                        table.min_len, table.cfg)


def _table_for(data: Dataset, cfg: SegmentationConfig | None,
               table: SegmentCostTable | None) -> SegmentCostTable:
    if table is None:
        return SegmentCostTable(data, cfg)
    if table.data is not data:
        raise ValueError("cost table belongs to a different dataset")
    if cfg is not None and cfg != table.cfg:
        raise ValueError("cost table was built with a different configuration")
    return table


def best_segmentation(data: Dataset, k: int, cfg: SegmentationConfig | None = None, *,
                      table: SegmentCostTable | None = None) -> Segmentation:
    """Exact minimizer of the segmented objective over all ``k``-break layouts.

    Ties in the recursion go to the smallest change-point index.
    """
    table = _table_for(data, cfg, table)
    if k < 0:
        raise ValueError("number of change-points must be >= 0")
    n, m = data.n, table.min_len
    if n < (k + 1) * m:
        raise DataError(f"infeasible: n={n} < (K+1)*min_len = {(k + 1) * m}")
    if k == 0:
        table.cost(0, n)
        return _assemble(table, ())

    # which segment ends each start may need, so only those costs are fitted
    for l in range(0, n - m + 1):
        if l == 0:
            table.ensure(0, m, n - k * m)
            continue
        if l < m:
            continue
        j_max = min(k, l // m)
        hi = n - (k - j_max) * m if j_max < k else n - m
        if j_max >= 1 and hi >= l + m:
            table.ensure(l, l + m, hi)
        if j_max == k:
            table.ensure(l, n, n)

    D = np.full((k + 1, n + 1), np.inf)
    arg = np.full((k + 1, n + 1), -1, dtype=np.int64)
    ends = np.arange(m, n - k * m + 1)
    D[0, ends] = table._cost[0, ends]
    for j in range(1, k + 1):
        k_hi = n - (k - j) * m
        for end in range(j * m + m, k_hi + 1):
            if j == k and end != n:
                continue
            ls = np.arange(j * m, end - m + 1)
            vals = D[j - 1, ls] + table.costs_to(ls, end)
            best = int(np.argmin(vals))
            D[j, end] = vals[best]
            arg[j, end] = ls[best]
    if not np.isfinite(D[k, n]):
        raise DataError("no feasible segmentation with finite cost")
    breaks = []
    end = n
    for j in range(k, 0, -1):
        end = int(arg[j, end])
        breaks.append(end)
    return _assemble(table, breaks[::-1])


def check_breaks(change_points: Sequence[int], n: int, min_len: int) -> tuple[int, ...]:
    cps = tuple(int(c) for c in change_points)
    edges = (0, *cps, n)
    gaps = np.diff(edges)
    if np.any(gaps < min_len):
        raise DataError(f"inadmissible change points {list(cps)}: every segment needs "
                        f"at least min_len={min_len} observations")
    return cps


def refit_at_breaks(data: Dataset, change_points: Sequence[int],
                    cfg: SegmentationConfig | None = None, *,
                    table: SegmentCostTable | None = None) -> Segmentation:
    """Per-segment fits at fixed, caller-supplied breaks."""
    table = _table_for(data, cfg, table)
    cps = check_breaks(change_points, data.n, table.min_len)
    return _assemble(table, cps)
