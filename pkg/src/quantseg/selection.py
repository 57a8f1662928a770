"""Choosing the number of change-points with ``B(K) = n log s_K + G(K) B_n``."""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass
from typing import Callable

from .core import DataError, Dataset
from .segmentation import SegmentationConfig, Segmentation, SegmentCostTable, best_segmentation

S_HAT_FLOOR = 1e-12
DEFAULT_K_MAX = 3


def default_b_n(n: int) -> float:
    return float(n) ** 0.625


def default_g(k: int) -> float:
    return float(k)


def criterion_value(n: int, s_hat: float, k: int, g: Callable[[int], float] = default_g,
                    b_n: float | None = None) -> float:
    """``n * log(s_hat) + g(k) * b_n``; ``b_n`` defaults to ``n ** (5/8)``."""
    if not s_hat > 0:
        raise ValueError(f"s_hat must be positive, got {s_hat}")
    b_n = default_b_n(n) if b_n is None else b_n
    return n * math.log(s_hat) + g(k) * b_n


@dataclass(frozen=True)
class CriterionTrace:
    ks: tuple[int, ...]
    s_hat: tuple[float, ...]
    b_value: tuple[float, ...]
    chosen_k: int

    def rows(self) -> list[dict]:
        return [{"K": k, "s_hat": s, "B": b} for k, s, b in zip(self.ks, self.s_hat, self.b_value)]

    def to_dict(self) -> dict:
        return {"chosen_k": self.chosen_k, "trace": self.rows()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["K", "s_hat", "B"], lineterminator="\n")
        w.writeheader()
        for row in self.rows():
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        return buf.getvalue()

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def select_k(data: Dataset, k_max: int = DEFAULT_K_MAX, cfg: SegmentationConfig | None = None, *,
             g: Callable[[int], float] = default_g, b_n: float | None = None,
             table: SegmentCostTable | None = None
             ) -> tuple[int, CriterionTrace, Segmentation]:
    """Fit the best segmentation for every ``K = 0..k_max`` and minimize ``B(K)``.

    All runs share one cost table. Values of ``K`` that do not fit
    ``(K + 1) * min_len <= n`` are dropped with a warning; an ``s_hat`` of
    zero (a perfect fit) is floored at ``1e-12``, also with a warning.
    Exact ties go to the smaller ``K``. A custom ``b_n`` outside
    ``(sqrt(n), n)`` is used but warned about.
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    if b_n is not None and not math.sqrt(data.n) < b_n < data.n:
        warnings.warn(f"B_n={b_n} is outside (sqrt(n), n) = ({math.sqrt(data.n):.3g}, {data.n}); "
                      "the consistency guarantee needs sqrt(n) << B_n << n", stacklevel=2)
    table = table or SegmentCostTable(data, cfg)
    n = data.n
    feasible = [k for k in range(k_max + 1) if (k + 1) * table.min_len <= n]
    if not feasible:
        raise DataError(f"n={n} is too short for even one segment of length {table.min_len}")
    if len(feasible) < k_max + 1:
        warnings.warn(f"K > {feasible[-1]} infeasible with min_len={table.min_len}; "
                      f"searching K in 0..{feasible[-1]}", stacklevel=2)
    segs, s_hats, values = [], [], []
    for k in feasible:
        seg = best_segmentation(data, k, table=table)
        s_hat = seg.total_objective / n
        if s_hat <= 0:
            warnings.warn(f"s_hat={s_hat} at K={k}; flooring at {S_HAT_FLOOR}", stacklevel=2)
            s_hat = S_HAT_FLOOR
        segs.append(seg)
        s_hats.append(s_hat)
        values.append(criterion_value(n, s_hat, k, g, b_n))
    best = min(range(len(feasible)), key=lambda i: (values[i], feasible[i]))
    trace = CriterionTrace(tuple(feasible), tuple(s_hats), tuple(values), feasible[best])
    return feasible[best], trace, segs[best]
