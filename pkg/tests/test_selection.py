from __future__ import annotations

import csv
import io
import json
import math
import warnings

import numpy as np
import pytest

from quantseg.core import Dataset
from quantseg.segmentation import SegmentationConfig, SegmentCostTable, best_segmentation
from quantseg.selection import CriterionTrace, criterion_value, select_k
from quantseg.simulation import E1, d1, generate


def test_criterion_examples():
    assert criterion_value(100, math.e, 1) == pytest.approx(100 + 10 ** 1.25, rel=1e-12)
    assert criterion_value(100, math.e, 1) == pytest.approx(117.78, abs=5e-3)
    assert criterion_value(77, 2.5, 0) == 77 * math.log(2.5)
    assert criterion_value(100, 1.3, 2) > criterion_value(100, 1.3, 1)
    assert criterion_value(100, 1.0, 2, g=lambda k: k * k, b_n=3.0) == 12.0


@pytest.mark.parametrize("s", [0.0, -1.0, float("nan")])
def test_nonpositive_s_hat_rejected(s):
    with pytest.raises(ValueError):
        criterion_value(100, s, 1)


def test_trace_is_complete_and_argmin():
    data, _ = generate(d1(E1), 11)
    table = SegmentCostTable(data)
    k, trace, seg = select_k(data, 3, table=table)
    assert trace.ks == (0, 1, 2, 3)
    assert all(np.isfinite(trace.b_value)) and all(s > 0 for s in trace.s_hat)
    assert trace.chosen_k == k == int(np.argmin(trace.b_value))
    for kk, s in zip(trace.ks, trace.s_hat):
        assert s == best_segmentation(data, kk, table=table).total_objective / data.n
    assert seg.k == k


def test_trace_serialization():
    trace = CriterionTrace((0, 1), (2.0, 1.5), (3.0, 4.0), 0)
    rows = list(csv.DictReader(io.StringIO(trace.to_csv())))
    assert list(rows[0]) == ["K", "s_hat", "B"]
    assert [float(r["B"]) for r in rows] == [3.0, 4.0]
    rec = json.loads(trace.to_json())
    assert rec["chosen_k"] == 0 and rec["trace"][1] == {"K": 1, "s_hat": 1.5, "B": 4.0}


def test_exact_tie_prefers_smaller_k(monkeypatch):
    import quantseg.selection as sel

    data, _ = generate(d1(E1), 3)

    class Fake:
        def __init__(self, k):
            self.k, self.total_objective = k, float(data.n)

    monkeypatch.setattr(sel, "best_segmentation", lambda d, k, table: Fake(k))
    k, trace, _ = select_k(data, 2, g=lambda k: 0.0)
    assert trace.b_value == (0.0, 0.0, 0.0) and k == 0


def test_infeasible_k_dropped_with_warning():
    data, _ = generate(d1(E1, n=60), 4)
    with pytest.warns(UserWarning, match="infeasible"):
        _, trace, _ = select_k(data, 5, SegmentationConfig())
    assert trace.ks[-1] == 60 // SegmentationConfig().resolve_min_len(60, 10) - 1


def test_perfect_fit_floors_s_hat(monkeypatch):
    import quantseg.selection as sel

    data, _ = generate(d1(E1), 3)

    class Fake:
        def __init__(self, k):
            self.k, self.total_objective = k, 0.0

    monkeypatch.setattr(sel, "best_segmentation", lambda d, k, table: Fake(k))
    with pytest.warns(UserWarning, match="flooring"):
        k, trace, _ = select_k(data, 1)
    assert trace.s_hat == (1e-12, 1e-12) and k == 0


def test_noiseless_data_selects_without_error():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(40, 2))
    data = Dataset(x @ np.array([1.0, -2.0]) + 0.5, x)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, trace, _ = select_k(data, 1)
    assert all(s > 0 for s in trace.s_hat)


def test_single_phase_picks_zero():
    hits = 0
    for r in range(50):
        data, _ = generate(d1(E1), 2024, r)
        hits += select_k(data, 3)[0] == 0
    assert hits / 50 >= 0.9


def test_b_n_outside_regime_warns():
    data, _ = generate(d1(E1, n=60), 4)
    with pytest.warns(UserWarning, match="B_n"):
        select_k(data, 1, b_n=2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        select_k(data, 1, b_n=20.0)
