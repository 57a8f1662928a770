from __future__ import annotations

import itertools
import json

import numpy as np
import pytest

from conftest import random_dataset
from quantseg.adaptive import adaptive_penalty, fit_adaptive, kkt_verify
from quantseg.core import DataError, Dataset, objective_value
from quantseg.segmentation import (SegmentationConfig, SegmentCostTable, best_segmentation,
                                   default_min_len, refit_at_breaks, segment_cost)
from quantseg.simulation import D1_PHI, E1, d1, generate, m3
from quantseg.solver import SegmentTooShort


def enumerate_best(data, k, cfg):
    """Exhaustive search over admissible break vectors, using from-scratch segment fits."""
    m = cfg.resolve_min_len(data.n, data.p)
    cache = {}

    def cost(l, e):
        if (l, e) not in cache:
            cache[(l, e)] = segment_cost(data, l, e, cfg)[0]
        return cache[(l, e)]

    best = (np.inf, None)
    for cps in itertools.combinations(range(m, data.n - m + 1), k):
        edges = (0, *cps, data.n)
        if min(np.diff(edges)) < m:
            continue
        total = sum(cost(a, b) for a, b in zip(edges[:-1], edges[1:]))
        if total < best[0]:
            best = (total, cps)
    return best


def test_config_defaults_and_validation():
    cfg = SegmentationConfig()
    assert cfg.tau == 0.55 and cfg.method == "aQ"
    assert default_min_len(200, 10) == 15
    assert default_min_len(30, 10) == 12
    with pytest.raises(DataError):
        SegmentationConfig(min_len=5).resolve_min_len(100, 10)
    with pytest.raises(ValueError):
        SegmentationConfig(method="pelt")


def test_k0_is_full_sample_fit():
    data, _ = generate(d1(E1), 2)
    cfg = SegmentationConfig()
    seg = best_segmentation(data, 0, cfg)
    assert seg.change_points == ()
    assert seg.total_objective == pytest.approx(segment_cost(data, 0, 200, cfg)[0], rel=1e-12)
    assert seg.total_objective == pytest.approx(fit_adaptive(data, 0.55).objective, rel=1e-12)


def test_noiseless_segment_cost_is_penalty_only():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(40, 3))
    y = 1.0 + x @ np.array([2.0, 0.0, -1.0])
    data = Dataset(y, x)
    cost, res = segment_cost(data, 0, 40, SegmentationConfig(tau=0.5))
    pen = adaptive_penalty(res)
    assert cost == pytest.approx(pen.costs @ np.abs(res.coefficients), rel=1e-10)
    wrong = res.coefficients + np.array([0.3, 0.0, 0.0])
    assert cost < objective_value(data, res.intercept, wrong, 0.5, pen)


def test_spanning_segment_costs_more_than_split():
    ok = 0
    cfg = SegmentationConfig()
    for r in range(100):
        data, _ = generate(m3(), 77, r)
        c = lambda l, k: segment_cost(data, l, k, cfg)[0]  # noqa: E731
        ok += c(0, 100) >= c(0, 30) + c(30, 100)
    assert ok >= 95


def test_segment_too_short():
    data, _ = generate(d1(E1), 2)
    with pytest.raises(SegmentTooShort):
        segment_cost(data, 0, 10)
    with pytest.raises(SegmentTooShort):
        SegmentCostTable(data).cost(50, 60)


def test_table_costs_match_fits_exactly_and_cold_solves():
    data, _ = generate(m3(), 5)
    table = SegmentCostTable(data)
    best_segmentation(data, 2, table=table)
    rng = np.random.default_rng(0)
    for _ in range(10):
        l = int(rng.integers(0, 120))
        k = int(rng.integers(l + 15, 201))
        f = table.fit(l, k)
        assert f.objective == table.cost(l, k)
        assert f.objective == pytest.approx(segment_cost(data, l, k)[0], rel=1e-10)
        assert kkt_verify(data.rows(l, k), 0.55, adaptive_penalty(f), f).all_satisfied


@pytest.mark.parametrize("method", ["aQ", "Lt", "aLS"])
def test_dp_matches_enumeration(method):
    rng = np.random.default_rng(hash(method) % 1000)
    for _ in range(4):
        n = int(rng.integers(24, 36))
        data = random_dataset(rng, n, 2)
        cfg = SegmentationConfig(method=method)
        for k in (1, 2):
            seg = best_segmentation(data, k, cfg)
            total, cps = enumerate_best(data, k, cfg)
            assert seg.change_points == cps
            assert seg.total_objective == pytest.approx(total, rel=1e-9)


def test_refit_identities():
    data, truth = generate(m3(), 8)
    table = SegmentCostTable(data)
    seg = best_segmentation(data, 2, table=table)
    again = refit_at_breaks(data, seg.change_points, table=table)
    assert again.total_objective == seg.total_objective
    at_truth = refit_at_breaks(data, truth.breaks, table=table)
    assert at_truth.total_objective >= seg.total_objective
    assert seg.total_objective == sum(f.objective for f in seg.segment_fits)


def test_inadmissible_and_infeasible():
    data, _ = generate(m2_like := d1(E1, n=60), 1)
    cfg = SegmentationConfig()
    m = cfg.resolve_min_len(60, 10)
    with pytest.raises(DataError):
        refit_at_breaks(data, (5,), cfg)
    with pytest.raises(DataError):
        best_segmentation(data, 60 // m, cfg)
    with pytest.raises(ValueError):
        best_segmentation(data, -1, cfg)
    assert m2_like.n == 60


def test_table_rejects_other_dataset():
    a, _ = generate(m3(), 1)
    b, _ = generate(m3(), 2)
    with pytest.raises(ValueError):
        best_segmentation(b, 1, table=SegmentCostTable(a))


def test_homogeneous_split_halves_agree():
    within = 0
    for r in range(60):
        data, _ = generate(d1(E1), 303, r)
        seg = refit_at_breaks(data, (100,), SegmentationConfig())
        a, b = seg.segment_fits
        within += np.max(np.abs(a.coefficients - b.coefficients)) <= 0.6
    assert within / 60 >= 0.95


def test_json_output():
    data, _ = generate(m3(), 3)
    seg = best_segmentation(data, 2)
    rec = json.loads(seg.to_json())
    assert rec["change_points"] == list(seg.change_points)
    assert len(rec["segments"]) == 3
    assert rec["segments"][0]["start"] == 1 and rec["segments"][-1]["end"] == 200
    assert rec["total_objective"] == seg.total_objective
    assert rec["segments"][1]["active_set"] == sorted(seg.segment_fits[1].active_set)


@pytest.mark.slow
def test_localization_improves_with_n():
    def errors(n, b1, b2):
        out = []
        for r in range(30):
            data, _ = generate(m3(n=n, breaks=(b1, b2)), 55, r)
            out.append(abs(best_segmentation(data, 2).change_points[0] - b1))
        return out

    big = errors(200, 30, 100)
    small = errors(100, 15, 50)
    assert np.median(big) <= np.median(small)
