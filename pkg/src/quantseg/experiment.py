"""Monte Carlo experiments: config files, replication runner and reports.

An experiment is one of three kinds:

``single``
    single-phase designs fitted by several estimators at several quantile
    levels; reports zero-selection rates (and SCAD non-convergence).
``multiphase``
    multiphase designs segmented with a known number of change-points;
    reports per-segment rates at the estimated and at the true breaks,
    lower medians of the estimated breaks and bias/spread summaries.
``select``
    designs run through the ``B(K)`` criterion; reports the histogram of
    the selected number of change-points.

Replication ``r`` always draws its data from ``replication_rng(seed, r)``,
and results are reduced in replication order with order-free sums, so a
report does not depend on ``jobs``.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .adaptive import AdaptiveConfig, fit_adaptive
from .baselines import LS_CHI, fit_lad_lasso_type, fit_ls_adaptive_lasso, fit_scad_quantile
from .metrics import SelectionCounts, lower_median, selection_counts, spread_from_diffs
from .segmentation import METHODS as SEGMENT_METHODS
from .segmentation import SegmentationConfig, SegmentCostTable, best_segmentation, refit_at_breaks
from .selection import select_k
from .simulation import Design, generate
from .solver import fit

KINDS = ("single", "multiphase", "select")
SINGLE_METHODS = ("quantile", "alasso-quantile", "ls-alasso", "lad-lassotype", "scad")

# reproduce ids -> (config name, csv view)
TABLES = {"1": ("table1", "rates"), "2": ("table2", "rates"), "3": ("table3", "rates"),
          "5": ("table5", "rates"), "5bis": ("table5", "summary"),
          "6": ("table6", "rates"), "6bis": ("table6", "summary"),
          "7": ("table7", "counts")}
FIGURES = {"4": "figure4", "5": "figure5", "6": "figure6", "7": "figure7"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class MethodSpec:
    label: str
    method: str
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"label": self.label, "method": self.method, "params": dict(self.params)}


@dataclass(frozen=True)
class DesignRow:
    label: str
    design: Design


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    kind: str
    designs: tuple[DesignRow, ...]
    methods: tuple[MethodSpec, ...]
    taus: tuple[float, ...] = (0.5,)
    reps: int = 100
    seed: int = 20240101
    k: int = 2
    k_max: int = 3
    description: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        allowed = SINGLE_METHODS if self.kind == "single" else SEGMENT_METHODS
        for m in self.methods:
            if m.method not in allowed:
                raise ConfigError(f"method {m.method!r} not valid for a {self.kind} experiment")
        labels = [m.label for m in self.methods]
        if len(set(labels)) != len(labels):
            raise ConfigError("method labels must be unique")
        if not self.designs:
            raise ConfigError("an experiment needs at least one design")

    def with_overrides(self, reps: int | None = None, seed: int | None = None) -> ExperimentConfig:
        return replace(self, reps=self.reps if reps is None else int(reps),
                       seed=self.seed if seed is None else int(seed))

    def to_dict(self) -> dict:
        return {
            "name": self.name, "kind": self.kind, "description": self.description,
            "reps": self.reps, "seed": self.seed, "taus": list(self.taus),
            "k": self.k, "k_max": self.k_max,
            "methods": [m.to_dict() for m in self.methods],
            "designs": [{"label": d.label, "design": d.design.to_dict()} for d in self.designs],
        }

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        try:
            return cls(
                name=d["name"], kind=d["kind"], description=d.get("description", ""),
                designs=tuple(DesignRow(r["label"], Design.from_dict(r["design"]))
                              for r in d["designs"]),
                methods=tuple(MethodSpec(m["label"], m["method"], dict(m.get("params", {})))
                              for m in d["methods"]),
                taus=tuple(float(t) for t in d.get("taus", (0.5,))),
                reps=int(d.get("reps", 100)), seed=int(d.get("seed", 20240101)),
                k=int(d.get("k", 2)), k_max=int(d.get("k_max", 3)))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed experiment config: {exc}") from exc

    @classmethod
    def from_json(cls, path: str | Path) -> ExperimentConfig:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def load_config(name: str) -> ExperimentConfig:
    """Load a checked-in config, e.g. ``"table1"`` or ``"acceptance/sparsity_normal"``."""
    ref = resources.files("quantseg") / "configs" / f"{name}.json"
    if not ref.is_file():
        raise ConfigError(f"no built-in experiment config named {name!r}")
    return ExperimentConfig.from_dict(json.loads(ref.read_text(encoding="utf-8")))


# ---------------------------------------------------------------- replications

def _counts_list(c: SelectionCounts) -> list[int]:
    return [c.true_zero, c.n_zero, c.false_zero, c.n_nonzero]


def _single_fit(spec: MethodSpec, data, tau):
    p = spec.params
    if spec.method == "quantile":
        return fit(data, tau)
    if spec.method == "alasso-quantile":
        return fit_adaptive(data, tau, AdaptiveConfig(g=float(p.get("g", 1.225))))
    if spec.method == "ls-alasso":
        return fit_ls_adaptive_lasso(data, float(p.get("chi", LS_CHI)))
    if spec.method == "lad-lassotype":
        return fit_lad_lasso_type(data)
    return fit_scad_quantile(data, tau)


def _rep_single(cfg: ExperimentConfig, r: int) -> dict:
    out = {}
    for row in cfg.designs:
        data, truth = generate(row.design, cfg.seed, r)
        phi0 = truth.phis[0]
        cache = {}
        per_tau = {}
        for tau in cfg.taus:
            per_method = {}
            for spec in cfg.methods:
                # these two estimators do not depend on tau
                key = (spec.label,) if spec.method in ("ls-alasso", "lad-lassotype") else (spec.label, tau)
                if key not in cache:
                    try:
                        res = _single_fit(spec, data, tau)
                        cache[key] = {"counts": _counts_list(selection_counts(res.coefficients, phi0)),
                                      "converged": bool(res.converged), "failed": None}
                    except Exception as exc:  # recorded per replication, never fatal
                        cache[key] = {"counts": None, "converged": False,
                                      "failed": type(exc).__name__}
                per_method[spec.label] = cache[key]
            per_tau[repr(tau)] = per_method
        out[row.label] = per_tau
    return out


def _segment_record(seg, truth) -> tuple[list, list]:
    counts, diffs = [], []
    for f, phi0 in zip(seg.segment_fits, truth.phis):
        phi0 = np.asarray(phi0)
        counts.append(_counts_list(selection_counts(f.coefficients, phi0)))
        diffs.append((f.coefficients - phi0)[phi0 != 0].tolist())
    return counts, diffs


def _rep_multiphase(cfg: ExperimentConfig, r: int) -> dict:
    out = {}
    tau = cfg.taus[0]
    for row in cfg.designs:
        data, truth = generate(row.design, cfg.seed, r)
        per_method = {}
        for spec in cfg.methods:
            scfg = SegmentationConfig(tau=tau, method=spec.method,
                                      adaptive=AdaptiveConfig(g=float(spec.params.get("g", 1.225))))
            try:
                table = SegmentCostTable(data, scfg)
                seg = best_segmentation(data, cfg.k, table=table)
                counts, diffs = _segment_record(seg, truth)
                oracle = refit_at_breaks(data, truth.breaks, table=table)
                t_counts, t_diffs = _segment_record(oracle, truth)
                per_method[spec.label] = {
                    "breaks": list(seg.change_points), "counts": counts, "diffs": diffs,
                    "true_break_counts": t_counts, "failed": None}
            except Exception as exc:
                per_method[spec.label] = {"failed": type(exc).__name__}
        out[row.label] = per_method
    return out


def _rep_select(cfg: ExperimentConfig, r: int) -> dict:
    out = {}
    tau = cfg.taus[0]
    for row in cfg.designs:
        data, _ = generate(row.design, cfg.seed, r)
        per_method = {}
        for spec in cfg.methods:
            scfg = SegmentationConfig(tau=tau, method=spec.method,
                                      adaptive=AdaptiveConfig(g=float(spec.params.get("g", 1.225))))
            try:
                k_hat, _, _ = select_k(data, cfg.k_max, scfg)
                per_method[spec.label] = {"k_hat": int(k_hat), "failed": None}
            except Exception as exc:
                per_method[spec.label] = {"k_hat": None, "failed": type(exc).__name__}
        out[row.label] = per_method
    return out


_RUNNERS = {"single": _rep_single, "multiphase": _rep_multiphase, "select": _rep_select}


def run_replication(cfg: ExperimentConfig, r: int) -> dict:
    """Raw per-replication record; a pure function of ``(cfg, r)``."""
    return _RUNNERS[cfg.kind](cfg, r)


# ---------------------------------------------------------------- aggregation

def _sum_counts(items: list[list[int] | None]) -> SelectionCounts:
    total = SelectionCounts(0, 0, 0, 0)
    for c in items:
        if c is not None:
            total = total + SelectionCounts(*c)
    return total


def _rates_dict(c: SelectionCounts) -> dict:
    r = c.rates
    return {"true_zero": r.true_zero_rate, "false_zero": r.false_zero_rate}


def _agg_single(cfg, recs):
    out = {}
    for row in cfg.designs:
        per_tau = {}
        for tau in cfg.taus:
            per_method = {}
            for spec in cfg.methods:
                items = [rec[row.label][repr(tau)][spec.label] for rec in recs]
                ok = [it for it in items if it["failed"] is None]
                entry = _rates_dict(_sum_counts([it["counts"] for it in ok]))
                entry["replications"] = len(ok)
                entry["failures"] = len(items) - len(ok)
                entry["nonconverged"] = sum(1 for it in ok if not it["converged"])
                per_method[spec.label] = entry
            per_tau[repr(tau)] = per_method
        out[row.label] = per_tau
    return out


def _agg_multiphase(cfg, recs):
    out = {}
    for row in cfg.designs:
        n_seg = len(row.design.phases)
        per_method = {}
        for spec in cfg.methods:
            items = [rec[row.label][spec.label] for rec in recs]
            ok = [it for it in items if it["failed"] is None]
            entry: dict[str, Any] = {"replications": len(ok), "failures": len(items) - len(ok)}
            entry["segments"] = [
                {"estimated_breaks": _rates_dict(_sum_counts([it["counts"][s] for it in ok])),
                 "true_breaks": _rates_dict(_sum_counts([it["true_break_counts"][s] for it in ok]))}
                for s in range(n_seg)] if ok else []
            entry["median_breaks"] = [lower_median([it["breaks"][j] for it in ok])
                                      for j in range(cfg.k)] if ok else []
            if ok:
                entry["spread"] = spread_from_diffs(
                    (d for it in ok for d in it["diffs"]), len(ok)).to_dict()
            per_method[spec.label] = entry
        out[row.label] = per_method
    return out


def _agg_select(cfg, recs):
    out = {}
    for row in cfg.designs:
        per_method = {}
        for spec in cfg.methods:
            ks = [rec[row.label][spec.label]["k_hat"] for rec in recs]
            hist = [sum(1 for k in ks if k == v) for v in range(cfg.k_max + 1)]
            per_method[spec.label] = {"k_hat_counts": hist,
                                      "failures": sum(1 for k in ks if k is None)}
        out[row.label] = per_method
    return out


_AGGREGATORS = {"single": _agg_single, "multiphase": _agg_multiphase, "select": _agg_select}


@dataclass(frozen=True)
class Report:
    config: ExperimentConfig
    results: dict
    elapsed_seconds: float = field(default=0.0, compare=False)

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {"config": self.config.to_dict(), "results": self.results}
        if include_timing:
            out["elapsed_seconds"] = self.elapsed_seconds
        return out

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True) + "\n"

    # ---- tabular views
    def rows(self, view: str | None = None) -> list[dict]:
        kind = self.config.kind
        view = view or {"single": "rates", "multiphase": "rates", "select": "counts"}[kind]
        if kind == "single" and view == "rates":
            return [{"design": d, "tau": float(t), "method": m, **{k: v[k] for k in
                     ("true_zero", "false_zero", "nonconverged", "failures", "replications")}}
                    for d, per_tau in self.results.items() for t, per_m in per_tau.items()
                    for m, v in per_m.items()]
        if kind == "single" and view == "curves":
            out = []
            for d, per_tau in self.results.items():
                for t, per_m in per_tau.items():
                    row = {"design": d, "tau": float(t)}
                    for m, v in per_m.items():
                        row[f"{m}_true_zero"] = v["true_zero"]
                        row[f"{m}_false_zero"] = v["false_zero"]
                    out.append(row)
            return out
        if kind == "multiphase" and view == "rates":
            return [{"design": d, "method": m, "segment": s + 1,
                     "true_zero": seg["estimated_breaks"]["true_zero"],
                     "false_zero": seg["estimated_breaks"]["false_zero"],
                     "true_zero_true_breaks": seg["true_breaks"]["true_zero"],
                     "false_zero_true_breaks": seg["true_breaks"]["false_zero"]}
                    for d, per_m in self.results.items() for m, v in per_m.items()
                    for s, seg in enumerate(v["segments"])]
        if kind == "multiphase" and view == "summary":
            out = []
            for d, per_m in self.results.items():
                for m, v in per_m.items():
                    row = {"design": d, "method": m}
                    for j, med in enumerate(v["median_breaks"]):
                        row[f"median_l{j + 1}"] = med
                    row.update(v.get("spread", {}))
                    out.append(row)
            return out
        if kind == "select" and view == "counts":
            return [{"design": d, "method": m,
                     **{f"K={k}": c for k, c in enumerate(v["k_hat_counts"])},
                     "failures": v["failures"]}
                    for d, per_m in self.results.items() for m, v in per_m.items()]
        raise ValueError(f"view {view!r} not available for a {kind} report")

    def to_csv(self, view: str | None = None) -> str:
        rows = self.rows(view)
        buf = io.StringIO()
        fields = list(dict.fromkeys(k for r in rows for k in r))
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
        return buf.getvalue()


def _run_chunk(args: tuple[dict, list[int]]) -> list[dict]:
    cfg_dict, reps = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    return [run_replication(cfg, r) for r in reps]


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> Report:
    """Run every replication (across ``jobs`` worker processes) and aggregate."""
    start = time.perf_counter()
    reps = list(range(config.reps))
    if jobs <= 1 or config.reps == 1:
        records = [run_replication(config, r) for r in reps]
    else:
        chunks = [reps[i::jobs] for i in range(jobs)]
        cfg_dict = config.to_dict()
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_chunk, [(cfg_dict, c) for c in chunks]))
        by_rep = {}
        for chunk, part in zip(chunks, parts):
            by_rep.update(zip(chunk, part))
        records = [by_rep[r] for r in reps]
    results = _AGGREGATORS[config.kind](config, records)
    return Report(config, results, time.perf_counter() - start)
