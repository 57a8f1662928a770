"""Regenerate the experiment configs under src/quantseg/configs/.

Run from the repository root: ``python scripts/make_configs.py``.
"""

from __future__ import annotations

import json
from pathlib import Path

from quantseg.experiment import DesignRow, ExperimentConfig, MethodSpec
from quantseg.simulation import CAUCHY, E1, E2, E3, EXP_PLUS_CAUCHY, NORMAL, d1, m2, m3

OUT = Path(__file__).resolve().parents[1] / "src" / "quantseg" / "configs"
SEED = 20240101
G1, G2 = 1.225, 9 / 40

LS = MethodSpec("LS+aLASSO", "ls-alasso", {"chi": 9 / 40})
AQ1 = MethodSpec("QUANT+aLASSO g1", "alasso-quantile", {"g": G1})
AQ2 = MethodSpec("QUANT+aLASSO g2", "alasso-quantile", {"g": G2})
SCAD = MethodSpec("QUANT+SCAD", "scad")
LAD = MethodSpec("LAD+LASSOtype", "lad-lassotype")
SEG = (MethodSpec("aQ", "aQ"), MethodSpec("Lt", "Lt"), MethodSpec("aLS", "aLS"))
TAU_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))

LAW_NAMES = {NORMAL: "N", E1: "E1", E2: "E2", E3: "E3", CAUCHY: "C"}


def label(errors) -> str:
    return ",".join(LAW_NAMES[e] for e in errors)


def table5_rows():
    return [(E1, E1, E1), (NORMAL, NORMAL, NORMAL), (E1, E1, NORMAL), (NORMAL, NORMAL, E1),
            (E1, NORMAL, E1), (NORMAL, E1, NORMAL), (E1, CAUCHY, E1), (E2, E1, E2),
            (E3, E1, E3), (E3, E1, E1)]


def table6_rows():
    return [(E1, NORMAL, E1), (NORMAL, E1, NORMAL), (E1, CAUCHY, E1), (E2, E1, E2),
            (E3, E1, E3), (E3, E1, E1)]


def configs():
    out = {}
    for i, (law, name) in enumerate(((NORMAL, "N(0,1)"), (E1, "Exp(-4.5,1)"), (CAUCHY, "C(0,1)")), 1):
        out[f"table{i}"] = ExperimentConfig(
            f"table{i}", "single", (DesignRow(name, d1(law)),), (LS, AQ1, AQ2, SCAD, LAD),
            taus=(0.15, 0.5, 0.95), reps=100, seed=SEED,
            description=f"Single phase, n=200, errors {name}: true/false zero rates.")
    for fig, (law, name) in zip((4, 5, 6, 7), ((NORMAL, "N(0,1)"), (E1, "Exp(-4.5,1)"),
                                              (CAUCHY, "C(0,1)"), (EXP_PLUS_CAUCHY, "Exp(-4.5,1)+C(0,2)"))):
        out[f"figure{fig}"] = ExperimentConfig(
            f"figure{fig}", "single", (DesignRow(name, d1(law)),), (LS, AQ1, LAD),
            taus=TAU_GRID, reps=50, seed=SEED,
            description=f"Zero-selection rates over the tau grid, errors {name}.")
    out["table5"] = ExperimentConfig(
        "table5", "multiphase", tuple(DesignRow(label(e), m3(e)) for e in table5_rows()), SEG,
        taus=(0.55,), reps=20, seed=SEED, k=2,
        description="Three phases, all coefficient vectors distinct, K=2 known.")
    out["table6"] = ExperimentConfig(
        "table6", "multiphase",
        tuple(DesignRow(label(e), m3(e, same_first_two=True)) for e in table6_rows()), SEG,
        taus=(0.55,), reps=20, seed=SEED, k=2,
        description="Three phases, first two share coefficients, K=2 known.")
    rows = []
    for distinct, tag in ((False, "phi1=phi2"), (True, "phi1!=phi2")):
        for errs in ((E1, E3), (E1, NORMAL)):
            rows.append(DesignRow(f"{tag} {label(errs)}", m2(errs, distinct=distinct)))
    out["table7"] = ExperimentConfig(
        "table7", "select", tuple(rows), (SEG[0], SEG[2], SEG[1]), taus=(0.55,), reps=50,
        seed=SEED, k_max=3, description="Two phases (break at 30, n=100): selected K counts.")

    acc = "acceptance/"
    out[acc + "sparsity_normal"] = ExperimentConfig(
        "sparsity_normal", "single", (DesignRow("N(0,1)", d1(NORMAL)),), (AQ1, AQ2),
        taus=(0.5,), reps=200, seed=SEED,
        description="Adaptive quantile rates for g=1.225 and g=9/40, Normal errors.")
    out[acc + "robustness_cauchy"] = ExperimentConfig(
        "robustness_cauchy", "single", (DesignRow("C(0,1)", d1(CAUCHY)),), (AQ1, LS),
        taus=(0.5,), reps=200, seed=SEED,
        description="Adaptive quantile vs LS adaptive LASSO under Cauchy errors.")
    out[acc + "localization_m3"] = ExperimentConfig(
        "localization_m3", "multiphase", (DesignRow("E1,E1,E1", m3((E1, E1, E1))),), (SEG[0],),
        taus=(0.55,), reps=100, seed=SEED, k=2,
        description="Three-phase design, K=2: break medians and per-segment rates.")
    out[acc + "k_selection"] = ExperimentConfig(
        "k_selection", "select",
        (DesignRow("phi1!=phi2 E1,N", m2((E1, NORMAL), distinct=True)),
         DesignRow("phi1=phi2 E1,E3", m2((E1, E3), distinct=False))),
        (SEG[0],), taus=(0.55,), reps=50, seed=SEED, k_max=3,
        description="Selected number of change-points for the two-phase designs.")
    return out


def main():
    for name, cfg in configs().items():
        path = OUT / f"{name}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(cfg.to_dict(), indent=2) + "\n", encoding="utf-8")
        print(path)


if __name__ == "__main__":
    main()
