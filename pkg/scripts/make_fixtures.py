"""Regenerate the CSV fixtures used by the CLI tests (run from the repo root)."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from quantseg.core import Dataset, write_csv
from quantseg.simulation import CAUCHY, d1, generate, m2, m3

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
SEED = 20240101


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(SEED)
    x = np.round(rng.normal(size=(30, 3)), 3)
    phi, b = np.array([1.5, 0.0, -2.0]), 0.25
    write_csv(Dataset(b + x @ phi, x), OUT / "noiseless.csv")
    (OUT / "noiseless.truth.json").write_text(json.dumps({"intercept": b, "coefficients": phi.tolist()}))
    write_csv(generate(d1(CAUCHY), SEED)[0], OUT / "d1_cauchy.csv")
    write_csv(generate(m2(), SEED)[0], OUT / "m2_distinct.csv")
    write_csv(generate(m3(), SEED)[0], OUT / "m3.csv")


if __name__ == "__main__":
    main()
