"""Seeded data generation for single-phase and multiphase regression designs.

Replication ``r`` of an experiment with master seed ``s`` draws from
``numpy.random.default_rng(SeedSequence(s, spawn_key=(r,)))`` (PCG64), so a
replication's data never depends on how replications are scheduled.
Within one replication the covariate matrix is drawn first, then the errors
phase by phase.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .core import Dataset

D1_PHI = (1.0, 0.0, 4.0, 0.0, -3.0, 5.0, 6.0, 0.0, -1.0, 0.0)
M_PHI2 = (0.0, 3.0, -4.0, -3.0, 0.0, 1.0, 2.0, -3.0, 0.0, 10.0)
M_PHI3 = (1.0, 3.0, 4.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0)
COVARIATE_MEAN = (0.0, 0.0, 2.0, -1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0)

_KINDS = ("normal", "shifted_exponential", "cauchy", "sum_of", "dirac")


@dataclass(frozen=True)
class ErrorLaw:
    """Error distribution.

    ``shifted_exponential`` with ``shift=s`` has density ``exp(-(x - s))`` on
    ``x > s``: ``Exp(-4.5, 1)`` is ``shifted_exponential(-4.5)``.
    ``dirac`` (a constant) exists only for exactness tests.
    """

    kind: str
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown error law {self.kind!r}")
        if self.kind == "normal" and not self.params[1] > 0:
            raise ValueError("normal sd must be positive")
        if self.kind == "cauchy" and not self.params[1] > 0:
            raise ValueError("cauchy scale must be positive")
        if self.kind == "sum_of" and not all(isinstance(p, ErrorLaw) for p in self.params):
            raise ValueError("sum_of takes two ErrorLaw components")

    @classmethod
    def normal(cls, mean: float = 0.0, sd: float = 1.0) -> ErrorLaw:
        return cls("normal", (float(mean), float(sd)))

    @classmethod
    def shifted_exponential(cls, shift: float) -> ErrorLaw:
        return cls("shifted_exponential", (float(shift),))

    @classmethod
    def cauchy(cls, location: float = 0.0, scale: float = 1.0) -> ErrorLaw:
        return cls("cauchy", (float(location), float(scale)))

    @classmethod
    def sum_of(cls, a: ErrorLaw, b: ErrorLaw) -> ErrorLaw:
        return cls("sum_of", (a, b))

    @classmethod
    def dirac(cls, value: float) -> ErrorLaw:
        return cls("dirac", (float(value),))

    def sample(self, rng: np.random.Generator, size: int) -> NDArray[np.float64]:
        if self.kind == "normal":
            mean, sd = self.params
            return rng.normal(mean, sd, size)
        if self.kind == "shifted_exponential":
            return rng.standard_exponential(size) + self.params[0]
        if self.kind == "cauchy":
            loc, scale = self.params
            return loc + scale * np.tan(np.pi * (rng.random(size) - 0.5))
        if self.kind == "sum_of":
            a, b = self.params
            first = a.sample(rng, size)
            return first + b.sample(rng, size)
        return np.full(size, self.params[0])

    def quantile(self, tau: float) -> float:
        """Closed-form tau-quantile; NaN for ``sum_of`` laws."""
        if self.kind == "normal":
            from scipy.stats import norm
            return float(self.params[0] + self.params[1] * norm.ppf(tau))
        if self.kind == "shifted_exponential":
            return self.params[0] - math.log(1.0 - tau)
        if self.kind == "cauchy":
            return self.params[0] + self.params[1] * math.tan(math.pi * (tau - 0.5))
        if self.kind == "dirac":
            return self.params[0]
        return math.nan

    def to_dict(self) -> dict:
        if self.kind == "sum_of":
            return {"kind": "sum_of", "laws": [p.to_dict() for p in self.params]}
        names = {"normal": ("mean", "sd"), "shifted_exponential": ("shift",),
                 "cauchy": ("location", "scale"), "dirac": ("value",)}[self.kind]
        return {"kind": self.kind, **dict(zip(names, self.params))}

    @classmethod
    def from_dict(cls, d: dict) -> ErrorLaw:
        kind = d["kind"]
        if kind == "normal":
            return cls.normal(d.get("mean", 0.0), d.get("sd", 1.0))
        if kind == "shifted_exponential":
            return cls.shifted_exponential(d["shift"])
        if kind == "cauchy":
            return cls.cauchy(d.get("location", 0.0), d.get("scale", 1.0))
        if kind == "sum_of":
            a, b = d["laws"]
            return cls.sum_of(cls.from_dict(a), cls.from_dict(b))
        if kind == "dirac":
            return cls.dirac(d["value"])
        raise ValueError(f"unknown error law {kind!r}")

    def __str__(self):
        if self.kind == "normal":
            return "N({:g},{:g})".format(*self.params)
        if self.kind == "shifted_exponential":
            return "Exp({:g},1)".format(*self.params)
        if self.kind == "cauchy":
            return "C({:g},{:g})".format(*self.params)
        if self.kind == "sum_of":
            return f"{self.params[0]}+{self.params[1]}"
        return "Dirac({:g})".format(*self.params)


NORMAL = ErrorLaw.normal()
E1 = ErrorLaw.shifted_exponential(-4.5)
E2 = ErrorLaw.shifted_exponential(1.5)
E3 = ErrorLaw.shifted_exponential(-6.5)
CAUCHY = ErrorLaw.cauchy(0.0, 1.0)
EXP_PLUS_CAUCHY = ErrorLaw.sum_of(E1, ErrorLaw.cauchy(0.0, 2.0))

ERROR_LAWS = {"normal": NORMAL, "exp": E1, "E1": E1, "E2": E2, "E3": E3,
              "cauchy": CAUCHY, "exp+cauchy": EXP_PLUS_CAUCHY}


def sample_error(law: ErrorLaw, rng: np.random.Generator) -> float:
    return float(law.sample(rng, 1)[0])


@dataclass(frozen=True)
class PhaseSpec:
    phi: tuple[float, ...]
    error: ErrorLaw
    length: int

    def __post_init__(self):
        object.__setattr__(self, "phi", tuple(float(v) for v in self.phi))
        if self.length < 1:
            raise ValueError("phase length must be positive")


@dataclass(frozen=True)
class Design:
    """Phases laid out back to back plus independent normal covariates."""

    name: str
    phases: tuple[PhaseSpec, ...]
    covariate_mean: tuple[float, ...] = COVARIATE_MEAN
    covariate_sd: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(self.phases))
        p = len(self.covariate_mean)
        if any(len(ph.phi) != p for ph in self.phases):
            raise ValueError("every phase needs one coefficient per covariate")

    @property
    def n(self) -> int:
        return sum(ph.length for ph in self.phases)

    @property
    def p(self) -> int:
        return len(self.covariate_mean)

    @property
    def breaks(self) -> tuple[int, ...]:
        """Change-points: phase ``r`` covers observations ``breaks[r-1]+1 .. breaks[r]``."""
        return tuple(int(v) for v in np.cumsum([ph.length for ph in self.phases])[:-1])

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "covariate_mean": list(self.covariate_mean),
            "covariate_sd": self.covariate_sd,
            "phases": [{"phi": list(ph.phi), "length": ph.length, "error": ph.error.to_dict()}
                       for ph in self.phases],
        }

    @classmethod
    def from_dict(cls, d: dict) -> Design:
        phases = [PhaseSpec(tuple(ph["phi"]), ErrorLaw.from_dict(ph["error"]), int(ph["length"]))
                  for ph in d["phases"]]
        mean = tuple(d.get("covariate_mean", [0.0] * len(phases[0].phi)))
        return cls(d.get("name", "custom"), tuple(phases), mean, float(d.get("covariate_sd", 1.0)))

    @classmethod
    def from_json(cls, path: str | Path) -> Design:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class GroundTruth:
    design: str
    phis: tuple[tuple[float, ...], ...]
    breaks: tuple[int, ...]
    errors: tuple[ErrorLaw, ...]
    seed: int | None = None
    replication: int | None = None
    extra: dict = field(default_factory=dict)

    def intercepts(self, tau: float) -> list[float]:
        """Per-phase tau-quantile of the error, the target of the fitted intercept."""
        return [law.quantile(tau) for law in self.errors]

    def to_dict(self, tau: float | None = None) -> dict:
        out = {
            "design": self.design,
            "phis": [list(p) for p in self.phis],
            "breaks": list(self.breaks),
            "errors": [e.to_dict() for e in self.errors],
            "seed": self.seed,
            "replication": self.replication,
        }
        if tau is not None:
            out["tau"] = tau
            out["intercepts"] = [None if math.isnan(v) else v for v in self.intercepts(tau)]
        return out


def d1(error: ErrorLaw = NORMAL, n: int = 200) -> Design:
    return Design("D1", (PhaseSpec(D1_PHI, error, n),))


def m3(errors: tuple[ErrorLaw, ErrorLaw, ErrorLaw] = (E1, E1, E1), *,
       same_first_two: bool = False, n: int = 200,
       breaks: tuple[int, int] = (30, 100)) -> Design:
    """Three phases; with ``same_first_two`` phases 1 and 2 share D1's coefficients."""
    phi2 = D1_PHI if same_first_two else M_PHI2
    l1, l2 = breaks
    phases = (PhaseSpec(D1_PHI, errors[0], l1),
              PhaseSpec(phi2, errors[1], l2 - l1),
              PhaseSpec(M_PHI3, errors[2], n - l2))
    return Design("M3", phases)


def m2(errors: tuple[ErrorLaw, ErrorLaw] = (E1, NORMAL), *, distinct: bool = True,
       n: int = 100, brk: int = 30) -> Design:
    """Two phases with a break at ``brk``; the second phase uses M3's middle coefficients
    when ``distinct`` and D1's otherwise (a pure error-quantile change)."""
    phi2 = M_PHI2 if distinct else D1_PHI
    return Design("M2", (PhaseSpec(D1_PHI, errors[0], brk), PhaseSpec(phi2, errors[1], n - brk)))


CATALOG = {"D1": d1, "M3": m3, "M2": m2}


def replication_rng(seed: int, replication: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(replication),)))


def generate(design: Design, seed: int, replication: int = 0) -> tuple[Dataset, GroundTruth]:
    """Draw one dataset from ``design``; a pure function of ``(design, seed, replication)``."""
    rng = replication_rng(seed, replication)
    n, p = design.n, design.p
    x = rng.normal(size=(n, p)) * design.covariate_sd + np.asarray(design.covariate_mean)
    y = np.empty(n)
    start = 0
    for ph in design.phases:
        sl = slice(start, start + ph.length)
        y[sl] = x[sl] @ np.asarray(ph.phi) + ph.error.sample(rng, ph.length)
        start += ph.length
    truth = GroundTruth(design.name, tuple(ph.phi for ph in design.phases), design.breaks,
                        tuple(ph.error for ph in design.phases), seed, replication)
    return Dataset(y, x), truth
