"""Domain types, the check loss and objective evaluation shared by all solvers."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

COEF_ZERO_TOL = 1e-9
RESID_ZERO_TOL = 1e-8


class DataError(ValueError):
    """Raised on malformed datasets, CSV input or inconsistent dimensions."""


def validate_tau(tau: float) -> float:
    tau = float(tau)
    if not 0.0 < tau < 1.0:
        raise ValueError(f"quantile level must lie in (0, 1), got {tau}")
    return tau


@dataclass(frozen=True)
class Dataset:
    """Response vector ``y`` (length n) and regressor matrix ``x`` (n x p)."""

    y: NDArray[np.float64]
    x: NDArray[np.float64]

    def __post_init__(self):
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        x = np.ascontiguousarray(x)
        if y.ndim != 1 or x.ndim != 2:
            raise DataError("y must be a vector and x a matrix")
        if y.shape[0] < 1 or x.shape[1] < 1:
            raise DataError("need n >= 1 observations and p >= 1 regressors")
        if x.shape[0] != y.shape[0]:
            raise DataError(f"y has {y.shape[0]} rows but x has {x.shape[0]}")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
            raise DataError("dataset contains non-finite entries")
        y.flags.writeable = False
        x.flags.writeable = False
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def rows(self, l: int, k: int) -> Dataset:
        """Observations ``l+1 .. k`` (1-based), i.e. ``y[l:k]``."""
        if not 0 <= l < k <= self.n:
            raise DataError(f"invalid row range ({l}, {k}] for n={self.n}")
        return Dataset(self.y[l:k], self.x[l:k])


@dataclass(frozen=True)
class PenaltySpec:
    """Weighted-L1 penalty ``multiplier * sum_j weights[j] * |phi_j|``.

    The intercept is never penalized. ``PenaltySpec.zero(p)`` encodes the
    unpenalized problem.
    """

    multiplier: float
    weights: NDArray[np.float64]

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64).reshape(-1)
        if not math.isfinite(self.multiplier) or self.multiplier < 0:
            raise ValueError("penalty multiplier must be finite and >= 0")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("penalty weights must be finite and >= 0")
        w.flags.writeable = False
        object.__setattr__(self, "multiplier", float(self.multiplier))
        object.__setattr__(self, "weights", w)

    @classmethod
    def zero(cls, p: int) -> PenaltySpec:
        return cls(0.0, np.zeros(p))

    @classmethod
    def uniform(cls, multiplier: float, p: int) -> PenaltySpec:
        return cls(multiplier, np.ones(p))

    @property
    def costs(self) -> NDArray[np.float64]:
        """Per-coefficient L1 cost ``multiplier * weights``."""
        return self.multiplier * self.weights

    @property
    def is_zero(self) -> bool:
        return bool(np.all(self.costs == 0))


def zero_mask(coefficients: ArrayLike) -> NDArray[np.bool_]:
    """True where a coefficient counts as exactly zero."""
    phi = np.asarray(coefficients, dtype=np.float64)
    scale = 1.0 + (np.max(np.abs(phi)) if phi.size else 0.0)
    return np.abs(phi) <= COEF_ZERO_TOL * scale


def zero_residual_mask(y: ArrayLike, residuals: ArrayLike) -> NDArray[np.bool_]:
    y = np.asarray(y, dtype=np.float64)
    return np.abs(np.asarray(residuals)) <= RESID_ZERO_TOL * (1.0 + np.abs(y))


@dataclass(frozen=True)
class FitResult:
    """Estimated intercept and coefficients of a (penalized) regression fit.

    ``intercept`` is the estimated tau-quantile of the error (0.0 for fits
    without an intercept). ``converged`` is False only for iterative methods
    that stopped at their iteration cap.
    """

    intercept: float
    coefficients: NDArray[np.float64]
    objective: float
    active_set: frozenset[int]
    n_zero_residuals: int
    converged: bool = True
    iterations: int = 0
    method: str = "quantile"
    extra: dict = field(default_factory=dict, compare=False)

    @classmethod
    def build(cls, data: Dataset, intercept: float, coefficients: ArrayLike,
              objective: float, **kw) -> FitResult:
        phi = np.array(coefficients, dtype=np.float64).reshape(-1)
        mask = zero_mask(phi)
        phi[mask] = 0.0
        phi.flags.writeable = False
        resid = data.y - intercept - data.x @ phi
        nz = int(np.count_nonzero(zero_residual_mask(data.y, resid)))
        active = frozenset(int(j) for j in np.flatnonzero(~mask))
        return cls(float(intercept), phi, float(objective), active, nz, **kw)

    def residuals(self, data: Dataset) -> NDArray[np.float64]:
        return data.y - self.intercept - data.x @ self.coefficients

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "intercept": self.intercept,
            "coefficients": self.coefficients.tolist(),
            "objective": self.objective,
            "active_set": sorted(self.active_set),
            "n_zero_residuals": self.n_zero_residuals,
            "converged": self.converged,
            "iterations": self.iterations,
        }
        out.update(self.extra)
        return out


def check_loss(r, tau: float):
    """Check (pinball) loss ``r * (tau - 1{r <= 0})``; vectorized over ``r``."""
    r = np.asarray(r, dtype=np.float64)
    out = np.where(r > 0, tau * r, (tau - 1.0) * r)
    return float(out) if out.ndim == 0 else out


def objective_value(data: Dataset, b: float, phi: ArrayLike, tau: float,
                    penalty: PenaltySpec | None = None) -> float:
    """Sum of check losses over all observations plus the weighted-L1 penalty."""
    phi = np.asarray(phi, dtype=np.float64).reshape(-1)
    if phi.shape[0] != data.p:
        raise DataError(f"phi has length {phi.shape[0]}, dataset has p={data.p}")
    resid = data.y - b - data.x @ phi
    total = float(np.sum(check_loss(resid, tau)))
    if penalty is not None:
        if penalty.weights.shape[0] != data.p:
            raise DataError("penalty weights do not match p")
        total += float(penalty.costs @ np.abs(phi))
    return total


def read_csv(path: str | Path) -> Dataset:
    """Read a ``y,x1,...,xp`` CSV file. Parse errors carry the row number."""
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip() != "y" or len(header) < 2:
            raise DataError(f"{path}: header must be y,x1,...,xp")
        width = len(header)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise DataError(f"{path}: row {lineno} has {len(row)} fields, expected {width}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise DataError(f"{path}: row {lineno}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: no observations")
    arr = np.array(rows)
    return Dataset(arr[:, 0], arr[:, 1:])


def write_csv(data: Dataset, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["y"] + [f"x{j + 1}" for j in range(data.p)])
        for yi, xi in zip(data.y, data.x):
            w.writerow([repr(float(yi))] + [repr(float(v)) for v in xi])
