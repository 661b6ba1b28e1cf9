"""Data types shared by the estimator, variance, simulation and IO layers."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linkmath import LinkKind, g_transform

THETA_NAMES = (
    "beta0", "beta1", "beta2", "beta3",
    "pi_z",
    "psi0", "psi1",
    "pb0", "pb1", "pb",
    "nne", "ein", "nnt",
)
THETA_DIM = len(THETA_NAMES)
IDX = {name: k for k, name in enumerate(THETA_NAMES)}
INDEX_NAMES = ("ein", "nne", "nnt")


class IVNNTError(Exception):
    """Base class for errors raised by this package."""


class LengthMismatch(IVNNTError, ValueError):
    pass


class SeparationError(IVNNTError):
    """A cell of a saturated binary model has an all-0 or all-1 response."""


class NoSolution(IVNNTError):
    pass


class NonFiniteTheta(IVNNTError, ValueError):
    pass


# -- validation ---------------------------------------------------------------

@dataclass(frozen=True)
class NonBinaryValue:
    row: int
    column: str
    value: object

    def __str__(self):
        return f"row {self.row}: {self.column}={self.value!r} is not 0/1"


@dataclass(frozen=True)
class EmptyCell:
    z: int
    a: int

    def __str__(self):
        return f"no observations with z={self.z}, a={self.a}"


@dataclass(frozen=True)
class EmptyDataset:
    def __str__(self):
        return "dataset has no records"


class ValidationError(IVNNTError, ValueError):
    """Carries every problem found, not just the first one."""

    def __init__(self, issues: Sequence[object]):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))

    def of_type(self, kind):
        return [i for i in self.issues if isinstance(i, kind)]


@dataclass(frozen=True)
class ObservationRecord:
    z: int
    a: int
    i: int


@dataclass(frozen=True, eq=False)
class ObservationSet:
    """Validated binary (instrument, exposure, outcome) triples.

    Construct through :func:`validate`; the arrays are made read-only.
    """

    z: np.ndarray
    a: np.ndarray
    i: np.ndarray

    @property
    def n(self) -> int:
        return int(self.z.shape[0])

    def __len__(self):
        return self.n

    @property
    def records(self) -> list[ObservationRecord]:
        return [ObservationRecord(int(z), int(a), int(i)) for z, a, i in zip(self.z, self.a, self.i)]

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.z, self.a, self.i])

    def cell_counts(self) -> np.ndarray:
        """Counts indexed as ``counts[z, a, i]``."""
        flat = 4 * self.z.astype(np.int64) + 2 * self.a + self.i
        return np.bincount(flat, minlength=8).reshape(2, 2, 2)

    def __eq__(self, other):
        if not isinstance(other, ObservationSet):
            return NotImplemented
        return (
            np.array_equal(self.z, other.z)
            and np.array_equal(self.a, other.a)
            and np.array_equal(self.i, other.i)
        )

    __hash__ = None


def _as_float_matrix(records):
    if isinstance(records, ObservationSet):
        return records.as_array().astype(float), None
    if isinstance(records, np.ndarray) and records.dtype != object:
        arr = np.asarray(records, dtype=float)
        return arr.reshape(-1, 3) if arr.size == 0 else arr, None
    rows = [(r.z, r.a, r.i) if isinstance(r, ObservationRecord) else tuple(r) for r in records]
    if any(len(r) != 3 for r in rows):
        bad = [k for k, r in enumerate(rows) if len(r) != 3]
        raise ValidationError([NonBinaryValue(k, "record", rows[k]) for k in bad])
    out = np.full((len(rows), 3), np.nan)
    raw = {}
    for k, r in enumerate(rows):
        for j, v in enumerate(r):
            try:
                out[k, j] = float(v)
            except (TypeError, ValueError):
                raw[(k, j)] = v
    return out, raw


def validate(records) -> ObservationSet:
    """Check binary values and that all four (z, a) cells are populated.

    ``records`` may be an ObservationSet, an (n, 3) array, or any iterable of
    (z, a, i) triples / ObservationRecord objects. All problems are collected
    into one :class:`ValidationError`.
    """
    arr, raw = _as_float_matrix(records)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValidationError([NonBinaryValue(0, "record", arr.shape)])
    if arr.shape[0] == 0:
        raise ValidationError([EmptyDataset()])
    bad = ~((arr == 0.0) | (arr == 1.0))
    issues: list[object] = []
    for k, j in zip(*np.nonzero(bad)):
        value = (raw or {}).get((int(k), int(j)), arr[k, j])
        issues.append(NonBinaryValue(int(k), "zai"[j], value))
    if not issues:
        occupied = np.bincount((2 * arr[:, 0] + arr[:, 1]).astype(np.int64), minlength=4)
        issues.extend(EmptyCell(zz, aa) for zz in (0, 1) for aa in (0, 1) if occupied[2 * zz + aa] == 0)
    if issues:
        raise ValidationError(issues)
    cols = []
    for j in range(3):
        col = arr[:, j].astype(np.int8)
        col.setflags(write=False)
        cols.append(col)
    return ObservationSet(*cols)


# -- parameters ---------------------------------------------------------------

@dataclass(frozen=True)
class ModelSpec:
    link: LinkKind = LinkKind.LOGIT

    def __post_init__(self):
        object.__setattr__(self, "link", LinkKind.parse(self.link))


@dataclass(frozen=True)
class ThetaVector:
    """The 13 stacked estimands in canonical order (see ``THETA_NAMES``).

    Unavailable components (e.g. a causal parameter with no root) are NaN.
    Index components may be +inf.
    """

    beta: tuple[float, float, float, float]
    pi_z: float
    psi: tuple[float, float]
    pb0: float
    pb1: float
    pb: float
    nne: float
    ein: float
    nnt: float

    def to_array(self) -> np.ndarray:
        return np.array([*self.beta, self.pi_z, *self.psi, self.pb0, self.pb1, self.pb,
                         self.nne, self.ein, self.nnt], dtype=float)

    @classmethod
    def from_array(cls, v) -> "ThetaVector":
        v = np.asarray(v, dtype=float).ravel()
        if v.shape[0] != THETA_DIM:
            raise LengthMismatch(f"theta must have length {THETA_DIM}, got {v.shape[0]}")
        f = [float(x) for x in v]
        return cls(tuple(f[0:4]), f[4], (f[5], f[6]), f[7], f[8], f[9], f[10], f[11], f[12])

    def __getitem__(self, name: str) -> float:
        return float(self.to_array()[IDX[name]])

    @property
    def resolved(self) -> bool:
        """True when the indices are exactly g of the benefits."""
        idx = np.array([self.nne, self.ein, self.nnt])
        g = np.asarray(g_transform(np.array([self.pb0, self.pb1, self.pb])))
        return bool(np.all((idx == g) | (np.isnan(idx) & np.isnan(g))))

    def as_dict(self) -> dict[str, float]:
        return dict(zip(THETA_NAMES, (float(x) for x in self.to_array())))


def theta_pack(theta: ThetaVector) -> np.ndarray:
    return theta.to_array()


def theta_unpack(v) -> ThetaVector:
    return ThetaVector.from_array(v)


# -- reports ------------------------------------------------------------------

class PsiStatus(str, enum.Enum):
    SOLVED = "Solved"
    NO_SOLUTION = "NoSolution"
    NOT_ATTEMPTED = "NotAttempted"


@dataclass
class Diagnostics:
    bread_condition_number: float = float("nan")
    instrument_wald: float = float("nan")
    psi0_status: PsiStatus = PsiStatus.NOT_ATTEMPTED
    psi1_status: PsiStatus = PsiStatus.NOT_ATTEMPTED
    psi0_multiple_roots: bool = False
    psi1_multiple_roots: bool = False
    excluded: bool = False
    noninformative_ci: dict[str, bool] = field(default_factory=dict)


@dataclass
class EstimateReport:
    theta_hat: ThetaVector
    covariance: np.ndarray
    ci_level: float
    ci: dict[str, tuple[float, float]]
    diagnostics: Diagnostics
    n: int = 0
    link: LinkKind = LinkKind.LOGIT

    def available(self, name: str) -> bool:
        return bool(np.isfinite(self.theta_hat[name]) or self.theta_hat[name] == np.inf)

    def to_dict(self) -> dict:
        th = self.theta_hat.as_dict()
        d = self.diagnostics
        out = {
            "link": self.link.value,
            "n": self.n,
            "ci_level": self.ci_level,
            "theta": th,
            "se": {k: float(np.sqrt(self.covariance[IDX[k], IDX[k]]))
                   if np.isfinite(self.covariance[IDX[k], IDX[k]]) else float("nan")
                   for k in THETA_NAMES},
        }
        for name in INDEX_NAMES:
            out[name] = th[name]
            out[f"{name}_ci"] = list(self.ci.get(name, (float("nan"), float("nan"))))
            if np.isnan(th[name]):
                status = "unavailable"
            elif d.excluded:
                status = "excluded"
            else:
                status = "ok"
            out[f"{name}_status"] = status
        out["psi0_status"] = d.psi0_status.value
        out["psi1_status"] = d.psi1_status.value
        out["diagnostics"] = {
            "bread_condition_number": d.bread_condition_number,
            "instrument_wald": d.instrument_wald,
            "psi0_multiple_roots": d.psi0_multiple_roots,
            "psi1_multiple_roots": d.psi1_multiple_roots,
            "excluded": d.excluded,
            "noninformative_ci": dict(d.noninformative_ci),
        }
        return out
