"""CSV ingestion with dichotomization, and JSON config parsing."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .dgp import DgpConfig
from .domain import IVNNTError, ModelSpec, ObservationSet, validate
from .harness import StudyConfig
from .linkmath import LinkKind

MISSING_TOKENS = frozenset({"", "na", "nan", "null", "none", "."})


class ConfigError(IVNNTError, ValueError):
    pass


class MissingColumn(IVNNTError, KeyError):
    def __init__(self, name):
        super().__init__(name)
        self.name = name

    def __str__(self):
        return f"column {self.name!r} not found in header"


class ParseError(IVNNTError, ValueError):
    def __init__(self, row, column, value):
        super().__init__(f"row {row}, column {column!r}: cannot parse {value!r}")
        self.row = row
        self.column = column
        self.value = value


class Direction(str, Enum):
    GE_IS_EXPOSED = "ge_is_exposed"   # value >= threshold -> 1
    LE_IS_EXPOSED = "le_is_exposed"   # value <= threshold -> 1

    @classmethod
    def parse(cls, value) -> "Direction":
        if isinstance(value, cls):
            return value
        v = str(value).strip().lower()
        aliases = {"ge": cls.GE_IS_EXPOSED, ">=": cls.GE_IS_EXPOSED,
                   "le": cls.LE_IS_EXPOSED, "<=": cls.LE_IS_EXPOSED}
        if v in aliases:
            return aliases[v]
        return cls(v)


@dataclass(frozen=True)
class Threshold:
    value: float
    direction: Direction = Direction.GE_IS_EXPOSED

    def apply(self, x: np.ndarray) -> np.ndarray:
        if self.direction is Direction.GE_IS_EXPOSED:
            return (x >= self.value).astype(np.int8)
        return (x <= self.value).astype(np.int8)


@dataclass(frozen=True)
class IngestSpec:
    path: Path
    outcome_column: str
    exposure_column: str
    instrument_column: str
    exposure_threshold: Threshold | None = None
    outcome_threshold: Threshold | None = None
    instrument_threshold: Threshold | None = None
    header: bool = True
    # unparseable (non-missing) values raise ParseError when strict, else the row is dropped
    strict: bool = True


@dataclass
class IngestReport:
    path: str
    n_read: int
    n_used: int
    dropped_rows: list[int] = field(default_factory=list)
    reasons: dict[int, str] = field(default_factory=dict)

    @property
    def n_dropped(self) -> int:
        return len(self.dropped_rows)

    def to_dict(self) -> dict:
        return {"path": self.path, "n_read": self.n_read, "n_used": self.n_used,
                "n_dropped": self.n_dropped, "dropped_rows": list(self.dropped_rows)}


def _read_table(spec: IngestSpec):
    path = Path(spec.path)
    if not path.is_file():
        raise FileNotFoundError(f"data file not found: {path}")
    with open(path, newline="", encoding="utf-8-sig") as fh:
        rows = list(csv.reader(fh))
    if spec.header:
        if not rows:
            raise ParseError(1, "<header>", "")
        header = [h.strip() for h in rows[0]]
        body = rows[1:]
        first = 2
    else:
        width = len(rows[0]) if rows else 0
        header = [str(k) for k in range(width)]
        body = rows
        first = 1
    return header, body, first


def ingest(spec: IngestSpec, report: list | None = None) -> ObservationSet:
    """Read, dichotomize and validate a CSV file.

    Row numbers in the ingestion report are 1-based file line numbers. If
    ``report`` is a list, the :class:`IngestReport` is appended to it.
    """
    header, body, first = _read_table(spec)
    roles = (
        (spec.instrument_column, spec.instrument_threshold),
        (spec.exposure_column, spec.exposure_threshold),
        (spec.outcome_column, spec.outcome_threshold),
    )
    positions = []
    for name, _ in roles:
        if name not in header:
            raise MissingColumn(name)
        positions.append(header.index(name))

    values = np.full((len(body), 3), np.nan)
    keep = np.ones(len(body), dtype=bool)
    reasons = {}
    for k, row in enumerate(body):
        line = first + k
        if not row or all(not c.strip() for c in row):
            keep[k] = False
            reasons[line] = "blank row"
            continue
        for j, pos in enumerate(positions):
            raw = row[pos].strip() if pos < len(row) else ""
            if raw.lower() in MISSING_TOKENS:
                keep[k] = False
                reasons.setdefault(line, f"missing {roles[j][0]}")
                continue
            try:
                v = float(raw)
            except ValueError:
                v = math.nan
            if math.isnan(v):
                if spec.strict:
                    raise ParseError(line, roles[j][0], raw)
                keep[k] = False
                reasons.setdefault(line, f"unparseable {roles[j][0]}")
                continue
            values[k, j] = v

    used = values[keep]
    for j, (_, thr) in enumerate(roles):
        if thr is not None:
            used[:, j] = thr.apply(used[:, j])
    rep = IngestReport(str(spec.path), len(body), int(keep.sum()),
                       [first + k for k in np.flatnonzero(~keep)], reasons)
    if report is not None:
        report.append(rep)
    return validate(used)


# -- config -------------------------------------------------------------------

def _threshold(obj) -> Threshold | None:
    if obj is None:
        return None
    if isinstance(obj, (int, float)):
        return Threshold(float(obj))
    try:
        return Threshold(float(obj["value"]), Direction.parse(obj.get("direction", "ge_is_exposed")))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad threshold spec {obj!r}: {exc}") from exc


@dataclass
class AppConfig:
    link: LinkKind
    dgp: DgpConfig | None = None
    study: StudyConfig | None = None
    ingest: IngestSpec | None = None
    ci_level: float = 0.95
    source: Path | None = None


_DGP_KEYS = {"psi0", "psi1", "pi_z", "gamma1", "gamma0", "target_exposure", "target_outcome",
             "target_pb", "target_nnt", "outcome_tolerance", "root_index"}
_STUDY_KEYS = {"sample_sizes", "replications", "ci_level", "baseline_mode", "master_seed"}


def parse_config(obj: dict, base_dir: Path | None = None, link=None, seed=None) -> AppConfig:
    """Build typed configs from the parsed JSON object.

    ``link`` and ``seed`` override the file values (CLI flags).
    """
    if not isinstance(obj, dict):
        raise ConfigError("config root must be a JSON object")
    base_dir = Path(base_dir or ".")
    model = obj.get("model", {})
    try:
        kind = LinkKind.parse(link if link is not None else model.get("link", "logit"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    spec = ModelSpec(kind)
    cfg = AppConfig(link=kind)

    if "dgp" in obj:
        d = dict(obj["dgp"])
        unknown = set(d) - _DGP_KEYS
        if unknown:
            raise ConfigError(f"unknown dgp keys: {sorted(unknown)}")
        if "target_nnt" in d:
            if "target_pb" in d:
                raise ConfigError("give either dgp.target_pb or dgp.target_nnt, not both")
            d["target_pb"] = 1.0 / float(d.pop("target_nnt"))
        try:
            cfg.dgp = DgpConfig(spec=spec, **d)
        except TypeError as exc:
            raise ConfigError(f"incomplete dgp section: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    if "study" in obj:
        if cfg.dgp is None:
            raise ConfigError("study section requires a dgp section")
        s = dict(obj["study"])
        unknown = set(s) - _STUDY_KEYS
        if unknown:
            raise ConfigError(f"unknown study keys: {sorted(unknown)}")
        if seed is not None:
            s["master_seed"] = seed
        try:
            cfg.study = StudyConfig(dgp=cfg.dgp, **s)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad study section: {exc}") from exc

    if "estimate" in obj:
        e = obj["estimate"]
        cols = e.get("columns", {})
        thr = e.get("thresholds", {})
        try:
            path = Path(e["data"])
            cfg.ingest = IngestSpec(
                path=path if path.is_absolute() else base_dir / path,
                instrument_column=cols["instrument"],
                exposure_column=cols["exposure"],
                outcome_column=cols["outcome"],
                instrument_threshold=_threshold(thr.get("instrument")),
                exposure_threshold=_threshold(thr.get("exposure")),
                outcome_threshold=_threshold(thr.get("outcome")),
                header=bool(e.get("header", True)),
                strict=bool(e.get("strict", True)),
            )
        except KeyError as exc:
            raise ConfigError(f"estimate section missing key {exc}") from exc
        cfg.ci_level = float(e.get("ci_level", 0.95))
    return cfg


def load_config(path, link=None, seed=None) -> AppConfig:
    path = Path(path).resolve()
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    cfg = parse_config(obj, path.parent, link=link, seed=seed)
    cfg.source = path
    return cfg
