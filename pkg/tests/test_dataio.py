import json
from pathlib import Path

import numpy as np
import pytest

from ivnnt.dataio import (
    ConfigError,
    Direction,
    IngestSpec,
    MissingColumn,
    ParseError,
    Threshold,
    ingest,
    load_config,
    parse_config,
)
from ivnnt.domain import ValidationError
from ivnnt.linkmath import LinkKind

FIXTURE = Path(__file__).resolve().parents[1] / "src" / "ivnnt" / "data" / "vitd_synthetic.csv"


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def six_rows(tmp_path, vitd=("25", "31", "30", "45", "10", "60")):
    lines = ["filaggrin,vitd,death"]
    z = [0, 1, 0, 1, 1, 0]
    i = [1, 0, 0, 1, 0, 1]
    lines += [f"{a},{b},{c}" for a, b, c in zip(z, vitd, i)]
    return write(tmp_path, "\n".join(lines) + "\n")


def spec(path, **kw):
    kw.setdefault("exposure_threshold", Threshold(30, Direction.GE_IS_EXPOSED))
    return IngestSpec(path, "death", "vitd", "filaggrin", **kw)


def test_threshold_semantics(tmp_path):
    data = ingest(spec(six_rows(tmp_path)))
    assert data.a.tolist() == [0, 1, 1, 1, 0, 1]


def test_le_direction(tmp_path):
    data = ingest(spec(six_rows(tmp_path), outcome_threshold=Threshold(0, Direction.parse("le"))))
    assert data.i.tolist() == [0, 1, 1, 0, 1, 0]


def test_missing_column(tmp_path):
    p = six_rows(tmp_path)
    with pytest.raises(MissingColumn) as ei:
        ingest(IngestSpec(p, "death", "vitamin", "filaggrin"))
    assert ei.value.name == "vitamin"


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        ingest(spec(tmp_path / "nope.csv"))


def test_na_row_dropped_and_reported(tmp_path):
    p = six_rows(tmp_path, vitd=("25", "31", "30", "45", "10", "60"))
    text = p.read_text() + "1,NA,0\n0,,1\n"
    p.write_text(text)
    report = []
    data = ingest(spec(p), report)
    assert data.n == 6
    assert report[0].n_read == 8 and report[0].dropped_rows == [8, 9]


def test_unparseable_strict_and_lenient(tmp_path):
    p = six_rows(tmp_path)
    p.write_text(p.read_text() + "1,abc,0\n")
    with pytest.raises(ParseError) as ei:
        ingest(spec(p))
    assert (ei.value.row, ei.value.column) == (8, "vitd")
    report = []
    data = ingest(spec(p, strict=False), report)
    assert data.n == 6 and report[0].dropped_rows == [8]


def test_unthresholded_column_must_be_binary(tmp_path):
    p = write(tmp_path, "z,a,i\n0,0,1\n0,1,0\n1,0,2\n1,1,1\n")
    with pytest.raises(ValidationError):
        ingest(IngestSpec(p, "i", "a", "z"))


def test_fixture_ingests():
    report = []
    data = ingest(spec(FIXTURE, outcome_threshold=Threshold(0, Direction.LE_IS_EXPOSED)), report)
    assert data.n == 2571
    assert report[0].n_dropped == 3
    assert 0.05 < 1 - data.a.mean() < 0.09


def test_parse_config_full(tmp_path):
    obj = {
        "model": {"link": "probit"},
        "dgp": {"psi0": 1, "psi1": 1.5, "pi_z": 0.5, "gamma1": 3, "target_exposure": 0.6,
                "target_outcome": 0.3, "target_nnt": 3.02},
        "study": {"sample_sizes": [500], "replications": 3, "master_seed": 9},
        "estimate": {"data": "x.csv", "columns": {"instrument": "z", "exposure": "a", "outcome": "i"},
                     "thresholds": {"exposure": {"value": 30, "direction": "ge_is_exposed"}}},
    }
    cfg = parse_config(obj, tmp_path, seed=77)
    assert cfg.link is LinkKind.PROBIT
    assert cfg.dgp.target_pb == pytest.approx(1 / 3.02)
    assert cfg.study.master_seed == 77
    assert cfg.ingest.path == tmp_path / "x.csv"
    assert cfg.ingest.exposure_threshold == Threshold(30.0, Direction.GE_IS_EXPOSED)
    assert parse_config(obj, tmp_path, link="logit").link is LinkKind.LOGIT


@pytest.mark.parametrize("obj", [
    {"model": {"link": "cauchit"}},
    {"dgp": {"psi0": 1}},
    {"dgp": {"psi0": 1, "psi1": 1, "pi_z": 0.5, "gamma1": 3, "target_exposure": 0.6,
             "target_outcome": 0.3, "target_pb": 0.2, "wat": 1}},
    {"study": {"replications": 3}},
    {"estimate": {"data": "x.csv", "columns": {"instrument": "z"}}},
    [],
])
def test_parse_config_errors(obj):
    with pytest.raises(ConfigError):
        parse_config(obj)


def test_load_config_bad_json(tmp_path):
    p = write(tmp_path, "{not json", "c.json")
    with pytest.raises(ConfigError):
        load_config(p)


def test_shipped_configs_parse():
    root = Path(__file__).resolve().parents[1] / "configs"
    for p in sorted(root.glob("*.json")):
        cfg = load_config(p)
        assert cfg.dgp is not None or cfg.ingest is not None
