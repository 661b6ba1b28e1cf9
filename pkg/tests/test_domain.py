import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ivnnt.domain import (
    IDX,
    THETA_DIM,
    EmptyCell,
    EmptyDataset,
    LengthMismatch,
    ModelSpec,
    NonBinaryValue,
    ObservationRecord,
    ThetaVector,
    ValidationError,
    theta_pack,
    theta_unpack,
    validate,
)
from ivnnt.linkmath import LinkKind

FOUR = [(0, 0, 1), (0, 1, 0), (1, 0, 0), (1, 1, 1)]


def test_validate_minimal():
    data = validate(FOUR)
    assert data.n == 4
    assert data.records[3] == ObservationRecord(1, 1, 1)
    assert not data.z.flags.writeable


def test_validate_accepts_records_and_arrays():
    recs = [ObservationRecord(*r) for r in FOUR]
    assert validate(recs) == validate(np.array(FOUR))
    assert validate(validate(FOUR)) == validate(FOUR)


def test_nonbinary_reports_every_row():
    rows = FOUR + [(0, 2, 1), (1, 1, 0.5), ("x", 0, 0)]
    with pytest.raises(ValidationError) as ei:
        validate(rows)
    bad = ei.value.of_type(NonBinaryValue)
    assert [(b.row, b.column) for b in bad] == [(4, "a"), (5, "i"), (6, "z")]
    assert bad[2].value == "x"


def test_empty_cell():
    rows = [(0, 0, 1)] * 40 + [(0, 1, 0)] * 30 + [(1, 1, 1)] * 30
    with pytest.raises(ValidationError) as ei:
        validate(rows)
    cells = ei.value.of_type(EmptyCell)
    assert [(c.z, c.a) for c in cells] == [(1, 0)]


def test_empty_dataset():
    with pytest.raises(ValidationError) as ei:
        validate([])
    assert ei.value.of_type(EmptyDataset)


def test_cell_counts():
    data = validate(FOUR + [(1, 1, 1)])
    c = data.cell_counts()
    assert c.shape == (2, 2, 2)
    assert c[1, 1, 1] == 2 and c.sum() == 5


@given(arrays(np.int8, st.tuples(st.integers(4, 60), st.just(3)), elements=st.integers(0, 1)))
def test_validate_idempotent(arr):
    arr = np.vstack([np.array(FOUR, dtype=np.int8), arr])
    once = validate(arr)
    assert validate(once.records) == once
    assert np.array_equal(once.as_array(), arr)


def test_theta_order():
    v = np.arange(THETA_DIM, dtype=float)
    th = theta_unpack(v)
    assert th.psi[0] == 5.0 and th["psi0"] == 5.0
    assert th.pb == 9.0 and IDX["pb"] == 9
    assert th.nnt == 12.0


def test_theta_length_mismatch():
    with pytest.raises(LengthMismatch):
        theta_unpack(np.zeros(12))
    with pytest.raises(LengthMismatch):
        ThetaVector.from_array(np.zeros(14))


@given(arrays(np.float64, THETA_DIM, elements=st.floats(allow_nan=False, allow_infinity=True, width=64)))
def test_pack_unpack_bijection(v):
    assert np.array_equal(theta_pack(theta_unpack(v)), v)


def test_resolved_flag():
    th = ThetaVector((0, 0, 0, 0), 0.5, (1, 1), 0.25, -0.1, 0.2, 4.0, math.inf, 5.0)
    assert th.resolved
    th2 = ThetaVector((0, 0, 0, 0), 0.5, (1, 1), 0.25, 0.1, 0.2, 4.0, math.inf, 5.0)
    assert not th2.resolved
    nan = float("nan")
    th3 = ThetaVector((0, 0, 0, 0), 0.5, (nan, 1), nan, 0.5, nan, nan, 2.0, nan)
    assert th3.resolved


def test_model_spec_parses_strings():
    assert ModelSpec("Probit").link is LinkKind.PROBIT
    with pytest.raises(ValueError):
        ModelSpec("identity")
