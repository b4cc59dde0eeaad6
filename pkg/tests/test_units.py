import math

import numpy as np
import pytest

from tiadc_yield.core.errors import InvalidInputError
from tiadc_yield.core.units import db, fold_frequency, lsb, to_db, undb


@pytest.mark.parametrize(
    "bits, expected", [(12, 4.8828125e-4), (1, 1.0), (8, 7.8125e-3)]
)
def test_lsb_values(bits, expected):
    assert lsb(bits) == expected


def test_lsb_halves_per_bit():
    for bits in range(1, 24):
        assert lsb(bits + 1) == lsb(bits) / 2


def test_lsb_rejects_zero_bits():
    with pytest.raises(InvalidInputError):
        lsb(0)


@pytest.mark.parametrize("p, expected", [(1.0, 0.0), (1e-8, -80.0), (0.5, -3.0103)])
def test_db_values(p, expected):
    assert db(p) == pytest.approx(expected, abs=1e-4)


@pytest.mark.parametrize("p", [0.0, -1.0, float("nan")])
def test_db_domain_error(p):
    with pytest.raises(InvalidInputError):
        db(p)


def test_db_undb_round_trip():
    xs = np.linspace(-300.0, 0.0, 601)
    back = np.array([db(undb(float(x))) for x in xs])
    assert np.max(np.abs(back - xs)) < 1e-9


def test_undb_scalar_and_array():
    assert isinstance(undb(-10.0), float)
    assert undb(np.array([0.0, -20.0])) == pytest.approx([1.0, 0.01])


def test_to_db_maps_zero_to_minus_inf():
    assert to_db(0.0) == -math.inf
    assert to_db(np.array([1.0, 0.0]))[1] == -math.inf


@pytest.mark.parametrize(
    "f, expected",
    [(0.3, 0.3), (0.55, 0.45), (1.05, 0.05), (-0.2, 0.2), (0.5, 0.5), (1.0, 0.0)],
)
def test_fold_frequency(f, expected):
    assert fold_frequency(f, 1.0) == pytest.approx(expected, abs=1e-12)
