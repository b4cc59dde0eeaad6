import math

import numpy as np
import pytest

from tiadc_yield.core.errors import InvalidInputError
from tiadc_yield.core.types import AdcConfig, DistributionSpec, MismatchKind, YieldQuery
from tiadc_yield.core.units import undb
from tiadc_yield.evaluation.montecarlo import max_spur_samples
from tiadc_yield.optimizer.calibration import (
    SQRT12,
    closed_form_sigma,
    display_step,
    invert_yield,
    quantile_vs_step,
    raw_step,
    sweep_step_vs_target,
)
from tiadc_yield.statistics.combined import SpurInclusion, combined_cdf

CFG = AdcConfig(interleave_factor=16, sample_rate=25.6e9, resolution_bits=12)
F_SIG = 12e9


def offset_query(target=-80.0, y=0.99):
    return YieldQuery(MismatchKind.OFFSET, target, y, include_dc=False, include_nyquist=False)


def test_offset_step_is_about_half_an_lsb():
    result = invert_yield(offset_query(), CFG)
    assert 0.50 <= result.step_in_lsb <= 0.60
    assert result.unit == "LSB"
    assert result.display == pytest.approx(result.step_in_lsb)


def test_gain_step_example():
    result = invert_yield(YieldQuery(MismatchKind.GAIN, -65.0, 0.99), CFG)
    assert 0.25 <= result.display <= 0.29
    assert result.unit == "%"
    assert result.step_in_lsb is None
    assert result.inclusion.include_nyquist and not result.inclusion.include_dc


def test_skew_step_example():
    result = invert_yield(
        YieldQuery(MismatchKind.SKEW, -65.0, 0.99, signal_frequency=F_SIG), CFG
    )
    assert 32.0 <= result.display <= 38.0
    assert result.unit == "fs"


def test_step_is_sigma_times_sqrt12():
    result = invert_yield(offset_query(), CFG)
    assert result.step == pytest.approx(result.sigma * SQRT12, rel=1e-15)
    assert result.to_dict()["step_display"] == result.display


def test_closed_form_matches_bisection_circ_only():
    inclusion = SpurInclusion(False, False, 7)
    for target in (-90.0, -80.0, -60.0):
        exact = closed_form_sigma(MismatchKind.OFFSET, undb(target), 0.99, 16, inclusion)
        result = invert_yield(offset_query(target), CFG)
        assert result.sigma == pytest.approx(exact, rel=1e-9)


def test_achieved_yield_is_on_the_safe_side():
    for query in (
        offset_query(),
        YieldQuery(MismatchKind.GAIN, -70.0, 0.999),
        YieldQuery(MismatchKind.SKEW, -60.0, 0.95, signal_frequency=F_SIG),
    ):
        result = invert_yield(query, CFG)
        assert query.yield_target <= result.achieved_yield <= query.yield_target + 1e-9


def test_ten_db_looser_target_scales_step_by_sqrt10():
    a = invert_yield(YieldQuery(MismatchKind.GAIN, -75.0, 0.99), CFG)
    b = invert_yield(YieldQuery(MismatchKind.GAIN, -65.0, 0.99), CFG)
    assert b.step / a.step == pytest.approx(math.sqrt(10.0), rel=1e-6)


def test_doubling_frequency_halves_skew_step():
    a = invert_yield(YieldQuery(MismatchKind.SKEW, -65.0, 0.99, signal_frequency=3e9), CFG)
    b = invert_yield(YieldQuery(MismatchKind.SKEW, -65.0, 0.99, signal_frequency=6e9), CFG)
    assert b.step == pytest.approx(a.step / 2, rel=1e-6)


def test_skew_is_gain_scaled_by_angular_frequency():
    gain = invert_yield(YieldQuery(MismatchKind.GAIN, -65.0, 0.99), CFG)
    skew = invert_yield(YieldQuery(MismatchKind.SKEW, -65.0, 0.99, signal_frequency=F_SIG), CFG)
    assert skew.sigma * 2 * math.pi * F_SIG == pytest.approx(gain.sigma, rel=1e-6)


def test_higher_yield_needs_finer_step():
    steps = [invert_yield(offset_query(y=y), CFG).step for y in (0.9, 0.99, 0.999)]
    assert steps[0] > steps[1] > steps[2]


def test_including_edge_spurs_tightens_offset_step():
    full = invert_yield(YieldQuery(MismatchKind.OFFSET, -80.0, 0.99), CFG)
    circ = invert_yield(offset_query(), CFG)
    assert full.step < circ.step
    assert full.inclusion.n_real == 2


def test_verbose_reports_nyquist_variants():
    result = invert_yield(YieldQuery(MismatchKind.GAIN, -65.0, 0.99), CFG, verbose=True)
    assert set(result.variants) == {"nyquist_included", "nyquist_excluded"}
    assert result.variants["nyquist_included"] == pytest.approx(result.display, rel=1e-8)
    assert result.variants["nyquist_excluded"] > result.variants["nyquist_included"]
    assert invert_yield(offset_query(), CFG, verbose=True).variants == {}


def test_empty_inclusion_is_rejected():
    with pytest.raises(InvalidInputError):
        invert_yield(offset_query(), CFG, SpurInclusion(False, False, 0))


def test_display_units_round_trip():
    for kind, step in ((MismatchKind.OFFSET, 3e-4), (MismatchKind.GAIN, 2.7e-3),
                       (MismatchKind.SKEW, 3.5e-14)):
        assert raw_step(kind, display_step(kind, step, CFG), CFG) == pytest.approx(step)
    assert display_step(MismatchKind.SKEW, 35e-15, CFG) == pytest.approx(35.0)
    assert display_step(MismatchKind.OFFSET, CFG.lsb / 2, CFG) == pytest.approx(0.5)


def test_sweep_is_monotone():
    curve = sweep_step_vs_target(
        MismatchKind.OFFSET, CFG, np.arange(-90.0, -69.0, 2.0), 0.99,
        SpurInclusion(False, False, 7),
    )
    frame = curve.to_frame()
    assert list(frame.columns) == ["target_db", "step_size", "unit"]
    assert np.all(np.diff(frame["step_size"].to_numpy()) > 0)
    assert set(frame["unit"]) == {"LSB"}


def test_sweep_rejects_unordered_targets():
    with pytest.raises(InvalidInputError):
        sweep_step_vs_target(MismatchKind.GAIN, CFG, [-70.0, -80.0], 0.99)
    with pytest.raises(InvalidInputError):
        sweep_step_vs_target(MismatchKind.GAIN, CFG, [], 0.99)


def test_quantile_at_step_recovers_target():
    result = invert_yield(YieldQuery(MismatchKind.GAIN, -65.0, 0.99), CFG)
    frame = quantile_vs_step(MismatchKind.GAIN, CFG, [result.step, 2 * result.step], 0.99)
    assert frame["quantile_db"].iloc[0] == pytest.approx(-65.0, abs=1e-6)
    assert frame["quantile_db"].iloc[1] == pytest.approx(-65.0 + 20 * math.log10(2), abs=1e-6)
    with pytest.raises(InvalidInputError):
        quantile_vs_step(MismatchKind.GAIN, CFG, [0.0], 0.99)


def test_monte_carlo_confirms_yield():
    query = YieldQuery(MismatchKind.GAIN, -65.0, 0.99)
    result = invert_yield(query, CFG)
    trials = 100_000
    samples = max_spur_samples(
        MismatchKind.GAIN, DistributionSpec.gaussian(result.sigma), CFG, result.inclusion,
        trials=trials, seed=17,
    )
    empirical = np.mean(samples <= undb(-65.0))
    se = math.sqrt(0.99 * 0.01 / trials)
    assert abs(empirical - 0.99) < 3 * se
    assert combined_cdf(MismatchKind.GAIN, undb(-65.0), result.sigma, 16) == pytest.approx(
        result.achieved_yield
    )
