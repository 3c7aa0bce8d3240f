"""Plane-level write behaviour: regions, variation knobs, pop-count."""

import math

import numpy as np
import pytest

from scmul.bitplane import (
    ArrayState,
    Region,
    VariationModel,
    apply_pulse,
    dump_bits,
    new_array,
    popcount_region,
    preset,
)
from scmul.device import MtjParams, PulseSpec, make_rng

PARAMS = MtjParams()
P_TAU_03 = 0.7408182206817179  # exp(-0.3)

NOMINAL = PulseSpec(current=80.0, duration=0.3)


def full_region(state: ArrayState) -> Region:
    return Region(0, state.rows, 0, state.cols)


def test_region_geometry():
    r = Region(2, 5, 1, 9)
    assert r.shape == (3, 8)
    assert r.cells == 24
    rs, cs = r.slices
    assert (rs.start, rs.stop) == (2, 5)
    assert (cs.start, cs.stop) == (1, 9)


@pytest.mark.parametrize(
    "bounds",
    [(3, 3, 0, 4), (5, 2, 0, 4), (-1, 2, 0, 4), (0, 2, 4, 4), (0, 2, -2, 4)],
)
def test_region_validation(bounds):
    with pytest.raises(ValueError):
        Region(*bounds)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"sigma_ic": -0.01},
        {"sigma_ic": 0.51},
        {"sigma_circuit": 0.6},
        {"sigma_circuit": math.nan},
        {"ir_drop_per_col": -1e-3},
    ],
)
def test_variation_validation(kwargs):
    with pytest.raises(ValueError):
        VariationModel(**kwargs)


def test_new_array_ideal_map_is_uniform():
    state = new_array(8, 16, PARAMS)
    assert state.bits.shape == (8, 16)
    assert state.bits.dtype == np.uint8
    assert not state.bits.any()
    assert not state.preset_done
    assert (state.ic_map == 80.0).all()


def test_new_array_rejects_bad_dimensions():
    with pytest.raises(ValueError):
        new_array(0, 4, PARAMS)
    with pytest.raises(ValueError):
        new_array(4, 0, PARAMS)


def test_new_array_static_spread_statistics():
    variation = VariationModel(sigma_ic=0.1)
    state = new_array(400, 250, PARAMS, variation, make_rng(11))
    draws = state.ic_map / 80.0 - 1.0
    # Clipping a unit Gaussian at +-3 sigma shrinks its standard
    # deviation by factor 0.9975; with 10^5 cells the sample std carries
    # a relative error near 1/sqrt(2n) ~ 0.2%, so 2% is a loose gate.
    assert abs(draws.std() - 0.1 * 0.997500515) < 0.002
    assert abs(draws.mean()) < 0.002
    # One float64 rounding of the (1 + sigma*eps) * i_c / i_c round trip.
    assert draws.min() >= -0.3 - 1e-12
    assert draws.max() <= 0.3 + 1e-12


def test_new_array_spread_requires_rng():
    with pytest.raises(ValueError):
        new_array(4, 4, PARAMS, VariationModel(sigma_ic=0.05))


def test_new_array_map_reproducible():
    variation = VariationModel(sigma_ic=0.1)
    a = new_array(32, 32, PARAMS, variation, make_rng(3))
    b = new_array(32, 32, PARAMS, variation, make_rng(3))
    assert np.array_equal(a.ic_map, b.ic_map)


def test_preset_fills_and_is_idempotent():
    state = new_array(5, 7, PARAMS)
    preset(state)
    assert state.preset_done
    assert (state.bits == 1).all()
    state.bits[2, 3] = 0
    preset(state)
    assert (state.bits == 1).all()


def test_apply_pulse_requires_preset():
    state = new_array(4, 4, PARAMS)
    with pytest.raises(RuntimeError):
        apply_pulse(state, full_region(state), NOMINAL, PARAMS, rng=make_rng(0))


def test_apply_pulse_requires_rng_when_it_draws():
    state = new_array(4, 4, PARAMS)
    preset(state)
    with pytest.raises(ValueError):
        apply_pulse(state, full_region(state), NOMINAL, PARAMS)


def test_apply_pulse_rejects_out_of_bounds_region():
    state = new_array(4, 4, PARAMS)
    preset(state)
    with pytest.raises(ValueError):
        apply_pulse(state, Region(0, 5, 0, 4), NOMINAL, PARAMS, rng=make_rng(0))
    with pytest.raises(ValueError):
        popcount_region(state, Region(0, 4, 0, 5))


def test_zero_duration_pulse_is_a_silent_no_op():
    state = new_array(6, 6, PARAMS)
    preset(state)
    rng = make_rng(9)
    apply_pulse(state, full_region(state), PulseSpec(80.0, 0.0), PARAMS, rng=rng)
    assert (state.bits == 1).all()
    # The generator stream must be untouched, so later draws line up with
    # a run that never saw the degenerate pulse.
    assert rng.random() == make_rng(9).random()
    # And no rng is needed at all for the degenerate case.
    apply_pulse(state, full_region(state), PulseSpec(80.0, 0.0), PARAMS)


def test_pulse_outcome_deterministic_for_fixed_seed():
    bits = []
    for _ in range(2):
        state = new_array(32, 32, PARAMS)
        preset(state)
        apply_pulse(state, full_region(state), NOMINAL, PARAMS, rng=make_rng(17))
        bits.append(state.bits.copy())
    assert np.array_equal(bits[0], bits[1])


def test_pulses_only_clear_bits():
    state = new_array(64, 64, PARAMS)
    preset(state)
    rng = make_rng(2)
    region = full_region(state)
    apply_pulse(state, region, PulseSpec(80.0, 0.7), PARAMS, rng=rng)
    after_first = state.bits.copy()
    apply_pulse(state, region, PulseSpec(80.0, 0.7), PARAMS, rng=rng)
    # No 0 -> 1 transition anywhere.
    assert not (state.bits & ~after_first).any()


def test_survival_fraction_matches_law():
    state = new_array(100, 200, PARAMS)
    preset(state)
    apply_pulse(state, full_region(state), NOMINAL, PARAMS, rng=make_rng(23))
    n = 100 * 200
    frac = popcount_region(state, full_region(state)) / n
    # Four binomial sigmas: 4 * sqrt(0.7408 * 0.2592 / 20000) ~ 0.0124.
    assert abs(frac - P_TAU_03) < 4.0 * math.sqrt(P_TAU_03 * (1 - P_TAU_03) / n)


def test_draw_layout_is_data_independent():
    # Clearing bits before the pulse must not shift anyone else's random
    # outcome: draws cover the full region no matter what the bits hold.
    ref = new_array(64, 64, PARAMS)
    preset(ref)
    apply_pulse(ref, full_region(ref), PulseSpec(80.0, 0.7), PARAMS, rng=make_rng(5))

    poked = new_array(64, 64, PARAMS)
    preset(poked)
    poked.bits[::2, :] = 0
    apply_pulse(poked, full_region(poked), PulseSpec(80.0, 0.7), PARAMS, rng=make_rng(5))

    assert not poked.bits[::2, :].any()
    assert np.array_equal(poked.bits[1::2, :], ref.bits[1::2, :])


def test_circuit_jitter_keeps_mean_on_law():
    variation = VariationModel(sigma_circuit=0.1)
    state = new_array(100, 200, PARAMS)
    preset(state)
    apply_pulse(state, full_region(state), NOMINAL, PARAMS, variation, make_rng(29))
    frac = popcount_region(state, full_region(state)) / (100 * 200)
    # Jitter brings a second-order convexity bias of order (tau*sigma)^2/2
    # ~ 3e-4, far inside this five-sigma binomial band.
    assert abs(frac - P_TAU_03) < 0.016


def test_ir_drop_raises_survival_along_the_row():
    # Droop lowers the drive with column index, which cools the write and
    # leaves more cells unswitched the further they sit from the driver.
    variation = VariationModel(ir_drop_per_col=0.01)
    rows, cols = 20000, 6
    state = new_array(rows, cols, PARAMS, variation, make_rng(31))
    preset(state)
    apply_pulse(state, full_region(state), NOMINAL, PARAMS, variation, make_rng(37))
    fracs = state.bits.mean(axis=0)
    for col in range(cols):
        expected = math.exp(-0.3 * math.exp(-60.9 * 0.01 * col))
        sigma = math.sqrt(expected * (1.0 - expected) / rows)
        assert abs(fracs[col] - expected) < 4.0 * sigma + 1e-9
    assert all(a < b for a, b in zip(fracs, fracs[1:]))


def test_ir_drop_uses_absolute_column_index():
    # A sub-region starting at column 3 must see the droop of physical
    # columns 3 and 4, not restart at zero.
    variation = VariationModel(ir_drop_per_col=0.01)
    rows = 20000
    state = new_array(rows, 5, PARAMS, variation, make_rng(41))
    preset(state)
    sub = Region(0, rows, 3, 5)
    apply_pulse(state, sub, NOMINAL, PARAMS, variation, make_rng(43))
    fracs = state.bits[:, 3:5].mean(axis=0)
    for offset, col in enumerate((3, 4)):
        expected = math.exp(-0.3 * math.exp(-60.9 * 0.01 * col))
        sigma = math.sqrt(expected * (1.0 - expected) / rows)
        assert abs(fracs[offset] - expected) < 4.0 * sigma


def test_cell_outcomes_uncorrelated_across_columns():
    state = new_array(10000, 8, PARAMS)
    preset(state)
    apply_pulse(state, full_region(state), PulseSpec(80.0, 0.7), PARAMS, rng=make_rng(47))
    corr = np.corrcoef(state.bits.astype(np.float64), rowvar=False)
    off_diag = corr[~np.eye(8, dtype=bool)]
    # Independent columns: sample correlation scatters as 1/sqrt(n) =
    # 0.01, so 0.05 flags genuine coupling only.
    assert np.abs(off_diag).max() < 0.05


def test_pulse_only_touches_its_region():
    state = new_array(8, 8, PARAMS)
    preset(state)
    region = Region(2, 4, 2, 6)
    apply_pulse(state, region, PulseSpec(80.0, 50.0), PARAMS, rng=make_rng(53))
    assert not state.bits[2:4, 2:6].any()
    mask = np.ones((8, 8), dtype=bool)
    mask[2:4, 2:6] = False
    assert (state.bits[mask] == 1).all()


def test_popcount_exact_on_checkerboard():
    state = new_array(4, 4, PARAMS)
    preset(state)
    state.bits[::2, ::2] = 0
    state.bits[1::2, 1::2] = 0
    assert popcount_region(state, full_region(state)) == 8
    assert popcount_region(state, Region(0, 2, 0, 2)) == 2
    assert popcount_region(state, Region(0, 1, 0, 1)) == 0


def test_dump_bits_renders_rows():
    state = new_array(2, 3, PARAMS)
    preset(state)
    state.bits[0, 1] = 0
    assert dump_bits(state) == "101\n111"
