"""Switching-law unit tests.

Golden probabilities were computed independently with 30-digit mpmath
arithmetic and frozen here as float64 literals.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scmul.device import (
    MtjParams,
    PulseSpec,
    make_rng,
    p_unswitched,
    sample_unswitched,
    survival_probability,
)

PARAMS = MtjParams()

# exp(-0.3), and the full law at I = 0.95 * i_c with tau = 1.0 ns.
P_AT_IC_03 = 0.7408182206817179
P_AT_95IC_10 = 0.953518633435332


def test_default_params():
    assert PARAMS.delta == 60.9
    assert PARAMS.i_c == 80.0


@pytest.mark.parametrize(
    "current,duration,expected",
    [
        (80.0, 0.3, P_AT_IC_03),
        (76.0, 1.0, P_AT_95IC_10),
        (80.0, 0.7, 0.4965853037914095),
        (80.0, 1.408, 0.2446320583319975),
    ],
)
def test_golden_probabilities(current, duration, expected):
    p = p_unswitched(PARAMS, PulseSpec(current=current, duration=duration))
    assert p == pytest.approx(expected, rel=1e-12)


def test_zero_duration_is_exactly_one():
    assert p_unswitched(PARAMS, PulseSpec(current=80.0, duration=0.0)) == 1.0
    assert p_unswitched(PARAMS, PulseSpec(current=1000.0, duration=0.0)) == 1.0


def test_zero_current_suppresses_switching():
    # At I = 0 the switching rate carries a factor exp(-delta) ~ 3.5e-27,
    # so even a millisecond-scale pulse leaves the cell untouched.
    p = p_unswitched(PARAMS, PulseSpec(current=0.0, duration=1e6))
    assert p > 1.0 - 1e-12


def test_overdrive_underflows_to_exact_zero():
    # 10x critical current: rate = exp(9 * delta) dwarfs any cap concern.
    assert p_unswitched(PARAMS, PulseSpec(current=800.0, duration=1.0)) == 0.0
    # Same at nominal current with an absurdly long pulse.
    assert p_unswitched(PARAMS, PulseSpec(current=80.0, duration=1e9)) == 0.0


def test_extreme_inputs_stay_finite_and_in_unit_interval():
    for current in (0.0, 1e-6, 40.0, 80.0, 160.0, 800.0):
        for duration in (0.0, 1e-12, 0.3, 1.0, 1e6, 1e12):
            p = p_unswitched(PARAMS, PulseSpec(current=current, duration=duration))
            assert math.isfinite(p)
            assert 0.0 <= p <= 1.0


def test_monotone_nonincreasing_in_duration():
    durations = np.linspace(0.0, 5.0, 201)
    ps = [p_unswitched(PARAMS, PulseSpec(80.0, float(d))) for d in durations]
    assert all(a >= b for a, b in zip(ps, ps[1:]))


def test_monotone_nonincreasing_in_current():
    currents = np.linspace(0.0, 160.0, 201)
    ps = [p_unswitched(PARAMS, PulseSpec(float(c), 0.5)) for c in currents]
    assert all(a >= b for a, b in zip(ps, ps[1:]))


@given(
    tau1=st.floats(min_value=0.0, max_value=5.0),
    tau2=st.floats(min_value=0.0, max_value=5.0),
    current=st.floats(min_value=40.0, max_value=120.0),
)
@settings(deadline=None, max_examples=200)
def test_split_pulse_composability(tau1, tau2, current):
    # The exponent is linear in tau, so survival over tau1 + tau2 equals
    # the product of the two partial survivals.
    combined = p_unswitched(PARAMS, PulseSpec(current, tau1 + tau2))
    split = p_unswitched(PARAMS, PulseSpec(current, tau1)) * p_unswitched(
        PARAMS, PulseSpec(current, tau2)
    )
    assert combined == pytest.approx(split, rel=1e-12, abs=1e-300)


def test_vectorized_matches_scalar():
    currents = np.linspace(0.0, 160.0, 33)
    durations = np.linspace(0.0, 3.0, 29)
    cc, dd = np.meshgrid(currents, durations)
    vec = survival_probability(PARAMS.delta, PARAMS.i_c, cc, dd)
    assert vec.shape == cc.shape
    for i in range(cc.shape[0]):
        for j in range(cc.shape[1]):
            scalar = p_unswitched(PARAMS, PulseSpec(float(cc[i, j]), float(dd[i, j])))
            assert vec[i, j] == pytest.approx(scalar, rel=1e-12, abs=1e-15)


def test_vectorized_broadcasts_per_cell_inputs():
    ic = np.array([[78.0, 80.0], [82.0, 80.0]])
    dur = np.array([[0.3, 0.0], [0.31, 0.3]])
    p = survival_probability(PARAMS.delta, ic, 80.0, dur)
    assert p.shape == (2, 2)
    assert p[0, 1] == 1.0
    # Lower critical current means a hotter write at fixed drive.
    assert p[0, 0] < p[1, 1] < p[1, 0]


def test_vectorized_floors_negative_jittered_duration():
    p = survival_probability(PARAMS.delta, 80.0, 80.0, np.array([-0.5, 0.0, 0.5]))
    assert p[0] == 1.0
    assert p[1] == 1.0
    assert p[2] < 1.0


def test_sample_degenerate_pulses():
    rng = make_rng(0)
    always_one = PulseSpec(current=80.0, duration=0.0)
    assert all(sample_unswitched(PARAMS, always_one, rng) == 1 for _ in range(64))
    always_zero = PulseSpec(current=800.0, duration=1.0)
    assert all(sample_unswitched(PARAMS, always_zero, rng) == 0 for _ in range(64))


def test_sample_deterministic_for_fixed_seed():
    pulse = PulseSpec(current=80.0, duration=0.7)
    rng_a = make_rng(42)
    rng_b = make_rng(42)
    bits_a = [sample_unswitched(PARAMS, pulse, rng_a) for _ in range(256)]
    bits_b = [sample_unswitched(PARAMS, pulse, rng_b) for _ in range(256)]
    assert bits_a == bits_b
    assert set(bits_a) == {0, 1}


def test_sample_mean_matches_law():
    # n = 10^6 draws; binomial three-sigma band is
    # 3 * sqrt(0.7408 * 0.2592 / 1e6) ~ 0.0013.
    pulse = PulseSpec(current=80.0, duration=0.3)
    rng = make_rng(123)
    n = 1_000_000
    total = sum(sample_unswitched(PARAMS, pulse, rng) for _ in range(n))
    mean = total / n
    assert abs(mean - P_AT_IC_03) < 3.0 * math.sqrt(P_AT_IC_03 * (1 - P_AT_IC_03) / n)


@pytest.mark.parametrize(
    "delta,i_c",
    [
        (0.0, 80.0),
        (-1.0, 80.0),
        (60.9, 0.0),
        (60.9, -5.0),
        (math.nan, 80.0),
        (60.9, math.inf),
    ],
)
def test_bad_params_rejected(delta, i_c):
    with pytest.raises(ValueError):
        MtjParams(delta=delta, i_c=i_c)


@pytest.mark.parametrize(
    "current,duration",
    [
        (-1.0, 0.3),
        (80.0, -0.1),
        (math.nan, 1.0),
        (80.0, math.inf),
        (math.inf, 0.3),
    ],
)
def test_bad_pulse_rejected(current, duration):
    with pytest.raises(ValueError):
        PulseSpec(current=current, duration=duration)


def test_make_rng_passes_generators_through():
    gen = np.random.default_rng(7)
    assert make_rng(gen) is gen


def test_make_rng_seeds_reproducibly():
    assert make_rng(5).random() == make_rng(5).random()
    assert make_rng(5).random() != make_rng(6).random()
