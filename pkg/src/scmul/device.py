"""Stochastic write behaviour of a spin-orbit-torque MRAM cell.

Everything downstream of this module leans on a single switching law: a
cell that starts in the "1" state survives a write pulse of duration
tau (nanoseconds) at current I (microamperes) with probability

    P_unswitched = exp(-tau * exp(-delta * (1 - I / i_c)))

where delta is the thermal stability factor and i_c the critical
switching current.  Because the exponent is linear in tau, survival
probabilities of back-to-back pulses at the same current multiply,
which is what turns two timed pulses into a multiplier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Cap on the log of the composed switching rate.  exp(700) is still finite
# in float64, and exp(-exp(700)) underflows cleanly to exactly 0.0, so
# clamping here removes the overflow path without bending any probability
# that is representable.
_LOG_RATE_CAP = 700.0


@dataclass(frozen=True)
class MtjParams:
    """Cell parameters: thermal stability and critical current in uA."""

    delta: float = 60.9
    i_c: float = 80.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.delta) and self.delta > 0.0):
            raise ValueError(f"delta must be positive and finite, got {self.delta!r}")
        if not (math.isfinite(self.i_c) and self.i_c > 0.0):
            raise ValueError(f"i_c must be positive and finite, got {self.i_c!r}")


@dataclass(frozen=True)
class PulseSpec:
    """One write pulse: current in uA, duration in ns."""

    current: float
    duration: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.current) and self.current >= 0.0):
            raise ValueError(f"pulse current must be >= 0 uA, got {self.current!r}")
        if not (math.isfinite(self.duration) and self.duration >= 0.0):
            raise ValueError(f"pulse duration must be >= 0 ns, got {self.duration!r}")


def p_unswitched(params: MtjParams, pulse: PulseSpec) -> float:
    """Probability that a preset cell survives ``pulse`` without switching.

    Evaluates exp(-tau * exp(-delta * (1 - I/i_c))).  The switching rate
    is composed in log space: a zero-duration pulse returns exactly 1.0,
    and a pulse strong or long enough to underflow returns exactly 0.0
    instead of overflowing on the way there.
    """
    if pulse.duration == 0.0:
        return 1.0
    log_rate = math.log(pulse.duration) - params.delta * (1.0 - pulse.current / params.i_c)
    if log_rate > _LOG_RATE_CAP:
        return 0.0
    return math.exp(-math.exp(log_rate))


def survival_probability(delta, i_c, current, duration):
    """Vectorised form of :func:`p_unswitched`.

    ``i_c``, ``current`` and ``duration`` broadcast together, so one call
    covers a whole region of cells with per-cell critical currents,
    per-column drive attenuation and per-cell duration jitter.  Negative
    jittered durations are floored at zero (a pulse cannot un-elapse).
    """
    i_c = np.asarray(i_c, dtype=np.float64)
    current = np.asarray(current, dtype=np.float64)
    duration = np.maximum(np.asarray(duration, dtype=np.float64), 0.0)
    with np.errstate(divide="ignore"):
        log_rate = np.log(duration) - delta * (1.0 - current / i_c)
    log_rate = np.minimum(log_rate, _LOG_RATE_CAP)
    return np.exp(-np.exp(log_rate))


def sample_unswitched(params: MtjParams, pulse: PulseSpec, rng: np.random.Generator) -> int:
    """Draw one write outcome: 1 if the cell stays "1", 0 if it switched."""
    # rng.random() lies in [0, 1), so p == 1.0 always survives and
    # p == 0.0 never does, keeping the degenerate pulses exact.
    return 1 if rng.random() < p_unswitched(params, pulse) else 0


def make_rng(seed) -> np.random.Generator:
    """Build (or pass through) the deterministic generator used everywhere.

    Seeding goes through ``numpy``'s SeedSequence machinery, so streams
    spawned from one root are statistically independent and a fixed seed
    reproduces every draw no matter how the work is later split up.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
