"""Cross-point plane of stochastically written cells.

A multiply occupies a rectangular region of the plane: preset everything
to "1", fire the two operand pulses across the region, pop-count the
survivors.  Non-ideal behaviour enters in three decoupled ways:

* static per-cell critical-current spread, drawn once when the plane is
  allocated (a given die keeps its map for life);
* dynamic per-cell, per-pulse duration jitter from the timing circuits;
* a deterministic drive-current droop along the row, growing with the
  column index (resistive loss between driver and cell).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .device import MtjParams, PulseSpec, survival_probability

# Gaussian draws for both variation knobs are truncated at +-3 sigma by
# clipping, so a single unlucky tail sample cannot produce a negative
# critical current or a wildly unphysical pulse width.
_TRUNC_SIGMAS = 3.0


@dataclass(frozen=True)
class Region:
    """Half-open rectangle of cells: rows [row_start, row_stop) x cols [col_start, col_stop)."""

    row_start: int
    row_stop: int
    col_start: int
    col_stop: int

    def __post_init__(self) -> None:
        if not (0 <= self.row_start < self.row_stop):
            raise ValueError(f"bad row range [{self.row_start}, {self.row_stop})")
        if not (0 <= self.col_start < self.col_stop):
            raise ValueError(f"bad column range [{self.col_start}, {self.col_stop})")

    @property
    def slices(self) -> tuple[slice, slice]:
        return slice(self.row_start, self.row_stop), slice(self.col_start, self.col_stop)

    @property
    def shape(self) -> tuple[int, int]:
        return self.row_stop - self.row_start, self.col_stop - self.col_start

    @property
    def cells(self) -> int:
        rows, cols = self.shape
        return rows * cols


@dataclass(frozen=True)
class VariationModel:
    """Non-ideality knobs, all relative quantities.

    ``sigma_ic`` spreads critical currents cell to cell (static),
    ``sigma_circuit`` jitters the effective pulse duration per cell and
    per pulse (dynamic), ``ir_drop_per_col`` attenuates the drive current
    linearly with column index.
    """

    sigma_ic: float = 0.0
    sigma_circuit: float = 0.0
    ir_drop_per_col: float = 0.0

    def __post_init__(self) -> None:
        for name in ("sigma_ic", "sigma_circuit"):
            value = getattr(self, name)
            if not (math.isfinite(value) and 0.0 <= value <= 0.5):
                raise ValueError(f"{name} must be in [0, 0.5], got {value!r}")
        if not (math.isfinite(self.ir_drop_per_col) and self.ir_drop_per_col >= 0.0):
            raise ValueError(f"ir_drop_per_col must be >= 0, got {self.ir_drop_per_col!r}")


@dataclass
class ArrayState:
    """Mutable plane state: bit matrix plus the per-cell critical currents.

    ``preset_done`` records whether the plane has been initialised at
    least once; write pulses are refused before that, because the bit
    contents would be meaningless.
    """

    rows: int
    cols: int
    bits: np.ndarray
    ic_map: np.ndarray
    preset_done: bool = False


def new_array(
    rows: int,
    cols: int,
    params: MtjParams,
    variation: VariationModel = VariationModel(),
    rng: np.random.Generator | None = None,
) -> ArrayState:
    """Allocate a plane and draw its static critical-current map.

    The map is sampled here, once, and never redrawn: re-running pulses
    on the same ArrayState models the same physical die.
    """
    if rows <= 0 or cols <= 0:
        raise ValueError(f"plane dimensions must be positive, got {rows}x{cols}")
    if variation.sigma_ic > 0.0:
        if rng is None:
            raise ValueError("sigma_ic > 0 requires an rng to draw the static map")
        eps = np.clip(rng.standard_normal((rows, cols)), -_TRUNC_SIGMAS, _TRUNC_SIGMAS)
        ic_map = params.i_c * (1.0 + variation.sigma_ic * eps)
    else:
        ic_map = np.full((rows, cols), params.i_c, dtype=np.float64)
    bits = np.zeros((rows, cols), dtype=np.uint8)
    return ArrayState(rows=rows, cols=cols, bits=bits, ic_map=ic_map)


def preset(state: ArrayState) -> None:
    """Initialise every cell to "1" (reversed-polarity hard write).

    Deterministic and idempotent by design: the preset pulse is driven
    far above threshold, so its failure probability is treated as zero.
    """
    state.bits.fill(1)
    state.preset_done = True


def _check_region(state: ArrayState, region: Region) -> None:
    if region.row_stop > state.rows or region.col_stop > state.cols:
        raise ValueError(
            f"region rows[{region.row_start}:{region.row_stop}] x "
            f"cols[{region.col_start}:{region.col_stop}] exceeds plane {state.rows}x{state.cols}"
        )


def apply_pulse(
    state: ArrayState,
    region: Region,
    pulse: PulseSpec,
    params: MtjParams,
    variation: VariationModel = VariationModel(),
    rng: np.random.Generator | None = None,
) -> None:
    """Fire one shared write pulse across ``region``.

    Every cell still holding a "1" survives independently with the
    switching-law probability at its own critical current, its own
    jittered duration and its column's attenuated drive.  Cells already
    at "0" stay put: nothing in the multiply sequence writes ones.

    A zero-length pulse is an exact no-op and consumes no randomness.
    """
    _check_region(state, region)
    if not state.preset_done:
        raise RuntimeError("plane has not been preset; call preset() before pulsing")
    if pulse.duration == 0.0:
        return
    if rng is None:
        raise ValueError("apply_pulse needs an rng for the per-cell outcomes")

    rs, cs = region.slices
    ic = state.ic_map[rs, cs]

    duration = pulse.duration
    if variation.sigma_circuit > 0.0:
        eta = np.clip(rng.standard_normal(ic.shape), -_TRUNC_SIGMAS, _TRUNC_SIGMAS)
        duration = pulse.duration * (1.0 + variation.sigma_circuit * eta)

    current = pulse.current
    if variation.ir_drop_per_col > 0.0:
        col_idx = np.arange(region.col_start, region.col_stop, dtype=np.float64)
        # Droop grows with distance from the driver at column 0; floor at
        # zero so an aggressive setting cannot request a negative drive.
        current = pulse.current * np.maximum(1.0 - variation.ir_drop_per_col * col_idx, 0.0)

    p = survival_probability(params.delta, ic, current, duration)
    # Outcomes are drawn for the full region regardless of bit state, so
    # the stream layout depends only on the call sequence, not on data.
    u = rng.random(ic.shape)
    survived = (state.bits[rs, cs] == 1) & (u < p)
    state.bits[rs, cs] = survived.astype(np.uint8)


def popcount_region(state: ArrayState, region: Region) -> int:
    """Exact number of "1" cells inside ``region``."""
    _check_region(state, region)
    rs, cs = region.slices
    return int(state.bits[rs, cs].sum())


def dump_bits(state: ArrayState) -> str:
    """Render the plane as rows of 0/1 characters, for eyeballing."""
    return "\n".join("".join("1" if b else "0" for b in row) for row in state.bits)
