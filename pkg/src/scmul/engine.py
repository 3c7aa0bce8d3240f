"""Two-pulse multiply engine on stochastic bit-planes.

The multiply itself is three plane operations: preset a region of nbit
cells, fire the pulse encoding x, fire the pulse encoding y.  Each cell
then holds a "1" with probability x*y, so the pop-count over the region
is an nbit-sample Bernoulli estimate of the product.  Everything else in
this module is bookkeeping: operand conversion, region mapping, counting
strategy, and cycle/energy accounting through the cost model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bitplane import (
    ArrayState,
    Region,
    VariationModel,
    apply_pulse,
    new_array,
    popcount_region,
    preset,
)
from .conversion import DtcSpec, LogLut, Operand, build_lut, operand_to_pulse
from .device import MtjParams, PulseSpec
from .perfmodel import CostModel, cycles_per_mul, default_cost_model, energy_per_mul

POPCOUNT_STRATEGIES = ("apc", "csa_fa")

# Hard ceiling on cells per multiply; above this the plane allocation is
# a memory hazard rather than a simulation.
MAX_NBIT = 1 << 26

_STRATEGY_TO_APPROACH = {"apc": "sc_pim_apc", "csa_fa": "sc_pim_csa"}


@dataclass(frozen=True)
class MulConfig:
    """Knobs for one multiply: plane size, counting strategy, non-idealities.

    ``nbit`` is the number of stochastic cells per multiply (1024 by
    default, the design's row length; any size from 16 up works and maps
    onto whole rows plus one partial row).  ``drive_current`` defaults to
    the critical current, which is the operating point the default
    tau_scale calibrates to.  ``lut`` may be left None to use a shared
    default table matching the operand width.
    """

    nbit: int = 1024
    popcount_strategy: str = "apc"
    params: MtjParams = MtjParams()
    variation: VariationModel = VariationModel()
    lut: LogLut | None = None
    dtc: DtcSpec = DtcSpec()
    drive_current: float | None = None
    row_length: int = 1024
    cost: CostModel | None = None

    def __post_init__(self) -> None:
        if self.nbit < 16:
            raise ValueError(f"nbit must be >= 16, got {self.nbit!r}")
        if self.nbit > MAX_NBIT:
            raise ValueError(f"nbit {self.nbit!r} exceeds the supported plane capacity {MAX_NBIT}")
        if self.popcount_strategy not in POPCOUNT_STRATEGIES:
            raise ValueError(
                f"popcount_strategy must be one of {POPCOUNT_STRATEGIES}, got {self.popcount_strategy!r}"
            )
        if self.row_length < 1:
            raise ValueError(f"row_length must be >= 1, got {self.row_length!r}")

    @property
    def approach(self) -> str:
        return _STRATEGY_TO_APPROACH[self.popcount_strategy]

    def resolved_drive(self) -> float:
        return self.params.i_c if self.drive_current is None else self.drive_current

    def resolved_cost(self) -> CostModel:
        return self.cost if self.cost is not None else default_cost_model()


@dataclass(frozen=True)
class MulResult:
    """Outcome of one multiply: survivor count and its scaled estimate."""

    count: int
    estimate: float
    cycles: int
    energy_pj: float


@dataclass(frozen=True)
class MacResult:
    """Outcome of a multiply-accumulate batch."""

    counts: tuple[int, ...]
    estimate: float
    cycles_total: float
    popcount_cycles_per_mul: float
    energy_pj_total: float


@dataclass
class WeightPlane:
    """A weight already written onto its own plane, waiting for an input.

    The surviving pattern is non-volatile, so the preset and the weight
    pulse are paid ahead of time; the eventual multiply only fires the
    input pulse.  A plane is consumed by that multiply (its cells then
    hold the product, not the weight).
    """

    state: ArrayState
    regions: tuple[Region, ...]
    width: int
    nbit: int
    consumed: bool = False


def _mul_regions(nbit: int, row_length: int) -> tuple[list[Region], int, int]:
    """Map nbit cells onto whole rows plus at most one partial row."""
    if nbit <= row_length:
        return [Region(0, 1, 0, nbit)], 1, nbit
    full_rows, rem = divmod(nbit, row_length)
    regions = [Region(0, full_rows, 0, row_length)]
    rows = full_rows
    if rem:
        regions.append(Region(full_rows, full_rows + 1, 0, rem))
        rows += 1
    return regions, rows, row_length


_LUT_CACHE: dict[int, LogLut] = {}


def _default_lut(width: int) -> LogLut:
    lut = _LUT_CACHE.get(width)
    if lut is None:
        lut = _LUT_CACHE.setdefault(width, build_lut(width))
    return lut


def _resolve_lut(cfg: MulConfig, width: int) -> LogLut:
    lut = cfg.lut if cfg.lut is not None else _default_lut(width)
    if lut.in_width != width:
        raise ValueError(f"operand width {width} does not match LUT input width {lut.in_width}")
    return lut


def _run_pulse_sequence(
    pulses: tuple[PulseSpec, ...],
    cfg: MulConfig,
    rng: np.random.Generator,
) -> tuple[ArrayState, list[Region]]:
    regions, rows, cols = _mul_regions(cfg.nbit, cfg.row_length)
    state = new_array(rows, cols, cfg.params, cfg.variation, rng)
    preset(state)
    for pulse in pulses:
        for region in regions:
            apply_pulse(state, region, pulse, cfg.params, cfg.variation, rng)
    return state, regions


def _count(state: ArrayState, regions: list[Region], cfg: MulConfig) -> int:
    if cfg.popcount_strategy == "apc":
        count, _ = popcount_apc(state, regions)
        return count
    counts, _ = popcount_csa_fa(
        [gather_plane(state, regions)],
        c_csa=cfg.resolved_cost().csa_cycles_per_mul,
        c_fa=cfg.resolved_cost().fa_cycles_per_batch,
    )
    return counts[0]


def sc_multiply_pulses(
    pulse_x: PulseSpec,
    pulse_y: PulseSpec,
    cfg: MulConfig,
    rng: np.random.Generator,
) -> MulResult:
    """Preset, fire two given pulses, count survivors.

    This is the raw engine entry point: the pulses are taken as-is, so
    callers can place the operating point anywhere on the switching
    curve.  :func:`sc_multiply` is the wrapper that derives the pulses
    from binary operands.
    """
    state, regions = _run_pulse_sequence((pulse_x, pulse_y), cfg, rng)
    count = _count(state, regions, cfg)
    model = cfg.resolved_cost()
    cycles = cycles_per_mul(cfg.approach, model, mac_size=1)
    energy, _ = energy_per_mul(cfg.approach, model)
    return MulResult(
        count=count,
        estimate=count / cfg.nbit,
        cycles=int(round(cycles)),
        energy_pj=energy,
    )


def sc_multiply(x: Operand, y: Operand, cfg: MulConfig, rng: np.random.Generator) -> MulResult:
    """Multiply two binary operands stochastically.

    A zero operand is not an error: the table maps it to the longest
    emittable pulse, whose survival probability sits below half an LSB
    of the operand grid, so the product estimate clamps to (near) zero.
    """
    if x.width != y.width:
        raise ValueError(f"operand widths differ: {x.width} vs {y.width}")
    lut = _resolve_lut(cfg, x.width)
    drive = cfg.resolved_drive()
    pulse_x = operand_to_pulse(x, lut, cfg.dtc, drive)
    pulse_y = operand_to_pulse(y, lut, cfg.dtc, drive)
    return sc_multiply_pulses(pulse_x, pulse_y, cfg, rng)


def sc_mac(
    ws: list[Operand] | tuple[Operand, ...],
    xs: list[Operand] | tuple[Operand, ...],
    cfg: MulConfig,
    rng: np.random.Generator,
) -> MacResult:
    """Multiply-accumulate: one multiply per (w, x) pair on its own region.

    Pop-counts stay per-pair (the accumulation is a digital sum of the
    counts), but under the carry-save strategy the ripple full-adder
    resolution runs once for the whole batch, so its cycles amortise
    across ``len(ws)`` multiplies.
    """
    if len(ws) != len(xs):
        raise ValueError(f"weight and input counts differ: {len(ws)} vs {len(xs)}")
    if not ws:
        raise ValueError("sc_mac needs at least one (w, x) pair")
    model = cfg.resolved_cost()
    drive = cfg.resolved_drive()
    planes: list[np.ndarray] = []
    counts: list[int] = []
    children = rng.spawn(len(ws))
    for w, x, child in zip(ws, xs, children):
        if w.width != x.width:
            raise ValueError(f"operand widths differ: {w.width} vs {x.width}")
        lut = _resolve_lut(cfg, w.width)
        pulse_w = operand_to_pulse(w, lut, cfg.dtc, drive)
        pulse_x = operand_to_pulse(x, lut, cfg.dtc, drive)
        state, regions = _run_pulse_sequence((pulse_w, pulse_x), cfg, child)
        if cfg.popcount_strategy == "apc":
            count, _ = popcount_apc(state, regions)
            counts.append(count)
        else:
            planes.append(gather_plane(state, regions))
    mac_size = len(ws)
    if cfg.popcount_strategy == "apc":
        pop_per_mul = float(model.apc_cycles)
    else:
        counts, breakdown = popcount_csa_fa(
            planes, c_csa=model.csa_cycles_per_mul, c_fa=model.fa_cycles_per_batch
        )
        pop_per_mul = breakdown["popcount_cycles_per_mul"]
    energy, _ = energy_per_mul(cfg.approach, model)
    return MacResult(
        counts=tuple(counts),
        estimate=float(sum(c / cfg.nbit for c in counts)),
        cycles_total=mac_size * cycles_per_mul(cfg.approach, model, mac_size=mac_size),
        popcount_cycles_per_mul=pop_per_mul,
        energy_pj_total=mac_size * energy,
    )


def popcount_apc(state: ArrayState, regions: list[Region] | Region) -> tuple[int, int]:
    """Fully parallel counter: exact survivor count in one cycle."""
    if isinstance(regions, Region):
        regions = [regions]
    count = sum(popcount_region(state, region) for region in regions)
    return count, 1


def gather_plane(state: ArrayState, regions: list[Region] | Region) -> np.ndarray:
    """Copy the bits of one multiply's regions into a row-aligned matrix.

    Cells outside the regions come back as zeros, so row structure is
    preserved for the carry-save reduction without affecting counts.
    """
    if isinstance(regions, Region):
        regions = [regions]
    plane = np.zeros_like(state.bits)
    for region in regions:
        rs, cs = region.slices
        plane[rs, cs] = state.bits[rs, cs]
    return plane


def popcount_csa_fa(
    planes: list[np.ndarray],
    c_csa: int = 4,
    c_fa: int = 40,
) -> tuple[list[int], dict[str, float]]:
    """Carry-save reduction per plane, one ripple resolution per batch.

    Each plane's rows are compressed with bitwise full adders (three rows
    in, a sum row and a carry row of double weight out) until at most two
    rows remain per weight; the redundant form is then resolved to the
    survivor count.  A carry-save tree preserves the value of its inputs
    exactly, so counts match the parallel counter bit for bit; only the
    cycle accounting differs, with the resolution cost ``c_fa`` amortised
    over the batch.
    """
    if not planes:
        raise ValueError("popcount_csa_fa needs at least one plane")
    counts = [_csa_count(np.asarray(plane)) for plane in planes]
    mac_size = len(planes)
    breakdown = {
        "mul_count": float(mac_size),
        "csa_cycles_per_mul": float(c_csa),
        "fa_cycles_total": float(c_fa),
        "popcount_cycles_per_mul": float(c_csa) + float(c_fa) / mac_size,
    }
    return counts, breakdown


def _csa_count(plane: np.ndarray) -> int:
    if plane.ndim != 2:
        raise ValueError(f"expected a 2-D bit plane, got shape {plane.shape}")
    rows_by_weight: dict[int, list[np.ndarray]] = {
        0: [plane[i].astype(bool) for i in range(plane.shape[0])]
    }
    pending = [0]
    while pending:
        weight = pending.pop(0)
        rows = rows_by_weight.get(weight, [])
        while len(rows) >= 3:
            a, b, c = rows.pop(), rows.pop(), rows.pop()
            rows.append(a ^ b ^ c)
            carry = (a & b) | (a & c) | (b & c)
            rows_by_weight.setdefault(weight + 1, []).append(carry)
            if weight + 1 not in pending:
                pending.append(weight + 1)
    # Resolve the redundant sum/carry form into the survivor count.
    total = 0
    for weight, rows in rows_by_weight.items():
        for row in rows:
            total += (1 << weight) * int(np.count_nonzero(row))
    return total


def preconvert_weights(
    ws: list[Operand] | tuple[Operand, ...],
    cfg: MulConfig,
    rng: np.random.Generator,
) -> list[WeightPlane]:
    """Write each weight onto its own plane ahead of the inputs' arrival."""
    if not ws:
        raise ValueError("preconvert_weights needs at least one weight")
    drive = cfg.resolved_drive()
    planes: list[WeightPlane] = []
    for w, child in zip(ws, rng.spawn(len(ws))):
        lut = _resolve_lut(cfg, w.width)
        pulse_w = operand_to_pulse(w, lut, cfg.dtc, drive)
        state, regions = _run_pulse_sequence((pulse_w,), cfg, child)
        planes.append(WeightPlane(state=state, regions=tuple(regions), width=w.width, nbit=cfg.nbit))
    return planes


def multiply_with_preconverted(
    plane: WeightPlane,
    x: Operand,
    cfg: MulConfig,
    rng: np.random.Generator,
) -> MulResult:
    """Fire only the input pulse onto a stored weight plane and count.

    Statistically identical to the two-pulse flow; the weight's share of
    the work was already paid in :func:`preconvert_weights`.  Cycle and
    energy figures therefore cover just the input conversion, its write
    pulse and the pop-count (with the conversion hidden by pipelining
    where the cost model allows).
    """
    if plane.consumed:
        raise RuntimeError("weight plane already consumed by a multiply")
    if x.width != plane.width:
        raise ValueError(f"operand width {x.width} does not match stored weight width {plane.width}")
    lut = _resolve_lut(cfg, x.width)
    pulse_x = operand_to_pulse(x, lut, cfg.dtc, cfg.resolved_drive())
    for region in plane.regions:
        apply_pulse(plane.state, region, pulse_x, cfg.params, cfg.variation, rng)
    plane.consumed = True
    count = _count(plane.state, list(plane.regions), cfg)
    model = cfg.resolved_cost()
    lut_c = model.lut_cycles_per_operand
    pulse_c = model.pulse_cycles_per_operand
    pop_c = model.apc_cycles if cfg.popcount_strategy == "apc" else model.csa_cycles_per_mul + model.fa_cycles_per_batch
    cycles = lut_c + pulse_c + pop_c - model.overlap_fraction * min(lut_c, pulse_c)
    energy = model.write_pulse_pj + model.popcount_add_pj + model.buffer_op_pj
    return MulResult(
        count=count,
        estimate=count / plane.nbit,
        cycles=int(round(cycles)),
        energy_pj=energy,
    )
