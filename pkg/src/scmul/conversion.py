"""Binary operands to timed write pulses.

An n-bit operand x encodes the value raw / 2**n in [0, 1).  Driving a
preset cell for tau = -ln(x) nanoseconds at the nominal current leaves
it unswitched with probability exactly x, so conversion is a negative-log
lookup followed by quantisation to the pulse generator's tick grid.  Two
quantisation stages apply, and they are independent of each other:

* the lookup table stores -ln(raw / 2**n) as fixed point with
  ``out_width`` fractional bits;
* the digital-to-time converter rounds the scaled duration to an integer
  number of ticks (22 ps by default) and saturates at ``max_ticks``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .device import MtjParams, PulseSpec, p_unswitched

MAX_OPERAND_WIDTH = 16
DEFAULT_LUT_BITS = 16

# Stand-in for -ln(0): far above every representable code, so a zero
# operand always rides the converter's saturation path and lands on the
# longest pulse the hardware can emit.
_ZERO_OPERAND_NEG_LOG = 64.0 * math.log(2.0)


@dataclass(frozen=True)
class Operand:
    """Unsigned fixed-point input: value = raw / 2**width."""

    raw: int
    width: int

    def __post_init__(self) -> None:
        if not 1 <= self.width <= MAX_OPERAND_WIDTH:
            raise ValueError(
                f"operand width must be in [1, {MAX_OPERAND_WIDTH}], got {self.width!r}"
            )
        if not 0 <= self.raw < (1 << self.width):
            raise ValueError(
                f"raw code must be in [0, 2**{self.width}), got {self.raw!r}"
            )

    @property
    def value(self) -> float:
        return self.raw / (1 << self.width)

    @classmethod
    def from_value(cls, value: float, width: int) -> "Operand":
        """Nearest representable operand for a value in [0, 1)."""
        if not 0.0 <= value < 1.0:
            raise ValueError(f"operand value must be in [0, 1), got {value!r}")
        raw = min(int(math.floor(value * (1 << width) + 0.5)), (1 << width) - 1)
        return cls(raw, width)


@dataclass(frozen=True, eq=False)
class LogLut:
    """Negative-log table: entries[raw] ~= -ln(raw / 2**in_width).

    Entries are integer codes with ``out_width`` fractional bits; divide
    by 2**out_width to recover the neg-log value, then multiply by
    ``tau_scale`` (ns per unit of -ln) for the target pulse duration.
    """

    in_width: int
    out_width: int
    tau_scale: float
    entries: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if not 1 <= self.in_width <= MAX_OPERAND_WIDTH:
            raise ValueError(f"in_width must be in [1, {MAX_OPERAND_WIDTH}], got {self.in_width!r}")
        if self.out_width < self.in_width:
            raise ValueError(
                f"out_width must be >= in_width ({self.in_width}), got {self.out_width!r}"
            )
        if not (math.isfinite(self.tau_scale) and self.tau_scale > 0.0):
            raise ValueError(f"tau_scale must be positive, got {self.tau_scale!r}")
        if self.entries.shape != (1 << self.in_width,):
            raise ValueError(
                f"expected {1 << self.in_width} entries, got shape {self.entries.shape}"
            )
        if (self.entries < 0).any():
            raise ValueError("LUT codes must be non-negative")

    @property
    def size(self) -> int:
        return 1 << self.in_width

    def neg_log(self, raw: int) -> float:
        """Dequantised -ln value stored for an input code."""
        if not 0 <= raw < self.size:
            raise ValueError(f"raw code must be in [0, {self.size}), got {raw!r}")
        return float(self.entries[raw]) / (1 << self.out_width)


@dataclass(frozen=True)
class DtcSpec:
    """Digital-to-time converter grid: tick resolution in seconds."""

    resolution: float = 22e-12
    max_ticks: int = 1023

    def __post_init__(self) -> None:
        if not (math.isfinite(self.resolution) and self.resolution > 0.0):
            raise ValueError(f"resolution must be positive, got {self.resolution!r}")
        if self.max_ticks < 1:
            raise ValueError(f"max_ticks must be >= 1, got {self.max_ticks!r}")

    @property
    def resolution_ns(self) -> float:
        return self.resolution * 1e9


def build_lut(in_width: int, out_width: int = DEFAULT_LUT_BITS, tau_scale: float = 1.0) -> LogLut:
    """Tabulate -ln(raw / 2**in_width) for every input code.

    Codes are rounded to ``out_width`` fractional bits (ties away from
    zero).  Entry 0 cannot hold -ln(0); it gets a ceiling of 64*ln(2),
    well past the converter's saturation point, so a zero operand maps to
    the floor probability of the longest emittable pulse.
    """
    if not 1 <= in_width <= MAX_OPERAND_WIDTH:
        raise ValueError(f"in_width must be in [1, {MAX_OPERAND_WIDTH}], got {in_width!r}")
    if out_width < in_width:
        raise ValueError(f"out_width must be >= in_width ({in_width}), got {out_width!r}")
    size = 1 << in_width
    scale = float(1 << out_width)
    raws = np.arange(1, size, dtype=np.float64)
    neg_log = -np.log(raws / size)
    codes = np.floor(neg_log * scale + 0.5).astype(np.int64)
    ceiling = np.int64(math.floor(_ZERO_OPERAND_NEG_LOG * scale + 0.5))
    entries = np.concatenate(([ceiling], codes))
    entries.setflags(write=False)
    return LogLut(in_width=in_width, out_width=out_width, tau_scale=tau_scale, entries=entries)


def operand_to_pulse(operand: Operand, lut: LogLut, dtc: DtcSpec, drive_current: float) -> PulseSpec:
    """Quantise an operand's scaled neg-log entry to converter ticks.

    Rounds to the nearest tick (ties away from zero) and saturates at
    ``dtc.max_ticks``.  The returned duration is therefore always an
    integer multiple of the tick resolution.
    """
    if operand.width != lut.in_width:
        raise ValueError(
            f"operand width {operand.width} does not match LUT input width {lut.in_width}"
        )
    target_ns = lut.neg_log(operand.raw) * lut.tau_scale
    ticks = int(math.floor(target_ns / dtc.resolution_ns + 0.5))
    ticks = min(ticks, dtc.max_ticks)
    return PulseSpec(current=drive_current, duration=ticks * dtc.resolution_ns)


def expected_probability(
    operand: Operand,
    lut: LogLut,
    dtc: DtcSpec,
    params: MtjParams,
    drive_current: float | None = None,
) -> float:
    """Exact survival probability the quantised pulse will realise.

    This is the deterministic end-to-end transfer of the conversion
    chain; the stochastic engine's estimates converge to products of
    these values.  Drive current defaults to the critical current, the
    operating point the default tau_scale is calibrated for.
    """
    if drive_current is None:
        drive_current = params.i_c
    pulse = operand_to_pulse(operand, lut, dtc, drive_current)
    return p_unswitched(params, pulse)


def dump_lut_csv(lut: LogLut, path) -> None:
    """Write a LUT as a readable two-column table (raw, neg_log_fixed).

    Table parameters travel in ``# key=value`` comment lines so the file
    round-trips through :func:`load_lut_csv`.  Debugging format, not a
    stability-guaranteed interchange format.
    """
    with _open_for_write(path) as fh:
        fh.write(f"# in_width={lut.in_width}\n")
        fh.write(f"# out_width={lut.out_width}\n")
        fh.write(f"# tau_scale={lut.tau_scale!r}\n")
        writer = csv.writer(fh)
        writer.writerow(["raw", "neg_log_fixed"])
        for raw, code in enumerate(lut.entries):
            writer.writerow([raw, int(code)])


def load_lut_csv(path) -> LogLut:
    """Rebuild a LUT written by :func:`dump_lut_csv`."""
    meta: dict[str, str] = {}
    codes: list[int] = []
    with _open_for_read(path) as fh:
        rows = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line.lstrip("# ").partition("=")
                meta[key.strip()] = value.strip()
                continue
            rows.append(line)
        for rec in csv.reader(rows):
            if rec[0] == "raw":
                continue
            codes.append(int(rec[1]))
    try:
        in_width = int(meta["in_width"])
        out_width = int(meta["out_width"])
        tau_scale = float(meta["tau_scale"])
    except KeyError as exc:
        raise ValueError(f"LUT table is missing a {exc.args[0]} header line") from None
    entries = np.asarray(codes, dtype=np.int64)
    entries.setflags(write=False)
    return LogLut(in_width=in_width, out_width=out_width, tau_scale=tau_scale, entries=entries)


def _open_for_write(path):
    if hasattr(path, "write"):
        return _NullCtx(path)
    return open(path, "w", newline="")


def _open_for_read(path):
    if hasattr(path, "read"):
        return _NullCtx(path)
    return open(path, "r", newline="")


class _NullCtx:
    """Treat an already-open stream like a context manager without closing it."""

    def __init__(self, fh):
        self._fh = fh

    def __enter__(self):
        return self._fh

    def __exit__(self, *exc):
        return False
