"""Cycle, energy and area accounting for the evaluated datapaths.

Four datapaths are compared, keyed by the strings in :data:`APPROACHES`:

* ``sc_pim_apc``  - timed-pulse multiply in the cell plane, survivors
  counted by a single-cycle fully parallel counter;
* ``sc_pim_csa``  - same multiply, survivors reduced in-array by
  carry-save passes with one ripple full-adder resolution per batch;
* ``sc``          - conventional stream-based stochastic multiply with a
  generator producing 2**bits stream bits;
* ``pim``         - Boolean in-memory binary multiply.

Every default constant lives in ``data/cost_model_default.yaml``; the
comments there separate anchored reference figures from calibrated ones.
Loading a different file swaps the whole costing without code changes.
"""

from __future__ import annotations

import importlib.resources
import json
import math
from dataclasses import dataclass, fields, asdict
from functools import lru_cache

import yaml

APPROACHES = ("sc_pim_apc", "sc_pim_csa", "sc", "pim")

MIN_BIT_LENGTH = 4
MAX_BIT_LENGTH = 16


@dataclass(frozen=True)
class CostModel:
    """Flat bag of cost constants; see the YAML file for provenance notes."""

    # cycles
    preset_cycles: int = 1
    lut_cycles_per_operand: int = 2
    pulse_cycles_per_operand: int = 3
    apc_cycles: int = 1
    csa_cycles_per_mul: int = 4
    fa_cycles_per_batch: int = 40
    overlap_fraction: float = 1.0
    sng_setup_cycles: int = 15
    sng_bits_per_cycle: int = 64
    pim_cycle_table: tuple[tuple[int, float], ...] = ((4, 36.0), (8, 143.0), (10, 144.0), (16, 576.0))
    # energy, pJ per event
    preset_pulse_pj: float = 18.0
    write_pulse_pj: float = 4.0
    popcount_add_pj: float = 10.0
    buffer_op_pj: float = 3.0
    sng_stream_pj: float = 4.0
    sc_popcount_pj: float = 4.0
    sc_buffer_op_pj: float = 11.0
    pim_bitwise_pj: float = 95.0
    pim_buffer_op_pj: float = 6.25
    # area, um^2
    dtc_area_um2: float = 1875.0
    apc_area_um2: float = 2000.0
    lut_area_per_bit_um2: float = 0.1
    mram_area_per_bit_um2: float = 0.05
    sng_area_um2: float = 51300.0
    sc_misc_area_um2: float = 700.0
    pim_periph_area_um2: float = 500.0
    antilog_area_um2: float = 900.0
    lut_out_bits: int = 16

    def __post_init__(self) -> None:
        for f in fields(self):
            if f.name in ("pim_cycle_table",):
                continue
            value = getattr(self, f.name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{f.name} must be finite and >= 0, got {value!r}")
        if not 0.0 <= self.overlap_fraction <= 1.0:
            raise ValueError(f"overlap_fraction must be in [0, 1], got {self.overlap_fraction!r}")
        if self.sng_bits_per_cycle < 1:
            raise ValueError("sng_bits_per_cycle must be >= 1")
        if self.lut_out_bits < 1:
            raise ValueError("lut_out_bits must be >= 1")
        table = tuple(sorted((int(b), float(c)) for b, c in self.pim_cycle_table))
        if len(table) < 2:
            raise ValueError("pim_cycle_table needs at least two points")
        bit_lengths = [b for b, _ in table]
        if len(set(bit_lengths)) != len(bit_lengths):
            raise ValueError("pim_cycle_table has duplicate bit lengths")
        if bit_lengths[0] > MIN_BIT_LENGTH or bit_lengths[-1] < MAX_BIT_LENGTH:
            raise ValueError(
                f"pim_cycle_table must span [{MIN_BIT_LENGTH}, {MAX_BIT_LENGTH}], covers {bit_lengths}"
            )
        for _, cycles in table:
            if not (math.isfinite(cycles) and cycles >= 0):
                raise ValueError("pim_cycle_table cycles must be finite and >= 0")
        object.__setattr__(self, "pim_cycle_table", table)


def _check_approach(approach: str) -> None:
    if approach not in APPROACHES:
        raise ValueError(f"unknown approach {approach!r}; expected one of {APPROACHES}")


def _check_bit_length(bit_length: int) -> None:
    if not MIN_BIT_LENGTH <= bit_length <= MAX_BIT_LENGTH:
        raise ValueError(
            f"bit_length must be in [{MIN_BIT_LENGTH}, {MAX_BIT_LENGTH}], got {bit_length!r}"
        )


def _pim_cycles(model: CostModel, bit_length: int) -> float:
    """Table lookup with geometric interpolation between anchor points.

    Geometric rather than linear because the Boolean datapath's cost
    grows multiplicatively with operand width; anchor points themselves
    are returned exactly.  A zero anchor falls back to linear
    interpolation so an all-zero model stays valid.
    """
    table = model.pim_cycle_table
    for b, c in table:
        if b == bit_length:
            return c
    lo = max(p for p in table if p[0] < bit_length)
    hi = min(p for p in table if p[0] > bit_length)
    frac = (bit_length - lo[0]) / (hi[0] - lo[0])
    if lo[1] <= 0.0 or hi[1] <= 0.0:
        return float(round(lo[1] + frac * (hi[1] - lo[1])))
    return float(round(lo[1] * (hi[1] / lo[1]) ** frac))


def _sc_pim_base_cycles(model: CostModel) -> float:
    lut = 2 * model.lut_cycles_per_operand
    pulse = 2 * model.pulse_cycles_per_operand
    # Pipelining credit: in steady state the conversions of the next
    # multiply run while the current one is writing, so the shorter of
    # the two phases is hidden.
    credit = model.overlap_fraction * min(lut, pulse)
    return model.preset_cycles + lut + pulse - credit


def cycles_per_mul(
    approach: str,
    model: CostModel | None = None,
    bit_length: int | None = None,
    mac_size: int = 1,
) -> float:
    """Steady-state cycles for one multiply under ``approach``.

    The in-plane approaches are flat in operand width (the plane and the
    counter work on the whole region at once); the carry-save variant
    amortises its batch-level full-adder resolution over ``mac_size``
    multiplies.  ``bit_length`` is required for the width-sensitive
    approaches (``sc`` and ``pim``).
    """
    _check_approach(approach)
    model = model if model is not None else default_cost_model()
    if mac_size < 1:
        raise ValueError(f"mac_size must be >= 1, got {mac_size!r}")
    if bit_length is not None:
        _check_bit_length(bit_length)
    if approach == "sc_pim_apc":
        return _sc_pim_base_cycles(model) + model.apc_cycles
    if approach == "sc_pim_csa":
        return (
            _sc_pim_base_cycles(model)
            + model.csa_cycles_per_mul
            + model.fa_cycles_per_batch / mac_size
        )
    if bit_length is None:
        raise ValueError(f"approach {approach!r} needs a bit_length")
    if approach == "sc":
        stream = math.ceil((1 << bit_length) / model.sng_bits_per_cycle)
        return float(model.sng_setup_cycles + stream + model.apc_cycles)
    return _pim_cycles(model, bit_length)


def energy_per_mul(approach: str, model: CostModel | None = None) -> tuple[float, dict[str, float]]:
    """Energy of one multiply in pJ: (total, breakdown).

    Breakdown keys are the same for every approach so reports line up:
    ``initialization``, ``sc_pulses``, ``popcount``, ``buffering``.  The
    total is computed as the sum of the breakdown, never separately.
    """
    _check_approach(approach)
    model = model if model is not None else default_cost_model()
    if approach in ("sc_pim_apc", "sc_pim_csa"):
        breakdown = {
            "initialization": model.preset_pulse_pj,
            "sc_pulses": 2 * model.write_pulse_pj,
            "popcount": model.popcount_add_pj,
            "buffering": 2 * model.buffer_op_pj,
        }
    elif approach == "sc":
        breakdown = {
            "initialization": 0.0,
            "sc_pulses": 2 * model.sng_stream_pj,
            "popcount": model.sc_popcount_pj,
            "buffering": 8 * model.sc_buffer_op_pj,
        }
    else:  # pim
        breakdown = {
            "initialization": 0.0,
            "sc_pulses": 0.0,
            "popcount": model.pim_bitwise_pj,
            "buffering": 4 * model.pim_buffer_op_pj,
        }
    return sum(breakdown.values()), breakdown


def area(approach: str, model: CostModel | None = None, bit_length: int = 10) -> tuple[float, dict[str, float]]:
    """Silicon area of one multiplier instance in um^2: (total, breakdown).

    A width-``n`` multiply uses 2**n plane cells and a 2**n-entry table
    of ``lut_out_bits``-bit words, so the table term shrinks four-fold
    for every two bits of operand width shaved off.
    """
    _check_approach(approach)
    model = model if model is not None else default_cost_model()
    _check_bit_length(bit_length)
    n_cells = 1 << bit_length
    lut_bits = n_cells * model.lut_out_bits
    if approach == "sc_pim_apc":
        breakdown = {
            "pulse_gen": model.dtc_area_um2,
            "popcount": model.apc_area_um2,
            "lut": lut_bits * model.lut_area_per_bit_um2,
            "cell_array": n_cells * model.mram_area_per_bit_um2,
        }
    elif approach == "sc_pim_csa":
        # Carry-save counting happens inside the plane; no counter macro.
        breakdown = {
            "pulse_gen": model.dtc_area_um2,
            "popcount": 0.0,
            "lut": lut_bits * model.lut_area_per_bit_um2,
            "cell_array": n_cells * model.mram_area_per_bit_um2,
        }
    elif approach == "sc":
        breakdown = {
            "sng": model.sng_area_um2,
            "popcount": model.apc_area_um2,
            "misc": model.sc_misc_area_um2,
        }
    else:  # pim
        breakdown = {
            "cell_array": n_cells * model.mram_area_per_bit_um2,
            "periphery": model.pim_periph_area_um2,
        }
    return sum(breakdown.values()), breakdown


@dataclass(frozen=True)
class PerfReport:
    """One full comparison at a given operand width and batch size."""

    bit_length: int
    mac_size: int
    cycles: dict
    energy_total: dict
    energy_breakdown: dict
    area_total: dict
    area_breakdown: dict
    ratios: dict

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def to_csv_rows(self) -> list[tuple[str, str, str, str]]:
        """Flatten to (section, approach, metric, value) rows."""
        rows: list[tuple[str, str, str, str]] = []
        for approach in APPROACHES:
            rows.append(("cycles", approach, "per_mul", _fmt(self.cycles[approach])))
        for approach in APPROACHES:
            rows.append(("energy_pj", approach, "total", _fmt(self.energy_total[approach])))
            for metric, value in self.energy_breakdown[approach].items():
                rows.append(("energy_pj", approach, metric, _fmt(value)))
        for approach in APPROACHES:
            rows.append(("area_um2", approach, "total", _fmt(self.area_total[approach])))
            for metric, value in self.area_breakdown[approach].items():
                rows.append(("area_um2", approach, metric, _fmt(value)))
        for metric, value in self.ratios.items():
            rows.append(("ratio", "-", metric, _fmt(value)))
        return rows


def _fmt(value) -> str:
    if value is None:
        return "nan"
    return f"{value:.12g}"


def _safe_ratio(num: float, den: float):
    return num / den if den else None


def comparison_report(
    model: CostModel | None = None,
    bit_length: int = 10,
    mac_size: int = 100,
) -> PerfReport:
    """Cost all four approaches side by side and derive the headline ratios.

    Ratios are ``None`` when a denominator is zero (an all-zero model is
    still a valid report).
    """
    model = model if model is not None else default_cost_model()
    _check_bit_length(bit_length)
    cycles = {a: cycles_per_mul(a, model, bit_length=bit_length, mac_size=mac_size) for a in APPROACHES}
    energy_total: dict[str, float] = {}
    energy_breakdown: dict[str, dict] = {}
    area_total: dict[str, float] = {}
    area_breakdown: dict[str, dict] = {}
    for a in APPROACHES:
        energy_total[a], energy_breakdown[a] = energy_per_mul(a, model)
        area_total[a], area_breakdown[a] = area(a, model, bit_length=bit_length)
    sng_share = _safe_ratio(area_breakdown["sc"].get("sng", 0.0), area_total["sc"])
    ratios = {
        "cycles_sc_over_sc_pim_apc": _safe_ratio(cycles["sc"], cycles["sc_pim_apc"]),
        "cycles_pim_over_sc_pim_apc": _safe_ratio(cycles["pim"], cycles["sc_pim_apc"]),
        "energy_sc_pim_over_sc": _safe_ratio(energy_total["sc_pim_apc"], energy_total["sc"]),
        "area_sc_over_sc_pim_apc": _safe_ratio(area_total["sc"], area_total["sc_pim_apc"]),
        "sng_share_of_sc_area": sng_share,
    }
    return PerfReport(
        bit_length=bit_length,
        mac_size=mac_size,
        cycles=cycles,
        energy_total=energy_total,
        energy_breakdown=energy_breakdown,
        area_total=area_total,
        area_breakdown=area_breakdown,
        ratios=ratios,
    )


# --- configuration file handling -------------------------------------------

_SCHEMA = {
    "cycles": {
        "sc_pim": {
            "preset": "preset_cycles",
            "lut_per_operand": "lut_cycles_per_operand",
            "pulse_per_operand": "pulse_cycles_per_operand",
            "apc": "apc_cycles",
            "csa_per_mul": "csa_cycles_per_mul",
            "fa_per_batch": "fa_cycles_per_batch",
            "overlap_fraction": "overlap_fraction",
        },
        "sc": {
            "sng_setup": "sng_setup_cycles",
            "sng_bits_per_cycle": "sng_bits_per_cycle",
        },
        "pim": {
            "cycle_table": "pim_cycle_table",
        },
    },
    "energy_pj": {
        "sc_pim": {
            "preset_pulse": "preset_pulse_pj",
            "write_pulse": "write_pulse_pj",
            "popcount_add": "popcount_add_pj",
            "buffer_op": "buffer_op_pj",
        },
        "sc": {
            "sng_stream": "sng_stream_pj",
            "popcount_add": "sc_popcount_pj",
            "buffer_op": "sc_buffer_op_pj",
        },
        "pim": {
            "bitwise_ops": "pim_bitwise_pj",
            "buffer_op": "pim_buffer_op_pj",
        },
    },
    "area_um2": {
        "dtc": "dtc_area_um2",
        "apc": "apc_area_um2",
        "lut_bit": "lut_area_per_bit_um2",
        "mram_bit": "mram_area_per_bit_um2",
        "sng": "sng_area_um2",
        "sc_misc": "sc_misc_area_um2",
        "pim_periph": "pim_periph_area_um2",
        "antilog": "antilog_area_um2",
    },
    "lut_out_bits": "lut_out_bits",
}


def cost_model_from_dict(data: dict) -> CostModel:
    """Build a CostModel from nested key-value data, rejecting unknown keys."""
    kwargs: dict = {}

    def walk(schema, node, path: str) -> None:
        if not isinstance(node, dict):
            raise ValueError(f"expected a mapping at {path or 'top level'}")
        for key, value in node.items():
            if key not in schema:
                raise ValueError(f"unknown cost-model key {path + str(key)!r}")
            target = schema[key]
            if isinstance(target, dict):
                walk(target, value, f"{path}{key}.")
            elif target == "pim_cycle_table":
                if not isinstance(value, dict):
                    raise ValueError(f"{path}{key} must map bit lengths to cycles")
                kwargs[target] = tuple(sorted((int(b), float(c)) for b, c in value.items()))
            else:
                kwargs[target] = value

    walk(_SCHEMA, data, "")
    return CostModel(**kwargs)


def load_cost_model(path) -> CostModel:
    """Read a YAML cost-model file (same layout as the packaged default)."""
    with open(path, "r") as fh:
        data = yaml.safe_load(fh)
    if data is None:
        data = {}
    return cost_model_from_dict(data)


def default_config_bytes() -> bytes:
    """Raw bytes of the packaged default config (hashable for provenance)."""
    return (
        importlib.resources.files("scmul")
        .joinpath("data/cost_model_default.yaml")
        .read_bytes()
    )


@lru_cache(maxsize=1)
def default_cost_model() -> CostModel:
    """The CostModel described by the packaged YAML file."""
    data = yaml.safe_load(default_config_bytes().decode("utf-8"))
    return cost_model_from_dict(data)
