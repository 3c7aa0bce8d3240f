"""Command-line front end: multiply, accumulate, sweep, cost, dump.

Every command is deterministic for a given seed; the seed comes from
``--seed``, then the ``SCMUL_SEED`` environment variable, then 0, and is
echoed into the output metadata together with the tool version and the
SHA-256 of the cost-model file in effect.  No timestamps or hostnames
are emitted, so reruns with the same arguments produce byte-identical
files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import asdict
from fractions import Fraction

import numpy as np

from . import __version__
from .analysis import (
    McConfig,
    sweep_circuit_variance,
    sweep_ic_variance,
    sweep_nbit,
    sweep_tau_y,
    write_sweep_csv,
)
from .conversion import Operand, build_lut, dump_lut_csv, expected_probability
from .engine import MulConfig, _default_lut, sc_mac, sc_multiply
from .perfmodel import (
    comparison_report,
    default_config_bytes,
    default_cost_model,
    load_cost_model,
)

ENV_SEED = "SCMUL_SEED"

_SWEEPS = {
    "nbit": (sweep_nbit, True),
    "tauy": (sweep_tau_y, False),
    "ic": (sweep_ic_variance, False),
    "circuit": (sweep_circuit_variance, False),
}


def _resolve_seed(arg_seed: int | None) -> int:
    if arg_seed is None:
        raw = os.environ.get(ENV_SEED, "").strip()
        if not raw:
            return 0
        try:
            arg_seed = int(raw)
        except ValueError:
            raise ValueError(f"{ENV_SEED} must be an integer, got {raw!r}") from None
    if arg_seed < 0:
        raise ValueError(f"seed must be >= 0, got {arg_seed}")
    return arg_seed


def _resolve_cost(path: str | None):
    """Cost model plus the SHA-256 of the bytes it was loaded from."""
    if path is None:
        return default_cost_model(), hashlib.sha256(default_config_bytes()).hexdigest()
    with open(path, "rb") as fh:
        data = fh.read()
    return load_cost_model(path), hashlib.sha256(data).hexdigest()


def _parse_operand(token: str, width: int) -> Operand:
    """Operand token: a bare integer is a raw n-bit code, else a fraction.

    ``512`` with --width 10 means the code 512 (value 0.5); ``0.5`` and
    ``1/2`` mean the value 0.5.  The raw code 0 and the value 0 coincide,
    so the ambiguity of ``0`` is harmless.
    """
    token = token.strip()
    try:
        code = int(token)
    except ValueError:
        pass
    else:
        try:
            return Operand(raw=code, width=width)
        except ValueError as exc:
            raise ValueError(f"bad raw operand {token!r}: {exc}") from None
    try:
        value = Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"cannot parse operand {token!r} (want a decimal, a/b fraction, or raw code)") from None
    if not 0 <= value < 1:
        raise ValueError(f"operand {token!r} must lie in [0, 1)")
    return Operand.from_value(float(value), width)


def _parse_operand_list(text: str, width: int) -> list[Operand]:
    tokens = [t for t in text.split(",") if t.strip()]
    if not tokens:
        raise ValueError("empty operand list")
    return [_parse_operand(t, width) for t in tokens]


def _parse_values(spec: str, integer: bool = False) -> list:
    """Sweep values: ``a,b,c`` or an inclusive ``start:stop:step`` range."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must be start:stop:step, got {spec!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError(f"range step must be > 0, got {step!r}")
        if stop < start:
            raise ValueError(f"range stop {stop!r} is below start {start!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        values = [start + k * step for k in range(count)]
    else:
        values = [float(t) for t in spec.split(",") if t.strip()]
        if not values:
            raise ValueError("empty value list")
    if not integer:
        return values
    ints = []
    for v in values:
        if abs(v - round(v)) > 1e-9:
            raise ValueError(f"this sweep needs integer values, got {v!r}")
        ints.append(int(round(v)))
    return ints


def _metadata(seed: int, config_sha: str | None = None, **extra) -> dict:
    md: dict = {"tool": "scmul", "version": __version__, "seed": seed}
    if config_sha is not None:
        md["config_sha256"] = config_sha
    md.update(extra)
    return md


def _fmt_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _write_kv_csv(out_path: str | None, metadata: dict, rows: list[tuple]) -> None:
    fh = sys.stdout if out_path is None else open(out_path, "w", newline="")
    try:
        for key, value in metadata.items():
            fh.write(f"# {key}={value}\n")
        fh.write("key,value\n")
        for key, value in rows:
            fh.write(f"{key},{_fmt_value(value)}\n")
    finally:
        if out_path is not None:
            fh.close()


def _write_json(out_path: str | None, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)


def _cmd_mul(args) -> int:
    seed = _resolve_seed(args.seed)
    model, sha = _resolve_cost(args.config)
    x = _parse_operand(args.x, args.width)
    y = _parse_operand(args.y, args.width)
    cfg = MulConfig(nbit=args.nbit, popcount_strategy=args.strategy, cost=model)
    result = sc_multiply(x, y, cfg, np.random.default_rng(seed))
    lut = _default_lut(args.width)
    px = expected_probability(x, lut, cfg.dtc, cfg.params)
    py = expected_probability(y, lut, cfg.dtc, cfg.params)
    rows = [
        ("x", x.value),
        ("y", y.value),
        ("width", args.width),
        ("nbit", args.nbit),
        ("strategy", args.strategy),
        ("ideal_product", x.value * y.value),
        ("expected_product", px * py),
        ("count", result.count),
        ("estimate", result.estimate),
        ("cycles", result.cycles),
        ("energy_pj", result.energy_pj),
    ]
    metadata = _metadata(seed, sha, command="mul")
    if args.format == "json":
        _write_json(args.out, {"metadata": metadata, "result": dict(rows)})
    else:
        _write_kv_csv(args.out, metadata, rows)
    return 0


def _cmd_mac(args) -> int:
    seed = _resolve_seed(args.seed)
    model, sha = _resolve_cost(args.config)
    ws = _parse_operand_list(args.weights, args.width)
    xs = _parse_operand_list(args.inputs, args.width)
    cfg = MulConfig(nbit=args.nbit, popcount_strategy=args.strategy, cost=model)
    result = sc_mac(ws, xs, cfg, np.random.default_rng(seed))
    lut = _default_lut(args.width)
    expected = sum(
        expected_probability(w, lut, cfg.dtc, cfg.params)
        * expected_probability(x, lut, cfg.dtc, cfg.params)
        for w, x in zip(ws, xs)
    )
    rows = [
        ("mac_size", len(ws)),
        ("width", args.width),
        ("nbit", args.nbit),
        ("strategy", args.strategy),
        ("ideal_sum", sum(w.value * x.value for w, x in zip(ws, xs))),
        ("expected_sum", expected),
        ("estimate", result.estimate),
        ("counts", ";".join(str(c) for c in result.counts)),
        ("cycles_total", result.cycles_total),
        ("popcount_cycles_per_mul", result.popcount_cycles_per_mul),
        ("energy_pj_total", result.energy_pj_total),
    ]
    metadata = _metadata(seed, sha, command="mac")
    if args.format == "json":
        payload = dict(rows)
        payload["counts"] = list(result.counts)
        _write_json(args.out, {"metadata": metadata, "result": payload})
    else:
        _write_kv_csv(args.out, metadata, rows)
    return 0


def _cmd_sweep(args) -> int:
    seed = _resolve_seed(args.seed)
    _, sha = _resolve_cost(args.config)
    runner, integer = _SWEEPS[args.kind]
    values = _parse_values(args.values, integer=integer)
    cfg = McConfig(
        tau_x=args.tau_x,
        tau_y=args.tau_y,
        nbit=args.nbit,
        iterations=args.iters,
        seed=seed,
    )
    points = runner(cfg, values, chip=args.chip)
    metadata = _metadata(
        seed,
        sha,
        command="sweep",
        kind=args.kind,
        tau_x=_fmt_value(args.tau_x),
        tau_y=_fmt_value(args.tau_y),
        nbit=args.nbit,
        iterations=args.iters,
        chip=args.chip,
    )
    if args.format == "json":
        _write_json(args.out, {"metadata": metadata, "points": [asdict(p) for p in points]})
    else:
        write_sweep_csv(points, args.out if args.out is not None else sys.stdout, metadata)
    return 0


def _cmd_perf(args) -> int:
    seed = _resolve_seed(args.seed)
    model, sha = _resolve_cost(args.config)
    report = comparison_report(model, bit_length=args.bits, mac_size=args.mac)
    metadata = _metadata(seed, sha, command="perf", bit_length=args.bits, mac_size=args.mac)
    if args.format == "json":
        _write_json(args.out, {"metadata": metadata, "report": asdict(report)})
        return 0
    fh = sys.stdout if args.out is None else open(args.out, "w", newline="")
    try:
        for key, value in metadata.items():
            fh.write(f"# {key}={value}\n")
        fh.write("section,approach,metric,value\n")
        for row in report.to_csv_rows():
            fh.write(",".join(row) + "\n")
    finally:
        if args.out is not None:
            fh.close()
    return 0


def _cmd_lut_dump(args) -> int:
    seed = _resolve_seed(args.seed)
    _, sha = _resolve_cost(args.config)
    lut = build_lut(args.width, args.lut_bits, args.tau_scale)
    metadata = _metadata(seed, sha, command="lut-dump")
    fh = sys.stdout if args.out is None else open(args.out, "w", newline="")
    try:
        for key, value in metadata.items():
            fh.write(f"# {key}={value}\n")
        dump_lut_csv(lut, fh)
    finally:
        if args.out is not None:
            fh.close()
    return 0


def _add_common(parser, formats: bool = True) -> None:
    parser.add_argument("--seed", type=int, default=None, help=f"RNG seed (default: ${ENV_SEED} or 0)")
    parser.add_argument("--config", default=None, help="cost-model YAML file (default: packaged)")
    if formats:
        parser.add_argument("--format", choices=("csv", "json"), default="csv", help="output format")
    parser.add_argument("--out", default=None, help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scmul",
        description="Stochastic in-memory multiply simulator: run multiplies, "
        "sweep error distributions, and cost the datapath.",
    )
    parser.add_argument("--version", action="version", version=f"scmul {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    mul = sub.add_parser("mul", help="one stochastic multiply")
    mul.add_argument("x", help="first operand: decimal in [0,1), a/b fraction, or raw integer code")
    mul.add_argument("y", help="second operand")
    mul.add_argument("--width", type=int, default=10, help="operand width in bits")
    mul.add_argument("--nbit", type=int, default=1024, help="stochastic cells per multiply")
    mul.add_argument("--strategy", choices=("apc", "csa_fa"), default="apc", help="pop-count strategy")
    _add_common(mul)
    mul.set_defaults(func=_cmd_mul)

    mac = sub.add_parser("mac", help="multiply-accumulate over operand lists")
    mac.add_argument("--weights", required=True, help="comma-separated weight operands")
    mac.add_argument("--inputs", required=True, help="comma-separated input operands")
    mac.add_argument("--width", type=int, default=10)
    mac.add_argument("--nbit", type=int, default=1024)
    mac.add_argument("--strategy", choices=("apc", "csa_fa"), default="apc")
    _add_common(mac)
    mac.set_defaults(func=_cmd_mac)

    sweep = sub.add_parser("sweep", help="Monte Carlo error sweep over one knob")
    sweep.add_argument("kind", choices=tuple(_SWEEPS), help="which knob to sweep")
    sweep.add_argument("values", help="comma list or inclusive start:stop:step range")
    sweep.add_argument("--tau-x", type=float, default=0.3, help="first pulse duration, ns")
    sweep.add_argument("--tau-y", type=float, default=0.4, help="second pulse duration, ns")
    sweep.add_argument("--nbit", type=int, default=1000)
    sweep.add_argument("--iters", type=int, default=1000, help="Monte Carlo iterations per point")
    sweep.add_argument("--chip", choices=("fresh", "fixed"), default="fresh",
                       help="redraw the static cell map each iteration, or reuse one map")
    _add_common(sweep)
    sweep.set_defaults(func=_cmd_sweep)

    perf = sub.add_parser("perf", help="cycle, energy and area comparison")
    perf.add_argument("--bits", type=int, default=10, help="operand width for the comparison")
    perf.add_argument("--mac", type=int, default=100, help="batch size for amortised counting")
    _add_common(perf)
    perf.set_defaults(func=_cmd_perf)

    lut_dump = sub.add_parser("lut-dump", help="dump a negative-log table as CSV")
    lut_dump.add_argument("--width", type=int, default=10, help="operand width in bits")
    lut_dump.add_argument("--lut-bits", type=int, default=16, help="fractional bits per table entry")
    lut_dump.add_argument("--tau-scale", type=float, default=1.0, help="ns per unit of -ln(value)")
    _add_common(lut_dump, formats=False)
    lut_dump.set_defaults(func=_cmd_lut_dump)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
