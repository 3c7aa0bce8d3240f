"""Monte Carlo error analysis for the stochastic multiply.

Every multiply returns ``count / nbit``, an nbit-sample Bernoulli
estimate of the exact product, so the interesting questions are
statistical: how wide is the error distribution, does it match the
binomial prediction, and how do the non-ideality knobs move it.  This
module runs repeated multiplies with controlled seeding, histograms the
errors (Freedman-Diaconis binning), fits a Gaussian, and sweeps the
knobs one at a time.

Pulse durations here are taken exactly as given, bypassing the table
and time-converter quantisation of the conversion layer; use
:func:`taus_for_operands` to study the quantised pipeline instead.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields, replace

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from .bitplane import VariationModel, apply_pulse, new_array, popcount_region, preset
from .conversion import DtcSpec, LogLut, Operand, _open_for_write, build_lut, operand_to_pulse
from .device import MtjParams, PulseSpec
from .engine import _mul_regions

MIN_HIST_BINS = 20
_MAX_HIST_BINS = 4096

CHIP_MODES = ("fresh", "fixed")


class GaussianFitError(RuntimeError):
    """Raised when a histogram cannot support a Gaussian least-squares fit."""


@dataclass(frozen=True)
class McConfig:
    """One Monte Carlo experiment: pulse pair, plane size, repeat count.

    ``tau_x`` and ``tau_y`` are the two pulse durations in nanoseconds,
    fired at the critical current so the per-cell survival probabilities
    are exp(-tau_x) and exp(-tau_y).
    """

    tau_x: float
    tau_y: float
    nbit: int = 1000
    iterations: int = 1000
    seed: int = 0
    variation: VariationModel = VariationModel()
    params: MtjParams = MtjParams()
    row_length: int = 1024

    def __post_init__(self) -> None:
        for name in ("tau_x", "tau_y"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0.0):
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
        if self.nbit < 16:
            raise ValueError(f"nbit must be >= 16, got {self.nbit!r}")
        if self.iterations < 2:
            raise ValueError(f"iterations must be >= 2, got {self.iterations!r}")
        if self.row_length < 1:
            raise ValueError(f"row_length must be >= 1, got {self.row_length!r}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed!r}")

    @property
    def truth(self) -> float:
        """The ideal product the estimates are compared against."""
        return math.exp(-(self.tau_x + self.tau_y))


@dataclass(frozen=True, eq=False)
class McReport:
    """Error distribution of one Monte Carlo experiment.

    ``errors`` holds estimate - truth per iteration; the fit fields are
    NaN when the histogram could not support a Gaussian fit.
    """

    truth: float
    errors: np.ndarray
    mean_error: float
    sample_std: float
    fit_mu: float
    fit_sigma: float
    hist_edges: np.ndarray
    hist_counts: np.ndarray

    @property
    def uncertainty(self) -> float:
        """Reported multiply uncertainty: two fitted standard deviations."""
        return 2.0 * self.fit_sigma

    @property
    def mean_relative_error(self) -> float:
        """Mean error relative to the ideal product (informational, not gated)."""
        return self.mean_error / self.truth


def binomial_sigma(p: float, nbit: int) -> float:
    """Standard deviation of an nbit-sample Bernoulli(p) mean."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p!r}")
    if nbit < 1:
        raise ValueError(f"nbit must be >= 1, got {nbit!r}")
    return math.sqrt(p * (1.0 - p) / nbit)


def taus_for_operands(
    x: Operand,
    y: Operand,
    lut: LogLut | None = None,
    dtc: DtcSpec = DtcSpec(),
) -> tuple[float, float]:
    """Quantised pulse durations (ns) the conversion pipeline would emit."""
    if x.width != y.width:
        raise ValueError(f"operand widths differ: {x.width} vs {y.width}")
    lut = lut if lut is not None else build_lut(x.width)
    drive = MtjParams().i_c
    return (
        operand_to_pulse(x, lut, dtc, drive).duration,
        operand_to_pulse(y, lut, dtc, drive).duration,
    )


def _single_estimate(state, regions, pulses, cfg: McConfig, rng: np.random.Generator) -> float:
    preset(state)
    for pulse in pulses:
        for region in regions:
            apply_pulse(state, region, pulse, cfg.params, cfg.variation, rng)
    return sum(popcount_region(state, region) for region in regions) / cfg.nbit


def mc_error_distribution(cfg: McConfig, chip: str = "fresh") -> McReport:
    """Repeat one multiply ``cfg.iterations`` times and fit the error spread.

    ``chip`` selects how the static critical-current map behaves across
    iterations: ``"fresh"`` draws a new map every time (ensemble over
    fabricated devices), ``"fixed"`` draws one map up front and reuses
    it (repeated runs on a single device).  Each iteration gets its own
    child random stream, so reordering or parallelising iterations
    cannot change any of them.
    """
    if chip not in CHIP_MODES:
        raise ValueError(f"chip must be one of {CHIP_MODES}, got {chip!r}")
    regions, rows, cols = _mul_regions(cfg.nbit, cfg.row_length)
    pulses = (
        PulseSpec(current=cfg.params.i_c, duration=cfg.tau_x),
        PulseSpec(current=cfg.params.i_c, duration=cfg.tau_y),
    )
    # One child per iteration plus one for the fixed-chip map; the map
    # child is allocated in both modes so iteration streams line up.
    map_seq, *iter_seqs = np.random.SeedSequence(cfg.seed).spawn(cfg.iterations + 1)
    state = None
    if chip == "fixed":
        state = new_array(rows, cols, cfg.params, cfg.variation, np.random.default_rng(map_seq))
    truth = cfg.truth
    errors = np.empty(cfg.iterations, dtype=np.float64)
    for i, seq in enumerate(iter_seqs):
        rng = np.random.default_rng(seq)
        if chip == "fresh":
            state = new_array(rows, cols, cfg.params, cfg.variation, rng)
        errors[i] = _single_estimate(state, regions, pulses, cfg, rng) - truth
    counts, edges = error_histogram(errors)
    try:
        fit_mu, fit_sigma = gaussian_fit(counts, edges)
    except GaussianFitError:
        fit_mu = fit_sigma = math.nan
    return McReport(
        truth=truth,
        errors=errors,
        mean_error=float(errors.mean()),
        sample_std=float(errors.std(ddof=1)),
        fit_mu=fit_mu,
        fit_sigma=fit_sigma,
        hist_edges=edges,
        hist_counts=counts,
    )


def error_histogram(samples: np.ndarray, min_bins: int = MIN_HIST_BINS) -> tuple[np.ndarray, np.ndarray]:
    """Histogram with Freedman-Diaconis bin width, floored at ``min_bins``.

    Returns (counts, edges).  Degenerate inputs (all samples equal, or
    zero interquartile range) fall back to wider rules rather than
    erroring, and the counts always sum to the sample count.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1 or samples.size < 2:
        raise ValueError("need a 1-D array of at least two samples")
    lo = float(samples.min())
    hi = float(samples.max())
    if hi == lo:
        half = max(abs(lo), 1.0) * 1e-9
        edges = np.linspace(lo - half, lo + half, min_bins + 1)
        counts, edges = np.histogram(samples, bins=edges)
        return counts, edges
    q25, q75 = np.percentile(samples, [25.0, 75.0])
    iqr = q75 - q25
    if iqr > 0.0:
        width = 2.0 * iqr / samples.size ** (1.0 / 3.0)
        nbins = math.ceil((hi - lo) / width)
    else:
        nbins = math.ceil(math.sqrt(samples.size))
    nbins = min(max(nbins, min_bins), _MAX_HIST_BINS)
    counts, edges = np.histogram(samples, bins=np.linspace(lo, hi, nbins + 1))
    return counts, edges


def _gauss(x, amplitude, mu, sigma):
    return amplitude * np.exp(-((x - mu) ** 2) / (2.0 * sigma**2))


def gaussian_fit(counts: np.ndarray, edges: np.ndarray) -> tuple[float, float]:
    """Least-squares Gaussian on histogram bin centres: (mu, sigma).

    The amplitude is a free parameter so the fit does not depend on
    normalisation.  Raises :class:`GaussianFitError` when fewer than
    five bins are populated or the optimiser fails to converge.
    """
    counts = np.asarray(counts, dtype=np.float64)
    edges = np.asarray(edges, dtype=np.float64)
    if counts.size + 1 != edges.size:
        raise ValueError(f"edge count {edges.size} does not match {counts.size} bins")
    populated = int(np.count_nonzero(counts))
    if populated < 5:
        raise GaussianFitError(f"only {populated} populated bins; a Gaussian fit needs at least 5")
    centers = 0.5 * (edges[:-1] + edges[1:])
    total = counts.sum()
    mu0 = float((centers * counts).sum() / total)
    var0 = float(((centers - mu0) ** 2 * counts).sum() / total)
    sigma0 = math.sqrt(var0) if var0 > 0.0 else float(edges[1] - edges[0])
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OptimizeWarning)
            popt, _ = curve_fit(
                _gauss, centers, counts, p0=(float(counts.max()), mu0, sigma0), maxfev=10000
            )
    except (RuntimeError, ValueError) as exc:
        raise GaussianFitError(f"Gaussian fit did not converge: {exc}") from exc
    _, mu, sigma = popt
    if not (math.isfinite(mu) and math.isfinite(sigma) and sigma != 0.0):
        raise GaussianFitError(f"Gaussian fit returned degenerate parameters mu={mu!r} sigma={sigma!r}")
    return float(mu), float(abs(sigma))


# --- parameter sweeps -------------------------------------------------------


@dataclass(frozen=True)
class SweepPoint:
    """One sweep sample: the varied parameter plus distribution summary."""

    param: float
    truth: float
    mean_estimate: float
    bias: float
    sigma: float
    fit_mu: float
    fit_sigma: float


@dataclass(frozen=True)
class CircuitSweepPoint:
    """Engine vs digital log-multiply baseline at one circuit-noise level."""

    level: float
    truth: float
    engine_bias: float
    engine_sigma: float
    baseline_bias: float
    baseline_sigma: float


def _point_seeds(seed: int, n: int) -> list[int]:
    """Independent per-point seeds so sweep points never share a stream."""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n, dtype=np.uint64)]


def _to_point(param: float, report: McReport) -> SweepPoint:
    return SweepPoint(
        param=param,
        truth=report.truth,
        mean_estimate=report.truth + report.mean_error,
        bias=report.mean_error,
        sigma=report.sample_std,
        fit_mu=report.fit_mu,
        fit_sigma=report.fit_sigma,
    )


def sweep_nbit(cfg: McConfig, nbits, chip: str = "fresh") -> list[SweepPoint]:
    """Error distribution versus stream length, one experiment per value."""
    nbits = list(nbits)
    points = []
    for nbit, seed in zip(nbits, _point_seeds(cfg.seed, len(nbits))):
        report = mc_error_distribution(replace(cfg, nbit=int(nbit), seed=seed), chip=chip)
        points.append(_to_point(float(nbit), report))
    return points


def sweep_tau_y(cfg: McConfig, tau_ys, chip: str = "fresh") -> list[SweepPoint]:
    """Error distribution versus the second pulse duration."""
    tau_ys = list(tau_ys)
    points = []
    for tau, seed in zip(tau_ys, _point_seeds(cfg.seed, len(tau_ys))):
        report = mc_error_distribution(replace(cfg, tau_y=float(tau), seed=seed), chip=chip)
        points.append(_to_point(float(tau), report))
    return points


def sweep_ic_variance(cfg: McConfig, levels, chip: str = "fresh") -> list[SweepPoint]:
    """Error distribution versus static critical-current spread."""
    levels = list(levels)
    points = []
    for level, seed in zip(levels, _point_seeds(cfg.seed, len(levels))):
        variation = replace(cfg.variation, sigma_ic=float(level))
        report = mc_error_distribution(replace(cfg, variation=variation, seed=seed), chip=chip)
        points.append(_to_point(float(level), report))
    return points


def sweep_circuit_variance(cfg: McConfig, levels, chip: str = "fresh") -> list[CircuitSweepPoint]:
    """Pulse-duration noise: in-plane engine versus the digital baseline.

    The baseline computes the same product through logarithm, add and
    antilogarithm, so a relative timing error of the shared pulse
    circuitry lands directly on its output.  The engine averages that
    same noise over nbit cells and is expected to shrug it off.
    """
    levels = list(levels)
    points = []
    for level, seed in zip(levels, _point_seeds(cfg.seed, len(levels))):
        eng_seed, base_seed = _point_seeds(seed, 2)
        variation = replace(cfg.variation, sigma_circuit=float(level))
        report = mc_error_distribution(
            replace(cfg, variation=variation, seed=eng_seed), chip=chip
        )
        base_rng = np.random.default_rng(base_seed)
        baseline = _baseline_samples(cfg.truth, float(level), cfg.iterations, base_rng)
        points.append(
            CircuitSweepPoint(
                level=float(level),
                truth=cfg.truth,
                engine_bias=report.mean_error,
                engine_sigma=report.sample_std,
                baseline_bias=float(baseline.mean() - cfg.truth),
                baseline_sigma=float(baseline.std(ddof=1)),
            )
        )
    return points


def _baseline_samples(truth: float, level: float, iterations: int, rng: np.random.Generator) -> np.ndarray:
    if level == 0.0:
        return np.full(iterations, truth, dtype=np.float64)
    eta = np.clip(rng.standard_normal(iterations), -3.0, 3.0)
    return truth * (1.0 + level * eta)


def logmult_baseline(
    x: Operand,
    y: Operand,
    sigma_circuit: float,
    rng: np.random.Generator,
    lut: LogLut | None = None,
) -> float:
    """One digital log-multiply estimate: antilog of the summed table values.

    ``sigma_circuit`` is the relative standard deviation of a single
    multiplicative noise factor on the output (clipped at three sigma,
    matching the engine's pulse-duration noise).  Zero noise draws
    nothing from ``rng``.
    """
    if not 0.0 <= sigma_circuit <= 0.5:
        raise ValueError(f"sigma_circuit must be in [0, 0.5], got {sigma_circuit!r}")
    if x.width != y.width:
        raise ValueError(f"operand widths differ: {x.width} vs {y.width}")
    lut = lut if lut is not None else build_lut(x.width)
    neg_log_sum = (lut.neg_log(x.raw) + lut.neg_log(y.raw)) * lut.tau_scale
    estimate = math.exp(-neg_log_sum)
    if sigma_circuit == 0.0:
        return estimate
    eta = float(np.clip(rng.standard_normal(), -3.0, 3.0))
    return estimate * (1.0 + sigma_circuit * eta)


# --- CSV output -------------------------------------------------------------


def _fmt(value) -> str:
    return f"{value:.12g}"


def _write_prelude(fh, metadata: dict | None) -> None:
    for key, value in (metadata or {}).items():
        fh.write(f"# {key}={value}\n")


def write_sweep_csv(points, dest, metadata: dict | None = None) -> None:
    """Write sweep points as CSV, with ``# key=value`` metadata lines first.

    Accepts either plain or circuit-baseline sweep points; the header
    row is taken from the point type's fields.
    """
    if not points:
        raise ValueError("no sweep points to write")
    names = [f.name for f in fields(points[0])]
    with _open_for_write(dest) as fh:
        _write_prelude(fh, metadata)
        fh.write(",".join(names) + "\n")
        for point in points:
            fh.write(",".join(_fmt(getattr(point, name)) for name in names) + "\n")


def write_histogram_csv(report: McReport, dest, metadata: dict | None = None) -> None:
    """Write one report's error histogram as (bin_center, count) rows."""
    centers = 0.5 * (report.hist_edges[:-1] + report.hist_edges[1:])
    with _open_for_write(dest) as fh:
        _write_prelude(fh, metadata)
        fh.write("bin_center,count\n")
        for center, count in zip(centers, report.hist_counts):
            fh.write(f"{_fmt(center)},{int(count)}\n")
