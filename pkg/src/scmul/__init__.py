"""Desk-scale simulator of an in-memory stochastic multiply engine.

A magnetic cell written with a sub-critical pulse survives with
probability exp(-tau * exp(-delta * (1 - I/Ic))); because survival
probabilities of consecutive pulses multiply, two timed pulses turn a
region of cells into a Bernoulli sampler of the product of two encoded
operands, and a pop-count reads the result out.  The package models
that pipeline end to end: the switching law (:mod:`~scmul.device`),
operand-to-pulse conversion (:mod:`~scmul.conversion`), the cell plane
with its non-idealities (:mod:`~scmul.bitplane`), multiply/accumulate
orchestration (:mod:`~scmul.engine`), Monte Carlo error analysis
(:mod:`~scmul.analysis`) and a cycle/energy/area cost model
(:mod:`~scmul.perfmodel`).  The ``scmul`` command exposes the common
entry points.
"""

from .analysis import (
    CircuitSweepPoint,
    GaussianFitError,
    McConfig,
    McReport,
    SweepPoint,
    binomial_sigma,
    error_histogram,
    gaussian_fit,
    logmult_baseline,
    mc_error_distribution,
    sweep_circuit_variance,
    sweep_ic_variance,
    sweep_nbit,
    sweep_tau_y,
    taus_for_operands,
    write_histogram_csv,
    write_sweep_csv,
)
from .bitplane import (
    ArrayState,
    Region,
    VariationModel,
    apply_pulse,
    new_array,
    popcount_region,
    preset,
)
from .conversion import (
    DtcSpec,
    LogLut,
    Operand,
    build_lut,
    dump_lut_csv,
    expected_probability,
    load_lut_csv,
    operand_to_pulse,
)
from .device import (
    MtjParams,
    PulseSpec,
    make_rng,
    p_unswitched,
    sample_unswitched,
    survival_probability,
)
from .engine import (
    MacResult,
    MulConfig,
    MulResult,
    WeightPlane,
    multiply_with_preconverted,
    popcount_apc,
    popcount_csa_fa,
    preconvert_weights,
    sc_mac,
    sc_multiply,
    sc_multiply_pulses,
)
from .perfmodel import (
    APPROACHES,
    CostModel,
    PerfReport,
    area,
    comparison_report,
    cycles_per_mul,
    default_cost_model,
    energy_per_mul,
    load_cost_model,
)

__version__ = "0.1.0"

__all__ = [
    "APPROACHES",
    "ArrayState",
    "CircuitSweepPoint",
    "CostModel",
    "DtcSpec",
    "GaussianFitError",
    "LogLut",
    "MacResult",
    "McConfig",
    "McReport",
    "MtjParams",
    "MulConfig",
    "MulResult",
    "Operand",
    "PerfReport",
    "PulseSpec",
    "Region",
    "SweepPoint",
    "VariationModel",
    "WeightPlane",
    "apply_pulse",
    "area",
    "binomial_sigma",
    "build_lut",
    "comparison_report",
    "cycles_per_mul",
    "default_cost_model",
    "dump_lut_csv",
    "energy_per_mul",
    "error_histogram",
    "expected_probability",
    "gaussian_fit",
    "load_cost_model",
    "load_lut_csv",
    "logmult_baseline",
    "make_rng",
    "mc_error_distribution",
    "multiply_with_preconverted",
    "new_array",
    "operand_to_pulse",
    "p_unswitched",
    "popcount_apc",
    "popcount_csa_fa",
    "popcount_region",
    "preconvert_weights",
    "preset",
    "sample_unswitched",
    "sc_mac",
    "sc_multiply",
    "sc_multiply_pulses",
    "survival_probability",
    "sweep_circuit_variance",
    "sweep_ic_variance",
    "sweep_nbit",
    "sweep_tau_y",
    "taus_for_operands",
    "write_histogram_csv",
    "write_sweep_csv",
    "__version__",
]
