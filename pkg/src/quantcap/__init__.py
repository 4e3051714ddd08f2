"""Capacity tools for the power-constrained AWGN channel with quantized output."""

__version__ = "0.1.0"

from .channel import (
    ChannelSpec,
    InputDistribution,
    OutputBinZeroError,
    OutputPmf,
    Quantizer,
    TransitionMatrix,
    divergence,
    kkt_residual,
    mutual_information,
    output_pmf,
    transition_probs,
)
from .bounds import (
    BoundProblem,
    BoundResult,
    best_symmetric_bound,
    divergence_to_output,
    minimize_max_affine,
    upper_bound_for_output,
)
from .optimize import (
    BracketingError,
    CapacityResult,
    GridConfig,
    onebit_capacity,
    optimal_masses,
    optimize_input_blahut_arimoto,
    optimize_input_cutting_plane,
    power_bisection,
)
from .quantopt import (
    BenchmarkScheme,
    CapacityCurve,
    JointResult,
    benchmark_error_probability,
    benchmark_fano_lower_bound,
    benchmark_mutual_information,
    optimize_quantizer_2bit,
    optimize_quantizer_3bit_iterative,
    snr_for_spectral_efficiency,
    unquantized_capacity,
)
from .report import ReportTable, RunManifest, render_report, write_csv, write_jsonl
from .special import (
    binary_entropy,
    convexity_witness,
    gaussian_q,
    hq_of_sqrt,
    second_derivative_scan,
)

__all__ = [
    "__version__",
    "gaussian_q",
    "binary_entropy",
    "hq_of_sqrt",
    "convexity_witness",
    "second_derivative_scan",
    "Quantizer",
    "ChannelSpec",
    "InputDistribution",
    "OutputPmf",
    "TransitionMatrix",
    "OutputBinZeroError",
    "transition_probs",
    "output_pmf",
    "mutual_information",
    "divergence",
    "kkt_residual",
    "GridConfig",
    "CapacityResult",
    "BracketingError",
    "onebit_capacity",
    "optimal_masses",
    "optimize_input_cutting_plane",
    "optimize_input_blahut_arimoto",
    "power_bisection",
    "BoundProblem",
    "BoundResult",
    "minimize_max_affine",
    "divergence_to_output",
    "upper_bound_for_output",
    "best_symmetric_bound",
    "BenchmarkScheme",
    "JointResult",
    "CapacityCurve",
    "benchmark_mutual_information",
    "benchmark_error_probability",
    "benchmark_fano_lower_bound",
    "optimize_quantizer_2bit",
    "optimize_quantizer_3bit_iterative",
    "unquantized_capacity",
    "snr_for_spectral_efficiency",
    "RunManifest",
    "ReportTable",
    "write_csv",
    "write_jsonl",
    "render_report",
]
