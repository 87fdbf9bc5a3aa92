"""Multilevel polar coding over the unit-noise Gaussian channel.

The package builds Gaussian-quantile constellations with a duplicated
origin, decomposes the channel into binary-input levels, estimates
per-bit-channel reliabilities by genie-aided Monte Carlo, and runs
power-clamped encode / multistage successive-cancellation decode
experiments with fully reproducible randomness.
"""

from .transform import polar_transform, polar_inverse, transform_rows
from .constellation import (
    BETA,
    Constellation,
    build_constellation,
    gaussian_quantile,
    quantize,
    symbol_prior,
    outage_probability_bound,
)
from .channel import (
    LLR_CLAMP,
    LevelContext,
    transmit,
    level_llr,
    channel_capacity,
    mutual_information,
    level_mutual_information,
)
from .quadrature import NumericFailure
from .construction import (
    ReliabilityTable,
    InfoSets,
    estimate_reliability,
    estimate_reliability_discrete,
    exact_reliability_bmc,
    select_info_sets_se,
    select_info_sets_md,
    select_info_sets_rate,
    select_info_sets_union,
    union_bound,
    binary_entropy,
    binary_entropy_inv,
    md_threshold,
)
from .codec import CodeSpec, TransmissionRecord, encode, decode, end_to_end_trial
from .analysis import (
    GapPoint,
    quantization_bound_coefficient,
    quantization_bound_check,
    scaling_fit,
    md_envelope,
    capacity_gap_table,
)
from .harness import SimReport, run_simulation, run_sweep, cli_main

__version__ = "0.1.0"
