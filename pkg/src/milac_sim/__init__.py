"""Analog microwave beamforming simulator for multi-user MISO downlinks.

Models a lossless reciprocal multiport network used as a transmit
beamformer, optimizes its scattering matrix jointly with the RF-chain
power allocation for sum rate, and benchmarks against a fully digital
beamformer. Ships as a library, an HTTP service and a CLI.
"""

__version__ = "0.1.0"

from .baselines import DigitalBeamformer, fp_digital, mrt_single_user_rate
from .channels import (
    ChannelSet,
    NoisePowers,
    generate_rayleigh,
    load_channels,
    orthogonalize,
    save_channels,
    unit_noise,
)
from .evaluation import (
    PowerAccount,
    PowerAllocation,
    RateReport,
    channel_orthogonality,
    power_account,
    sinr,
    sum_rate,
)
from .linalg import TakagiFactorization, bisect_root, sym_unitary_project, takagi
from .microwave import (
    BeamformingMatrix,
    ReferenceImpedance,
    ScatteringMatrix,
    SusceptanceMatrix,
    ValidationReport,
    assemble_susceptance,
    beamforming_from_scattering,
    partition_scattering,
    scattering_from_susceptance,
    susceptance_from_scattering,
    synthesize_branches,
    validate_lossless_reciprocal,
)
from .optimizer import (
    ConvergenceTrace,
    FpState,
    OptimizerConfig,
    build_surrogate_matrices,
    default_initialization,
    fp_objective,
    run_bcd,
    update_auxiliaries,
    update_power,
    update_scattering,
)

__all__ = [
    "__version__",
    "BeamformingMatrix",
    "ChannelSet",
    "ConvergenceTrace",
    "DigitalBeamformer",
    "FpState",
    "NoisePowers",
    "OptimizerConfig",
    "PowerAccount",
    "PowerAllocation",
    "RateReport",
    "ReferenceImpedance",
    "ScatteringMatrix",
    "SusceptanceMatrix",
    "TakagiFactorization",
    "ValidationReport",
    "assemble_susceptance",
    "beamforming_from_scattering",
    "bisect_root",
    "build_surrogate_matrices",
    "channel_orthogonality",
    "default_initialization",
    "fp_digital",
    "fp_objective",
    "generate_rayleigh",
    "load_channels",
    "mrt_single_user_rate",
    "orthogonalize",
    "partition_scattering",
    "power_account",
    "run_bcd",
    "save_channels",
    "scattering_from_susceptance",
    "sinr",
    "sum_rate",
    "susceptance_from_scattering",
    "sym_unitary_project",
    "synthesize_branches",
    "takagi",
    "unit_noise",
    "update_auxiliaries",
    "update_power",
    "update_scattering",
    "validate_lossless_reciprocal",
]
