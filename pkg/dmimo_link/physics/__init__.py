from .channel import (
    CirTaps,
    DiffusionParams,
    OffsetSchedule,
    build_cir,
    build_simulation_cir,
    cir_tap,
    concentration,
    external_noise,
    interference_metric,
    peak_time,
    sample_block,
    sample_received,
    tap_profile,
    truncation_noise,
)
from .equalization import (
    DecodeState,
    DetectorConfig,
    DetectorKind,
    Receiver,
    check_causality,
    decode_block,
    dfe_feedback,
    ls_detect,
    mmse_filter,
    noise_covariance,
    threshold_detect,
    zf_filter,
)
from .estimation import (
    EstimateReport,
    MlOptions,
    TrainingConstraints,
    TrainingSet,
    concat_training,
    crb,
    crb_per_receiver,
    design_training,
    estimate_mse,
    fisher_information,
    log_likelihood,
    ls_estimate,
    ml_estimate,
    training_for_length,
)
from .geometry import (
    MobilityParams,
    Topology,
    brownian_step,
    brownian_walk,
    distance_matrix,
    initial_positions,
    mobility_from_radius,
    stokes_einstein,
)
from .mimo_model import (
    ConvMatrix,
    OffsetMode,
    SymbolBlock,
    assign_offsets,
    build_conv_matrix,
    causal_conv_matrix,
    mean_output,
    random_block,
)

__all__ = [
    "CirTaps",
    "DiffusionParams",
    "OffsetSchedule",
    "build_cir",
    "build_simulation_cir",
    "cir_tap",
    "concentration",
    "external_noise",
    "interference_metric",
    "peak_time",
    "sample_block",
    "sample_received",
    "tap_profile",
    "truncation_noise",
    "DecodeState",
    "DetectorConfig",
    "DetectorKind",
    "Receiver",
    "check_causality",
    "decode_block",
    "dfe_feedback",
    "ls_detect",
    "mmse_filter",
    "noise_covariance",
    "threshold_detect",
    "zf_filter",
    "EstimateReport",
    "MlOptions",
    "TrainingConstraints",
    "TrainingSet",
    "concat_training",
    "crb",
    "crb_per_receiver",
    "design_training",
    "estimate_mse",
    "fisher_information",
    "log_likelihood",
    "ls_estimate",
    "ml_estimate",
    "training_for_length",
    "MobilityParams",
    "Topology",
    "brownian_step",
    "brownian_walk",
    "distance_matrix",
    "initial_positions",
    "mobility_from_radius",
    "stokes_einstein",
    "ConvMatrix",
    "OffsetMode",
    "SymbolBlock",
    "assign_offsets",
    "build_conv_matrix",
    "causal_conv_matrix",
    "mean_output",
    "random_block",
]
