"""MIMO channel estimation: simulator, estimators, learned filter, benchmarks."""

from .channel import (
    ChannelCovariance,
    ClusterParams,
    Draw,
    ScenarioConfig,
    channel_covariance,
    nominal_noise_variance,
    noise_variance_for_snr,
    sample_cluster_params,
    sample_observation,
    side_covariance,
    steering_vector,
)
from .cnn import (
    AdamState,
    CnnParams,
    Sample,
    TrainConfig,
    adam_step,
    cnn_backward,
    cnn_estimate,
    cnn_forward,
    load_model,
    save_model,
    train,
)
from .estimators import (
    FeParams,
    GridFilters,
    build_grid,
    fe_estimate,
    fe_reference_params,
    ge_estimate,
    genie_mmse,
    ls_estimate,
    ml_estimate,
    omp_genie,
    spectral_eigenvalues,
)
from .harness import (
    ResultRow,
    SweepSpec,
    emit_csv,
    evaluate_point,
    make_estimators,
    nmse,
    read_csv,
    run_sweep,
)
from .pilots import PilotSet, SpectralTransform, dft_pilots, load_pilots, save_pilots
from .structure import (
    apply_block_filter,
    apply_diag_filter,
    block_circulant_from_kernel,
    diag_blocks_expand,
    diag_blocks_extract,
    fe_input,
    ge_input,
)

__version__ = "0.1.0"
