"""Low-rank plus sparse weight decomposition with budgeted mask learning.

Stage 1 splits each dense weight matrix into a low-rank part and an
entrywise-sparse part. Stage 2 treats every singular triplet and sparse
entry as a prunable candidate, learns Bernoulli retention probabilities
against a calibration loss under a global parameter budget, and freezes a
deterministic top-probability selection into factorized storage.
"""

from .allocator import (
    MaskSample,
    PolicyGradientConfig,
    RetentionState,
    exact_expected_loss_grad,
    finalize_masks,
    init_state,
    log_prob_grad,
    project_to_budget,
    reinforce_step,
    sample_mask,
)
from .calibration import (
    CalibrationSet,
    CompressedLayer,
    ToyModel,
    default_toy_model,
    factorize,
    forward_loss,
    gen_calibration,
    loss_with_masks,
    planted_matrix,
    planted_model,
    planted_spectrum_matrix,
    reconstruct,
)
from .linalg import (
    SvdError,
    SvdFactorization,
    as_matrix,
    frobenius_norm,
    l1_norm,
    matmul,
    nuclear_norm,
    spectral_norm,
    svd,
)
from .matio import (
    ConfigError,
    JobSettings,
    MatrixFormatError,
    load_job_config,
    parse_job_config,
    read_matrix,
    write_matrix,
)
from .oracle import OracleResult, brute_force_best_mask, exact_expected_loss
from .pipeline import (
    CompressionJob,
    CompressionReport,
    LayerSummary,
    SweepRow,
    default_job,
    heuristic_threshold_baseline,
    run,
    sweep_lambda,
)
from .pool import Candidate, CandidateKind, CandidatePool, build_pool, param_count
from .rpca import (
    NonConvergenceError,
    RpcaConfig,
    RpcaResult,
    decompose,
    default_lambda,
    soft_threshold,
    svt_shrink,
    update_l,
    update_s,
)

__version__ = "0.1.0"
