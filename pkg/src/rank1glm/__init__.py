"""rank1glm: joint HRF and activation estimation by rank-one regression.

Per-voxel BOLD time series are modeled as a lag-expanded design matrix
times the vectorization of a rank-one coefficient matrix h beta^T, so
the response shape h and the per-condition activations beta are
estimated jointly by L-BFGS. Includes the canonical-HRF GLM baseline,
AR(1) noise handling, a ground-truth simulator, a cross-session
likelihood validation protocol and a ridge-regression encoding
benchmark.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .design import (
    DesignMatrix,
    EventTable,
    build_async_design,
    build_basis_design,
    build_fir_design,
    build_stimulus_matrix,
    convolve_design,
    lower_shift,
    read_events,
)
from .encoding import (
    EncodingDataset,
    EncodingResult,
    encoding_benchmark,
    predictive_r2,
    ridge_fit,
)
from .glm import GlmFit, fit_glm, heldout_loglik
from .hrf import (
    HrfBasis,
    canonical_basis,
    canonical_peak_time,
    fir_basis,
    glover_hrf,
    sample_basis_at_offset,
)
from .io import read_bold, write_bold
from .noise import Ar1Model, estimate_ar1, gaussian_ar1_loglik, whiten
from .pipeline import (
    Dataset,
    Session,
    ValidationReport,
    cross_session_validate,
    fit_dataset,
)
from .rank_one import (
    RankOneFit,
    RankOneProblem,
    SolverOptions,
    fit_voxel,
    gradient,
    normalize_fit,
    objective,
)
from .simulate import SimSpec, gen_session, shifted_canonical
from .stats import TestResult, paired_mean_test, wilcoxon_signed_rank
