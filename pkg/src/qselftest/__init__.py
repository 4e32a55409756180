"""Self-testing quantum correlations at desk scale.

Builds the ideal qudit strategies behind the tilted-CHSH self-testing
families, evaluates and verifies their correlations, extracts the target
state with the swap isometry, and reproduces convergence, robustness, and
dimension-witness scalings as reproducible experiments.
"""

__version__ = "0.1.0"

from .config import get_max_dim, set_max_dim
from .correlations import (
    Correlation,
    DistanceReport,
    VerifyReport,
    bell_value,
    block_question_map,
    coarse_grain,
    distance,
    evaluate,
    lift_answers,
    lift_questions,
    p_star_infinity,
    restrict_answers,
    verify_many_answers,
    verify_many_questions,
)
from .errors import ParityError, ResourceLimitError, ValidationError
from .linalg import (
    PureState,
    SchmidtSpectrum,
    is_hermitian,
    is_projector,
    is_unitary,
    low_rank_distance,
    schmidt,
    tensor,
)
from .extraction import (
    ExtractionKit,
    ResidualReport,
    build_kit,
    orthogonalize,
    polar_fix,
    swap_isometry,
    unitarize,
    yn_residuals,
)
from .states import (
    BlockParams,
    ConvergenceParams,
    SchmidtState,
    block_params,
    harmonic,
    make_state,
    psi_N,
)
from .strategies import (
    MANY_ANSWERS,
    MANY_QUESTIONS,
    PERP,
    Measurement,
    PovmMeasurement,
    PovmStrategy,
    Strategy,
    embed_strategy,
    family_of,
    many_answers_ideal,
    many_questions_ideal,
    perturb,
    povm_reduce,
    tilted_chsh_ideal,
    truncated_separating_strategy,
)
