"""Dual-averaged adaptive gradient methods with a deterministic benchmark
harness and executable convergence-theory checks."""

from .backend import NUMBA_ENABLED, backend_name
from .numerics import (
    SparseGrad,
    axpy,
    from_dense,
    grad_inf_norm,
    hadamard_scale,
    make_rng,
    norms,
    sparse_grad,
    to_dense,
    weighted_inv_sq_norm,
)
from .optimizers import (
    AdaGradState,
    AdamState,
    ConfigError,
    DualAvgState,
    GradientBoundError,
    HeavyBallState,
    InlineAvgState,
    MadgradState,
    VariantState,
    adagrad_step,
    adam_step,
    dual_avg_step,
    heavy_ball_step,
    inline_avg_step,
    madgrad_step,
    madgrad_theoretical_step,
    state_from_text,
    state_to_text,
    variant_step,
)
from .problems import (
    AdamStress,
    L1Median,
    SparseBagOfWords,
    StochasticQuadratic,
    SyntheticLogistic,
    finite_diff_check,
    suboptimality,
)
from .schedules import (
    Constant,
    ConstantC,
    DecayingC,
    InverseSqrtWarmup,
    PolynomialDecay,
    SqrtDecay,
    Stagewise,
    check_ck_lemma,
    lambda_weight,
    momentum_coeff,
    step_size,
)

__version__ = "0.1.0"
