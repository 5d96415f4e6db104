"""Exactly-testable laboratory for K-functionals, Lorentz-scale norms,
rectangle supremum functionals, and conditional-expectation analogues on
finite measure spaces."""

from .measure import (
    EnumerationLimitError,
    FiniteMeasureSpace,
    ProductSpace,
    counting_space,
    enumerate_subsets,
    scale_space,
    subset_measure,
)
from .lorentz import (
    ScalarFunction,
    bracket_norm,
    conjugate,
    indicator,
    level_set_decomposition,
    lorentz_p1_norm,
    mixed_weak_norm,
    weak_quasinorm,
)
from .rectangle import (
    ExponentConfig,
    GaugeFunction,
    KernelMatrix,
    gauge_rect_sup,
    k_lower_certificate,
    rect_sup,
)
from .simplex import (
    LPInfeasibleError,
    LPModel,
    LPUnboundedError,
    solve_lp,
)
from .kfun import (
    DecompositionResult,
    duality_certificate,
    k_bracket_general_q,
    k_decompose_gauge,
    k_exact,
    k_exact_sweep,
    k_multi,
    separation_worst_subset,
)
from .interp import (
    ThetaConfig,
    closed_form_norm,
    geometric_identity_inf,
    k_envelope_sup,
    theta_norm_via_grid,
)
from .kernelop import (
    KernelOperator,
    apply_kernel,
    endpoint_opnorm_identities,
    kernel_opnorm,
    regular_norm,
)
from .condexp import (
    CondExpConfig,
    Partition,
    c_norm,
    cond_expectation,
    condexp_condition_sup,
    condexp_decompose,
)

__version__ = "0.1.0"
