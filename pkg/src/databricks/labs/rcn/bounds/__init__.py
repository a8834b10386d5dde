from databricks.labs.rcn.bounds.certificate import (
    BoundsReport,
    BoundViolationError,
    DivergenceIntegral,
    LowerBoundConstants,
    certify_lower_bound,
    divergence_integral,
    lower_bound_constants,
    observation_constant,
)
from databricks.labs.rcn.bounds.fields import (
    ExtendField,
    SigmaVariant,
    SqueezeField,
    SubordinateField,
    SubordinationError,
    extend_field,
    sigma_extend,
    sigma_squeeze,
    squeeze_field,
    subordination_constant,
)
from databricks.labs.rcn.bounds.ingredients import (
    PsiProfile,
    QuadratureError,
    ZetaSigmaTables,
    build_psi,
    integrate,
    phi_bump,
    phi_bump_derivatives,
    zeta_sigma_tables,
)

__all__ = [
    "BoundsReport",
    "BoundViolationError",
    "DivergenceIntegral",
    "ExtendField",
    "LowerBoundConstants",
    "PsiProfile",
    "QuadratureError",
    "SigmaVariant",
    "SqueezeField",
    "SubordinateField",
    "SubordinationError",
    "ZetaSigmaTables",
    "build_psi",
    "certify_lower_bound",
    "divergence_integral",
    "extend_field",
    "integrate",
    "lower_bound_constants",
    "observation_constant",
    "phi_bump",
    "phi_bump_derivatives",
    "sigma_extend",
    "sigma_squeeze",
    "squeeze_field",
    "subordination_constant",
    "zeta_sigma_tables",
]
