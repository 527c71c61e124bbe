from .base import Evaluation, HomogeneousIntegrand, NumericIntegrand, RoundIntegrand, radial_lift
from .closed_forms import (
    MAIN_PROFILE,
    PSIBIG,
    ROT,
    ProfilePair,
    PsiBigIntegrand,
    psi_eval,
    psi_from_profile,
    psi_from_profile_eval,
    psi_hess_det,
    psi_original_eval,
    psibig_eval,
    psibig_original_point,
    psibig_point,
    seam_expansion_eval,
    taylor_coefficients,
)
from .km import (
    KmFamily,
    cubic_profile,
    derivatives_2d,
    km14_candidate_integrand,
    km14_psi,
    km14_psi_eval,
    km_hyperbolic_residual,
)
from .phi import (
    PHI0,
    PHI7,
    GraphSlice,
    Phi0Integrand,
    Phi7Integrand,
    ProfileField,
    phi0_eval,
    phi0_formula,
    phi7_eval,
    phi7_formula,
)
