"""kdvlab: spectral-theoretic diagnostics and solvers for KdV-type flows."""

from .grid import RealField, TorusGrid, field_from_function, make_grid, zero_field
from .spectral import (
    FourierMultiplier,
    KappaParam,
    apply_free_resolvent,
    dealiased_product,
    dealiased_square,
    derivative,
    inner_product,
    l2_norm,
    linf_embedding_ratio,
    sobolev_kappa_norm,
)
from .greens import (
    DenseOperator,
    GreensData,
    LaxResolvent,
    admissibility_floor,
    build_lax_resolvent,
    current_j,
    dg_directional,
    drho_directional,
    greens_diagonal_direct,
    greens_diagonal_series,
    h1_field,
    microlaw_residual,
    rho_alpha,
)
from .opnorms import (
    ScalingReport,
    WeightedSpace,
    commutator_scaling_audit,
    hs_norm,
    verify_hs_identity,
    weighted_op_norm,
)
from .dynamics import (
    CoefficientSet,
    DiagnosticRecord,
    Trajectory,
    alpha_drift,
    gkdv_rhs,
    integrated_microlaw_gap,
    l2_identity_residual,
    solve,
    step,
)
from .smoothing import (
    BootstrapRecord,
    WeightFamily,
    bootstrap_audit,
    hypothesis_check,
    local_mass,
    ls_norm,
)
from .bottom import (
    BottomProfile,
    build_profile,
    kdvvb_rhs,
    profile_from_descriptor,
    solve_kdvvb,
    synth_coefficients,
    transform_backward,
    transform_forward,
)
from . import errors, initial_data

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
