"""p-Ginzburg-Landau lab on rotationally symmetric manifolds with a pole."""

from .errors import (
    BoundViolated,
    ConfigError,
    Diverged,
    EmptyWindow,
    HypothesisFailed,
    PglError,
    PoleViolation,
    SigmaNotPositive,
    TailDiverges,
    UnsupportedAnsatz,
)
from .geometry import (
    CurvatureProfile,
    HessianSpectrum,
    SigmaBound,
    WarpingTable,
    ball_volume,
    comparison_check,
    hessian_spectrum,
    p1_quantity,
    sigma_closed_form,
    sigma_numeric,
    solve_warping,
    sphere_area,
    tail_integral,
    volume_bound_check,
)
from .functional import (
    EnergyProfile,
    GLParams,
    RadialField,
    discrete_energy,
    el_residual,
    energy_gradient,
    energy_profile,
)
from .stress import conservation_identity, conservation_law, stokes_check, stress_components
from .solver import SolveConfig, SolveTrace, dirichlet_constant_experiment, minimize, vortex_solve
from .verify import (
    growth_check,
    liouville_consistency,
    monotonicity_check,
    p2_evaluate,
    slow_divergence_check,
    vanishing_check,
)

__version__ = "0.1.0"
