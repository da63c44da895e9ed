"""Logarithmic Trudinger-Moser energies of radial profiles in dimension N >= 2.

Radial grids and profiles, the log-kernel bilinear forms and potentials,
growth families, Schwarz symmetrization, Moser sequences, constrained
maximization and Euler-Lagrange checks.
"""

from .errors import (
    DegenerateProfileError,
    DomainError,
    NumericalConsistencyError,
    SaturationError,
    UsageError,
)
from .radial import (
    DimensionParams,
    RadialGrid,
    RadialProfile,
    constraint_norm,
    dim_params,
    grad_norm,
    lp_norm,
    rescale_to_ball,
    w1n_norm,
)
from .kernel import (
    BilinearReport,
    b0_cross,
    b0_radial,
    b_split_direct,
    potential_log,
    star_norm,
)
from .growth import (
    GrowthSpec,
    ball_critical,
    check_growth_class,
    growth_eval,
    space_critical,
    subcritical,
    tabulated,
    tilde_g_space,
)
from .rearrange import riesz_check, schwarz_symmetrize
from .moser import MoserRow, blowup_lower_bound, moser_profile, phi_on_moser, threshold_exponent
from .bridge import eval_phi_beta, lift_to_ball, radial_bound_check, tail_bound
from .euler_lagrange import el_residual, estimate_theta, h_ball, potential_f
from .maximize import MaximizeOptions, MaximizeResult, maximize, objective, objective_gradient

__version__ = "0.1.0"
