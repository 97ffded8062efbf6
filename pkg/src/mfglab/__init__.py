"""Desk-scale numerical laboratory for first-order potential mean field games.

The package computes Nash equilibria of the reduced terminal-cost game two
ways (potential minimization, best-response fixed point), verifies the
structural facts that make the potential picture work (minimizers are
equilibria, uniqueness under displacement convexity), and realizes the
entropy-solution selection principle in the scalar case via Hopf-Lax values
and Godunov / viscous Burgers solvers.
"""

from .couplings import (
    Coupling,
    check_displacement_monotone,
    check_finite_dim_gradient,
    check_linear_derivative,
    check_ll_monotone,
    check_potentializable,
    equilibrium_field,
    interaction_coupling,
    linear_coupling,
    quadratic_interaction,
    quadratic_well,
    sample_point_pairs,
    second_moment_tilt,
    selection_example,
    selection_phi,
    selection_phi_prime,
    simplex_minimizer_is_equilibrium,
)
from .errors import (
    BestResponseError,
    ConfigurationError,
    InvalidInputError,
    MFGLabError,
    NumericsError,
)
from .hjb import (
    BurgersField,
    Grid1D,
    ValueSample,
    biased_viscous_burgers,
    characteristics,
    detect_shock,
    godunov_burgers,
    hopf_lax_value,
    selection_compare,
    selection_switch_estimate,
    viscous_burgers,
)
from .measures import (
    EmpiricalMeasure,
    measure,
    push_forward,
    second_moment,
    w2_assignment,
    w2_sorted_1d,
)
from .paths import (
    DeviationReport,
    PathAtom,
    PathMeasure,
    individual_cost,
    marginal_at,
    path_action,
    path_potential,
    straight_line_lift,
    verify_equilibrium_support,
)
from .reduced_game import (
    Enumeration1D,
    EquilibriumResult,
    GameSpec,
    SolverOptions,
    best_response,
    enumerate_equilibria_1d,
    fictitious_play,
    minimize_potential,
    nash_fixed_point,
    nash_residual,
    reduced_potential,
    reduced_potential_grad,
)

__version__ = "0.1.0"
