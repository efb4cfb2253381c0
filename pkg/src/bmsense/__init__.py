"""Matrix sensing in Burer-Monteiro form with high-order loss penalties."""

from .operators import (
    SensingOperator,
    ProblemInstance,
    make_explicit_operator,
    make_epsilon_operator,
    make_gaussian_operator,
    make_identity_operator,
    make_instance,
    mask_claimed_delta,
    mask_two_sided_delta,
    estimate_rip_constant,
    read_operator,
    write_operator,
)
from .losses import (
    LossSpec,
    f_value,
    fl_value,
    f_lambda_value,
    gradient,
    hessian_quadratic_form,
    hessian_matrix,
    h_gradient,
    h_directional_derivative,
    taylor_identity_residual,
    taylor_remainder_coefficient,
    scalar_demo,
    c_of_l,
    c_of_l_exact,
)
from .landscape import (
    CriticalPointReport,
    TheoremVerdict,
    classify_point,
    thm1_check,
    thm4_check,
    escape_direction,
    near_region_radius,
    global_benign_condition,
    lifted_region_threshold,
    landscape_sweep,
)
from .optimizer import (
    PGDConfig,
    Trajectory,
    gradient_descent,
    perturbed_gd,
    find_spurious_minima,
    distance_to_truth,
)

__version__ = "0.1.0"
