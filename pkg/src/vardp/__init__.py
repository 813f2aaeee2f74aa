"""Variable-discount dynamic programming.

Fixed points of Bellman, Koopman and discounted transfer operators under
generalized-contraction iteration, and their vanishing-discount limits:
the ergodic value with a calibrated subaction, and the principal eigenpair
of the linear transfer operator.
"""

__version__ = "0.1.0"

from .discounts import (
    DiscountFamily,
    DiscountFunction,
    SampleSpec,
    make_family,
    make_linear,
    make_log,
    make_piecewise_linear,
    make_sqrt_root,
    verify_discount,
)
from .process import (
    DecisionProcess,
    FeasibleHistory,
    FiniteSpace,
    GridSpace,
    extend_history,
    history_from_actions,
    inductive_sum,
    validate,
)
from .operators import (
    FixedPointResult,
    Policy,
    ValueFunction,
    bellman_apply,
    extract_policy,
    fixed_point,
    koopman_apply,
    koopman_iterate,
    ruelle_apply,
    ruelle_power_iteration,
    transfer_apply,
)
from .limits import (
    DiscountLimitResult,
    check_assumption_limits,
    eigenpair_limit,
    subaction_limit,
)
from .regularity import (
    JointProcess,
    build_joint,
    check_domination_bound,
    check_separating,
    lipschitz_certificate,
    vhat_solve,
)
from .ergodic import (
    ActionGraph,
    EmpiricalMeasure,
    MaxMeanCycle,
    cycle_calibrated_subaction,
    holonomy_defect,
    max_mean_cycle,
    maximizing_orbit,
)
from .applications import (
    build_doubling,
    build_ifspdp,
    build_subshift,
    check_translation,
)
