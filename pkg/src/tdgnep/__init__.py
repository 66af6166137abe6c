"""Time-discretized solver and certifier for time-dependent GNEPs and abstract economies."""
from .convexity import check_quasiconcave, check_semistrict
from .economy import (
    EconomyGame,
    EconomyModel,
    budget_rhs,
    build_model,
    compute_R,
    excess_demand,
    project_prices,
    to_gnep,
    truncated_consumption_bound,
    validate,
)
from .errors import ConvergenceError, InfeasibleError, MembershipError, ScenarioError, ShapeError
from .fnspace import TimeGrid, Trajectory, combine, inner_product, make_grid, norm
from .gnep import (
    ConcaveObjective,
    GnepInstance,
    LinearObjective,
    Player,
    SolverSchedule,
    StrategyProfile,
    best_response,
    merge,
    ni_gap,
    solve,
    split,
)
from .oracle import brute_force_oracle
from .scenario import load_scenario, parse_scenario, serialize_scenario
from .verify import (
    EquilibriumCertificate,
    Tolerances,
    certify,
    check_cp,
    check_market_clearing,
    check_mp,
    check_pp,
    check_walras,
)

__version__ = "0.1.0"
