"""Worthwhile-to-move dynamics and the local search proximal algorithm."""

from .behavior import (
    AgentProfile,
    CostModel,
    Friction,
    RestPoint,
    advantage_to_move,
    classify_rest_point,
    cost_to_move,
    enclosing_membership,
    enclosing_set,
    instantaneous_advantage,
    opportunity_cost,
    satisficing_theta,
    transition_ratio,
    worthwhile_membership,
    worthwhile_set,
)
from .dynamics import (
    Mode,
    Policy,
    ProcessConfig,
    Trace,
    TraceRecord,
    clairvoyance_index,
    ekeland_certificate,
    hill_climb,
    inefficiency_gap,
    run_process,
    select_next,
    time_accounting,
    verify_budget,
    verify_certificate,
    verify_shrinking,
)
from .goals import frustration, reachable_supremum, satisficing_level, set_aspiration
from .space import (
    Ball,
    Box,
    EuclideanSpace,
    FiniteMetricSpace,
    GainFunction,
    Halfspace,
    BoxBall,
    Intersection,
    builtin_gain,
    gradient_check,
    project,
    validate_metric,
)

__version__ = "0.1.0"
