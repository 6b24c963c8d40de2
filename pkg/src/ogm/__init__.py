"""Measurement planning for weighted Pauli observables.

Typical use::

    from ogm import load_observable, ogm_plan, draw_iid, ghz_state
    obs = load_observable("h.ham")
    plan = ogm_plan(obs)
"""
from .baselines import cs_uniform_plan, grouping_plan, l1_plan, lbcs_optimize, ldf_grouping
from .errors import (
    DimensionError,
    EmptyPlanError,
    IncompatibleError,
    OGMError,
    ParseError,
    PlanError,
    SolverError,
)
from .estimator import (
    EstimateReport,
    analytic_variance,
    f_value,
    fixed_list_estimate,
    fixed_list_variance,
    rmse,
    unified_estimate,
    variance_bounds,
)
from .kernels import BACKEND
from .observable import Observable, WeightedTerm, load_observable, parse_observable
from .overlap import diag_cost, final_cost, ogm_plan, optimize_distribution, overlapped_sets_v1, overlapped_sets_v2, prune_groups
from .pauli import PauliString, compatible, covers, join, parse_pauli, support
from .plan import MeasurementPlan, load_plan, save_plan
from .sampler import FixedMeasurementList, draw_iid, partial_derandomize, plan_from_list
from .simulator import StateVector, expectation, ghz_state, ground_state, measure, pauli_expectation, random_real_state

__version__ = "0.1.0"
