"""Explicit control-barrier-function safety filters with a resource-aware runtime."""
from .affine import (AffineEvaluator, AffineProblem, AffineRegionLaw, NoRegionFound,
                     affine_problem_from, enumerate_regions, eval_affine, lipschitz_constant,
                     precompute_region, read_region_table, write_region_table)
from .estimators import ExplicitCBFController, SafetyFilter
from .frontend import (BarrierKind, BarrierSpec, ClassKGain, ControlAffineSystem, FilterProblem,
                       SlackPolicy, VanishingControlDirection, assemble, check_barrier)
from .oracle import BudgetExceeded, SolveResult, Status, solve, theta_active_set, theta_enumerate
from .qp_core import (ConstraintSet, RankDeficient, WeightMatrix, candidate, gram_factorize,
                      kkt_residuals)
from .region import Reason, TriggerValues, first_member, membership, triggers
from .runtime import (FilterState, InfeasibleError, ResourceAwareFilter, Trajectory, simulate,
                      step)
from .scenarios import Scenario, ScenarioError, load_scenario

__version__ = "0.1.0"
