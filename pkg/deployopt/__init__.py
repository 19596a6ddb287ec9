"""
Minimum price deployment of component based applications onto virtual machine offers

The package builds the constraint model of placing component instances on leased
machines, shrinks its search space by merging co-located components, fixing the placement
of a conflict clique and adding symmetry breaking constraints, and solves it with an exact
built-in search or through an external SMT-LIB2 solver.
"""

from .encode import ConstraintIR as ConstraintIR
from .encode import build_ir as build_ir
from .encode import lower_h_terms as lower_h_terms
from .estimator import InstanceEstimate as InstanceEstimate
from .estimator import estimate_instances as estimate_instances
from .exceptions import *
from .model import *
from .planner import PlanOptions as PlanOptions
from .planner import analyze as analyze
from .planner import plan as plan
from .schema import load_offers as load_offers
from .schema import load_spec as load_spec
from .solver import SolverOptions as SolverOptions
from .solver import SolveResult as SolveResult
from .solver import SolveStatus as SolveStatus
from .solver import solve as solve
from .symbreak import Strategy as Strategy

__version__ = "1.0.0"
