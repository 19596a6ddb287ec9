# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""
The planning pipeline shared by the command line and the benchmark harness

validate → merge co-located components → estimate instances → symmetry breakers → model →
solve (built-in or external) → expand merged rows → independent check
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from dataclasses import field

from .confgraph import FixMode
from .encode import ConstraintIR
from .encode import build_ir
from .encode import lower_h_terms
from .estimator import InstanceEstimate
from .estimator import estimate_instances
from .exceptions import ExternalUnavailable
from .exceptions import ModelInconsistent
from .model import ApplicationSpec
from .model import DeploymentPlan
from .model import OfferCatalog
from .model import ValidatedSpec
from .model import ValidationReport
from .model import check_plan
from .model import validate_spec
from .preprocess import ComponentMapping
from .preprocess import expand_plan
from .preprocess import merge_colocated
from .smtlib import solve_external
from .solver import SolverOptions
from .solver import SolveResult
from .solver import SolveStatus
from .solver import solve
from .symbreak import BreakerSet
from .symbreak import Strategy
from .symbreak import generate

__all__ = ["Backend", "PlanOptions", "Analysis", "PlanOutcome", "analyze", "plan"]

logger = logging.getLogger(__name__)


class Backend(enum.Enum):

	BUILTIN = "builtin"
	SMT = "smt"


@dataclass(frozen=True)
class PlanOptions:
	"""
	Settings of one planning run

	`fix_mode` None picks the mode from the selected clique; `external` is the command
	template used by the SMT backend.
	"""

	strategy: Strategy = Strategy.NONE
	fix_mode: FixMode|None = None
	relax_exclusive: bool = True
	merge: bool = True
	backend: Backend = Backend.BUILTIN
	external: str|None = None
	optimize: bool = True
	solver: SolverOptions = field(default_factory=SolverOptions)


@dataclass(frozen=True)
class Analysis:
	"""
	Everything computed for a spec before solving
	"""

	spec: ValidatedSpec
	merged: ValidatedSpec
	mapping: ComponentMapping
	estimate: InstanceEstimate
	breakers: BreakerSet
	ir: ConstraintIR

	@property
	def fixed_cells(self) -> int:
		return self.breakers.fixed.count_fixed

	@property
	def cells(self) -> int:
		return self.ir.dims.components * self.ir.machines

	def table(self) -> str:
		names = {c.id: c.name for c in self.merged.spec.components}
		return self.breakers.fixed.table(self.merged.ids, self.ir.machines, names)


@dataclass(frozen=True)
class PlanOutcome:

	analysis: Analysis
	result: SolveResult
	plan: DeploymentPlan|None = None
	report: ValidationReport|None = None

	@property
	def status(self) -> SolveStatus:
		return self.result.status

	@property
	def objective(self) -> int|None:
		return self.result.objective

	@property
	def m_estimated(self) -> int:
		return self.analysis.ir.machines

	@property
	def m_occupied(self) -> int|None:
		return None if self.plan is None else self.plan.occupied

	@property
	def instances(self) -> int|None:
		return None if self.plan is None else self.plan.deployed_instances

	def summary(self) -> str:
		"""
		Describe the outcome in a few human readable lines
		"""
		spec = self.analysis.spec.spec
		lines = [f"{spec.name}: {self.status.value}"]
		if self.plan is not None:
			lines.append(
				f"price {self.plan.total_price} on {self.plan.occupied} of {self.m_estimated}"
				f" machines, {self.plan.deployed_instances} instances",
			)
			names = {c.id: c.name for c in spec.components}
			for k, offer in enumerate(self.plan.types):
				hosted = sorted(self.plan.column(k))
				if hosted:
					members = ", ".join(names[i] for i in hosted)
					lines.append(f"  VM{k + 1}: offer {offer}: {members}")
		stats = self.result.stats
		lines.append(f"{stats.nodes_explored} nodes, {stats.time_ms} ms")
		return "\n".join(lines)


def _warn_reference(spec: ApplicationSpec, key: str, value: int) -> None:
	if (expected := spec.reference_value(key)) is not None and expected != value:
		logger.warning("%s: %s is %d, reference value %d", spec.name, key, value, expected)


def analyze(
	spec: ApplicationSpec|ValidatedSpec,
	catalog: OfferCatalog,
	options: PlanOptions|None = None,
) -> Analysis:
	"""
	Validate, merge and estimate a spec, then build its model with the chosen breakers
	"""
	options = options or PlanOptions()
	validated = spec if isinstance(spec, ValidatedSpec) else validate_spec(spec, catalog)
	if options.merge:
		merged, mapping = merge_colocated(validated)
	else:
		merged, mapping = validated, ComponentMapping(passthrough=validated.ids)
	estimate = estimate_instances(merged, options.relax_exclusive)
	_warn_reference(validated.spec, "m_upper", estimate.m_upper)
	breakers = generate(options.strategy, merged, estimate, mode=options.fix_mode)
	if options.strategy.fixes_values:
		_warn_reference(validated.spec, "fixed_cells", breakers.fixed.count_fixed)
	ir = build_ir(merged, catalog, estimate.m_upper, breakers, estimate.floors)
	return Analysis(validated, merged, mapping, estimate, breakers, ir)


def plan(
	spec: ApplicationSpec|ValidatedSpec,
	catalog: OfferCatalog,
	options: PlanOptions|None = None,
) -> PlanOutcome:
	"""
	Compute a minimum price deployment of a spec

	Raises `ExternalUnavailable` for the SMT backend without a command template, and
	`ModelInconsistent` if the returned plan fails the independent check.
	"""
	options = options or PlanOptions()
	analysis = analyze(spec, catalog, options)
	match options.backend:
		case Backend.BUILTIN:
			result = solve(analysis.ir, options.solver)
		case Backend.SMT:
			if not options.external:
				raise ExternalUnavailable("no external solver command configured")
			result = solve_external(
				lower_h_terms(analysis.ir), options.external,
				options.solver.timeout, options.optimize,
			)
	if result.plan is None:
		return PlanOutcome(analysis, result)
	expanded = expand_plan(result.plan, analysis.mapping)
	report = check_plan(analysis.spec, catalog, expanded)
	if not report.passed:
		failed = [f"{f.family}: {', '.join(f.offenders)}" for f in report.failures()]
		raise ModelInconsistent(f"{analysis.spec.name}: plan fails the independent check", failed)
	return PlanOutcome(analysis, result, expanded, report)
