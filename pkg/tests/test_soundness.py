"""
Randomised checks that symmetry breakers and the solver never lose an optimum
"""

from __future__ import annotations

import random
from unittest import TestCase

from deployopt.encode import ConstraintIR
from deployopt.encode import build_ir
from deployopt.estimator import estimate_instances
from deployopt.exceptions import InfeasibleInstanceCounts
from deployopt.exceptions import InsufficientMachines
from deployopt.exceptions import SpaceTooLarge
from deployopt.model import ApplicationSpec
from deployopt.model import OfferCatalog
from deployopt.model import check_plan
from deployopt.solver import SolveResult
from deployopt.solver import SolverOptions
from deployopt.solver import SolveStatus
from deployopt.solver import brute_force
from deployopt.solver import solve
from deployopt.symbreak import Strategy
from deployopt.symbreak import generate

from .unittest_helpers import random_instance

SEEDS = range(500)
SPACE_LIMIT = 1_000_000
STRATEGIES = (Strategy.PR, Strategy.LX, Strategy.PRLX, Strategy.FV, Strategy.FVPR, Strategy.FVLX)
WARM_START = (True, False)


def instance(seed: int) -> tuple[ApplicationSpec, OfferCatalog, int]:
	"""
	Return the spec, catalog and machine count of a seeded instance: at most 4 components,
	4 machines and 3 offers
	"""
	rng = random.Random(seed)
	spec, catalog = random_instance(rng)
	return spec, catalog, rng.randint(1, 4)


def enumerate_or_none(ir: ConstraintIR) -> SolveResult|None:
	"""
	Return the enumerated optimum of a model, or None when its space is too large to walk
	"""
	try:
		return brute_force(ir, SPACE_LIMIT)
	except SpaceTooLarge:
		return None


class SoundnessTests(TestCase):
	"""
	Tests comparing solver results with exhaustive enumeration on random instances
	"""

	def test_solver_matches_enumeration(self) -> None:
		"""
		Check that the solver and enumeration agree on status and price without breakers
		"""
		checked = 0
		for seed in SEEDS:
			spec, catalog, machines = instance(seed)
			ir = build_ir(spec, catalog, machines)
			if (expect := enumerate_or_none(ir)) is None:
				continue
			checked += 1
			for warm_start in WARM_START:
				with self.subTest(seed=seed, warm_start=warm_start):
					result = solve(ir, SolverOptions(warm_start=warm_start))
					assert result.status is expect.status
					assert result.objective == expect.objective
					if result.plan is not None:
						assert check_plan(spec, catalog, result.plan).passed
		assert checked >= len(SEEDS) // 2

	def test_breakers_keep_optimum(self) -> None:
		"""
		Check that every strategy keeps the optimum of the unbroken model
		"""
		for seed in SEEDS:
			spec, catalog, machines = instance(seed)
			if (reference := enumerate_or_none(build_ir(spec, catalog, machines))) is None:
				continue
			try:
				estimate = estimate_instances(spec)
			except InfeasibleInstanceCounts:
				continue
			for strategy in STRATEGIES:
				try:
					breakers = generate(strategy, spec, estimate, machines=machines)
				except InsufficientMachines:
					continue
				ir = build_ir(spec, catalog, machines, breakers)
				for warm_start in WARM_START:
					with self.subTest(seed=seed, strategy=strategy.value, warm_start=warm_start):
						result = solve(ir, SolverOptions(warm_start=warm_start))
						if reference.status is SolveStatus.INFEASIBLE:
							assert result.status is SolveStatus.INFEASIBLE
						else:
							assert result.objective == reference.objective

	def test_shapes(self) -> None:
		"""
		Check that the seeded instances cover every size up to 4 components, 4 machines and
		3 offers
		"""
		shapes = set()
		for seed in SEEDS:
			spec, catalog, machines = instance(seed)
			shapes.add((len(spec.components), machines, len(catalog)))
		assert max(shapes) == (4, 4, 3)
		assert {s[0] for s in shapes} == {1, 2, 3, 4}
		assert {s[1] for s in shapes} == {1, 2, 3, 4}
		assert {s[2] for s in shapes} == {1, 2, 3}

	def test_constraint_kinds(self) -> None:
		"""
		Check that the seeded instances include every constraint kind
		"""
		kinds = set()
		for seed in SEEDS:
			spec, _, _ = instance(seed)
			kinds.update(c.kind for c in spec.constraints)
		assert kinds == {
			"conflict", "colocate", "exclusive", "require-provide", "exact-ratio",
			"full-deploy", "bound", "conditional-bound",
		}
