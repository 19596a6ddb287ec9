"""
Tests for the planning pipeline in deployopt.planner
"""

from __future__ import annotations

from unittest import TestCase

from deployopt.confgraph import FixMode
from deployopt.exceptions import ExternalUnavailable
from deployopt.ir import Family
from deployopt.model import Colocate
from deployopt.model import Conflict
from deployopt.planner import Backend
from deployopt.planner import PlanOptions
from deployopt.planner import analyze
from deployopt.planner import plan
from deployopt.solver import SolverOptions
from deployopt.solver import SolveStatus
from deployopt.symbreak import BENCH_STRATEGIES
from deployopt.symbreak import Strategy

from .unittest_helpers import load_fixture
from .unittest_helpers import make_catalog
from .unittest_helpers import make_spec

OPTIONS = SolverOptions(timeout=600)


class AnalyzeTests(TestCase):
	"""
	Tests for analyze
	"""

	def test_reference_fixed_cells(self) -> None:
		"""
		Check the fixed cells of the value fixing strategy on each case study
		"""
		cases = [
			("secure-web", {}, 18, 30),
			("secure-billing", {}, 12, 25),
			("oryx2", {}, 6, 110),
		]
		for name, parameters, fixed, cells in cases:
			with self.subTest(name):
				spec, catalog = load_fixture(name, **parameters)
				analysis = analyze(spec, catalog, PlanOptions(strategy=Strategy.FV))
				assert analysis.fixed_cells == fixed
				assert analysis.cells == cells

	def test_wordpress_fixed_cells(self) -> None:
		"""
		Check that Wordpress fixes its MySQL instances and reports where it leaves the reference values
		"""
		spec, catalog = load_fixture("wordpress", **{"min-wordpress-instances": 3})
		with self.assertLogs("deployopt.planner", "WARNING") as logs:
			analysis = analyze(spec, catalog, PlanOptions(strategy=Strategy.FV))
		fixed = analysis.breakers.fixed
		assert fixed.clique.members == (2, 3, 4, 5)
		assert fixed.mode is FixMode.CONSERVATIVE
		assert fixed.blocks[0] == (2, (1, 2, 3, 4, 5))
		assert analysis.fixed_cells == 20
		assert analysis.cells == 45
		assert logs.output == [
			"WARNING:deployopt.planner:wordpress: m_upper is 9, reference value 8",
			"WARNING:deployopt.planner:wordpress: fixed_cells is 20, reference value 9",
		]

	def test_oryx2_fix_mode(self) -> None:
		"""
		Check that Oryx2 fixes every estimated instance by default and both modes fix the same cells
		"""
		spec, catalog = load_fixture("oryx2")
		analysis = analyze(spec, catalog, PlanOptions(strategy=Strategy.FV))
		assert analysis.breakers.fixed.mode is FixMode.FULL
		for mode in FixMode:
			with self.subTest(mode=mode.value):
				analysis = analyze(spec, catalog, PlanOptions(strategy=Strategy.FV, fix_mode=mode))
				assert analysis.breakers.fixed.mode is mode
				assert analysis.fixed_cells == 6
				assert analysis.cells == 110

	def test_encoding_size(self) -> None:
		"""
		Check that each fixture has one link per machine and offer and one capacity row per
		machine and resource
		"""
		for name in ("secure-web", "secure-billing", "oryx2"):
			with self.subTest(name):
				spec, catalog = load_fixture(name)
				ir = analyze(spec, catalog).ir
				counts = ir.family_counts()
				assert counts[Family.LINK] == ir.dims.machines * ir.dims.offers
				assert counts[Family.CAPACITY] == ir.dims.resources * ir.dims.machines
				assert ir.dims.offers == len(catalog)

	def test_oryx2_merged(self) -> None:
		"""
		Check that Oryx2 is modelled over its merged components
		"""
		spec, catalog = load_fixture("oryx2")
		analysis = analyze(spec, catalog)
		assert analysis.ir.dims.components == 10
		assert analysis.ir.machines == 11
		assert not analysis.mapping.is_identity

	def test_without_merge(self) -> None:
		"""
		Check that merging can be disabled
		"""
		spec, catalog = load_fixture("oryx2")
		analysis = analyze(spec, catalog, PlanOptions(merge=False))
		assert analysis.ir.dims.components == 12
		assert analysis.mapping.is_identity

	def test_strict_surrogate(self) -> None:
		"""
		Check that the unrelaxed surrogate sizes the Wordpress model with every component deployed
		"""
		spec, catalog = load_fixture("wordpress", **{"min-wordpress-instances": 3})
		options = PlanOptions(strategy=Strategy.FV, relax_exclusive=False)
		with self.assertLogs("deployopt.planner", "WARNING"):
			analysis = analyze(spec, catalog, options)
		assert analysis.ir.machines == 11
		assert analysis.cells == 55
		assert analysis.fixed_cells == 20

	def test_table(self) -> None:
		"""
		Check that the fixed-cell table names the merged components
		"""
		spec, catalog = load_fixture("secure-web")
		analysis = analyze(spec, catalog, PlanOptions(strategy=Strategy.FV, fix_mode=FixMode.FULL))
		lines = analysis.table().splitlines()
		assert lines[1].startswith("Balancer")
		assert len(lines) == 6


class PlanTests(TestCase):
	"""
	Tests for plan with the built-in solver
	"""

	def test_strategies_agree(self) -> None:
		"""
		Check that every benchmarked strategy finds the same price for the small case studies
		"""
		for name in ("secure-web", "secure-billing"):
			spec, catalog = load_fixture(name)
			prices = set()
			for strategy in BENCH_STRATEGIES:
				with self.subTest(name, strategy=strategy.value):
					outcome = plan(spec, catalog, PlanOptions(strategy=strategy, solver=OPTIONS))
					assert outcome.status is SolveStatus.OPTIMAL
					assert outcome.report is not None and outcome.report.passed
					prices.add(outcome.objective)
			with self.subTest(name):
				assert len(prices) == 1

	def test_expanded_plan(self) -> None:
		"""
		Check that the plan of a merged spec is expanded to the original components
		"""
		spec = make_spec([(1, 1), (1, 1), (1, 1)], [Colocate(1, 2), Conflict(2, 3)])
		catalog = make_catalog(((2, 2), 5), ((4, 4), 9), ((1, 4), 3))
		outcome = plan(spec, catalog, PlanOptions(strategy=Strategy.FVPR))
		assert outcome.plan is not None
		assert outcome.plan.components == (1, 2, 3)
		assert outcome.plan.row(1) == outcome.plan.row(2)
		assert outcome.objective == 8
		assert outcome.m_estimated == 2
		assert outcome.m_occupied == 2
		assert outcome.instances == 3
		assert "test: Optimal" in outcome.summary()

	def test_smt_without_command(self) -> None:
		"""
		Check that the SMT backend without a command raises ExternalUnavailable
		"""
		spec, catalog = load_fixture("secure-billing")
		with self.assertRaises(ExternalUnavailable):
			plan(spec, catalog, PlanOptions(backend=Backend.SMT))
