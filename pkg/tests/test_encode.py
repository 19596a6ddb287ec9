"""
Tests for model assembly in deployopt.encode and the IR types in deployopt.ir
"""

from __future__ import annotations

from unittest import TestCase

from deployopt.encode import build_ir
from deployopt.encode import lower_h_terms
from deployopt.exceptions import DimensionMismatch
from deployopt.exceptions import EmptyCatalog
from deployopt.exceptions import IncompatibleBreakers
from deployopt.exceptions import MalformedIR
from deployopt.ir import Family
from deployopt.ir import a_var
from deployopt.ir import f_var
from deployopt.ir import p_var
from deployopt.ir import relation
from deployopt.ir import x_var
from deployopt.model import Conflict
from deployopt.model import DeploymentPlan
from deployopt.model import ExclusiveDeploy
from deployopt.model import FullDeploy
from deployopt.model import OfferCatalog
from deployopt.model import Op
from deployopt.symbreak import gen_pr

from .unittest_helpers import make_catalog
from .unittest_helpers import make_spec


class RelationTests(TestCase):
	"""
	Tests for linear relations
	"""

	def test_merge_terms(self) -> None:
		"""
		Check that repeated variables merge and zero coefficients drop
		"""
		rel = relation([(1, a_var(1, 1)), (2, a_var(2, 1)), (-1, a_var(1, 1))], Op.LE, 3)
		assert rel.terms == ((2, a_var(2, 1)),)
		assert str(rel) == "2*a_2_1 <= 3"

	def test_negative_lead(self) -> None:
		"""
		Check the rendering of a leading negative term
		"""
		rel = relation([(-3, p_var(2)), (1, p_var(1))], Op.GE, 0)
		assert str(rel) == "-3*p_2 + p_1 >= 0"


class BuildIRTests(TestCase):
	"""
	Tests for build_ir
	"""

	catalog = make_catalog(((2, 2), 5))

	def test_single_cell_model(self) -> None:
		"""
		Check the families and domains of a one component, one machine, one offer model
		"""
		ir = build_ir(make_spec([(1, 1)]), self.catalog, 1)
		assert ir.family_counts() == {
			Family.BASIC_ALLOCATION: 1,
			Family.OCCUPANCY: 2,
			Family.CAPACITY: 2,
			Family.LINK: 1,
			Family.UNUSED: 2,
		}
		assert len(ir.domains) == 6
		assert ir.bounds[p_var(1)] == (0, 5)
		assert ir.objective == (p_var(1),)

	def test_conflict_rows(self) -> None:
		"""
		Check that a conflict adds one row per machine
		"""
		spec = make_spec([(1, 1), (1, 1)], [Conflict(1, 2)])
		ir = build_ir(spec, self.catalog, 3)
		assert ir.family_counts()[Family.CONFLICT] == 3

	def test_indicators(self) -> None:
		"""
		Check that exclusive and full deployment define indicator variables
		"""
		spec = make_spec(
			[(1, 1), (1, 1), (1, 1)],
			[ExclusiveDeploy((1, 2)), FullDeploy(3), Conflict(2, 3)],
		)
		ir = build_ir(spec, self.catalog, 2)
		defined = {d.aux for d in ir.definitions}
		assert defined == {x_var(1), x_var(2), f_var(3, 1), f_var(3, 2)}
		assert Family.BASIC_ALLOCATION in ir.family_counts()
		assert ir.family_counts()[Family.BASIC_ALLOCATION] == 1

	def test_lowering(self) -> None:
		"""
		Check that lowering replaces single-cell indicators and adds two rows for the others
		"""
		spec = make_spec(
			[(1, 1), (1, 1), (1, 1)],
			[ExclusiveDeploy((1, 2)), FullDeploy(3), Conflict(2, 3)],
		)
		ir = build_ir(spec, self.catalog, 2)
		lowered = lower_h_terms(ir)
		assert lowered.lowered
		assert lower_h_terms(lowered) is lowered
		# x_1 and x_2 sum two cells each; f_3_k has a single neighbour cell
		assert lowered.family_counts()[Family.INDICATOR] == 4
		names = {var for var, _, _ in lowered.domains}
		assert f_var(3, 1) not in names
		assert x_var(1) in names

	def test_violations(self) -> None:
		"""
		Check that a valid plan has no violations and a wrong price is reported
		"""
		spec = make_spec([(1, 1), (1, 1)], [Conflict(1, 2)])
		ir = build_ir(spec, self.catalog, 2)
		plan = DeploymentPlan.build((1, 2), [(1, 0), (0, 1)], (1, 1), self.catalog)
		values = ir.values_for(plan)
		assert ir.violations(values) == []
		assert ir.objective_value(values) == 10
		assert ir.plan_from(values) == plan
		values[p_var(2)] = 4
		assert any(v.startswith("link") for v in ir.violations(values))

	def test_dump(self) -> None:
		"""
		Check the header and grouping of a dumped model
		"""
		lines = build_ir(make_spec([(1, 1)]), self.catalog, 1).dump().splitlines()
		assert lines[0] == "; test: N=1 M=1 H=2 O=1"
		assert lines[1] == "minimize p_1"
		assert lines[2] == "# basic-allocation"
		assert lines[3] == "a_1_1 >= 1"

	def test_errors(self) -> None:
		"""
		Check the errors raised for unusable inputs
		"""
		spec = make_spec([(1, 1)])
		with self.subTest("empty"), self.assertRaises(EmptyCatalog):
			build_ir(spec, OfferCatalog(("cpu", "memory"), ()), 1)
		with self.subTest("dimensions"), self.assertRaises(DimensionMismatch):
			build_ir(spec, make_catalog(((2,), 5), dimensions=("cpu",)), 1)
		with self.subTest("machines"), self.assertRaises(MalformedIR):
			build_ir(spec, self.catalog, 0)
		with self.subTest("breakers"), self.assertRaises(IncompatibleBreakers):
			build_ir(spec, self.catalog, 2, gen_pr(3))

	def test_plan_size_mismatch(self) -> None:
		"""
		Check that a plan with a different number of machines raises DimensionMismatch
		"""
		ir = build_ir(make_spec([(1, 1)]), self.catalog, 2)
		plan = DeploymentPlan.build((1,), [(1,)], (1,), self.catalog)
		with self.assertRaises(DimensionMismatch):
			ir.values_for(plan)
