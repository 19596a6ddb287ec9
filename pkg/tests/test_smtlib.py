"""
Tests for SMT-LIB2 emission and external solver handling in deployopt.smtlib
"""

from __future__ import annotations

import shlex
import tempfile
import unittest
from pathlib import Path
from unittest import TestCase

from deployopt.encode import build_ir
from deployopt.encode import lower_h_terms
from deployopt.exceptions import ExternalFailure
from deployopt.exceptions import ExternalTimeout
from deployopt.exceptions import ExternalUnavailable
from deployopt.exceptions import ModelInconsistent
from deployopt.exceptions import ModelParseError
from deployopt.exceptions import UnloweredIndicator
from deployopt.estimator import estimate_instances
from deployopt.model import Conflict
from deployopt.model import ExclusiveDeploy
from deployopt.smtlib import emit_smtlib
from deployopt.smtlib import minimize_external
from deployopt.smtlib import parse_model
from deployopt.smtlib import read_objective
from deployopt.smtlib import read_status
from deployopt.smtlib import run_external
from deployopt.smtlib import solve_external
from deployopt.solver import SolveStatus
from deployopt.solver import solve
from deployopt.symbreak import Strategy
from deployopt.symbreak import generate

from .unittest_helpers import external_solver
from .unittest_helpers import make_catalog
from .unittest_helpers import make_spec

CATALOG = make_catalog(((2, 2), 5), ((4, 4), 9))

MODEL = """sat
(
  (define-fun a_1_1 () Int 1)
  (define-fun t_1 () Int 1)
  (define-fun v_1 () Int 1)
  (define-fun p_1 () Int 5)
  (define-fun r_1_1 () Int 2)
  (define-fun r_1_2 () Int 2)
)
"""


def _canned(output: str, directory: str) -> str:
	"""
	Return a command template that prints `output` whatever script it is given
	"""
	path = Path(directory) / "answer.txt"
	path.write_text(output)
	return f"sh -c {shlex.quote('cat ' + shlex.quote(str(path)))} {{file}}"


class EmitTests(TestCase):
	"""
	Tests for emit_smtlib
	"""

	ir = build_ir(make_spec([(1, 1)]), CATALOG, 1)

	def test_layout(self) -> None:
		"""
		Check the order of declarations, assertions and commands
		"""
		lines = emit_smtlib(self.ir).splitlines()
		assert lines[0] == "; test: N=1 M=1 H=2 O=2"
		assert lines[1] == "(set-logic QF_LIA)"
		assert "(declare-fun a_1_1 () Int)" in lines
		assert "(assert (and (<= 0 t_1) (<= t_1 2)))" in lines
		assert "(assert (>= a_1_1 1))" in lines
		assert "(assert (<= (+ a_1_1 (- v_1)) 0))" in lines
		assert "(assert (=> (= v_1 0) (= t_1 0)))" in lines
		assert lines[-4:] == ["(minimize p_1)", "(check-sat)", "(get-objectives)", "(get-model)"]

	def test_feasibility_script(self) -> None:
		"""
		Check that a cost cap replaces the objective commands
		"""
		text = emit_smtlib(self.ir, cost_cap=7, optimize=False)
		assert "(assert (<= p_1 7))" in text
		assert "minimize" not in text
		assert "get-objectives" not in text
		assert text.endswith("(check-sat)\n(get-model)\n")

	def test_deterministic(self) -> None:
		"""
		Check that equal models give identical scripts
		"""
		again = build_ir(make_spec([(1, 1)]), CATALOG, 1)
		assert emit_smtlib(self.ir) == emit_smtlib(again)

	def test_fixed_cells(self) -> None:
		"""
		Check that fixed cells are asserted as equalities
		"""
		spec = make_spec([(1, 1), (1, 1)], [Conflict(1, 2)])
		breakers = generate(Strategy.FV, spec, estimate_instances(spec))
		text = emit_smtlib(build_ir(spec, CATALOG, 2, breakers))
		assert "(assert (= a_1_1 1))" in text
		assert "(assert (= a_2_1 0))" in text

	def test_unlowered(self) -> None:
		"""
		Check that indicator definitions must be lowered first
		"""
		spec = make_spec([(1, 1), (1, 1)], [ExclusiveDeploy((1, 2))])
		ir = build_ir(spec, CATALOG, 2)
		with self.assertRaises(UnloweredIndicator):
			emit_smtlib(ir)
		assert "(declare-fun x_1 () Int)" in emit_smtlib(lower_h_terms(ir))


class ReadOutputTests(TestCase):
	"""
	Tests for reading solver answers and models
	"""

	ir = build_ir(make_spec([(1, 1)]), CATALOG, 1)

	def test_status(self) -> None:
		"""
		Check the first answer line is returned
		"""
		for output, expect in [
			("sat\n(model)", "sat"),
			("unsat\n(error \"model is not available\")", "unsat"),
			("timeout\n", "unknown"),
			("", "unknown"),
		]:
			with self.subTest(output=output):
				assert read_status(output) == expect

	def test_objective(self) -> None:
		"""
		Check that objective blocks with plain or compound terms are read
		"""
		assert read_objective("(objectives\n (p_1 5)\n)") == 5
		assert read_objective("(objectives\n ((+ p_1 p_2) 14)\n)") == 14
		assert read_objective("(objectives ((+ a b) (- 3)))") == -3
		assert read_objective("sat") is None

	def test_parse_model(self) -> None:
		"""
		Check that a model is turned into a checked plan
		"""
		plan = parse_model(MODEL, self.ir)
		assert plan.assignment == ((1,),)
		assert plan.types == (1,)
		assert plan.total_price == 5

	def test_parse_errors(self) -> None:
		"""
		Check that missing models and variables raise ModelParseError
		"""
		with self.subTest("empty"), self.assertRaises(ModelParseError):
			parse_model("sat\n", self.ir)
		with self.subTest("missing"), self.assertRaises(ModelParseError):
			parse_model(MODEL.replace("(define-fun p_1 () Int 5)", ""), self.ir)

	def test_inconsistent(self) -> None:
		"""
		Check that an occupied machine hosting nothing is reported as inconsistent
		"""
		ir = build_ir(make_spec([(1, 1)]), CATALOG, 2)
		model = MODEL + "\n".join([
			"(define-fun a_1_2 () Int 0)",
			"(define-fun t_2 () Int 1)",
			"(define-fun v_2 () Int 1)",
			"(define-fun p_2 () Int 5)",
			"(define-fun r_2_1 () Int 2)",
			"(define-fun r_2_2 () Int 2)",
		])
		with self.assertRaises(ModelInconsistent):
			parse_model(model, ir)


class RunExternalTests(TestCase):
	"""
	Tests for running external commands
	"""

	ir = build_ir(make_spec([(1, 1)]), CATALOG, 1)

	def test_missing_binary(self) -> None:
		"""
		Check that an unknown command raises ExternalUnavailable
		"""
		with self.assertRaises(ExternalUnavailable):
			run_external("deployopt-no-such-solver {file}", "model.smt2", 5)
		with self.assertRaises(ExternalUnavailable):
			run_external("", "model.smt2", 5)

	def test_failure(self) -> None:
		"""
		Check that a non-zero exit without an answer raises ExternalFailure
		"""
		with self.assertRaises(ExternalFailure) as cm:
			run_external("sh -c 'exit 3' {file}", "model.smt2", 5)
		assert cm.exception.args[1] == 3

	def test_timeout(self) -> None:
		"""
		Check that a command exceeding its limit raises ExternalTimeout
		"""
		with self.assertRaises(ExternalTimeout):
			run_external("sh -c 'exec sleep 5' {file}", "model.smt2", 0.2)

	def test_canned_optimum(self) -> None:
		"""
		Check that a satisfiable answer with an objective becomes an optimal result
		"""
		with tempfile.TemporaryDirectory() as tmp:
			template = _canned(MODEL + "(objectives\n (p_1 5)\n)\n", tmp)
			result = solve_external(self.ir, template, 5)
		assert result.status is SolveStatus.OPTIMAL
		assert result.objective == 5

	def test_canned_unsat(self) -> None:
		"""
		Check that an unsatisfiable answer is a proven infeasibility
		"""
		with tempfile.TemporaryDirectory() as tmp:
			result = solve_external(self.ir, _canned("unsat\n", tmp), 5)
		assert result.status is SolveStatus.INFEASIBLE
		assert result.proven

	def test_canned_objective_mismatch(self) -> None:
		"""
		Check that a reported objective differing from the plan price is refused
		"""
		with tempfile.TemporaryDirectory() as tmp:
			template = _canned(MODEL + "(objectives\n (p_1 4)\n)\n", tmp)
			with self.assertRaises(ModelInconsistent):
				solve_external(self.ir, template, 5)


@unittest.skipIf(external_solver() is None, "no external SMT solver installed")
class ExternalSolverTests(TestCase):
	"""
	Tests against an installed SMT solver
	"""

	def test_matches_builtin(self) -> None:
		"""
		Check that the external optimum equals the built-in one
		"""
		template = external_solver()
		assert template is not None
		spec = make_spec([(1, 1), (1, 1), (2, 1)], [Conflict(1, 2), ExclusiveDeploy((2, 3))])
		ir = lower_h_terms(build_ir(spec, CATALOG, 3))
		expect = solve(ir).objective
		with self.subTest("optimize"):
			assert solve_external(ir, template, 60).objective == expect
		with self.subTest("binary search"):
			assert minimize_external(ir, template, 60).objective == expect
