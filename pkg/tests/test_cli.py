"""
Tests for the command line in deployopt.cli
"""

from __future__ import annotations

import contextlib
import io
import json
import os
import tempfile
from collections.abc import Sequence
from pathlib import Path
from unittest import TestCase
from unittest import mock

from deployopt.cli import ENV_EXTERNAL
from deployopt.cli import main

INFEASIBLE_SPEC = {
	"name": "contradiction",
	"dimensions": ["cpu", "memory", "storage"],
	"components": [{"id": 1, "name": "A", "requirements": {"cpu": 1, "memory": 1, "storage": 1}}],
	"constraints": [
		{"kind": "bound", "components": [1], "op": ">=", "n": 3},
		{"kind": "bound", "components": [1], "op": "<=", "n": 2},
	],
}


def run(*argv: str) -> tuple[int, str]:
	"""
	Run the command line, returning the exit code and standard output
	"""
	stdout, stderr = io.StringIO(), io.StringIO()
	with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
		code = main(list(argv))
	return code, stdout.getvalue()


class CommandLineTests(TestCase):
	"""
	Tests for the deployopt commands and their exit codes
	"""

	def setUp(self) -> None:
		tmp = tempfile.TemporaryDirectory()
		self.addCleanup(tmp.cleanup)
		self.tmp = Path(tmp.name)

	def write(self, name: str, content: str|dict[str, object]|Sequence[object]) -> Path:
		path = self.tmp / name
		path.write_text(content if isinstance(content, str) else json.dumps(content))
		return path

	def test_estimate(self) -> None:
		"""
		Check that estimate prints the counts as JSON
		"""
		code, out = run("estimate", "secure-web")
		assert code == 0
		document = json.loads(out)
		assert document["nu"] == [1, 1, 2, 1, 1]
		assert document["m_upper"] == 6

	def test_estimate_strict(self) -> None:
		"""
		Check the Wordpress shorthand with the unrelaxed surrogate, which differs from the reference bound
		"""
		with self.assertLogs("deployopt.cli", "WARNING") as logs:
			code, out = run("estimate", "wordpress", "--min-wordpress-instances", "5", "--surrogate", "strict")
		assert code == 0
		assert json.loads(out)["m_upper"] == 16
		assert logs.output == ["WARNING:deployopt.cli:wordpress: m_upper is 16, reference value 12"]

	def test_estimate_merged(self) -> None:
		"""
		Check that merged groups are listed
		"""
		code, out = run("estimate", "oryx2")
		assert code == 0
		document = json.loads(out)
		assert document["m_upper"] == 11
		assert document["merged"] == [{"id": 5, "members": [5, 8, 9]}]

	def test_malformed_json(self) -> None:
		"""
		Check that a malformed spec file exits with status 2
		"""
		path = self.write("bad.json", "{\n  \"name\": \n")
		assert run("estimate", str(path))[0] == 2

	def test_missing_file(self) -> None:
		"""
		Check that an unknown spec exits with status 2
		"""
		assert run("estimate", "no-such-spec")[0] == 2

	def test_infeasible_counts(self) -> None:
		"""
		Check that contradictory bounds exit with status 3
		"""
		assert run("estimate", str(self.write("spec.json", INFEASIBLE_SPEC)))[0] == 3

	def test_analyze(self) -> None:
		"""
		Check that analyze reports the fixed cells
		"""
		code, out = run("analyze", "secure-billing", "20", "--strategy", "fv")
		assert code == 0
		assert "fixed cells: 12/25 (48%)" in out
		assert "selected {CodingService, Gateway, LoadBalancer}" in out

	def test_plan_and_check(self) -> None:
		"""
		Check that a written plan passes check, and fails it once its price is altered
		"""
		plan_path = self.tmp / "plan.json"
		code, _ = run("plan", "secure-billing", "20", "--strategy", "fvpr", "--out", str(plan_path))
		assert code == 0
		assert run("check", "secure-billing", "20", str(plan_path))[0] == 0
		document = json.loads(plan_path.read_text())
		document["total_price"] += 1
		altered = self.write("altered.json", document)
		code, out = run("check", "secure-billing", "20", str(altered))
		assert code == 1
		assert "price" in out

	def test_emit_smt(self) -> None:
		"""
		Check that emit-smt writes a script
		"""
		out_path = self.tmp / "model.smt2"
		code, _ = run("emit-smt", "secure-billing", "20", "--strategy", "fv", "--out", str(out_path))
		assert code == 0
		text = out_path.read_text()
		assert text.startswith("; secure-billing-email: N=5 M=5")
		assert "(minimize " in text

	def test_smt_without_solver(self) -> None:
		"""
		Check that the SMT backend without a command exits with status 5
		"""
		environ = {k: v for k, v in os.environ.items() if k != ENV_EXTERNAL}
		with mock.patch.dict(os.environ, environ, clear=True):
			assert run("plan", "secure-billing", "20", "--backend", "smt")[0] == 5

	def test_smt_missing_binary(self) -> None:
		"""
		Check that an external command that does not exist exits with status 5
		"""
		code, _ = run(
			"plan", "secure-billing", "20", "--backend", "smt",
			"--external", "deployopt-no-such-solver {file}",
		)
		assert code == 5

	def test_bench(self) -> None:
		"""
		Check that bench writes one CSV row per cell
		"""
		matrix = self.write("matrix.json", {
			"problems": [{"spec": "secure-billing"}],
			"strategies": ["none", "pr"],
			"timeout": 600,
		})
		code, out = run("bench", str(matrix))
		assert code == 0
		lines = out.splitlines()
		assert lines[0].startswith("problem,offer_count,strategy,fv_mode,status,objective")
		assert len(lines) == 3
