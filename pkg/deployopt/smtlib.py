# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""
SMT-LIB2 emission of deployment models and reading of solver models

Models are written in quantifier-free linear integer arithmetic, with binary variables as
bounded integers.  The objective is stated with the `(minimize ...)` command understood by
optimising solvers; for plain SMT solvers a cost cap can be asserted instead and
`minimize_external` searches for the least feasible cap.
"""

from __future__ import annotations

import logging
import re
import shlex
import shutil
import subprocess
import tempfile
import time
from collections.abc import Iterable
from pathlib import Path

import trio

from .encode import ConstraintIR
from .exceptions import ExternalFailure
from .exceptions import ExternalTimeout
from .exceptions import ExternalUnavailable
from .exceptions import ModelInconsistent
from .exceptions import ModelParseError
from .exceptions import UnloweredIndicator
from .ir import Implication
from .ir import IRConstraint
from .ir import Relation
from .ir import Term
from .ir import Var
from .model import DeploymentPlan
from .model import check_plan
from .solver import DEFAULT_TIMEOUT
from .solver import SearchState
from .solver import SolveResult
from .solver import SolveStats
from .solver import SolveStatus
from .solver import lower_bound

__all__ = [
	"SAT", "UNSAT", "UNKNOWN",
	"emit_smtlib", "read_status", "read_objective", "parse_model",
	"run_external", "solve_external", "minimize_external",
]

SAT = "sat"
UNSAT = "unsat"
UNKNOWN = "unknown"

DEFINE_FUN = re.compile(
	r"\(define-fun\s+([A-Za-z_][\w.]*)\s+\(\)\s+Int\s+(\(\s*-\s*\d+\s*\)|-?\d+)\s*\)",
)
OBJECTIVE = re.compile(r"\(objectives\s*\(\s*(?:\(.*?\)|[\w.]+)\s+(\(\s*-\s*\d+\s*\)|-?\d+)\s*\)", re.S)

logger = logging.getLogger(__name__)


def _int(value: int) -> str:
	return f"(- {-value})" if value < 0 else str(value)


def _term(coef: int, var: Var) -> str:
	match coef:
		case 1:
			return var.name
		case -1:
			return f"(- {var.name})"
	return f"(* {_int(coef)} {var.name})"


def _sum(terms: Iterable[Term]) -> str:
	parts = [_term(c, v) for c, v in terms]
	if not parts:
		return "0"
	if len(parts) == 1:
		return parts[0]
	return f"(+ {' '.join(parts)})"


def _relation(rel: Relation) -> str:
	return f"({rel.op.value} {_sum(rel.terms)} {_int(rel.rhs)})"


def _conjunction(relations: tuple[Relation, ...]) -> str:
	if len(relations) == 1:
		return _relation(relations[0])
	return f"(and {' '.join(_relation(rel) for rel in relations)})"


def _expression(constraint: IRConstraint) -> str:
	if isinstance(constraint, Implication):
		body = _conjunction(constraint.body)
		if not constraint.guard:
			return body
		return f"(=> {_conjunction(constraint.guard)} {body})"
	return _relation(constraint.relation)


def emit_smtlib(ir: ConstraintIR, cost_cap: int|None = None, optimize: bool = True) -> str:
	"""
	Render a model as an SMT-LIB2 script

	Every domain and every constraint becomes one assertion, in declaration order, so the
	output is identical for identical models.  With `cost_cap` the total price is bounded
	from above; with `optimize` false no objective command is written.

	Raises `UnloweredIndicator` if the model still holds indicator definitions.
	"""
	if ir.definitions and not ir.lowered:
		raise UnloweredIndicator(f"{ir.spec.name}: lower indicator sums before emitting")
	dims = ir.dims
	cost = _sum((1, var) for var in ir.objective)
	lines = [
		f"; {ir.spec.name}: N={dims.components} M={dims.machines} H={dims.resources} O={dims.offers}",
		"(set-logic QF_LIA)",
		"(set-option :produce-models true)",
	]
	lines.extend(f"(declare-fun {var.name} () Int)" for var, _, _ in ir.domains)
	lines.append(";; domains")
	lines.extend(
		f"(assert (and (<= {_int(low)} {var.name}) (<= {var.name} {_int(high)})))"
		for var, low, high in ir.domains
	)
	lines.append(";; constraints")
	lines.extend(f"(assert {_expression(c)})" for c in ir.constraints)
	if cost_cap is not None:
		lines.append(";; cost cap")
		lines.append(f"(assert (<= {cost} {_int(cost_cap)}))")
	if optimize:
		lines.append(f"(minimize {cost})")
	lines.append("(check-sat)")
	if optimize:
		lines.append("(get-objectives)")
	lines.append("(get-model)")
	return "\n".join(lines) + "\n"


def read_status(output: str) -> str:
	"""
	Return the first check-sat answer in solver output, or "unknown" if there is none
	"""
	for line in output.splitlines():
		word = line.strip()
		if word in (SAT, UNSAT, UNKNOWN):
			return word
		if word == "timeout":
			return UNKNOWN
	return UNKNOWN


def _parse_int(text: str) -> int:
	text = text.strip()
	if text.startswith("("):
		return -int(text.strip("()").replace("-", "", 1))
	return int(text)


def read_objective(output: str) -> int|None:
	"""
	Return the value reported in an `(objectives ...)` block, if any
	"""
	if (match := OBJECTIVE.search(output)) is None:
		return None
	return _parse_int(match.group(1))


def parse_model(output: str, ir: ConstraintIR) -> DeploymentPlan:
	"""
	Rebuild a plan from the `(define-fun ...)` model in solver output

	The model is evaluated against every constraint of `ir` and the resulting plan is
	re-checked and re-priced independently of the solver.

	Raises `ModelParseError` when a declared variable has no value and `ModelInconsistent`
	when the model breaks a constraint.
	"""
	names = {var.name: var for var, _, _ in ir.domains}
	values = dict[Var, int]()
	for match in DEFINE_FUN.finditer(output):
		if (var := names.get(match.group(1))) is not None:
			values[var] = _parse_int(match.group(2))
	if not values:
		raise ModelParseError("no model found in solver output")
	missing = [name for name, var in names.items() if var not in values]
	if missing:
		raise ModelParseError(f"model lacks {len(missing)} variables, first {missing[0]}")
	if (violated := ir.violations(values)):
		raise ModelInconsistent("model violates the emitted constraints", violated)
	plan = ir.plan_from(values)
	report = check_plan(ir.spec, ir.catalog, plan)
	if not report.passed:
		failed = [f"{f.family}: {', '.join(f.offenders)}" for f in report.failures()]
		raise ModelInconsistent("plan fails the independent check", failed)
	if plan.total_price != ir.objective_value(values):
		raise ModelInconsistent(
			f"model prices the plan at {ir.objective_value(values)}, offers sum to {plan.total_price}",
		)
	return plan


def _command(template: str, path: Path) -> list[str]:
	args = shlex.split(template)
	if not args:
		raise ExternalUnavailable("external solver command is empty")
	if not any("{file}" in arg for arg in args):
		return args + [str(path)]
	return [arg.replace("{file}", str(path)) for arg in args]


def run_external(template: str, path: Path|str, timeout: float|None = DEFAULT_TIMEOUT) -> str:
	"""
	Run an external solver on a script file and return its standard output

	`template` is a command line in which "{file}" is replaced by the path; without a
	placeholder the path is appended.  A check-sat answer in the output is accepted even
	when the solver exits non-zero, as solvers report an error for `(get-model)` after
	"unsat".

	Raises `ExternalUnavailable` when the binary cannot be run, `ExternalFailure` on a
	non-zero exit without an answer and `ExternalTimeout` when `timeout` seconds pass.
	"""
	args = _command(template, Path(path))
	if shutil.which(args[0]) is None:
		raise ExternalUnavailable(f"cannot find {args[0]!r}")
	limit = float("inf") if timeout is None else timeout

	async def run() -> subprocess.CompletedProcess[bytes]:
		with trio.fail_after(limit):
			return await trio.run_process(args, capture_stdout=True, capture_stderr=True, check=False)

	logger.debug("running %s", shlex.join(args))
	try:
		completed = trio.run(run)
	except (FileNotFoundError, PermissionError) as exc:
		raise ExternalUnavailable(f"cannot run {args[0]!r}: {exc}") from exc
	except trio.TooSlowError:
		raise ExternalTimeout(template, limit) from None
	stdout = completed.stdout.decode("utf-8", "replace")
	stderr = completed.stderr.decode("utf-8", "replace")
	if stderr.strip():
		logger.warning("%s: %s", args[0], stderr.strip()[:500])
	answered = any(line.strip() in (SAT, UNSAT) for line in stdout.splitlines())
	if completed.returncode != 0 and not answered:
		raise ExternalFailure(template, completed.returncode, stderr or stdout)
	return stdout


def _run_script(ir: ConstraintIR, script: str, template: str, timeout: float|None) -> str:
	with tempfile.TemporaryDirectory(prefix="deployopt-") as tmp:
		path = Path(tmp) / f"{ir.spec.name.replace(' ', '-') or 'model'}.smt2"
		path.write_text(script)
		return run_external(template, path, timeout)


def solve_external(
	ir: ConstraintIR,
	template: str,
	timeout: float|None = DEFAULT_TIMEOUT,
	optimize: bool = True,
) -> SolveResult:
	"""
	Minimise a model with an external solver

	With `optimize` the script carries a `(minimize ...)` objective and one run suffices;
	otherwise `minimize_external` drives repeated feasibility runs.
	"""
	if not optimize:
		return minimize_external(ir, template, timeout)
	started = time.monotonic()
	output = _run_script(ir, emit_smtlib(ir), template, timeout)
	stats = SolveStats(time_ms=int((time.monotonic() - started) * 1000))
	match read_status(output):
		case "sat":
			plan = parse_model(output, ir)
			reported = read_objective(output)
			if reported is not None and reported != plan.total_price:
				raise ModelInconsistent(f"solver reports objective {reported}, plan costs {plan.total_price}")
			return SolveResult(SolveStatus.OPTIMAL, plan, plan.total_price, stats, True)
		case "unsat":
			return SolveResult(SolveStatus.INFEASIBLE, stats=stats, proven=True)
	return SolveResult(SolveStatus.TIMEOUT, stats=stats)


def minimize_external(
	ir: ConstraintIR,
	template: str,
	timeout: float|None = DEFAULT_TIMEOUT,
) -> SolveResult:
	"""
	Minimise a model with a solver lacking objectives, by binary search over a cost cap

	The search starts from the solver's lower bound for an empty machine set and from the
	price of the first model found, and narrows with each satisfiable or unsatisfiable cap.
	"""
	started = time.monotonic()
	deadline = None if timeout is None else started + timeout
	runs = 0

	def remaining() -> float|None:
		return None if deadline is None else max(deadline - time.monotonic(), 0.001)

	def attempt(cap: int|None) -> tuple[str, DeploymentPlan|None]:
		nonlocal runs
		runs += 1
		output = _run_script(ir, emit_smtlib(ir, cost_cap=cap, optimize=False), template, remaining())
		status = read_status(output)
		logger.debug("%s: cap %s is %s", ir.spec.name, cap, status)
		return status, parse_model(output, ir) if status == SAT else None

	def result(status: SolveStatus, plan: DeploymentPlan|None, proven: bool) -> SolveResult:
		stats = SolveStats(runs, int((time.monotonic() - started) * 1000), runs)
		if plan is None:
			return SolveResult(status, stats=stats, proven=proven)
		return SolveResult(status, plan, plan.total_price, stats, proven)

	try:
		status, best = attempt(None)
	except ExternalTimeout:
		return result(SolveStatus.TIMEOUT, None, False)
	if status == UNSAT:
		return result(SolveStatus.INFEASIBLE, None, True)
	if best is None:
		return result(SolveStatus.TIMEOUT, None, False)
	root = SearchState((0,) * len(ir.components), 0, ir.machines)
	low, high = lower_bound(ir, root), best.total_price - 1
	while low <= high:
		cap = (low + high) // 2
		try:
			status, plan = attempt(cap)
		except ExternalTimeout:
			return result(SolveStatus.TIMEOUT, best, False)
		if status == SAT and plan is not None:
			best = plan
			high = plan.total_price - 1
		elif status == UNSAT:
			low = cap + 1
		else:
			return result(SolveStatus.TIMEOUT, best, False)
	logger.info("%s: external optimum %d after %d runs", ir.spec.name, best.total_price, runs)
	return result(SolveStatus.OPTIMAL, best, True)
