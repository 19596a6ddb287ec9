# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""
Command line interface

Exit codes: 0 optimal or check passed, 1 check violation or bench mismatch, 2 input or
spec error, 3 infeasible, 4 timeout, 5 external solver unavailable, failed or timed out.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections.abc import Sequence
from dataclasses import replace
from pathlib import Path
from typing import Any

from . import __version__
from . import fixtures
from .bench import load_matrix
from .bench import mismatches
from .bench import run_matrix
from .bench import write_csv
from .confgraph import FixMode
from .confgraph import build_conflict_graph
from .confgraph import enumerate_maximal_cliques
from .encode import lower_h_terms
from .estimator import estimate_instances
from .exceptions import DeployOptError
from .exceptions import ExternalTimeout
from .exceptions import ExternalUnavailable
from .exceptions import InfeasibleInstanceCounts
from .model import ApplicationSpec
from .model import OfferCatalog
from .model import check_plan
from .planner import Backend
from .planner import PlanOptions
from .planner import analyze
from .planner import plan
from .preprocess import merge_spec
from .schema import load_offers
from .schema import load_plan
from .schema import load_spec
from .schema import plan_to_json
from .smtlib import emit_smtlib
from .solver import DEFAULT_TIMEOUT
from .solver import SolverOptions
from .solver import SolveStatus
from .symbreak import Strategy

__all__ = ["ENV_EXTERNAL", "EXIT_CODES", "build_parser", "main"]

ENV_EXTERNAL = "DEPLOYOPT_EXTERNAL_SOLVER"
DEFAULT_MATRIX = "bench-matrix"

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INPUT = 2
EXIT_CODES = {
	SolveStatus.OPTIMAL: EXIT_OK,
	SolveStatus.INFEASIBLE: 3,
	SolveStatus.TIMEOUT: 4,
}
EXIT_EXTERNAL = 5

LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]

logger = logging.getLogger(__name__)


def _parameter(text: str) -> tuple[str, int]:
	name, sep, value = text.partition("=")
	if not sep or not name:
		raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
	try:
		return name, int(value)
	except ValueError:
		raise argparse.ArgumentTypeError(f"{name}: {value!r} is not an integer") from None


def _positive(text: str) -> float:
	value = float(text)
	if value <= 0:
		raise argparse.ArgumentTypeError("must be positive")
	return value


def _spec_arguments(parser: argparse.ArgumentParser, offers: bool = True) -> None:
	parser.add_argument("spec", help="application spec file or fixture name")
	if offers:
		parser.add_argument("offers", help="offer catalog file, fixture name or catalog size")
	parser.add_argument(
		"--set", dest="parameters", action="append", type=_parameter, default=[],
		metavar="NAME=VALUE", help="override a spec parameter",
	)
	parser.add_argument(
		"--min-wordpress-instances", type=int, metavar="K",
		help="shorthand for --set min-wordpress-instances=K",
	)
	parser.add_argument(
		"--surrogate", choices=["relaxed", "strict"], default="relaxed",
		help="instance estimation variant (default: relaxed)",
	)
	parser.add_argument("--no-merge", action="store_true", help="keep co-located components apart")


def _model_arguments(parser: argparse.ArgumentParser) -> None:
	parser.add_argument(
		"--strategy", type=Strategy, choices=list(Strategy), default=Strategy.NONE,
		metavar="{" + ",".join(s.value for s in Strategy) + "}",
		help="symmetry breaking strategy (default: none)",
	)
	parser.add_argument(
		"--fv-mode", choices=["default", *(m.value for m in FixMode)], default="default",
		help="how many clique instances to fix",
	)


def build_parser() -> argparse.ArgumentParser:
	parser = argparse.ArgumentParser(
		prog="deployopt",
		description="Minimum price deployment of component applications on virtual machine offers",
	)
	parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
	parser.add_argument("--log-level", choices=LEVELS, default="WARNING")
	parser.add_argument(
		"-v", "--verbose", action="count", default=0, help="lower the log level one step per use",
	)
	commands = parser.add_subparsers(dest="command", required=True)

	estimate = commands.add_parser("estimate", help="estimate instance counts and machines")
	_spec_arguments(estimate, offers=False)

	analysis = commands.add_parser("analyze", help="show cliques, fixed cells and model size")
	_spec_arguments(analysis)
	_model_arguments(analysis)
	analysis.add_argument("--dump", action="store_true", help="print every model constraint")

	planning = commands.add_parser("plan", help="compute a minimum price plan")
	_spec_arguments(planning)
	_model_arguments(planning)
	planning.add_argument(
		"--timeout", type=_positive, default=DEFAULT_TIMEOUT,
		help=f"seconds before giving up (default: {DEFAULT_TIMEOUT})",
	)
	planning.add_argument("--backend", type=Backend, choices=list(Backend), default=Backend.BUILTIN)
	planning.add_argument("--external", help=f"external solver command; overrides ${ENV_EXTERNAL}")
	planning.add_argument(
		"--no-opt", action="store_true",
		help="search a cost cap instead of using (minimize ...) with the external solver",
	)
	planning.add_argument("--workers", type=int, default=1, help="solver worker threads")
	planning.add_argument("--no-warm-start", action="store_true", help="skip the relaxation stage")
	planning.add_argument("--out", type=Path, help="write the plan JSON here")

	check = commands.add_parser("check", help="check a plan file against a spec")
	_spec_arguments(check)
	check.add_argument("plan", type=Path, help="plan JSON file")

	emit = commands.add_parser("emit-smt", help="write the model as SMT-LIB2")
	_spec_arguments(emit)
	_model_arguments(emit)
	emit.add_argument("--no-opt", action="store_true", help="omit the (minimize ...) objective")
	emit.add_argument("--cost-cap", type=int, metavar="PRICE", help="assert a maximum total price")
	emit.add_argument("--out", type=Path, help="output file (default: standard output)")

	bench = commands.add_parser("bench", help="run a benchmark matrix and write CSV")
	bench.add_argument("matrix", nargs="?", default=DEFAULT_MATRIX, help="matrix file or fixture name")
	bench.add_argument("--workers", type=int, help="override the matrix worker count")
	bench.add_argument("--timeout", type=_positive, help="override the matrix timeout")
	bench.add_argument("--out", type=Path, help="output file (default: standard output)")
	return parser


def _configure_logging(args: argparse.Namespace) -> None:
	index = max(LEVELS.index(args.log_level) - args.verbose, 0)
	logging.basicConfig(
		level=LEVELS[index],
		stream=sys.stderr,
		format="%(levelname)s %(name)s: %(message)s",
	)


def _load_spec(args: argparse.Namespace) -> ApplicationSpec:
	parameters = dict(args.parameters)
	if args.min_wordpress_instances is not None:
		parameters["min-wordpress-instances"] = args.min_wordpress_instances
	return load_spec(fixtures.resolve(args.spec), parameters)


def _load_offers(args: argparse.Namespace, spec: ApplicationSpec) -> OfferCatalog:
	source = args.offers
	if source.isdigit():
		source = fixtures.catalog_path(int(source))
	return load_offers(fixtures.resolve(source), spec.dimensions)


def _options(args: argparse.Namespace, **solver: Any) -> PlanOptions:
	backend = getattr(args, "backend", Backend.BUILTIN)
	return PlanOptions(
		strategy=args.strategy,
		fix_mode=None if args.fv_mode == "default" else FixMode(args.fv_mode),
		relax_exclusive=args.surrogate == "relaxed",
		merge=not args.no_merge,
		backend=backend,
		external=getattr(args, "external", None) or os.environ.get(ENV_EXTERNAL) or None,
		optimize=not getattr(args, "no_opt", False),
		solver=SolverOptions(**solver),
	)


def _write(text: str, out: Path|None) -> None:
	if out is None:
		sys.stdout.write(text)
	else:
		out.write_text(text)


def cmd_estimate(args: argparse.Namespace) -> int:
	spec = _load_spec(args)
	mapping = None
	if not args.no_merge:
		spec, mapping = merge_spec(spec)
	estimate = estimate_instances(spec, args.surrogate == "relaxed")
	document = estimate.as_json()
	document["floors"] = list(estimate.floors)
	if mapping is not None and not mapping.is_identity:
		document["merged"] = mapping.as_json()
	if (expected := spec.reference_value("m_upper")) is not None and expected != estimate.m_upper:
		logger.warning("%s: m_upper is %d, reference value %d", spec.name, estimate.m_upper, expected)
	print(json.dumps(document))
	return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
	spec = _load_spec(args)
	catalog = _load_offers(args, spec)
	analysis = analyze(spec, catalog, _options(args))
	merged = analysis.merged.spec
	names = {c.id: c.name for c in merged.components}
	print(f"{merged.name}: N={len(merged.components)} M={analysis.ir.machines} O={len(catalog)}")
	print("estimate: " + ", ".join(
		f"{names[i]}={n}" for i, n in zip(analysis.estimate.components, analysis.estimate.nu)
	))
	for clique in enumerate_maximal_cliques(build_conflict_graph(merged)):
		sized = clique.sized(analysis.estimate)
		members = ", ".join(names[m] for m in sized.members)
		print(f"clique {{{members}}} deploys {sized.deployment_size}")
	fixed = analysis.breakers.fixed
	if fixed.clique is not None:
		chosen = ", ".join(names[m] for m in fixed.clique.members)
		mode = fixed.mode.value if fixed.mode is not None else "-"
		print(f"selected {{{chosen}}}, {mode} fixing")
	share = 100 * analysis.fixed_cells / analysis.cells
	print(f"fixed cells: {analysis.fixed_cells}/{analysis.cells} ({share:.0f}%)")
	print(analysis.table())
	for family, count in analysis.ir.family_counts().items():
		print(f"{family.value:<18} {count}")
	if args.dump:
		print(analysis.ir.dump(), end="")
	return EXIT_OK


def cmd_plan(args: argparse.Namespace) -> int:
	spec = _load_spec(args)
	catalog = _load_offers(args, spec)
	options = _options(
		args, timeout=args.timeout, warm_start=not args.no_warm_start, workers=args.workers,
	)
	outcome = plan(spec, catalog, options)
	if outcome.plan is not None:
		text = json.dumps(plan_to_json(outcome.plan)) + "\n"
		_write(text, args.out)
	summary = outcome.summary()
	print(summary, file=sys.stdout if args.out is not None or outcome.plan is None else sys.stderr)
	return EXIT_CODES[outcome.status]


def cmd_check(args: argparse.Namespace) -> int:
	spec = _load_spec(args)
	catalog = _load_offers(args, spec)
	report = check_plan(spec, catalog, load_plan(args.plan))
	print(report)
	return EXIT_OK if report.passed else EXIT_VIOLATION


def cmd_emit_smt(args: argparse.Namespace) -> int:
	spec = _load_spec(args)
	catalog = _load_offers(args, spec)
	analysis = analyze(spec, catalog, _options(args))
	text = emit_smtlib(lower_h_terms(analysis.ir), args.cost_cap, optimize=not args.no_opt)
	_write(text, args.out)
	return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
	matrix = load_matrix(fixtures.resolve(args.matrix))
	overrides: dict[str, Any] = {}
	if args.workers is not None:
		overrides["workers"] = args.workers
	if args.timeout is not None:
		overrides["timeout"] = args.timeout
	if overrides:
		matrix = replace(matrix, **overrides)
	rows = run_matrix(matrix)
	if args.out is None:
		write_csv(rows, sys.stdout)
	else:
		with args.out.open("w", newline="") as stream:
			write_csv(rows, stream)
	found = mismatches(rows)
	for message in found:
		logger.error("objective mismatch: %s", message)
	return EXIT_VIOLATION if found else EXIT_OK


COMMANDS = {
	"estimate": cmd_estimate,
	"analyze": cmd_analyze,
	"plan": cmd_plan,
	"check": cmd_check,
	"emit-smt": cmd_emit_smt,
	"bench": cmd_bench,
}


def main(argv: Sequence[str]|None = None) -> int:
	"""
	Run the command line and return its exit code
	"""
	args = build_parser().parse_args(argv)
	_configure_logging(args)
	try:
		return COMMANDS[args.command](args)
	except (ExternalUnavailable, ExternalTimeout) as exc:
		logger.error("%s", exc)
		return EXIT_EXTERNAL
	except InfeasibleInstanceCounts as exc:
		logger.error("%s", exc)
		return EXIT_CODES[SolveStatus.INFEASIBLE]
	except (DeployOptError, FileNotFoundError) as exc:
		logger.error("%s", exc)
		return EXIT_INPUT
