# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""
Benchmark matrix runs: problems × catalogs × strategies × fixing modes, written as CSV

Cells run in a pool of worker threads; each cell is independent and a failing cell is
recorded with status "Error" without stopping the others.  Rows are returned and written
in matrix order whatever order they finish in.
"""

from __future__ import annotations

import csv
import logging
import time
from collections.abc import Mapping
from collections.abc import Sequence
from dataclasses import astuple
from dataclasses import dataclass
from dataclasses import fields
from functools import partial
from pathlib import Path
from typing import Any
from typing import TextIO

import trio

from . import fixtures
from .confgraph import FixMode
from .exceptions import DeployOptError
from .planner import PlanOptions
from .planner import PlanOutcome
from .planner import plan
from .schema import check_document
from .schema import load_offers
from .schema import load_spec
from .schema import read_json
from .solver import DEFAULT_TIMEOUT
from .solver import SolverOptions
from .symbreak import BENCH_STRATEGIES
from .symbreak import Strategy

__all__ = [
	"MATRIX_SCHEMA", "ERROR", "DEFAULT_MODE",
	"Problem", "BenchMatrix", "BenchCell", "BenchRow",
	"parse_matrix", "load_matrix", "run_cell", "run_matrix", "write_csv", "mismatches",
]

ERROR = "Error"
DEFAULT_MODE = "default"

MATRIX_SCHEMA = {
	"$schema": "https://json-schema.org/draft/2020-12/schema",
	"type": "object",
	"properties": {
		"problems": {
			"type": "array",
			"items": {
				"type": "object",
				"properties": {
					"spec": {"type": "string", "minLength": 1},
					"label": {"type": "string"},
					"parameters": {"type": "object", "additionalProperties": {"type": "integer"}},
				},
				"required": ["spec"],
				"additionalProperties": False,
			},
		},
		"offers": {
			"type": "array",
			"items": {"oneOf": [{"type": "integer", "minimum": 1}, {"type": "string"}]},
		},
		"strategies": {"type": "array", "items": {"enum": [s.value for s in Strategy]}},
		"fix_modes": {
			"type": "array",
			"items": {"enum": [DEFAULT_MODE] + [m.value for m in FixMode]},
			"minItems": 1,
		},
		"timeout": {"type": "number", "exclusiveMinimum": 0},
		"workers": {"type": "integer", "minimum": 1},
		"warm_start": {"type": "boolean"},
	},
	"additionalProperties": False,
}

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Problem:

	spec: str
	parameters: tuple[tuple[str, int], ...] = ()
	label: str = ""

	@property
	def name(self) -> str:
		if self.label:
			return self.label
		stem = Path(self.spec).stem
		if not self.parameters:
			return stem
		return stem + ":" + ",".join(f"{k}={v}" for k, v in self.parameters)


@dataclass(frozen=True)
class BenchCell:

	problem: Problem
	offers: int|str
	strategy: Strategy
	fix_mode: FixMode|None
	timeout: float
	warm_start: bool = True


@dataclass(frozen=True)
class BenchMatrix:
	"""
	A benchmark plan; strategies default to the seven compared strategies
	"""

	problems: tuple[Problem, ...] = ()
	offers: tuple[int|str, ...] = (20,)
	strategies: tuple[Strategy, ...] = BENCH_STRATEGIES
	fix_modes: tuple[FixMode|None, ...] = (None,)
	timeout: float = DEFAULT_TIMEOUT
	workers: int = 1
	warm_start: bool = True

	def cells(self) -> list[BenchCell]:
		"""
		Return the cells in row order; strategies fixing no values get one cell whatever
		the fixing modes
		"""
		result = []
		for problem in self.problems:
			for offers in self.offers:
				for strategy in self.strategies:
					modes = self.fix_modes if strategy.fixes_values else (None,)
					result.extend(
						BenchCell(problem, offers, strategy, mode, self.timeout, self.warm_start)
						for mode in modes
					)
		return result


@dataclass(frozen=True)
class BenchRow:
	"""
	One CSV row; the field order is the column order
	"""

	problem: str
	offer_count: int|str
	strategy: str
	fv_mode: str
	status: str
	objective: int|None = None
	time_ms: int|None = None
	nodes: int|None = None
	fixed_cells: int|None = None
	m_estimated: int|None = None
	m_occupied: int|None = None
	instances_deployed: int|None = None

	@classmethod
	def columns(cls) -> list[str]:
		return [f.name for f in fields(cls)]


def parse_matrix(document: object, source: str = "<matrix>") -> BenchMatrix:
	check_document(document, MATRIX_SCHEMA, source)
	assert isinstance(document, Mapping)
	problems = tuple(
		Problem(
			item["spec"],
			tuple(sorted(item.get("parameters", {}).items())),
			item.get("label", ""),
		)
		for item in document.get("problems", [])
	)
	modes = tuple(
		None if mode == DEFAULT_MODE else FixMode(mode)
		for mode in document.get("fix_modes", [DEFAULT_MODE])
	)
	strategies = document.get("strategies")
	return BenchMatrix(
		problems=problems,
		offers=tuple(document.get("offers", [20])),
		strategies=BENCH_STRATEGIES if strategies is None else tuple(Strategy(s) for s in strategies),
		fix_modes=modes,
		timeout=float(document.get("timeout", DEFAULT_TIMEOUT)),
		workers=document.get("workers", 1),
		warm_start=document.get("warm_start", True),
	)


def load_matrix(path: Path|str) -> BenchMatrix:
	return parse_matrix(read_json(path), str(path))


def _row(cell: BenchCell, offer_count: int|str, outcome: PlanOutcome) -> BenchRow:
	stats = outcome.result.stats
	fixed = outcome.analysis.breakers.fixed
	return BenchRow(
		problem=cell.problem.name,
		offer_count=offer_count,
		strategy=cell.strategy.value,
		fv_mode=fixed.mode.value if fixed.mode is not None else "",
		status=outcome.status.value,
		objective=outcome.objective,
		time_ms=stats.time_ms,
		nodes=stats.nodes_explored,
		fixed_cells=fixed.count_fixed,
		m_estimated=outcome.m_estimated,
		m_occupied=outcome.m_occupied,
		instances_deployed=outcome.instances,
	)


def _error_row(cell: BenchCell, offer_count: int|str) -> BenchRow:
	mode = "" if cell.fix_mode is None else cell.fix_mode.value
	return BenchRow(cell.problem.name, offer_count, cell.strategy.value, mode, ERROR)


def run_cell(cell: BenchCell) -> BenchRow:
	"""
	Plan one cell, turning any failure into an "Error" row
	"""
	offer_count: int|str = cell.offers
	try:
		spec = load_spec(fixtures.resolve(cell.problem.spec), dict(cell.problem.parameters))
		if isinstance(cell.offers, int):
			source = fixtures.catalog_path(cell.offers)
		else:
			source = fixtures.resolve(cell.offers)
		catalog = load_offers(source, spec.dimensions)
		offer_count = len(catalog)
		options = PlanOptions(
			strategy=cell.strategy,
			fix_mode=cell.fix_mode,
			solver=SolverOptions(timeout=cell.timeout, warm_start=cell.warm_start),
		)
		outcome = plan(spec, catalog, options)
	except (DeployOptError, OSError) as exc:
		logger.error("%s/%s/%s: %s", cell.problem.name, cell.offers, cell.strategy.value, exc)
		return _error_row(cell, offer_count)
	except Exception:
		logger.exception(
			"%s/%s/%s: unexpected failure", cell.problem.name, cell.offers, cell.strategy.value,
		)
		return _error_row(cell, offer_count)
	row = _row(cell, offer_count, outcome)
	logger.info(
		"%s/%s/%s: %s %s in %s ms",
		row.problem, row.offer_count, row.strategy, row.status, row.objective, row.time_ms,
	)
	return row


def run_matrix(matrix: BenchMatrix) -> list[BenchRow]:
	"""
	Run every cell of a matrix with up to `matrix.workers` cells at a time
	"""
	cells = matrix.cells()
	rows: list[BenchRow|None] = [None] * len(cells)
	started = time.monotonic()

	async def worker(index: int, limiter: trio.CapacityLimiter) -> None:
		rows[index] = await trio.to_thread.run_sync(partial(run_cell, cells[index]), limiter=limiter)

	async def run_all() -> None:
		limiter = trio.CapacityLimiter(matrix.workers)
		async with trio.open_nursery() as nursery:
			for index in range(len(cells)):
				nursery.start_soon(worker, index, limiter)

	if cells:
		trio.run(run_all)
	logger.info("ran %d cells in %.1f s", len(cells), time.monotonic() - started)
	return [row for row in rows if row is not None]


def write_csv(rows: Sequence[BenchRow], stream: TextIO) -> None:
	writer = csv.writer(stream, lineterminator="\n")
	writer.writerow(BenchRow.columns())
	for row in rows:
		writer.writerow("" if value is None else value for value in astuple(row))


def mismatches(rows: Sequence[BenchRow]) -> list[str]:
	"""
	Describe every (problem, catalog) pair whose optimal rows disagree on the objective
	"""
	found = dict[tuple[str, Any], set[int]]()
	for row in rows:
		if row.status == "Optimal" and row.objective is not None:
			found.setdefault((row.problem, row.offer_count), set()).add(row.objective)
	return [
		f"{problem} with {offers} offers: objectives {sorted(values)}"
		for (problem, offers), values in found.items() if len(values) > 1
	]

