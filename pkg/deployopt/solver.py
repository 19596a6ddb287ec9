# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""
Exact minimisation of deployment models

`solve` works in two stages.  It first searches the column-symmetric core of a model
(every constraint except symmetry breakers and fixed cells), where a plan is a multiset
of machine contents each leased at its cheapest fitting offer.  The optimum of the core
is a lower bound; arranged into the order the breakers expect, it is usually a solution
of the full model as well.  When it is not, a depth-first branch-and-bound over machines
runs with that bound.

`brute_force` enumerates every point of small models and serves as the reference.
"""

from __future__ import annotations

import enum
import itertools
import logging
import math
import threading
import time
from collections.abc import Callable
from collections.abc import Sequence
from dataclasses import dataclass
from dataclasses import field
from functools import cached_property
from fractions import Fraction

import trio

from .confgraph import build_conflict_graph
from .confgraph import enumerate_maximal_cliques
from .encode import ConstraintIR
from .estimator import CountRow
from .estimator import tighten_counts
from .exceptions import MalformedIR
from .exceptions import SpaceTooLarge
from .ir import Column
from .ir import IRConstraint
from .ir import Var
from .model import BoundInstances
from .model import Colocate
from .model import ConditionalBound
from .model import DeploymentPlan
from .model import ExactRatio
from .model import ExclusiveDeploy
from .model import FullDeploy
from .model import Op
from .model import RequireProvide
from .model import ResourceVector

__all__ = [
	"DEFAULT_TIMEOUT", "BRUTE_FORCE_LIMIT",
	"SolveStatus", "SolveStats", "SolveResult", "SolverOptions", "SearchState",
	"solve", "brute_force", "lower_bound",
]

DEFAULT_TIMEOUT = 2400
BRUTE_FORCE_LIMIT = 10**8

logger = logging.getLogger(__name__)


class SolveStatus(enum.Enum):

	OPTIMAL = "Optimal"
	INFEASIBLE = "Infeasible"
	TIMEOUT = "Timeout"


@dataclass(frozen=True)
class SolveStats:

	nodes_explored: int = 0
	time_ms: int = 0
	incumbent_updates: int = 0

	def as_json(self) -> dict[str, int]:
		return {
			"nodes_explored": self.nodes_explored,
			"time_ms": self.time_ms,
			"incumbent_updates": self.incumbent_updates,
		}


@dataclass(frozen=True)
class SolveResult:
	"""
	The outcome of a solver run

	`plan` is present when `status` is OPTIMAL, and may be present with TIMEOUT when an
	incumbent was found; `proven` is True only for a completed search.
	"""

	status: SolveStatus
	plan: DeploymentPlan|None = None
	objective: int|None = None
	stats: SolveStats = field(default_factory=SolveStats)
	proven: bool = False


@dataclass(frozen=True)
class SolverOptions:
	"""
	Solver settings

	`timeout` is in seconds (None for no limit).  With `warm_start` the column-symmetric
	core is solved first; `workers` above 1 spreads the top-level subtrees across threads.
	"""

	timeout: float|None = DEFAULT_TIMEOUT
	warm_start: bool = True
	workers: int = 1


@dataclass(frozen=True)
class SearchState:
	"""
	A partial solution: instances placed per component (in id order), the price already
	committed and the number of machines still free
	"""

	counts: tuple[int, ...]
	committed: int
	machines_left: int


@dataclass(frozen=True)
class _Option:
	hosted: frozenset[int]
	bits: tuple[int, ...]
	offer: int
	price: int

	def column(self) -> Column:
		return Column(self.offer, self.price, self.hosted)


class _Structure:
	"""
	Machine contents and instance-count rows of a model, derived from its application
	"""

	def __init__(self, ir: ConstraintIR):
		spec = ir.spec
		self.ir = ir
		self.ids = ir.components
		self.position = {ident: p for p, ident in enumerate(self.ids)}
		self.requirements = [spec.component(i).requirements for i in self.ids]
		self.conflicts = spec.conflict_pairs()
		self.colocated = [c.pair for c in spec.constraints if isinstance(c, Colocate)]
		self.full = [
			(c.component, frozenset(spec.neighbours(c.component)))
			for c in spec.constraints if isinstance(c, FullDeploy)
		]
		self.contents = list(self._contents())
		self.options = sorted(
			(self._cheapest(hosted, load) for hosted, load in self.contents),
			key=lambda o: (o.price, -len(o.hosted), sorted(o.hosted)),
		)
		self._init_rows()
		self._init_bounds()

	def bits(self, hosted: frozenset[int]) -> tuple[int, ...]:
		return tuple(int(i in hosted) for i in self.ids)

	def _contents(self) -> Sequence[tuple[frozenset[int], ResourceVector]]:
		catalog = self.ir.catalog
		ids = self.ids
		found = list[tuple[frozenset[int], ResourceVector]]()

		def fits(load: ResourceVector) -> bool:
			return any(load.fits(o.capacity) for o in catalog)

		def extend(index: int, hosted: list[int], load: ResourceVector) -> None:
			if index == len(ids):
				if hosted and self._admissible(frozenset(hosted)):
					found.append((frozenset(hosted), load))
				return
			ident = ids[index]
			extend(index + 1, hosted, load)
			if any(tuple(sorted((ident, h))) in self.conflicts for h in hosted):
				return
			added = load + self.requirements[index]
			if fits(added):
				hosted.append(ident)
				extend(index + 1, hosted, added)
				hosted.pop()

		extend(0, [], ResourceVector.zero(len(self.ir.spec.dimensions)))
		return found

	def _admissible(self, hosted: frozenset[int]) -> bool:
		for first, second in self.colocated:
			if (first in hosted) != (second in hosted):
				return False
		for ident, neighbours in self.full:
			if ident not in hosted and not neighbours & hosted:
				return False
		return True

	def _cheapest(self, hosted: frozenset[int], load: ResourceVector) -> _Option:
		offer = self.ir.catalog.cheapest_fitting(load)
		assert offer is not None
		return _Option(hosted, self.bits(hosted), offer.id, offer.price)

	def _rows(self, coefs: dict[int, int], op: Op, n: int) -> list[CountRow]:
		terms = tuple(sorted((self.position[i], c) for i, c in coefs.items() if c))
		rows = []
		if op in (Op.LE, Op.EQ):
			rows.append(CountRow(terms, n))
		if op in (Op.GE, Op.EQ):
			rows.append(CountRow(tuple((p, -c) for p, c in terms), -n))
		return rows

	@staticmethod
	def _sum(members: Sequence[int]) -> dict[int, int]:
		coefs = dict[int, int]()
		for member in members:
			coefs[member] = coefs.get(member, 0) + 1
		return coefs

	def _init_rows(self) -> None:
		spec = self.ir.spec
		self.rows = list[CountRow]()
		self.conditional = list[tuple[int, list[CountRow]]]()
		self.exclusive = list[tuple[int, ...]]()
		for constraint in spec.constraints:
			match constraint:
				case RequireProvide(consumer, provider, n, m):
					self.rows += self._rows({consumer: n, provider: -m}, Op.LE, 0)
				case ExactRatio(many, one, n):
					self.rows += self._rows({one: n, many: -1}, Op.GE, 0)
					self.rows += self._rows({one: n, many: -1}, Op.LE, n - 1)
				case BoundInstances(members, op, n):
					self.rows += self._rows(self._sum(members), op, n)
				case ConditionalBound(guard, members, op, n):
					rows = self._rows(self._sum(members), op, n)
					self.conditional.append((self.position[guard], rows))
				case ExclusiveDeploy(members):
					self.exclusive.append(tuple(self.position[m] for m in members))
		exclusive = {p for group in self.exclusive for p in group}
		self.basic = [p for p in range(len(self.ids)) if p not in exclusive]
		floors = self.ir.floors
		self.floors = tuple(floors) if len(floors) == len(self.ids) else (0,) * len(self.ids)

	def _init_bounds(self) -> None:
		size = len(self.ids)
		top = math.inf
		self.minprice = [
			min((o.price for o in self.options if o.bits[p]), default=top) for p in range(size)
		]
		self.minfit = [
			offer.price if (offer := self.ir.catalog.cheapest_fitting(req)) else top
			for req in self.requirements
		]
		self.cohost = max((len(o.hosted) for o in self.options), default=1)
		cliques = enumerate_maximal_cliques(build_conflict_graph(self.ir.spec))
		self.cliques = [tuple(self.position[m] for m in c.members) for c in cliques]
		self.mandatory = [self.position[i] for i, neighbours in self.full if not neighbours]
		# per resource, the offer with the lowest price per unit of capacity
		self.ratios = list[tuple[int, int]]()
		for dim in range(len(self.ir.spec.dimensions)):
			best = min(self.ir.catalog, key=lambda o: Fraction(o.price, o.capacity[dim]))
			self.ratios.append((best.price, best.capacity[dim]))
		self.with_member = [
			[idx for idx, o in enumerate(self.options) if o.bits[p]] for p in range(size)
		]
		self.with_group = [
			[idx for idx, o in enumerate(self.options) if any(o.bits[p] for p in group)]
			for group in self.exclusive
		]
		self.any_option = list(range(len(self.options)))

	def needs(self, counts: Sequence[int], left: int) -> list[int]|None:
		"""
		Return the fewest instances per component any completion must reach, or None when
		no completion with `left` more machines exists
		"""
		lower = [max(c, f) for c, f in zip(counts, self.floors)]
		upper = [c + left for c in counts]
		for p in self.basic:
			lower[p] = max(lower[p], 1)
		for group in self.exclusive:
			deployed = [p for p in group if counts[p]]
			if len(deployed) > 1:
				return None
			for p in group:
				if deployed and p != deployed[0]:
					upper[p] = 0
			if all(upper[p] == 0 for p in group):
				return None
		rows = list(self.rows)
		pending = list(self.conditional)
		while True:
			if any(low > high for low, high in zip(lower, upper)):
				return None
			if not tighten_counts(rows, lower, upper):
				return None
			active = [entry for entry in pending if lower[entry[0]] >= 1]
			if not active:
				return lower
			for entry in active:
				pending.remove(entry)
				rows.extend(entry[1])

	def closes(self, counts: Sequence[int]) -> bool:
		"""
		Return whether instance counts satisfy every count constraint
		"""
		if any(counts[p] < 1 for p in self.basic):
			return False
		if any(sum(1 for p in group if counts[p]) != 1 for group in self.exclusive):
			return False
		if not all(row.holds(counts) for row in self.rows):
			return False
		return all(
			all(row.holds(counts) for row in rows)
			for guard, rows in self.conditional if counts[guard]
		)

	def bound(self, counts: Sequence[int], needs: Sequence[int], left: int) -> int|None:
		"""
		Return a lower bound on the price of the machines still to be added, or None when
		more machines are needed than are left
		"""
		deficit = [n - c for n, c in zip(needs, counts)]
		machines = max((sum(deficit[p] for p in clique) for clique in self.cliques), default=0)
		if machines > left:
			return None
		best = max(
			(sum(deficit[p] * self.minprice[p] for p in clique if deficit[p]) for clique in self.cliques),
			default=0,
		)
		for group in self.exclusive:
			if not any(counts[p] for p in group) and not any(deficit[p] for p in group):
				best = max(best, min(self.minprice[p] for p in group))
		if machines and self.ratios:
			for p in self.mandatory:
				deficit[p] = max(deficit[p], machines)
			for dim, (price, capacity) in enumerate(self.ratios):
				load = sum(d * self.requirements[p][dim] for p, d in enumerate(deficit) if d)
				best = max(best, -(-load * price // capacity))
		if best == math.inf:
			return None
		return int(best)

	def target(self, counts: Sequence[int], needs: Sequence[int]) -> tuple[tuple[str, int], list[int]]:
		for p, (need, count) in enumerate(zip(needs, counts)):
			if need > count:
				return ("component", p), self.with_member[p]
		for g, group in enumerate(self.exclusive):
			if not any(counts[p] for p in group):
				return ("group", g), self.with_group[g]
		return ("any", 0), self.any_option


class _Shared:
	"""
	The incumbent and stop conditions shared by the workers of one search
	"""

	def __init__(self, deadline: float|None, floor: int = 0):
		self.lock = threading.Lock()
		self.deadline = deadline
		self.floor = floor
		self.cost: float = math.inf
		self.solution: list[object]|None = None
		self.updates = 0
		self.expired = False
		self.nodes = 0

	def offer(self, cost: int, solution: Sequence[object]) -> None:
		with self.lock:
			if cost < self.cost:
				self.cost = cost
				self.solution = list(solution)
				self.updates += 1
				logger.debug("incumbent %d after %d nodes", cost, self.nodes)

	def stopped(self) -> bool:
		return self.expired or self.cost <= self.floor

	def tick(self) -> None:
		with self.lock:
			self.nodes += 1
			nodes = self.nodes
		if self.deadline is not None and nodes % 64 == 0 and time.monotonic() > self.deadline:
			self.expired = True


class _CoreSearch:
	"""
	Search over multisets of machine contents, ignoring column order
	"""

	def __init__(self, structure: _Structure, machines: int, shared: _Shared):
		self.st = structure
		self.machines = machines
		self.shared = shared

	def children(self) -> list[tuple[tuple[int, ...], list[int], int, tuple[tuple[str, int], int]|None]]:
		root = (0,) * len(self.st.ids)
		needs = self.st.needs(root, self.machines)
		if needs is None:
			return []
		key, candidates = self.st.target(root, needs)
		result = []
		for idx in candidates:
			option = self.st.options[idx]
			counts = tuple(c + b for c, b in zip(root, option.bits))
			result.append((counts, [idx], option.price, (key, idx)))
		return result

	def visit(
		self,
		counts: tuple[int, ...],
		chosen: list[int],
		cost: int,
		last: tuple[tuple[str, int], int]|None,
	) -> None:
		shared, st = self.shared, self.st
		if shared.stopped():
			return
		shared.tick()
		left = self.machines - len(chosen)
		needs = st.needs(counts, left)
		if needs is None:
			return
		bound = st.bound(counts, needs, left)
		if bound is None or cost + bound >= shared.cost:
			return
		if needs == list(counts) and st.closes(counts):
			shared.offer(cost, chosen)
			return
		if left == 0:
			return
		key, candidates = st.target(counts, needs)
		start = last[1] if last is not None and last[0] == key else -1
		for idx in candidates:
			if idx < start:
				continue
			option = st.options[idx]
			if cost + option.price >= shared.cost:
				break
			chosen.append(idx)
			self.visit(
				tuple(c + b for c, b in zip(counts, option.bits)),
				chosen, cost + option.price, (key, idx),
			)
			chosen.pop()


class _Choice:
	"""
	One way to fill a machine; its variable values are computed on first use
	"""

	def __init__(self, ir: ConstraintIR, machine: int, option: _Option):
		self.ir = ir
		self.machine = machine
		self.option = option
		self._admitted: bool|None = None

	@cached_property
	def values(self) -> dict[Var, int]:
		return self.ir.column_values(self.machine, self.option.offer, self.option.hosted)

	def admitted(self, own: Sequence[IRConstraint]) -> bool:
		if self._admitted is None:
			self._admitted = all(c.holds(self.values) for c in own)
		return self._admitted


class _MachineSearch:
	"""
	Depth-first search assigning an offer and content to machines 1, 2, ... in turn
	"""

	def __init__(self, structure: _Structure, shared: _Shared, use_bounds: bool = True):
		ir = structure.ir
		self.st = structure
		self.ir = ir
		self.shared = shared
		self.use_bounds = use_bounds
		self.machines = ir.machines
		self.own = dict[int, tuple[IRConstraint, ...]]()
		self.spanning = dict[int, tuple[IRConstraint, ...]]()
		self.choices = dict[int, list[_Choice]]()
		for k in range(1, self.machines + 1):
			local = ir.local_constraints.get(k, ())
			self.own[k] = tuple(c for c in local if min(c.columns) == k)
			self.spanning[k] = tuple(c for c in local if min(c.columns) < k)
			self.choices[k] = self._candidates(k)

	def _candidates(self, machine: int) -> list[_Choice]:
		result = []
		for hosted, load in self.st.contents:
			bits = self.st.bits(hosted)
			for offer in self.ir.catalog.fitting(load):
				option = _Option(hosted, bits, offer.id, offer.price)
				result.append(_Choice(self.ir, machine, option))
		result.sort(key=lambda c: (c.option.price, -len(c.option.hosted), sorted(c.option.hosted)))
		empty = _Option(frozenset(), self.st.bits(frozenset()), 0, 0)
		result.append(_Choice(self.ir, machine, empty))
		return result

	def children(self) -> list[tuple[int, tuple[int, ...], int, list[_Choice]]]:
		return [
			(2, choice.option.bits, choice.option.price, [choice])
			for choice in self.choices.get(1, [])
			if choice.admitted(self.own[1])
		]

	def run(self, machine: int, counts: tuple[int, ...], cost: int, picks: list[_Choice]) -> None:
		values = dict[Var, int]()
		for k, choice in enumerate(picks, 1):
			values.update(choice.values)
			if not all(c.holds(values) for c in self.spanning[k]):
				return
		self.visit(machine, counts, cost, picks, values)

	def visit(
		self,
		machine: int,
		counts: tuple[int, ...],
		cost: int,
		picks: list[_Choice],
		values: dict[Var, int],
	) -> None:
		shared, st = self.shared, self.st
		if shared.stopped():
			return
		shared.tick()
		if machine > self.machines:
			point = self.ir.derive(values)
			if all(c.holds(point) for c in self.ir.global_constraints):
				shared.offer(cost, [choice.option for choice in picks])
			return
		if self.use_bounds:
			left = self.machines - machine + 1
			needs = st.needs(counts, left)
			if needs is None:
				return
			bound = st.bound(counts, needs, left)
			if bound is None or cost + bound >= shared.cost:
				return
		own = self.own[machine]
		for choice in self.choices[machine]:
			price = choice.option.price
			if cost + price >= shared.cost:
				continue
			if not choice.admitted(own):
				continue
			values.update(choice.values)
			if not all(c.holds(values) for c in self.spanning[machine]):
				continue
			picks.append(choice)
			self.visit(
				machine + 1,
				tuple(c + b for c, b in zip(counts, choice.option.bits)),
				cost + price, picks, values,
			)
			picks.pop()


def _run_children(
	children: Sequence[tuple[object, ...]],
	explore: Callable[..., None],
	workers: int,
) -> None:
	if workers <= 1:
		for child in children:
			explore(*child)
		return

	async def spread() -> None:
		limiter = trio.CapacityLimiter(workers)
		async with trio.open_nursery() as nursery:
			for child in children:
				nursery.start_soon(_in_thread, explore, child, limiter)

	trio.run(spread)


async def _in_thread(
	explore: Callable[..., None],
	child: tuple[object, ...],
	limiter: trio.CapacityLimiter,
) -> None:
	await trio.to_thread.run_sync(lambda: explore(*child), limiter=limiter)


def _values_of(ir: ConstraintIR, columns: Sequence[Column]) -> dict[Var, int]:
	values = dict[Var, int]()
	for k, column in enumerate(columns, 1):
		values.update(ir.column_values(k, column.offer, column.hosted))
	return ir.derive(values)


def _result(
	ir: ConstraintIR,
	status: SolveStatus,
	values: dict[Var, int]|None,
	stats: SolveStats,
	proven: bool,
) -> SolveResult:
	if values is None:
		return SolveResult(status, stats=stats, proven=proven)
	plan = ir.plan_from(values)
	if plan.total_price != ir.objective_value(values):
		raise MalformedIR("objective and plan price disagree")
	return SolveResult(status, plan, plan.total_price, stats, proven)


def solve(ir: ConstraintIR, options: SolverOptions|None = None) -> SolveResult:
	"""
	Minimise the price of a model's plan

	Returns OPTIMAL with a plan, INFEASIBLE, or TIMEOUT with the best plan found if any.
	The search order is deterministic when run with a single worker.
	"""
	options = options or SolverOptions()
	started = time.monotonic()
	deadline = None if options.timeout is None else started + options.timeout
	structure = _Structure(ir)
	components = ir.components
	nodes = updates = 0

	def stats() -> SolveStats:
		elapsed = int((time.monotonic() - started) * 1000)
		return SolveStats(nodes, elapsed, updates)

	floor = 0
	if options.warm_start:
		core = _Shared(deadline)
		search = _CoreSearch(structure, ir.machines, core)
		_run_children(search.children(), search.visit, options.workers)
		nodes += core.nodes
		updates += core.updates
		if core.solution is None:
			status = SolveStatus.TIMEOUT if core.expired else SolveStatus.INFEASIBLE
			logger.info("%s: %s after %d nodes", ir.spec.name, status.value, nodes)
			return _result(ir, status, None, stats(), not core.expired)
		columns = [structure.options[idx].column() for idx in core.solution]
		columns += [Column(0, 0, frozenset())] * (ir.machines - len(columns))
		arranged = ir.breakers.arrange(columns, components)
		if arranged is not None:
			values = _values_of(ir, arranged)
			if not ir.violations(values):
				status = SolveStatus.TIMEOUT if core.expired else SolveStatus.OPTIMAL
				logger.info(
					"%s: %s price %d after %d nodes",
					ir.spec.name, status.value, core.cost, nodes,
				)
				return _result(ir, status, values, stats(), not core.expired)
		if core.expired:
			return _result(ir, SolveStatus.TIMEOUT, None, stats(), False)
		floor = int(core.cost)
		logger.debug("%s: core bound %d, searching machine by machine", ir.spec.name, floor)

	full = _Shared(deadline, floor)
	machine_search = _MachineSearch(structure, full)
	_run_children(machine_search.children(), machine_search.run, options.workers)
	nodes += full.nodes
	updates += full.updates
	values = None
	if full.solution is not None:
		picked = [o.column() for o in full.solution if isinstance(o, _Option)]
		values = _values_of(ir, picked)
	if full.expired:
		status = SolveStatus.TIMEOUT
	else:
		status = SolveStatus.INFEASIBLE if values is None else SolveStatus.OPTIMAL
	logger.info("%s: %s after %d nodes", ir.spec.name, status.value, nodes)
	return _result(ir, status, values, stats(), not full.expired)


def brute_force(ir: ConstraintIR, limit: int = BRUTE_FORCE_LIMIT) -> SolveResult:
	"""
	Enumerate every offer and content of every machine and return the cheapest point

	Raises `SpaceTooLarge` when more than `limit` combinations would be enumerated.
	"""
	started = time.monotonic()
	size = len(ir.components)
	per_machine = (ir.dims.offers + 1) * 2 ** size
	if per_machine > limit:
		raise SpaceTooLarge(per_machine ** ir.machines, limit)

	spanning = dict[int, list[IRConstraint]]()
	valid = dict[int, list[tuple[int, dict[Var, int], Column]]]()
	for k in range(1, ir.machines + 1):
		local = ir.local_constraints.get(k, ())
		own = [c for c in local if min(c.columns) == k]
		spanning[k] = [c for c in local if min(c.columns) < k]
		valid[k] = []
		for bits in itertools.product((0, 1), repeat=size):
			hosted = frozenset(i for i, b in zip(ir.components, bits) if b)
			for offer in range(ir.dims.offers + 1):
				values = ir.column_values(k, offer, hosted)
				if all(c.holds(values) for c in own):
					column = Column(offer, values[ir.objective[k - 1]], hosted)
					valid[k].append((column.price, values, column))
		valid[k].sort(key=lambda entry: entry[0])

	total = math.prod(len(v) for v in valid.values())
	if total > limit:
		raise SpaceTooLarge(total, limit)

	best: list[object] = [math.inf, None]
	nodes = 0
	values: dict[Var, int] = {}

	def visit(machine: int, cost: int, columns: list[Column]) -> None:
		nonlocal nodes
		nodes += 1
		if machine > ir.machines:
			point = ir.derive(values)
			if all(c.holds(point) for c in ir.global_constraints):
				best[:] = [cost, list(columns)]
			return
		for price, column_values, column in valid[machine]:
			if cost + price >= best[0]:  # type: ignore[operator]
				break
			values.update(column_values)
			if all(c.holds(values) for c in spanning[machine]):
				columns.append(column)
				visit(machine + 1, cost + price, columns)
				columns.pop()

	visit(1, 0, [])
	stats = SolveStats(nodes, int((time.monotonic() - started) * 1000), 0)
	if best[1] is None:
		return SolveResult(SolveStatus.INFEASIBLE, stats=stats, proven=True)
	point = _values_of(ir, best[1])  # type: ignore[arg-type]
	return _result(ir, SolveStatus.OPTIMAL, point, stats, True)


def lower_bound(ir: ConstraintIR, state: SearchState) -> int:
	"""
	Return a price no completion of a partial solution can undercut

	The bound is the committed price plus the larger of two estimates for the missing
	instances: each missing instance's cheapest fitting offer divided by the most
	components one machine can host, and the per-clique and per-resource estimates the
	solver prunes with.
	"""
	structure = _Structure(ir)
	needs = structure.needs(state.counts, state.machines_left)
	if needs is None:
		return state.committed
	deficit = [n - c for n, c in zip(needs, state.counts)]
	simple = sum(d * structure.minfit[p] for p, d in enumerate(deficit) if d)
	if simple == math.inf:
		return state.committed
	simple = int(simple) // structure.cohost
	bound = structure.bound(state.counts, needs, state.machines_left)
	return state.committed + max(simple, bound or 0)
