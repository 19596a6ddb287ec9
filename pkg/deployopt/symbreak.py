# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""
Static symmetry breakers for the machine columns of a deployment model

Machines are interchangeable, so any permutation of a plan's columns is another plan of
the same price.  Each strategy adds constraints admitting only some orders of the
columns; every strategy keeps at least one order of every plan, so the optimum is
unchanged.  All column orders are non-strict.
"""

from __future__ import annotations

import enum
import logging
from collections.abc import Sequence
from dataclasses import dataclass
from dataclasses import field

from .confgraph import FixedAssignments
from .confgraph import FixMode
from .confgraph import build_conflict_graph
from .confgraph import default_fix_mode
from .confgraph import enumerate_maximal_cliques
from .confgraph import fix_assignments
from .confgraph import select_clique
from .estimator import InstanceEstimate
from .ir import Column
from .ir import Family
from .ir import Implication
from .ir import IRConstraint
from .ir import Relation
from .ir import a_var
from .ir import fix
from .ir import linear
from .ir import p_var
from .ir import relation
from .ir import t_var
from .model import ApplicationSpec
from .model import Op
from .model import ValidatedSpec
from .model import as_spec

__all__ = [
	"Strategy", "BENCH_STRATEGIES", "BreakerSet", "generate",
	"gen_pr", "gen_lx", "gen_prlx", "gen_ld", "gen_tpr", "gen_tlx",
	"gen_fv", "gen_fvpr", "gen_fvlx",
]

logger = logging.getLogger(__name__)


class Strategy(enum.Enum):

	NONE = "none"
	PR = "pr"
	LX = "lx"
	PRLX = "prlx"
	FV = "fv"
	FVPR = "fvpr"
	FVLX = "fvlx"
	TPR = "tpr"
	TLX = "tlx"
	LD = "ld"

	@property
	def fixes_values(self) -> bool:
		return self in (Strategy.FV, Strategy.FVPR, Strategy.FVLX)


BENCH_STRATEGIES = (
	Strategy.NONE, Strategy.PR, Strategy.LX, Strategy.PRLX,
	Strategy.FV, Strategy.FVPR, Strategy.FVLX,
)


def _order(columns: Sequence[Column], ordering: str, components: Sequence[int]) -> list[Column]:
	match ordering:
		case "pr":
			return sorted(columns, key=lambda c: -c.price)
		case "lx":
			return sorted(columns, key=lambda c: c.bits(components), reverse=True)
		case "prlx":
			return sorted(columns, key=lambda c: (c.price, c.bits(components)), reverse=True)
		case "ld":
			return sorted(columns, key=lambda c: -c.load)
		case "tpr":
			return sorted(columns, key=lambda c: (c.offer == 0, c.offer, -c.load))
		case "tlx":
			by_bits = sorted(columns, key=lambda c: c.bits(components), reverse=True)
			return sorted(by_bits, key=lambda c: (c.offer == 0, c.offer))
	return list(columns)


@dataclass(frozen=True)
class BreakerSet:
	"""
	The constraints and fixed cells one strategy adds to a model

	`vm_sublists` partitions the machines 1..M into the runs each column order applies to;
	`ordering` names that order ("" when columns are unordered).
	"""

	strategy: Strategy = Strategy.NONE
	extra_constraints: tuple[IRConstraint, ...] = ()
	fixed: FixedAssignments = field(default_factory=FixedAssignments)
	vm_sublists: tuple[tuple[int, ...], ...] = ()
	ordering: str = ""

	@property
	def constraints(self) -> tuple[IRConstraint, ...]:
		"""
		The ordering constraints followed by one equality per fixed cell
		"""
		fixes = tuple(
			fix(Family.BREAKER, a_var(cell.component, cell.machine), cell.value)
			for cell in self.fixed.cells
		)
		return self.extra_constraints + fixes

	def arrange(self, columns: Sequence[Column], components: Sequence[int]) -> list[Column]|None:
		"""
		Reorder plan columns into an order these breakers admit

		Returns None when the columns cannot fill the fixed blocks, which happens when a
		plan deploys fewer instances of a clique member than were fixed.
		"""
		if not self.fixed.blocks:
			return _order(columns, self.ordering, components)
		pool = list(columns)
		placed = list[Column]()
		for member, block in self.fixed.blocks:
			hosting = _order([c for c in pool if member in c.hosted], self.ordering, components)
			if len(hosting) < len(block):
				return None
			for column in hosting[:len(block)]:
				pool.remove(column)
				placed.append(column)
		return placed + _order(pool, self.ordering, components)


def _price_chain(machines: Sequence[int]) -> list[IRConstraint]:
	return [
		linear(Family.BREAKER, [(1, p_var(k)), (-1, p_var(h))], Op.GE, 0)
		for k, h in zip(machines, machines[1:])
	]


def _equal(first: int, second: int, component: int) -> Relation:
	return relation([(1, a_var(component, first)), (-1, a_var(component, second))], Op.EQ, 0)


def _lex_pair(
	components: Sequence[int],
	first: int,
	second: int,
	guard: tuple[Relation, ...] = (),
) -> list[IRConstraint]:
	# column first ⪰lex column second, one implication per row
	result = list[IRConstraint]()
	for index, ident in enumerate(components):
		prefix = tuple(_equal(first, second, above) for above in components[:index])
		body = relation([(1, a_var(ident, first)), (-1, a_var(ident, second))], Op.GE, 0)
		result.append(Implication(Family.BREAKER, guard + prefix, (body,)))
	return result


def _lex_chain(components: Sequence[int], machines: Sequence[int]) -> list[IRConstraint]:
	result = list[IRConstraint]()
	for k, h in zip(machines, machines[1:]):
		result.extend(_lex_pair(components, k, h))
	return result


def _all(machines: int) -> tuple[tuple[int, ...], ...]:
	return (tuple(range(1, machines + 1)),)


def gen_pr(machines: int) -> BreakerSet:
	"""
	Order machines by non-increasing price
	"""
	chain = _price_chain(range(1, machines + 1))
	return BreakerSet(Strategy.PR, tuple(chain), vm_sublists=_all(machines), ordering="pr")


def gen_lx(components: Sequence[int], machines: int) -> BreakerSet:
	"""
	Order machine columns lexicographically, non-increasing, rows taken by ascending id
	"""
	chain = _lex_chain(sorted(components), range(1, machines + 1))
	return BreakerSet(Strategy.LX, tuple(chain), vm_sublists=_all(machines), ordering="lx")


def gen_prlx(components: Sequence[int], machines: int) -> BreakerSet:
	"""
	Order by price, and lexicographically among neighbouring machines of equal price
	"""
	rows = sorted(components)
	result = _price_chain(range(1, machines + 1))
	for k in range(1, machines):
		same = relation([(1, p_var(k)), (-1, p_var(k + 1))], Op.EQ, 0)
		result.extend(_lex_pair(rows, k, k + 1, (same,)))
	return BreakerSet(Strategy.PRLX, tuple(result), vm_sublists=_all(machines), ordering="prlx")


def gen_ld(components: Sequence[int], machines: int) -> BreakerSet:
	"""
	Order machines by non-increasing number of hosted components
	"""
	result = [
		linear(
			Family.BREAKER,
			[(1, a_var(i, k)) for i in components] + [(-1, a_var(i, k + 1)) for i in components],
			Op.GE, 0,
		)
		for k in range(1, machines)
	]
	return BreakerSet(Strategy.LD, tuple(result), vm_sublists=_all(machines), ordering="ld")


def gen_tpr(components: Sequence[int], machines: int) -> BreakerSet:
	"""
	Order neighbouring machines of the same type by non-increasing number of components
	"""
	result = list[IRConstraint]()
	for k in range(1, machines):
		same = relation([(1, t_var(k)), (-1, t_var(k + 1))], Op.EQ, 0)
		body = relation(
			[(1, a_var(i, k)) for i in components] + [(-1, a_var(i, k + 1)) for i in components],
			Op.GE, 0,
		)
		result.append(Implication(Family.BREAKER, (same,), (body,)))
	return BreakerSet(Strategy.TPR, tuple(result), vm_sublists=_all(machines), ordering="tpr")


def gen_tlx(components: Sequence[int], machines: int) -> BreakerSet:
	"""
	Order neighbouring machines of the same type lexicographically
	"""
	rows = sorted(components)
	result = list[IRConstraint]()
	for k in range(1, machines):
		same = relation([(1, t_var(k)), (-1, t_var(k + 1))], Op.EQ, 0)
		result.extend(_lex_pair(rows, k, k + 1, (same,)))
	return BreakerSet(Strategy.TLX, tuple(result), vm_sublists=_all(machines), ordering="tlx")


def _fixing(
	spec: ApplicationSpec,
	estimate: InstanceEstimate,
	machines: int,
	mode: FixMode|None,
) -> FixedAssignments:
	graph = build_conflict_graph(spec)
	if not graph.edges:
		return FixedAssignments()
	clique = select_clique(enumerate_maximal_cliques(graph), estimate)
	if mode is None:
		mode = default_fix_mode(spec, clique, estimate)
	logger.info(
		"%s: selected clique %s with deployment size %d",
		spec.name, list(clique.members), clique.deployment_size,
	)
	return fix_assignments(clique, estimate, machines, mode, graph)


def _sublists(fixed: FixedAssignments, machines: int) -> tuple[tuple[int, ...], ...]:
	blocks = [block for _, block in fixed.blocks if block]
	rest = tuple(range(fixed.reserved + 1, machines + 1))
	return tuple(blocks) + ((rest,) if rest else ())


def gen_fv(
	spec: ApplicationSpec|ValidatedSpec,
	estimate: InstanceEstimate,
	machines: int,
	mode: FixMode|None = None,
) -> BreakerSet:
	"""
	Fix the cells placing the instances of the largest conflict clique on leading machines

	An edgeless conflict graph yields an empty set.  `mode` defaults to the mode chosen by
	`default_fix_mode`.
	"""
	fixed = _fixing(as_spec(spec), estimate, machines, mode)
	return BreakerSet(Strategy.FV, fixed=fixed, vm_sublists=_sublists(fixed, machines))


def gen_fvpr(
	spec: ApplicationSpec|ValidatedSpec,
	estimate: InstanceEstimate,
	machines: int,
	mode: FixMode|None = None,
) -> BreakerSet:
	"""
	Fix cells as `gen_fv` does, then order by price within each clique member's machines
	and within the remaining machines
	"""
	fixed = _fixing(as_spec(spec), estimate, machines, mode)
	sublists = _sublists(fixed, machines)
	chain = [c for sublist in sublists for c in _price_chain(sublist)]
	return BreakerSet(Strategy.FVPR, tuple(chain), fixed, sublists, "pr")


def gen_fvlx(
	spec: ApplicationSpec|ValidatedSpec,
	estimate: InstanceEstimate,
	machines: int,
	mode: FixMode|None = None,
) -> BreakerSet:
	"""
	Fix cells as `gen_fv` does, with lexicographic chains in place of the price chains
	"""
	spec = as_spec(spec)
	fixed = _fixing(spec, estimate, machines, mode)
	sublists = _sublists(fixed, machines)
	chain = [c for sublist in sublists for c in _lex_chain(spec.ids, sublist)]
	return BreakerSet(Strategy.FVLX, tuple(chain), fixed, sublists, "lx")


def generate(
	strategy: Strategy,
	spec: ApplicationSpec|ValidatedSpec,
	estimate: InstanceEstimate,
	machines: int|None = None,
	mode: FixMode|None = None,
) -> BreakerSet:
	"""
	Return the breakers of a strategy for a spec over `machines` (default: the estimate's M)
	"""
	spec = as_spec(spec)
	if machines is None:
		machines = estimate.m_upper
	match strategy:
		case Strategy.NONE:
			breakers = BreakerSet(vm_sublists=_all(machines))
		case Strategy.PR:
			breakers = gen_pr(machines)
		case Strategy.LX:
			breakers = gen_lx(spec.ids, machines)
		case Strategy.PRLX:
			breakers = gen_prlx(spec.ids, machines)
		case Strategy.LD:
			breakers = gen_ld(spec.ids, machines)
		case Strategy.TPR:
			breakers = gen_tpr(spec.ids, machines)
		case Strategy.TLX:
			breakers = gen_tlx(spec.ids, machines)
		case Strategy.FV:
			breakers = gen_fv(spec, estimate, machines, mode)
		case Strategy.FVPR:
			breakers = gen_fvpr(spec, estimate, machines, mode)
		case Strategy.FVLX:
			breakers = gen_fvlx(spec, estimate, machines, mode)
	logger.info(
		"%s: %s adds %d constraints and %d fixed cells",
		spec.name, strategy.value, len(breakers.extra_constraints), breakers.fixed.count_fixed,
	)
	return breakers
