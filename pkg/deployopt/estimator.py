# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""
Instance-count estimation: the surrogate problem bounding the number of machines

The surrogate keeps only the constraints that speak about numbers of instances
(require-provide, exact ratios and instance bounds) and minimises the total count.  Its
optimum gives per-component counts ν and the machine bound M = Σ ν.

Two forms are available.  The relaxed form (the default) enumerates one branch per choice of
exclusive alternatives, letting unchosen alternatives drop to zero and applying
conditional bounds only where their guard is deployed.  The strict form requires every
component at least once and ignores exclusive and conditional constraints.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Iterator
from collections.abc import Sequence
from dataclasses import dataclass

from .exceptions import InfeasibleInstanceCounts
from .exceptions import NoFeasiblePointWithinBound
from .model import ApplicationSpec
from .model import BoundInstances
from .model import ConditionalBound
from .model import ExactRatio
from .model import ExclusiveDeploy
from .model import Op
from .model import RequireProvide
from .model import ValidatedSpec
from .model import as_spec

__all__ = [
	"SURROGATE_CAP", "CountRow", "InstanceEstimate", "Surrogate",
	"estimate_instances", "instance_floors", "solve_surrogate_bruteforce", "tighten_counts",
]

SURROGATE_CAP = 64

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InstanceEstimate:
	"""
	Estimated instance counts, their sum M, and the smallest count each component can take

	All vectors are ordered by ascending component id, as in `components`.
	"""

	components: tuple[int, ...]
	nu: tuple[int, ...]
	floors: tuple[int, ...] = ()

	@property
	def m_upper(self) -> int:
		return sum(self.nu)

	def count(self, ident: int) -> int:
		return self.nu[self.components.index(ident)]

	def floor(self, ident: int) -> int:
		"""
		Return the fewest instances of a component any surrogate solution deploys
		"""
		if not self.floors:
			return min(1, self.count(ident))
		return self.floors[self.components.index(ident)]

	def as_json(self) -> dict[str, object]:
		return {"components": list(self.components), "nu": list(self.nu), "m_upper": self.m_upper}


@dataclass(frozen=True)
class CountRow:
	"""
	A linear row Σ coef·ν <= bound over count positions
	"""

	coefs: tuple[tuple[int, int], ...]
	bound: int

	def holds(self, values: Sequence[int]) -> bool:
		return sum(c * values[i] for i, c in self.coefs) <= self.bound


@dataclass(frozen=True)
class _Branch:
	lower: tuple[int, ...]
	upper: tuple[int, ...]
	rows: tuple[CountRow, ...]


def tighten_counts(rows: Sequence[CountRow], lower: list[int], upper: list[int]) -> bool:
	"""
	Shrink variable boxes by interval reasoning over the rows; return False if one empties
	"""
	for _ in range(200):
		changed = False
		for row in rows:
			minsum = sum(c * (lower[i] if c > 0 else upper[i]) for i, c in row.coefs)
			if minsum > row.bound:
				return False
			for i, c in row.coefs:
				slack = row.bound - (minsum - c * (lower[i] if c > 0 else upper[i]))
				if c > 0:
					if (limit := slack // c) < upper[i]:
						upper[i] = limit
						changed = True
				elif (limit := -(slack // -c)) > lower[i]:
					lower[i] = limit
					changed = True
				if lower[i] > upper[i]:
					return False
		if not changed:
			break
	return True


class Surrogate:
	"""
	The instance-count problem of one application spec
	"""

	def __init__(
		self,
		spec: ApplicationSpec|ValidatedSpec,
		relax_exclusive: bool = True,
		cap: int|None = None,
	) -> None:
		self.spec = spec = as_spec(spec)
		self.relax_exclusive = relax_exclusive
		self.ids = spec.ids
		self.position = {ident: index for index, ident in enumerate(self.ids)}
		thresholds = sum(
			c.n for c in spec.constraints if isinstance(c, (BoundInstances, ConditionalBound))
		)
		self.cap = max(cap or 0, SURROGATE_CAP + thresholds)
		self.rows = tuple(self._base_rows())
		self.exclusive = [
			c.members for c in spec.constraints if isinstance(c, ExclusiveDeploy)
		] if relax_exclusive else []
		self.conditional = [
			c for c in spec.constraints if isinstance(c, ConditionalBound)
		] if relax_exclusive else []

	def _rows_for(self, coefs: dict[int, int], op: Op, n: int) -> Iterator[CountRow]:
		terms = tuple(sorted((self.position[i], c) for i, c in coefs.items() if c))
		if op in (Op.LE, Op.EQ):
			yield CountRow(terms, n)
		if op in (Op.GE, Op.EQ):
			yield CountRow(tuple((i, -c) for i, c in terms), -n)

	def _sum(self, members: Sequence[int]) -> dict[int, int]:
		coefs = dict[int, int]()
		for member in members:
			coefs[member] = coefs.get(member, 0) + 1
		return coefs

	def _base_rows(self) -> Iterator[CountRow]:
		for constraint in self.spec.constraints:
			match constraint:
				case RequireProvide(consumer, provider, n, m):
					yield from self._rows_for({consumer: n, provider: -m}, Op.LE, 0)
				case ExactRatio(many, one, n):
					coefs = {one: n, many: -1}
					yield from self._rows_for(coefs, Op.GE, 0)
					yield from self._rows_for(coefs, Op.LE, n - 1)
				case BoundInstances(members, op, n):
					yield from self._rows_for(self._sum(members), op, n)

	def branches(self) -> list[_Branch]:
		"""
		Return the distinct consistent choices of exclusive alternatives, in a stable order
		"""
		excluded_all = {m for members in self.exclusive for m in members}
		seen = set[frozenset[int]]()
		result = []
		for choice in itertools.product(*self.exclusive):
			chosen = frozenset(choice)
			zeroed = {m for members, pick in zip(self.exclusive, choice) for m in members if m != pick}
			if chosen & zeroed or chosen in seen:
				continue
			seen.add(chosen)
			lower = tuple(
				0 if i in zeroed or (i in excluded_all and i not in chosen) else 1
				for i in self.ids
			)
			upper = tuple(0 if i in zeroed else self.cap for i in self.ids)
			rows = list(self.rows)
			for constraint in self.conditional:
				if lower[self.position[constraint.guard]] >= 1:
					rows.extend(self._rows_for(self._sum(constraint.members), constraint.op, constraint.n))
			result.append(_Branch(lower, upper, tuple(rows)))
		return result

	def admits(self, nu: Sequence[int]) -> bool:
		"""
		Return whether a count vector satisfies the surrogate, checked directly
		"""
		pos = self.position
		if self.relax_exclusive:
			exclusive = {m for members in self.exclusive for m in members}
			for members in self.exclusive:
				if sum(1 for m in members if nu[pos[m]] > 0) != 1:
					return False
		else:
			exclusive = set()
		if any(nu[pos[i]] < 1 for i in self.ids if i not in exclusive):
			return False
		if not all(row.holds(nu) for row in self.rows):
			return False
		for constraint in self.conditional:
			if nu[pos[constraint.guard]] >= 1:
				total = sum(nu[pos[m]] for m in constraint.members)
				if not constraint.op.holds(total, constraint.n):
					return False
		return True

	def minimise(self, branch: _Branch, target: int|None = None) -> tuple[int, ...]|None:
		"""
		Return the lexicographically smallest minimiser of Σ ν (or of ν[target]) in a branch
		"""
		size = len(self.ids)
		order = list(range(size))
		if target is not None:
			order.remove(target)
			order.insert(0, target)
		best: list[tuple[int, tuple[int, ...]]] = []

		def objective(lower: list[int]) -> int:
			return lower[target] if target is not None else sum(lower)

		def visit(lower: list[int], upper: list[int]) -> None:
			if not tighten_counts(branch.rows, lower, upper):
				return
			if best and objective(lower) >= best[0][0]:
				return
			for index in order:
				if lower[index] < upper[index]:
					break
			else:
				values = tuple(lower)
				if all(row.holds(values) for row in branch.rows):
					best[:] = [(objective(lower), values)]
				return
			for value in range(lower[index], upper[index] + 1):
				if best and target == index and value >= best[0][0]:
					break
				sub_lower, sub_upper = list(lower), list(upper)
				sub_lower[index] = sub_upper[index] = value
				visit(sub_lower, sub_upper)
				if target is not None and best:
					return

		visit(list(branch.lower), list(branch.upper))
		return best[0][1] if best else None


def instance_floors(
	spec: ApplicationSpec|ValidatedSpec,
	relax_exclusive: bool = True,
	cap: int|None = None,
) -> tuple[int, ...]:
	"""
	Return, per component, the fewest instances found in any feasible surrogate solution

	Raises `InfeasibleInstanceCounts` if the surrogate has no solution.
	"""
	surrogate = Surrogate(spec, relax_exclusive, cap)
	branches = surrogate.branches()
	floors = []
	for index, ident in enumerate(surrogate.ids):
		values = [
			found[index]
			for branch in branches
			if (found := surrogate.minimise(branch, target=index)) is not None
		]
		if not values:
			raise InfeasibleInstanceCounts(f"{surrogate.spec.name}: no feasible instance counts")
		floors.append(min(values))
	return tuple(floors)


def estimate_instances(
	spec: ApplicationSpec|ValidatedSpec,
	relax_exclusive: bool = True,
	cap: int|None = None,
) -> InstanceEstimate:
	"""
	Solve the surrogate problem, returning ν and M = Σ ν

	The cheapest feasible branch wins; ties between branches and within a branch go to the
	lexicographically smallest vector.
	"""
	surrogate = Surrogate(spec, relax_exclusive, cap)
	candidates = [
		found
		for branch in surrogate.branches()
		if (found := surrogate.minimise(branch)) is not None
	]
	if not candidates:
		raise InfeasibleInstanceCounts(f"{surrogate.spec.name}: no feasible instance counts")
	nu = min(candidates, key=lambda values: (sum(values), values))
	# floors come from the relaxed form whatever the variant, as that form admits every
	# real deployment
	estimate = InstanceEstimate(surrogate.ids, nu, instance_floors(spec, True, cap))
	logger.info(
		"%s: estimated instances %s, M=%d",
		surrogate.spec.name, dict(zip(surrogate.ids, nu)), estimate.m_upper,
	)
	return estimate


def solve_surrogate_bruteforce(
	spec: ApplicationSpec|ValidatedSpec,
	bound: int,
	relax_exclusive: bool = True,
) -> InstanceEstimate:
	"""
	Enumerate every count vector in {0..bound}^N and return the smallest feasible one
	"""
	if bound < 1:
		raise ValueError("bound must be at least 1")
	surrogate = Surrogate(spec, relax_exclusive)
	best: tuple[int, ...]|None = None
	for nu in itertools.product(range(bound + 1), repeat=len(surrogate.ids)):
		if (best is None or (sum(nu), nu) < (sum(best), best)) and surrogate.admits(nu):
			best = nu
	if best is None:
		raise NoFeasiblePointWithinBound(bound)
	return InstanceEstimate(surrogate.ids, best)
