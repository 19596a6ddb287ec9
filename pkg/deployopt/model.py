# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""
Domain types for applications, offers, constraints and deployment plans

Every type is immutable after construction.  `validate_spec` checks the structure of an
application against a catalog and `check_plan` re-evaluates every constraint family
against a finished plan, independently of how the plan was produced.
"""

from __future__ import annotations

import enum
from collections import Counter
from collections.abc import Iterable
from collections.abc import Iterator
from collections.abc import Sequence
from dataclasses import dataclass
from typing import ClassVar
from typing import TypeAlias
from typing import Union

from typing_extensions import Self

from .exceptions import ConflictColocateClash
from .exceptions import DanglingComponentRef
from .exceptions import DimensionMismatch
from .exceptions import EmptyCatalog
from .exceptions import InvalidConstraint
from .exceptions import InvalidSpec
from .exceptions import UnsatisfiableComponent

__all__ = [
	"Op", "ResourceVector", "Component", "VMOffer", "OfferCatalog",
	"Conflict", "Colocate", "ExclusiveDeploy", "RequireProvide", "ExactRatio", "FullDeploy",
	"BoundInstances", "ConditionalBound", "StructuralConstraint",
	"ApplicationSpec", "ValidatedSpec", "DeploymentPlan", "FamilyResult", "ValidationReport",
	"FAMILIES", "as_spec", "spec_violations", "validate_spec", "check_plan",
]


class Op(enum.Enum):
	"""
	Comparison operators of instance bounds
	"""

	EQ = "="
	LE = "<="
	GE = ">="

	@classmethod
	def parse(cls, text: str) -> Op:
		"""
		Return the operator for its textual form, accepting "==", "≤" and "≥" aliases
		"""
		aliases = {"==": "=", "≤": "<=", "≥": ">="}
		return cls(aliases.get(text, text))

	def holds(self, lhs: int, rhs: int) -> bool:
		match self:
			case Op.EQ:
				return lhs == rhs
			case Op.LE:
				return lhs <= rhs
			case Op.GE:
				return lhs >= rhs
		raise AssertionError(self)  # pragma: no-cover


@dataclass(frozen=True)
class ResourceVector:
	"""
	Integer quantities, one per hardware dimension, in the order the problem declares them
	"""

	amounts: tuple[int, ...]

	@classmethod
	def zero(cls, size: int) -> Self:
		return cls((0,) * size)

	def __iter__(self) -> Iterator[int]:
		return iter(self.amounts)

	def __len__(self) -> int:
		return len(self.amounts)

	def __getitem__(self, index: int) -> int:
		return self.amounts[index]

	def __add__(self, other: ResourceVector) -> ResourceVector:
		if len(other) != len(self):
			raise DimensionMismatch(f"cannot add {len(other)} dimensions to {len(self)}")
		return ResourceVector(tuple(a + b for a, b in zip(self.amounts, other.amounts)))

	def fits(self, capacity: ResourceVector) -> bool:
		"""
		Return whether these amounts fit within the given capacity in every dimension
		"""
		return all(a <= c for a, c in zip(self.amounts, capacity.amounts))


@dataclass(frozen=True)
class Component:
	"""
	A deployable unit of an application; instances are implicit in a plan's row sums
	"""

	id: int
	name: str
	requirements: ResourceVector


@dataclass(frozen=True)
class VMOffer:
	"""
	A purchasable machine type with its capacity and hourly price in micro-units

	Offer ids start at 1; id 0 denotes an unused machine in plans.
	"""

	id: int
	capacity: ResourceVector
	price: int
	name: str = ""


@dataclass(frozen=True)
class OfferCatalog:
	"""
	The offers a problem can choose machine types from, indexed by offer id
	"""

	dimensions: tuple[str, ...]
	offers: tuple[VMOffer, ...]

	def __post_init__(self) -> None:
		ids = [offer.id for offer in self.offers]
		if ids != list(range(1, len(ids) + 1)):
			raise InvalidSpec("offer ids must be 1..O in order")
		for offer in self.offers:
			if len(offer.capacity) != len(self.dimensions):
				raise DimensionMismatch(f"offer {offer.id} has {len(offer.capacity)} dimensions")
			if offer.price <= 0 or any(c <= 0 for c in offer.capacity):
				raise InvalidSpec(f"offer {offer.id} needs positive capacities and price")

	def __len__(self) -> int:
		return len(self.offers)

	def __iter__(self) -> Iterator[VMOffer]:
		return iter(self.offers)

	def __getitem__(self, offer_id: int) -> VMOffer:
		if not 1 <= offer_id <= len(self.offers):
			raise KeyError(offer_id)
		return self.offers[offer_id - 1]

	def price(self, offer_id: int) -> int:
		"""
		Return the price of an offer, or 0 for the unused-machine id
		"""
		return 0 if offer_id == 0 else self[offer_id].price

	def by_price(self) -> list[VMOffer]:
		"""
		Return the offers ordered by ascending price, then id
		"""
		return sorted(self.offers, key=lambda o: (o.price, o.id))

	def fitting(self, load: ResourceVector) -> list[VMOffer]:
		"""
		Return the offers able to host a load, cheapest first
		"""
		return [o for o in self.by_price() if load.fits(o.capacity)]

	def cheapest_fitting(self, load: ResourceVector) -> VMOffer|None:
		for offer in self.by_price():
			if load.fits(offer.capacity):
				return offer
		return None

	def subset(self, count: int) -> OfferCatalog:
		"""
		Return the catalog of the first `count` offers
		"""
		return OfferCatalog(self.dimensions, self.offers[:count])


@dataclass(frozen=True)
class Conflict:
	"""
	Two components that may never share a machine
	"""

	kind: ClassVar[str] = "conflict"
	first: int
	second: int

	@property
	def components(self) -> tuple[int, ...]:
		return (self.first, self.second)

	@property
	def pair(self) -> tuple[int, int]:
		return (min(self.first, self.second), max(self.first, self.second))


@dataclass(frozen=True)
class Colocate:
	"""
	Two components that must always be deployed on the same machines
	"""

	kind: ClassVar[str] = "colocate"
	first: int
	second: int

	@property
	def components(self) -> tuple[int, ...]:
		return (self.first, self.second)

	@property
	def pair(self) -> tuple[int, int]:
		return (min(self.first, self.second), max(self.first, self.second))


@dataclass(frozen=True)
class ExclusiveDeploy:
	"""
	A set of alternatives of which exactly one is deployed
	"""

	kind: ClassVar[str] = "exclusive"
	members: tuple[int, ...]

	@property
	def components(self) -> tuple[int, ...]:
		return self.members


@dataclass(frozen=True)
class RequireProvide:
	"""
	`consumer` needs `provider`: n instances of the consumer per m instances of the provider

	Holds when ``n * count(consumer) <= m * count(provider)``.
	"""

	kind: ClassVar[str] = "require-provide"
	consumer: int
	provider: int
	n: int
	m: int

	@property
	def components(self) -> tuple[int, ...]:
		return (self.consumer, self.provider)


@dataclass(frozen=True)
class ExactRatio:
	"""
	One instance of `one` is deployed for every (started) group of n instances of `many`

	Holds when ``0 <= n * count(one) - count(many) < n``.
	"""

	kind: ClassVar[str] = "exact-ratio"
	many: int
	one: int
	n: int

	@property
	def components(self) -> tuple[int, ...]:
		return (self.many, self.one)


@dataclass(frozen=True)
class FullDeploy:
	"""
	A component deployed on every used machine not hosting one of its conflicting peers
	"""

	kind: ClassVar[str] = "full-deploy"
	component: int

	@property
	def components(self) -> tuple[int, ...]:
		return (self.component,)


@dataclass(frozen=True)
class BoundInstances:
	"""
	A bound on the total instances over a multiset of components
	"""

	kind: ClassVar[str] = "bound"
	members: tuple[int, ...]
	op: Op
	n: int

	@property
	def components(self) -> tuple[int, ...]:
		return self.members


@dataclass(frozen=True)
class ConditionalBound:
	"""
	A bound on instances that applies only when `guard` is deployed at least once
	"""

	kind: ClassVar[str] = "conditional-bound"
	guard: int
	members: tuple[int, ...]
	op: Op
	n: int

	@property
	def components(self) -> tuple[int, ...]:
		return (self.guard, *self.members)


StructuralConstraint: TypeAlias = Union[
	Conflict,
	Colocate,
	ExclusiveDeploy,
	RequireProvide,
	ExactRatio,
	FullDeploy,
	BoundInstances,
	ConditionalBound,
]

CONSTRAINT_TYPES: tuple[type[StructuralConstraint], ...] = (
	Conflict, Colocate, ExclusiveDeploy, RequireProvide, ExactRatio, FullDeploy,
	BoundInstances, ConditionalBound,
)


@dataclass(frozen=True)
class ApplicationSpec:
	"""
	An application: its components, their requirements and the structural constraints

	`parameters` records the values substituted into parameterised constraints when the
	spec was loaded; `reference` holds expected figures (such as an expected estimate)
	used only for reporting.
	"""

	name: str
	dimensions: tuple[str, ...]
	components: tuple[Component, ...]
	constraints: tuple[StructuralConstraint, ...] = ()
	description: str = ""
	parameters: tuple[tuple[str, int], ...] = ()
	reference: tuple[tuple[str, int], ...] = ()

	@property
	def ids(self) -> tuple[int, ...]:
		"""
		Component ids in ascending order; this is the row order of every matrix
		"""
		return tuple(sorted(c.id for c in self.components))

	def component(self, ident: int) -> Component:
		for comp in self.components:
			if comp.id == ident:
				return comp
		raise KeyError(ident)

	def of_type(self, kind: type[StructuralConstraint]) -> list[StructuralConstraint]:
		return [c for c in self.constraints if isinstance(c, kind)]

	def conflict_pairs(self) -> set[tuple[int, int]]:
		return {c.pair for c in self.constraints if isinstance(c, Conflict)}

	def neighbours(self, ident: int) -> set[int]:
		"""
		Return the components in conflict with a component
		"""
		result = set[int]()
		for first, second in self.conflict_pairs():
			if first == ident:
				result.add(second)
			elif second == ident:
				result.add(first)
		return result

	def exclusive_members(self) -> set[int]:
		return {m for c in self.constraints if isinstance(c, ExclusiveDeploy) for m in c.members}

	def reference_value(self, key: str) -> int|None:
		return dict(self.reference).get(key)


@dataclass(frozen=True)
class ValidatedSpec:
	"""
	An application spec that passed `validate_spec` against a catalog
	"""

	spec: ApplicationSpec
	catalog: OfferCatalog

	@property
	def ids(self) -> tuple[int, ...]:
		return self.spec.ids

	@property
	def name(self) -> str:
		return self.spec.name


def as_spec(spec: ApplicationSpec|ValidatedSpec) -> ApplicationSpec:
	"""
	Return the plain spec of either a spec or its validated wrapper
	"""
	return spec.spec if isinstance(spec, ValidatedSpec) else spec


def spec_violations(spec: ApplicationSpec, catalog: OfferCatalog) -> list[InvalidSpec]:
	"""
	Return every structural problem found in a spec, in a stable order
	"""
	problems = list[InvalidSpec]()
	if not spec.components:
		problems.append(InvalidSpec(f"{spec.name}: an application needs at least one component"))
	if tuple(catalog.dimensions) != tuple(spec.dimensions):
		problems.append(
			InvalidSpec(f"catalog dimensions {catalog.dimensions} differ from {spec.dimensions}"),
		)

	seen = Counter(c.id for c in spec.components)
	for ident, count in sorted(seen.items()):
		if count > 1:
			problems.append(InvalidSpec(f"component id {ident} is used {count} times"))
		if ident < 1:
			problems.append(InvalidSpec(f"component id {ident} is not positive"))
	for comp in spec.components:
		if len(comp.requirements) != len(spec.dimensions):
			problems.append(InvalidSpec(
				f"component {comp.id} has {len(comp.requirements)} requirements, "
				f"expected {len(spec.dimensions)}",
			))
		elif any(r < 0 for r in comp.requirements) or not any(comp.requirements):
			problems.append(InvalidSpec(
				f"component {comp.id} needs non-negative requirements with at least one positive",
			))

	for constraint in spec.constraints:
		problems.extend(_constraint_problems(constraint, seen.keys()))

	conflicts = spec.conflict_pairs()
	colocated = {c.pair for c in spec.constraints if isinstance(c, Colocate)}
	for pair in sorted(conflicts & colocated):
		problems.append(ConflictColocateClash(*pair))

	full = sorted({c.component for c in spec.constraints if isinstance(c, FullDeploy)})
	for first, second in sorted(conflicts):
		if first in full and second in full:
			problems.append(InvalidConstraint(
				FullDeploy(first), f"conflicts with fully deployed component {second}",
			))

	if not catalog.offers:
		problems.append(EmptyCatalog("the offer catalog is empty"))
	else:
		for comp in sorted(spec.components, key=lambda c: c.id):
			if len(comp.requirements) != len(catalog.dimensions):
				continue
			if catalog.cheapest_fitting(comp.requirements) is None:
				problems.append(UnsatisfiableComponent(
					comp.id, comp.name, _exceeded_dimension(comp, catalog),
				))
	return problems


def _constraint_problems(
	constraint: StructuralConstraint,
	known: Iterable[int],
) -> Iterator[InvalidSpec]:
	known = set(known)
	for ident in constraint.components:
		if ident not in known:
			yield DanglingComponentRef(ident, constraint)
	match constraint:
		case Conflict(first, second) | Colocate(first, second) if first == second:
			yield InvalidConstraint(constraint, "a component cannot be paired with itself")
		case RequireProvide(consumer, provider, n, m):
			if consumer == provider:
				yield InvalidConstraint(constraint, "a component cannot provide for itself")
			if n < 1 or m < 1:
				yield InvalidConstraint(constraint, "n and m must be at least 1")
		case ExactRatio(many, one, n):
			if many == one:
				yield InvalidConstraint(constraint, "a ratio needs two components")
			if n < 1:
				yield InvalidConstraint(constraint, "n must be at least 1")
		case ExclusiveDeploy(members):
			if len(set(members)) < 2:
				yield InvalidConstraint(constraint, "needs at least two distinct alternatives")
		case BoundInstances(members, _, n) | ConditionalBound(_, members, _, n):
			if not members:
				yield InvalidConstraint(constraint, "the bounded set is empty")
			if n < 1:
				yield InvalidConstraint(constraint, "n must be at least 1")


def _exceeded_dimension(comp: Component, catalog: OfferCatalog) -> str:
	for index, name in enumerate(catalog.dimensions):
		if all(comp.requirements[index] > o.capacity[index] for o in catalog):
			return name
	return ""


def validate_spec(spec: ApplicationSpec, catalog: OfferCatalog) -> ValidatedSpec:
	"""
	Return a validated wrapper of a spec, raising the first structural problem found

	Use `spec_violations` to obtain every problem instead.
	"""
	problems = spec_violations(spec, catalog)
	if problems:
		raise problems[0]
	return ValidatedSpec(spec, catalog)


@dataclass(frozen=True)
class DeploymentPlan:
	"""
	An assignment of component instances to machines together with the machines' types

	`assignment` has one row per component (ordered as `components`) and one column per
	machine; `types` holds an offer id per machine or 0 for an unused machine.
	"""

	components: tuple[int, ...]
	assignment: tuple[tuple[int, ...], ...]
	types: tuple[int, ...]
	occupancy: tuple[int, ...]
	total_price: int

	@classmethod
	def build(
		cls,
		components: Sequence[int],
		assignment: Sequence[Sequence[int]],
		types: Sequence[int],
		catalog: OfferCatalog,
	) -> Self:
		"""
		Create a plan, deriving occupancy and total price from the assignment and types
		"""
		rows = tuple(tuple(int(x) for x in row) for row in assignment)
		machines = len(types)
		occupancy = tuple(int(any(row[k] for row in rows)) for k in range(machines))
		price = sum(catalog.price(t) for t, used in zip(types, occupancy) if used)
		return cls(tuple(components), rows, tuple(types), occupancy, price)

	@property
	def machines(self) -> int:
		return len(self.types)

	def row(self, ident: int) -> tuple[int, ...]:
		return self.assignment[self.components.index(ident)]

	def instances(self, ident: int) -> int:
		return sum(self.row(ident))

	def column(self, machine: int) -> frozenset[int]:
		"""
		Return the components hosted on a machine (0-based index)
		"""
		return frozenset(c for c, row in zip(self.components, self.assignment) if row[machine])

	@property
	def occupied(self) -> int:
		return sum(self.occupancy)

	@property
	def deployed_instances(self) -> int:
		return sum(sum(row) for row in self.assignment)


FAMILIES = (
	"basic-allocation", "occupancy", "capacity", "link", "conflict", "colocate", "exclusive",
	"require-provide", "exact-ratio", "full-deploy", "bound", "conditional-bound", "price",
)


@dataclass(frozen=True)
class FamilyResult:
	"""
	The outcome of checking one constraint family; `offenders` is empty when it holds
	"""

	family: str
	offenders: tuple[str, ...] = ()

	@property
	def passed(self) -> bool:
		return not self.offenders


@dataclass(frozen=True)
class ValidationReport:

	results: tuple[FamilyResult, ...]
	recomputed_price: int

	@property
	def passed(self) -> bool:
		return all(r.passed for r in self.results)

	def __getitem__(self, family: str) -> FamilyResult:
		for result in self.results:
			if result.family == family:
				return result
		raise KeyError(family)

	def failures(self) -> list[FamilyResult]:
		return [r for r in self.results if not r.passed]

	def __str__(self) -> str:
		lines = []
		for result in self.results:
			status = "ok" if result.passed else "FAIL"
			detail = ", ".join(result.offenders)
			lines.append(f"{result.family:<18} {status}{': ' + detail if detail else ''}")
		lines.append(f"{'recomputed price':<18} {self.recomputed_price}")
		return "\n".join(lines)


def check_plan(
	spec: ApplicationSpec|ValidatedSpec,
	catalog: OfferCatalog,
	plan: DeploymentPlan,
) -> ValidationReport:
	"""
	Re-evaluate every general and application-specific constraint against a plan

	The report lists every family, with the components or machines (1-based) that break it.
	"""
	if isinstance(spec, ValidatedSpec):
		spec = spec.spec
	ids = spec.ids
	machines = plan.machines
	if plan.components != ids or len(plan.assignment) != len(ids):
		raise DimensionMismatch(f"plan rows {plan.components} do not match components {ids}")
	if len(plan.occupancy) != machines or any(len(row) != machines for row in plan.assignment):
		raise DimensionMismatch(f"plan columns do not all have {machines} machines")
	for offer in plan.types:
		if offer != 0 and not 1 <= offer <= len(catalog):
			raise DimensionMismatch(f"plan uses unknown offer {offer}")

	rows = dict(zip(ids, plan.assignment))
	counts = {i: sum(row) for i, row in rows.items()}
	columns = [plan.column(k) for k in range(machines)]
	offenders = {family: list[str]() for family in FAMILIES}

	exclusive = spec.exclusive_members()
	for ident in ids:
		if ident not in exclusive and counts[ident] < 1:
			offenders["basic-allocation"].append(f"component {ident}")

	recomputed = 0
	for k, content in enumerate(columns):
		used = bool(content)
		if plan.occupancy[k] != int(used):
			offenders["occupancy"].append(f"machine {k + 1}")
		if used != (plan.types[k] != 0):
			offenders["link"].append(f"machine {k + 1}")
		if not used or plan.types[k] == 0:
			continue
		offer = catalog[plan.types[k]]
		recomputed += offer.price
		load = ResourceVector.zero(len(spec.dimensions))
		for ident in content:
			load = load + spec.component(ident).requirements
		for index, name in enumerate(spec.dimensions):
			if load[index] > offer.capacity[index]:
				offenders["capacity"].append(f"machine {k + 1} {name}")

	for constraint in spec.constraints:
		match constraint:
			case Conflict(first, second):
				for k, content in enumerate(columns):
					if first in content and second in content:
						offenders["conflict"].append(f"{first}-{second} on machine {k + 1}")
			case Colocate(first, second):
				if rows[first] != rows[second]:
					offenders["colocate"].append(f"{first}-{second}")
			case ExclusiveDeploy(members):
				if sum(1 for m in members if counts[m] > 0) != 1:
					offenders["exclusive"].append("/".join(str(m) for m in members))
			case RequireProvide(consumer, provider, n, m):
				if n * counts[consumer] > m * counts[provider]:
					offenders["require-provide"].append(f"{consumer}->{provider}")
			case ExactRatio(many, one, n):
				if not 0 <= n * counts[one] - counts[many] < n:
					offenders["exact-ratio"].append(f"{many}:{one}")
			case FullDeploy(ident):
				peers = spec.neighbours(ident)
				for k, content in enumerate(columns):
					if content and ident not in content and not peers & content:
						offenders["full-deploy"].append(f"{ident} on machine {k + 1}")
			case BoundInstances(members, op, n):
				if not op.holds(sum(counts[m] for m in members), n):
					offenders["bound"].append(f"{'+'.join(map(str, members))} {op.value} {n}")
			case ConditionalBound(guard, members, op, n):
				if counts[guard] > 0 and not op.holds(sum(counts[m] for m in members), n):
					offenders["conditional-bound"].append(f"{guard}: {op.value} {n}")

	if recomputed != plan.total_price:
		offenders["price"].append(f"stated {plan.total_price}, recomputed {recomputed}")

	results = tuple(FamilyResult(f, tuple(offenders[f])) for f in FAMILIES)
	return ValidationReport(results, recomputed)
