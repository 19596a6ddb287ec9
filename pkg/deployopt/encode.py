# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""
Assembly of the constraint model of a deployment problem

`build_ir` produces a `ConstraintIR` over the variables

- a_i_k: component i has an instance on machine k (0/1)
- t_k: the offer machine k is leased as, 0 when unused
- v_k: machine k is occupied (0/1)
- p_k: the price paid for machine k
- r_k_h: the capacity machine k offers in resource h

plus auxiliary indicators x_i (component i is deployed at all) and f_i_k (some component
in conflict with i is on machine k).  Auxiliaries are defined by `IndicatorSum` entries
until `lower_h_terms` replaces them with linear rows.  The objective is Σ p_k.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator
from collections.abc import Mapping
from collections.abc import Sequence
from dataclasses import dataclass
from dataclasses import field
from functools import cached_property

from .exceptions import DimensionMismatch
from .exceptions import EmptyCatalog
from .exceptions import IncompatibleBreakers
from .exceptions import MalformedIR
from .ir import Family
from .ir import Implication
from .ir import IndicatorSum
from .ir import IRConstraint
from .ir import Var
from .ir import a_var
from .ir import f_var
from .ir import iter_variables
from .ir import linear
from .ir import p_var
from .ir import r_var
from .ir import relation
from .ir import t_var
from .ir import v_var
from .ir import x_var
from .model import ApplicationSpec
from .model import BoundInstances
from .model import Colocate
from .model import ConditionalBound
from .model import Conflict
from .model import DeploymentPlan
from .model import ExactRatio
from .model import ExclusiveDeploy
from .model import FullDeploy
from .model import OfferCatalog
from .model import Op
from .model import RequireProvide
from .model import ValidatedSpec
from .model import as_spec
from .symbreak import BreakerSet

__all__ = ["Dims", "ConstraintIR", "build_ir", "lower_h_terms"]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Dims:
	"""
	Problem sizes: components N, machines M, resources H and offers O
	"""

	components: int
	machines: int
	resources: int
	offers: int


@dataclass(frozen=True)
class ConstraintIR:
	"""
	A complete constraint model: variable domains, constraints, definitions and breakers

	Instances are immutable and may be shared between threads.
	"""

	spec: ApplicationSpec
	catalog: OfferCatalog
	dims: Dims
	domains: tuple[tuple[Var, int, int], ...]
	constraints: tuple[IRConstraint, ...]
	definitions: tuple[IndicatorSum, ...] = ()
	breakers: BreakerSet = field(default_factory=BreakerSet)
	floors: tuple[int, ...] = ()
	lowered: bool = False

	@property
	def components(self) -> tuple[int, ...]:
		return self.spec.ids

	@property
	def machines(self) -> int:
		return self.dims.machines

	@property
	def objective(self) -> tuple[Var, ...]:
		return tuple(p_var(k) for k in range(1, self.dims.machines + 1))

	@cached_property
	def bounds(self) -> dict[Var, tuple[int, int]]:
		return {var: (low, high) for var, low, high in self.domains}

	@cached_property
	def local_constraints(self) -> dict[int, tuple[IRConstraint, ...]]:
		"""
		Constraints spanning no whole-problem variable, keyed by the last machine they mention
		"""
		grouped = dict[int, list[IRConstraint]]()
		for constraint in self.constraints:
			columns = constraint.columns
			if 0 not in columns:
				grouped.setdefault(max(columns), []).append(constraint)
		return {k: tuple(v) for k, v in grouped.items()}

	@cached_property
	def global_constraints(self) -> tuple[IRConstraint, ...]:
		return tuple(c for c in self.constraints if c.is_global)

	def family_counts(self) -> dict[Family, int]:
		counts = {family: 0 for family in Family}
		for constraint in self.constraints:
			counts[constraint.family] += 1
		return {family: count for family, count in counts.items() if count}

	def dump(self) -> str:
		"""
		Render the model with one constraint per line, grouped by family
		"""
		dims = self.dims
		lines = [
			f"; {self.spec.name}: N={dims.components} M={dims.machines}"
			f" H={dims.resources} O={dims.offers}",
		]
		lines.append(f"minimize {' + '.join(str(v) for v in self.objective)}")
		for definition in self.definitions:
			lines.append(f"define {definition}")
		by_family = sorted(enumerate(self.constraints), key=lambda e: (e[1].family.rank, e[0]))
		current = None
		for _, constraint in by_family:
			if constraint.family is not current:
				current = constraint.family
				lines.append(f"# {current.value}")
			lines.append(str(constraint))
		return "\n".join(lines) + "\n"

	def column_values(self, machine: int, offer: int, hosted: frozenset[int]) -> dict[Var, int]:
		"""
		Return the values of every variable of one machine for the given offer and content

		Price and capacity are zero unless the machine is occupied and has an offer.
		"""
		used = bool(hosted)
		leased = used and offer != 0
		values = {a_var(i, machine): int(i in hosted) for i in self.components}
		values[t_var(machine)] = offer
		values[v_var(machine)] = int(used)
		values[p_var(machine)] = self.catalog.price(offer) if leased else 0
		for dim in range(self.dims.resources):
			capacity = self.catalog[offer].capacity[dim] if leased else 0
			values[r_var(machine, dim)] = capacity
		for definition in self.definitions:
			if definition.aux.col == machine:
				values[definition.aux] = definition.value(values)
		return values

	def derive(self, values: Mapping[Var, int]) -> dict[Var, int]:
		"""
		Return a copy of `values` with every auxiliary indicator computed from its cells
		"""
		result = dict(values)
		for definition in self.definitions:
			result[definition.aux] = definition.value(result)
		return result

	def values_for(self, plan: DeploymentPlan) -> dict[Var, int]:
		"""
		Return the model point corresponding to a plan over the same components
		"""
		if plan.components != self.components or plan.machines != self.machines:
			raise DimensionMismatch(
				f"plan has {len(plan.components)}x{plan.machines} cells,"
				f" model {self.dims.components}x{self.machines}",
			)
		values = dict[Var, int]()
		for k in range(1, self.machines + 1):
			values.update(self.column_values(k, plan.types[k - 1], plan.column(k - 1)))
		return self.derive(values)

	def plan_from(self, values: Mapping[Var, int]) -> DeploymentPlan:
		machines = range(1, self.machines + 1)
		try:
			assignment = [[values[a_var(i, k)] for k in machines] for i in self.components]
			types = [values[t_var(k)] for k in machines]
		except KeyError as exc:
			raise MalformedIR(f"no value for {exc.args[0]}") from None
		return DeploymentPlan.build(self.components, assignment, types, self.catalog)

	def objective_value(self, values: Mapping[Var, int]) -> int:
		return sum(values[var] for var in self.objective)

	def violations(self, values: Mapping[Var, int]) -> list[str]:
		"""
		Return a description of every domain, constraint or definition a point violates
		"""
		found = list[str]()
		try:
			for var, low, high in self.domains:
				if not low <= values[var] <= high:
					found.append(f"domain: {var} = {values[var]} outside {low}..{high}")
			for constraint in self.constraints:
				if not constraint.holds(values):
					found.append(f"{constraint.family.value}: {constraint}")
			if not self.lowered:
				found.extend(
					f"indicator: {d}" for d in self.definitions if not d.holds(values)
				)
		except KeyError as exc:
			raise MalformedIR(f"no value for {exc.args[0]}") from None
		return found

	def check(self) -> None:
		"""
		Raise `MalformedIR` if a constraint or definition uses an undeclared variable
		"""
		declared = self.bounds
		used = list(iter_variables(self.constraints))
		if not self.lowered:
			used.extend(d.aux for d in self.definitions)
		for var in used:
			if var not in declared:
				raise MalformedIR(f"undeclared variable {var}")


def _domains(spec: ApplicationSpec, catalog: OfferCatalog, machines: int) -> Iterator[tuple[Var, int, int]]:
	machine_range = range(1, machines + 1)
	for ident in spec.ids:
		for k in machine_range:
			yield a_var(ident, k), 0, 1
	for k in machine_range:
		yield t_var(k), 0, len(catalog)
	for k in machine_range:
		yield v_var(k), 0, 1
	top_price = max(o.price for o in catalog)
	for k in machine_range:
		yield p_var(k), 0, top_price
	for k in machine_range:
		for dim in range(len(catalog.dimensions)):
			yield r_var(k, dim), 0, max(o.capacity[dim] for o in catalog)


class _Builder:

	def __init__(self, spec: ApplicationSpec, catalog: OfferCatalog, machines: int):
		self.spec = spec
		self.catalog = catalog
		self.machines = range(1, machines + 1)
		self.constraints = list[IRConstraint]()
		self.definitions = dict[Var, IndicatorSum]()

	def add(self, constraint: IRConstraint) -> None:
		self.constraints.append(constraint)

	def row_sum(self, ident: int, coef: int = 1) -> list[tuple[int, Var]]:
		return [(coef, a_var(ident, k)) for k in self.machines]

	def deployed(self, ident: int) -> Var:
		aux = x_var(ident)
		if aux not in self.definitions:
			cells = tuple(a_var(ident, k) for k in self.machines)
			self.definitions[aux] = IndicatorSum(aux, cells)
		return aux

	def general(self) -> None:
		spec, catalog = self.spec, self.catalog
		exclusive = spec.exclusive_members()
		for ident in spec.ids:
			if ident not in exclusive:
				self.add(linear(Family.BASIC_ALLOCATION, self.row_sum(ident), Op.GE, 1))

		for k in self.machines:
			for ident in spec.ids:
				self.add(linear(Family.OCCUPANCY, [(1, a_var(ident, k)), (-1, v_var(k))], Op.LE, 0))
			terms = [(1, v_var(k))] + [(-1, a_var(i, k)) for i in spec.ids]
			self.add(linear(Family.OCCUPANCY, terms, Op.LE, 0))

		for k in self.machines:
			for dim in range(len(spec.dimensions)):
				terms = [
					(spec.component(i).requirements[dim], a_var(i, k)) for i in spec.ids
				] + [(-1, r_var(k, dim))]
				self.add(linear(Family.CAPACITY, terms, Op.LE, 0))

		for k in self.machines:
			for offer in catalog:
				guard = (
					relation([(1, t_var(k))], Op.EQ, offer.id),
					relation([(1, v_var(k))], Op.EQ, 1),
				)
				body = tuple(
					relation([(1, r_var(k, dim))], Op.EQ, offer.capacity[dim])
					for dim in range(len(spec.dimensions))
				) + (relation([(1, p_var(k))], Op.EQ, offer.price),)
				self.add(Implication(Family.LINK, guard, body))

		for k in self.machines:
			self.add(Implication(
				Family.UNUSED,
				(relation([(1, v_var(k))], Op.EQ, 0),),
				(relation([(1, t_var(k))], Op.EQ, 0),),
			))
			body = (relation([(1, v_var(k))], Op.EQ, 0), relation([(1, p_var(k))], Op.EQ, 0))
			body += tuple(
				relation([(1, r_var(k, dim))], Op.EQ, 0) for dim in range(len(spec.dimensions))
			)
			self.add(Implication(Family.UNUSED, (relation([(1, t_var(k))], Op.EQ, 0),), body))

	def specific(self) -> None:
		spec = self.spec
		for constraint in spec.constraints:
			match constraint:
				case Conflict(first, second):
					for k in self.machines:
						terms = [(1, a_var(first, k)), (1, a_var(second, k))]
						self.add(linear(Family.CONFLICT, terms, Op.LE, 1))
				case Colocate(first, second):
					for k in self.machines:
						terms = [(1, a_var(first, k)), (-1, a_var(second, k))]
						self.add(linear(Family.COLOCATE, terms, Op.EQ, 0))
				case ExclusiveDeploy(members):
					terms = [(1, self.deployed(m)) for m in members]
					self.add(linear(Family.EXCLUSIVE, terms, Op.EQ, 1))
				case RequireProvide(consumer, provider, n, m):
					terms = self.row_sum(consumer, n) + self.row_sum(provider, -m)
					self.add(linear(Family.REQUIRE_PROVIDE, terms, Op.LE, 0))
				case ExactRatio(many, one, n):
					terms = self.row_sum(one, n) + self.row_sum(many, -1)
					self.add(linear(Family.EXACT_RATIO, terms, Op.GE, 0))
					self.add(linear(Family.EXACT_RATIO, terms, Op.LE, n - 1))
				case FullDeploy(ident):
					self.full_deploy(ident)
				case BoundInstances(members, op, n):
					terms = [t for m in members for t in self.row_sum(m)]
					self.add(linear(Family.BOUND, terms, op, n))
				case ConditionalBound(guard, members, op, n):
					terms = [t for m in members for t in self.row_sum(m)]
					self.add(Implication(
						Family.CONDITIONAL,
						(relation([(1, self.deployed(guard))], Op.EQ, 1),),
						(relation(terms, op, n),),
					))

	def full_deploy(self, ident: int) -> None:
		# Σ_k (a_ik + H(Σ_j∈N(i) a_jk)) = Σ_k v_k
		neighbours = sorted(self.spec.neighbours(ident))
		terms = self.row_sum(ident) + [(-1, v_var(k)) for k in self.machines]
		if neighbours:
			for k in self.machines:
				aux = f_var(ident, k)
				cells = tuple(a_var(j, k) for j in neighbours)
				self.definitions[aux] = IndicatorSum(aux, cells)
				terms.append((1, aux))
		self.add(linear(Family.FULL_DEPLOY, terms, Op.EQ, 0))


def _check_breakers(breakers: BreakerSet, spec: ApplicationSpec, machines: int, declared: set[Var]) -> None:
	ids = set(spec.ids)
	for cell in breakers.fixed.cells:
		if cell.component not in ids or not 1 <= cell.machine <= machines:
			raise IncompatibleBreakers(
				f"fixed cell ({cell.component}, {cell.machine}) is outside {len(ids)}x{machines}",
			)
	for var in iter_variables(breakers.extra_constraints):
		if var not in declared:
			raise IncompatibleBreakers(f"breaker uses undeclared variable {var}")
	if breakers.vm_sublists:
		covered = sorted(k for sublist in breakers.vm_sublists for k in sublist)
		if covered != list(range(1, machines + 1)):
			raise IncompatibleBreakers(f"machine sublists do not partition 1..{machines}")


def build_ir(
	spec: ApplicationSpec|ValidatedSpec,
	catalog: OfferCatalog,
	machines: int,
	breakers: BreakerSet|None = None,
	floors: Sequence[int] = (),
) -> ConstraintIR:
	"""
	Build the model of deploying a spec on at most `machines` machines leased from a catalog

	`floors` optionally gives, per component, a count every solution must reach; it is not
	encoded but lets the solver bound its search.
	"""
	spec = as_spec(spec)
	if not len(catalog):
		raise EmptyCatalog(f"{spec.name}: the offer catalog is empty")
	if tuple(catalog.dimensions) != tuple(spec.dimensions):
		raise DimensionMismatch(f"catalog dimensions {catalog.dimensions} differ from {spec.dimensions}")
	if machines < 1:
		raise MalformedIR(f"a model needs at least one machine, got {machines}")
	if breakers is None:
		breakers = BreakerSet()

	builder = _Builder(spec, catalog, machines)
	builder.general()
	builder.specific()

	domains = list(_domains(spec, catalog, machines))
	domains.extend((aux, 0, 1) for aux in sorted(builder.definitions))
	_check_breakers(breakers, spec, machines, {var for var, _, _ in domains})

	ir = ConstraintIR(
		spec=spec,
		catalog=catalog,
		dims=Dims(len(spec.components), machines, len(spec.dimensions), len(catalog)),
		domains=tuple(domains),
		constraints=tuple(builder.constraints) + breakers.constraints,
		definitions=tuple(builder.definitions[aux] for aux in sorted(builder.definitions)),
		breakers=breakers,
		floors=tuple(floors),
	)
	ir.check()
	logger.info(
		"%s: model with %d variables and %d constraints %s",
		spec.name, len(ir.domains), len(ir.constraints),
		{family.value: count for family, count in ir.family_counts().items()},
	)
	return ir


def lower_h_terms(ir: ConstraintIR) -> ConstraintIR:
	"""
	Replace indicator definitions with linear rows

	An indicator over a single cell is replaced by that cell; otherwise Σ cells ≥ aux and
	Σ cells ≤ U·aux are added, U being the number of cells.  Definitions are kept for
	deriving auxiliary values from a plan.
	"""
	if ir.lowered:
		return ir
	substitute = dict[Var, Var]()
	rows = list[IRConstraint]()
	for definition in ir.definitions:
		cells = definition.cells
		if len(cells) == 1:
			substitute[definition.aux] = cells[0]
			continue
		terms = [(1, cell) for cell in cells]
		rows.append(linear(Family.INDICATOR, terms + [(-1, definition.aux)], Op.GE, 0))
		rows.append(linear(Family.INDICATOR, terms + [(-len(cells), definition.aux)], Op.LE, 0))
	constraints = [
		c.substitute(substitute) if any(v in substitute for v in c.variables) else c
		for c in ir.constraints
	]
	lowered = ConstraintIR(
		spec=ir.spec,
		catalog=ir.catalog,
		dims=ir.dims,
		domains=tuple(d for d in ir.domains if d[0] not in substitute),
		constraints=tuple(constraints) + tuple(rows),
		definitions=ir.definitions,
		breakers=ir.breakers,
		floors=ir.floors,
		lowered=True,
	)
	lowered.check()
	return lowered