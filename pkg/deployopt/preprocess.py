# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""
Co-location merging into hyper-components, and expansion of plans back to the originals

Components that must share machines are replaced by a single hyper-component carrying the
sum of their requirements.  Constraints on any member are lifted to the hyper-component.
Exclusive alternatives of a co-located member are deleted, since the hyper-component is
always deployed.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable
from dataclasses import dataclass

import networkx as nx

from .exceptions import ColocatedConflict
from .exceptions import InvalidConstraint
from .exceptions import MappingMismatch
from .model import ApplicationSpec
from .model import BoundInstances
from .model import Colocate
from .model import Component
from .model import ConditionalBound
from .model import Conflict
from .model import DeploymentPlan
from .model import ExactRatio
from .model import ExclusiveDeploy
from .model import FullDeploy
from .model import RequireProvide
from .model import StructuralConstraint
from .model import ValidatedSpec
from .model import validate_spec

__all__ = ["ComponentMapping", "merge_spec", "merge_colocated", "expand_plan"]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ComponentMapping:
	"""
	How the components of a merged spec relate to the original ones

	Every original id appears exactly once: as a member of a group, as a passthrough id or
	as an id deleted in favour of a co-located exclusive alternative.
	"""

	groups: tuple[tuple[int, tuple[int, ...]], ...] = ()
	passthrough: tuple[int, ...] = ()
	excluded: tuple[int, ...] = ()

	@property
	def is_identity(self) -> bool:
		return not self.groups and not self.excluded

	@property
	def merged_ids(self) -> tuple[int, ...]:
		return tuple(sorted([h for h, _ in self.groups] + list(self.passthrough)))

	@property
	def original_ids(self) -> tuple[int, ...]:
		members = [m for _, group in self.groups for m in group]
		return tuple(sorted(members + list(self.passthrough) + list(self.excluded)))

	def source_of(self, ident: int) -> int|None:
		"""
		Return the merged id whose row an original component takes, or None if it was deleted
		"""
		for hyper, members in self.groups:
			if ident in members:
				return hyper
		if ident in self.passthrough:
			return ident
		if ident in self.excluded:
			return None
		raise KeyError(ident)

	def as_json(self) -> list[dict[str, object]]:
		return [{"id": hyper, "members": list(members)} for hyper, members in self.groups]


def _groups(spec: ApplicationSpec) -> list[tuple[int, ...]]:
	graph = nx.Graph()
	graph.add_nodes_from(spec.ids)
	graph.add_edges_from(c.pair for c in spec.constraints if isinstance(c, Colocate))
	groups = [tuple(sorted(c)) for c in nx.connected_components(graph) if len(c) > 1]
	return sorted(groups)


def _dedupe(constraints: Iterable[StructuralConstraint]) -> tuple[StructuralConstraint, ...]:
	seen = set[StructuralConstraint]()
	result = []
	for constraint in constraints:
		if isinstance(constraint, Conflict):
			constraint = Conflict(*constraint.pair)
		if constraint not in seen:
			seen.add(constraint)
			result.append(constraint)
	return tuple(result)


def merge_spec(spec: ApplicationSpec) -> tuple[ApplicationSpec, ComponentMapping]:
	"""
	Merge each co-location group of a spec into a hyper-component

	The hyper-component takes the smallest member id and the member names joined with "+".
	Raises `InvalidConstraint` when a kept component depends on one that merging excludes.
	"""
	groups = _groups(spec)
	if not groups:
		return spec, ComponentMapping(passthrough=spec.ids)

	conflicts = spec.conflict_pairs()
	for group in groups:
		for first, second in sorted(conflicts):
			if first in group and second in group:
				raise ColocatedConflict(first, second)

	hyper = {ident: ident for ident in spec.ids}
	for group in groups:
		for member in group:
			hyper[member] = group[0]
	grouped = {member for group in groups for member in group}

	deleted = set[int]()
	for constraint in spec.constraints:
		if not isinstance(constraint, ExclusiveDeploy):
			continue
		anchored = sorted(m for m in constraint.members if m in grouped)
		if not anchored:
			continue
		preferred = hyper[anchored[0]]
		rivals = {hyper[m] for m in constraint.members} - {preferred}
		if rivals:
			logger.warning(
				"%s: excluding %s in favour of co-located component %d",
				spec.name, sorted(rivals), preferred,
			)
		deleted |= rivals

	def alive(*idents: int) -> bool:
		return not any(hyper[i] in deleted for i in idents)

	for constraint in spec.constraints:
		match constraint:
			case RequireProvide(consumer, provider) if alive(consumer) and not alive(provider):
				raise InvalidConstraint(constraint, f"provider {provider} is excluded by co-location")
			case ExactRatio(many, one) if alive(many) != alive(one):
				raise InvalidConstraint(constraint, "one side is excluded by co-location")

	excluded = sorted(i for i in spec.ids if hyper[i] in deleted)

	components = list[Component]()
	for ident in spec.ids:
		if hyper[ident] in deleted or (ident in grouped and hyper[ident] != ident):
			continue
		if ident in grouped:
			members = [spec.component(m) for m in sorted(grouped) if hyper[m] == ident]
			requirements = members[0].requirements
			for member in members[1:]:
				requirements = requirements + member.requirements
			name = "+".join(m.name for m in members)
			components.append(Component(ident, name, requirements))
		else:
			components.append(spec.component(ident))

	rewritten = list[StructuralConstraint]()
	for constraint in spec.constraints:
		match constraint:
			case Colocate():
				continue
			case Conflict(first, second) if alive(first, second):
				rewritten.append(Conflict(hyper[first], hyper[second]))
			case ExclusiveDeploy(members):
				if any(m in grouped for m in members):
					continue
				kept = tuple(m for m in members if alive(m))
				if len(kept) >= 2:
					rewritten.append(ExclusiveDeploy(kept))
			case RequireProvide(consumer, provider, n, m) if alive(consumer, provider):
				rewritten.append(RequireProvide(hyper[consumer], hyper[provider], n, m))
			case ExactRatio(many, one, n) if alive(many, one):
				rewritten.append(ExactRatio(hyper[many], hyper[one], n))
			case FullDeploy(ident) if alive(ident):
				rewritten.append(FullDeploy(hyper[ident]))
			case BoundInstances(members, op, n):
				kept = tuple(hyper[m] for m in members if alive(m))
				if kept:
					rewritten.append(BoundInstances(kept, op, n))
			case ConditionalBound(guard, members, op, n) if alive(guard):
				kept = tuple(hyper[m] for m in members if alive(m))
				if kept:
					rewritten.append(ConditionalBound(hyper[guard], kept, op, n))

	merged = ApplicationSpec(
		name=spec.name,
		dimensions=spec.dimensions,
		components=tuple(components),
		constraints=_dedupe(rewritten),
		description=spec.description,
		parameters=spec.parameters,
		reference=spec.reference,
	)
	mapping = ComponentMapping(
		groups=tuple((group[0], group) for group in groups if group[0] not in deleted),
		passthrough=tuple(i for i in spec.ids if i not in grouped and hyper[i] not in deleted),
		excluded=tuple(excluded),
	)
	logger.info(
		"%s: merged %d components into %d", spec.name, len(spec.components), len(components),
	)
	return merged, mapping


def merge_colocated(spec: ValidatedSpec) -> tuple[ValidatedSpec, ComponentMapping]:
	"""
	Merge co-located components and re-validate the result against the same catalog
	"""
	merged, mapping = merge_spec(spec.spec)
	if mapping.is_identity:
		return spec, mapping
	return validate_spec(merged, spec.catalog), mapping


def expand_plan(plan: DeploymentPlan, mapping: ComponentMapping) -> DeploymentPlan:
	"""
	Turn a plan over merged components into one over the original components

	Each hyper-component row is copied to all of its members; deleted alternatives get
	all-zero rows.  Types, occupancy and price are unchanged.
	"""
	if plan.components != mapping.merged_ids:
		raise MappingMismatch(
			f"plan rows {plan.components} do not match merged components {mapping.merged_ids}",
		)
	rows = dict(zip(plan.components, plan.assignment))
	empty = (0,) * plan.machines
	assignment = []
	for ident in mapping.original_ids:
		source = mapping.source_of(ident)
		assignment.append(empty if source is None else rows[source])
	return DeploymentPlan(
		mapping.original_ids, tuple(assignment), plan.types, plan.occupancy, plan.total_price,
	)
