# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""
Conflict graphs, clique selection and fixing of assignment cells

Members of a clique of the conflict graph can never share a machine, so the instances of
the clique's members can be placed on distinct leading machines without losing any
optimum.  The clique with the largest estimated deployment size is used, its instances
are assigned to machines 1, 2, ... in member order, and cells that would contradict that
placement are fixed to zero.
"""

from __future__ import annotations

import enum
import logging
from collections.abc import Iterable
from collections.abc import Sequence
from dataclasses import dataclass

import networkx as nx

from .estimator import InstanceEstimate
from .exceptions import InsufficientMachines
from .model import ApplicationSpec
from .model import BoundInstances
from .model import ConditionalBound
from .model import ValidatedSpec
from .model import as_spec

__all__ = [
	"FixMode", "ConflictGraph", "Clique", "FixedCell", "FixedAssignments",
	"build_conflict_graph", "enumerate_maximal_cliques", "select_clique",
	"default_fix_mode", "fix_assignments",
]

logger = logging.getLogger(__name__)


class FixMode(enum.Enum):
	"""
	How many instances of each clique member get fixed

	FULL fixes every estimated instance; CONSERVATIVE fixes only the instances every
	solution must deploy.
	"""

	FULL = "full"
	CONSERVATIVE = "conservative"


@dataclass(frozen=True)
class ConflictGraph:
	"""
	An undirected graph with one vertex per component and one edge per conflicting pair
	"""

	vertices: tuple[int, ...]
	edges: frozenset[tuple[int, int]]

	def adjacent(self, first: int, second: int) -> bool:
		return (min(first, second), max(first, second)) in self.edges

	def neighbours(self, vertex: int) -> set[int]:
		return {b if a == vertex else a for a, b in self.edges if vertex in (a, b)}

	def as_networkx(self) -> nx.Graph:
		graph = nx.Graph()
		graph.add_nodes_from(self.vertices)
		graph.add_edges_from(sorted(self.edges))
		return graph


@dataclass(frozen=True)
class Clique:
	"""
	Pairwise conflicting components, with the sum of their estimated instances
	"""

	members: tuple[int, ...]
	deployment_size: int = 0

	def sized(self, estimate: InstanceEstimate) -> Clique:
		return Clique(self.members, sum(estimate.count(m) for m in self.members))


@dataclass(frozen=True)
class FixedCell:

	component: int
	machine: int  # 1-based
	value: int


@dataclass(frozen=True)
class FixedAssignments:
	"""
	Assignment cells with a fixed value, and the machines reserved for each clique member

	`blocks` maps each clique member (in placement order) to the 1-based machines on which
	its instances are fixed.
	"""

	cells: tuple[FixedCell, ...] = ()
	blocks: tuple[tuple[int, tuple[int, ...]], ...] = ()
	clique: Clique|None = None
	mode: FixMode|None = None

	@property
	def count_fixed(self) -> int:
		return len(self.cells)

	@property
	def reserved(self) -> int:
		"""
		The number of leading machines covered by clique blocks
		"""
		return sum(len(machines) for _, machines in self.blocks)

	def value(self, component: int, machine: int) -> int|None:
		for cell in self.cells:
			if cell.component == component and cell.machine == machine:
				return cell.value
		return None

	def table(self, components: Sequence[int], machines: int, names: dict[int, str]|None = None) -> str:
		"""
		Render the component × machine grid; fixed cells appear as "[1]"/"[0]", free as " . "
		"""
		fixed = {(c.component, c.machine): c.value for c in self.cells}
		labels = {i: (names or {}).get(i, f"C{i}") for i in components}
		width = max(len(label) for label in labels.values())
		header = " " * width + " " + "".join(f"{'VM' + str(k):>5}" for k in range(1, machines + 1))
		lines = [header]
		for ident in components:
			cells = []
			for k in range(1, machines + 1):
				value = fixed.get((ident, k))
				cells.append(f"  [{value}]" if value is not None else "   . ")
			lines.append(f"{labels[ident]:<{width}} " + "".join(cells))
		return "\n".join(lines)


def build_conflict_graph(spec: ApplicationSpec|ValidatedSpec) -> ConflictGraph:
	spec = as_spec(spec)
	return ConflictGraph(spec.ids, frozenset(spec.conflict_pairs()))


def enumerate_maximal_cliques(graph: ConflictGraph) -> list[Clique]:
	"""
	Return every maximal clique, sorted by member ids

	Isolated vertices form singleton cliques.
	"""
	found = (tuple(sorted(c)) for c in nx.find_cliques(graph.as_networkx()))
	return [Clique(members) for members in sorted(found)]


def select_clique(cliques: Iterable[Clique], estimate: InstanceEstimate) -> Clique:
	"""
	Return the clique with the largest deployment size; ties go to the smallest member ids
	"""
	sized = [c.sized(estimate) for c in cliques]
	if not sized:
		raise ValueError("no cliques to select from")
	return min(sized, key=lambda c: (-c.deployment_size, c.members))


def default_fix_mode(
	spec: ApplicationSpec|ValidatedSpec,
	clique: Clique,
	estimate: InstanceEstimate,
) -> FixMode:
	"""
	Choose CONSERVATIVE when fixing every estimated instance could cut an optimum

	That is the case when a member's count is bounded explicitly, or when its estimated
	count exceeds the number of instances every solution must deploy.
	"""
	spec = as_spec(spec)
	bounded = {
		m
		for c in spec.constraints if isinstance(c, (BoundInstances, ConditionalBound))
		for m in c.members
	}
	for member in clique.members:
		if member in bounded or estimate.count(member) != estimate.floor(member):
			return FixMode.CONSERVATIVE
	return FixMode.FULL


def fix_assignments(
	clique: Clique,
	estimate: InstanceEstimate,
	machines: int,
	mode: FixMode,
	graph: ConflictGraph,
) -> FixedAssignments:
	"""
	Fix the cells placing each clique member's instances on consecutive leading machines

	Members are placed in ascending id order.  Each member gets value 1 on its own machines
	and 0 on the other members' machines.  Components outside the clique that conflict
	with a member get 0 on that member's machines.
	"""
	if mode is FixMode.FULL:
		counts = {m: estimate.count(m) for m in clique.members}
	else:
		counts = {m: min(estimate.count(m), estimate.floor(m)) for m in clique.members}
	needed = sum(counts.values())
	if needed > machines:
		raise InsufficientMachines(needed, machines)

	blocks = []
	start = 1
	for member in clique.members:
		blocks.append((member, tuple(range(start, start + counts[member]))))
		start += counts[member]

	cells = dict[tuple[int, int], int]()
	for member, block in blocks:
		for k in range(1, needed + 1):
			cells[member, k] = int(k in block)
	for vertex in graph.vertices:
		if vertex in clique.members:
			continue
		for member, block in blocks:
			if graph.adjacent(vertex, member):
				for k in block:
					cells[vertex, k] = 0

	fixed = FixedAssignments(
		cells=tuple(FixedCell(c, k, v) for (c, k), v in sorted(cells.items())),
		blocks=tuple(blocks),
		clique=clique,
		mode=mode,
	)
	logger.info(
		"fixed %d cells of %d for clique %s (%s)",
		fixed.count_fixed, len(graph.vertices) * machines, list(clique.members), mode.value,
	)
	return fixed
