"""
Tests for conflict graphs and value fixing in deployopt.confgraph
"""

from __future__ import annotations

from unittest import TestCase

from deployopt.confgraph import Clique
from deployopt.confgraph import ConflictGraph
from deployopt.confgraph import FixMode
from deployopt.confgraph import build_conflict_graph
from deployopt.confgraph import default_fix_mode
from deployopt.confgraph import enumerate_maximal_cliques
from deployopt.confgraph import fix_assignments
from deployopt.confgraph import select_clique
from deployopt.estimator import InstanceEstimate
from deployopt.estimator import estimate_instances
from deployopt.exceptions import InsufficientMachines

from .unittest_helpers import load_fixture


class CliqueTests(TestCase):
	"""
	Tests for clique enumeration and selection
	"""

	def test_secure_web(self) -> None:
		"""
		Check the maximal cliques of the secure web container and the chosen one
		"""
		spec, _ = load_fixture("secure-web")
		cliques = enumerate_maximal_cliques(build_conflict_graph(spec))
		assert [c.members for c in cliques] == [(1, 2, 3, 4), (1, 4, 5)]
		chosen = select_clique(cliques, estimate_instances(spec))
		assert chosen.members == (1, 2, 3, 4)
		assert chosen.deployment_size == 5

	def test_tie_break(self) -> None:
		"""
		Check that equally sized cliques resolve to the smallest member ids
		"""
		spec, _ = load_fixture("secure-billing")
		cliques = enumerate_maximal_cliques(build_conflict_graph(spec))
		assert [c.members for c in cliques] == [(1, 2), (1, 3, 5), (1, 4, 5)]
		assert select_clique(cliques, estimate_instances(spec)).members == (1, 3, 5)

	def test_isolated_vertex(self) -> None:
		"""
		Check that a vertex without conflicts forms a singleton clique
		"""
		graph = ConflictGraph((1, 2, 3), frozenset({(1, 2)}))
		assert [c.members for c in enumerate_maximal_cliques(graph)] == [(1, 2), (3,)]
		assert graph.neighbours(1) == {2}
		assert graph.adjacent(2, 1)

	def test_select_empty(self) -> None:
		"""
		Check that selecting from no cliques raises ValueError
		"""
		with self.assertRaises(ValueError):
			select_clique([], InstanceEstimate((1,), (1,)))


class FixAssignmentsTests(TestCase):
	"""
	Tests for fix_assignments and default_fix_mode
	"""

	def test_secure_web_conservative(self) -> None:
		"""
		Check that bounded members get the conservative mode and 18 fixed cells
		"""
		spec, _ = load_fixture("secure-web")
		estimate = estimate_instances(spec)
		graph = build_conflict_graph(spec)
		clique = select_clique(enumerate_maximal_cliques(graph), estimate)
		mode = default_fix_mode(spec, clique, estimate)
		assert mode is FixMode.CONSERVATIVE
		fixed = fix_assignments(clique, estimate, estimate.m_upper, mode, graph)
		assert fixed.count_fixed == 18
		assert fixed.blocks == ((1, (1,)), (2, (2,)), (3, (3,)), (4, (4,)))
		assert fixed.value(5, 1) == 0
		assert fixed.value(5, 2) is None
		assert fixed.value(3, 3) == 1

	def test_secure_web_full(self) -> None:
		"""
		Check that the full mode reserves a machine for every estimated instance
		"""
		spec, _ = load_fixture("secure-web")
		estimate = estimate_instances(spec)
		graph = build_conflict_graph(spec)
		clique = Clique((1, 2, 3, 4)).sized(estimate)
		fixed = fix_assignments(clique, estimate, estimate.m_upper, FixMode.FULL, graph)
		assert fixed.reserved == 5
		assert fixed.blocks[2] == (3, (3, 4))
		assert fixed.count_fixed == 22

	def test_secure_billing(self) -> None:
		"""
		Check the fixed cells of the billing service
		"""
		spec, _ = load_fixture("secure-billing")
		estimate = estimate_instances(spec)
		graph = build_conflict_graph(spec)
		clique = select_clique(enumerate_maximal_cliques(graph), estimate)
		mode = default_fix_mode(spec, clique, estimate)
		assert fix_assignments(clique, estimate, estimate.m_upper, mode, graph).count_fixed == 12

	def test_unbounded_full(self) -> None:
		"""
		Check that members with counts equal to their floors and no bounds get the full mode
		"""
		spec, _ = load_fixture("secure-billing")
		estimate = estimate_instances(spec)
		assert default_fix_mode(spec, Clique((2, 3)), estimate) is FixMode.FULL

	def test_insufficient_machines(self) -> None:
		"""
		Check that too few machines for the clique raise InsufficientMachines
		"""
		spec, _ = load_fixture("secure-web")
		estimate = estimate_instances(spec)
		graph = build_conflict_graph(spec)
		with self.assertRaises(InsufficientMachines):
			fix_assignments(Clique((1, 2, 3, 4)), estimate, 3, FixMode.FULL, graph)

	def test_table(self) -> None:
		"""
		Check that the grid shows fixed and free cells
		"""
		graph = ConflictGraph((1, 2, 3), frozenset({(1, 2)}))
		estimate = InstanceEstimate((1, 2, 3), (1, 1, 1), (1, 1, 1))
		fixed = fix_assignments(Clique((1, 2)), estimate, 3, FixMode.FULL, graph)
		lines = fixed.table((1, 2, 3), 3, {1: "Web"}).splitlines()
		assert len(lines) == 4
		assert lines[0].split() == ["VM1", "VM2", "VM3"]
		assert lines[1].split() == ["Web", "[1]", "[0]", "."]
		assert lines[3].split() == ["C3", ".", ".", "."]
