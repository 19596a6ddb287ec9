# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""
Variables, linear relations and constraints of the deployment model

Variables are plain values identified by kind and indices; a model's state is a mapping
of variables to integers.  Every constraint carries the family it was generated for, so
counts and dumps can be grouped.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable
from collections.abc import Iterator
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Union

from .model import Op

__all__ = [
	"Family", "Var", "Term", "Relation", "Linear", "Implication", "IRConstraint",
	"IndicatorSum", "Column", "Values",
	"a_var", "t_var", "v_var", "p_var", "r_var", "x_var", "f_var",
	"relation", "linear", "fix", "iter_variables",
]

ASSIGN = "a"
TYPE = "t"
OCCUPIED = "v"
PRICE = "p"
RESOURCE = "r"
DEPLOYED = "x"
NEIGHBOUR = "f"


class Family(enum.Enum):
	"""
	The groups constraints are generated in; the declaration order is the dump order
	"""

	BASIC_ALLOCATION = "basic-allocation"
	OCCUPANCY = "occupancy"
	CAPACITY = "capacity"
	LINK = "link"
	UNUSED = "unused"
	CONFLICT = "conflict"
	COLOCATE = "colocate"
	EXCLUSIVE = "exclusive"
	REQUIRE_PROVIDE = "require-provide"
	EXACT_RATIO = "exact-ratio"
	FULL_DEPLOY = "full-deploy"
	BOUND = "bound"
	CONDITIONAL = "conditional-bound"
	INDICATOR = "indicator"
	BREAKER = "breaker"

	@property
	def rank(self) -> int:
		return list(Family).index(self)


@dataclass(frozen=True, order=True)
class Var:
	"""
	A model variable

	`row` is a component id for the per-component kinds, `col` a 1-based machine index (0
	for variables spanning every machine) and `dim` a 0-based resource index.
	"""

	kind: str
	row: int = 0
	col: int = 0
	dim: int = 0

	@property
	def name(self) -> str:
		match self.kind:
			case "a" | "f":
				return f"{self.kind}_{self.row}_{self.col}"
			case "r":
				return f"r_{self.col}_{self.dim + 1}"
			case "x":
				return f"x_{self.row}"
			case _:
				return f"{self.kind}_{self.col}"

	def __str__(self) -> str:
		return self.name


def a_var(component: int, machine: int) -> Var:
	return Var(ASSIGN, component, machine)


def t_var(machine: int) -> Var:
	return Var(TYPE, col=machine)


def v_var(machine: int) -> Var:
	return Var(OCCUPIED, col=machine)


def p_var(machine: int) -> Var:
	return Var(PRICE, col=machine)


def r_var(machine: int, dim: int) -> Var:
	return Var(RESOURCE, col=machine, dim=dim)


def x_var(component: int) -> Var:
	"""
	Return the indicator of a component being deployed anywhere
	"""
	return Var(DEPLOYED, component)


def f_var(component: int, machine: int) -> Var:
	"""
	Return the indicator of a conflicting neighbour of a component being on a machine
	"""
	return Var(NEIGHBOUR, component, machine)


Term = tuple[int, Var]
Values = Mapping[Var, int]


@dataclass(frozen=True)
class Relation:
	"""
	A linear relation Σ coef·var <op> rhs with one term per variable
	"""

	terms: tuple[Term, ...]
	op: Op
	rhs: int

	@property
	def variables(self) -> tuple[Var, ...]:
		return tuple(var for _, var in self.terms)

	def lhs(self, values: Values) -> int:
		return sum(coef * values[var] for coef, var in self.terms)

	def holds(self, values: Values) -> bool:
		return self.op.holds(self.lhs(values), self.rhs)

	def substitute(self, mapping: Mapping[Var, Var]) -> Relation:
		return relation(((c, mapping.get(v, v)) for c, v in self.terms), self.op, self.rhs)

	def __str__(self) -> str:
		if not self.terms:
			return f"0 {self.op.value} {self.rhs}"
		parts = []
		for coef, var in self.terms:
			sign = "-" if coef < 0 else "+"
			scale = "" if abs(coef) == 1 else f"{abs(coef)}*"
			parts.append(f"{sign} {scale}{var}")
		text = " ".join(parts)
		text = text[2:] if text.startswith("+ ") else "-" + text[2:]
		return f"{text} {self.op.value} {self.rhs}"


def relation(terms: Iterable[Term], op: Op, rhs: int) -> Relation:
	"""
	Create a relation, merging repeated variables and dropping zero coefficients

	Terms are kept in first-seen order.
	"""
	merged = dict[Var, int]()
	for coef, var in terms:
		merged[var] = merged.get(var, 0) + coef
	return Relation(tuple((c, v) for v, c in merged.items() if c), op, rhs)


class _Columns:

	family: Family

	@property
	def variables(self) -> tuple[Var, ...]:
		raise NotImplementedError

	@property
	def columns(self) -> frozenset[int]:
		"""
		The machines a constraint mentions; 0 stands for a variable spanning all machines
		"""
		return frozenset(var.col for var in self.variables)

	@property
	def is_global(self) -> bool:
		return 0 in self.columns


@dataclass(frozen=True)
class Linear(_Columns):

	family: Family
	relation: Relation

	@property
	def variables(self) -> tuple[Var, ...]:
		return self.relation.variables

	def holds(self, values: Values) -> bool:
		return self.relation.holds(values)

	def substitute(self, mapping: Mapping[Var, Var]) -> Linear:
		return Linear(self.family, self.relation.substitute(mapping))

	def __str__(self) -> str:
		return str(self.relation)


@dataclass(frozen=True)
class Implication(_Columns):
	"""
	A conjunction of relations implying another conjunction; an empty guard always holds
	"""

	family: Family
	guard: tuple[Relation, ...]
	body: tuple[Relation, ...]

	@property
	def variables(self) -> tuple[Var, ...]:
		seen = dict[Var, None]()
		for rel in self.guard + self.body:
			seen.update((var, None) for var in rel.variables)
		return tuple(seen)

	def holds(self, values: Values) -> bool:
		if all(rel.holds(values) for rel in self.guard):
			return all(rel.holds(values) for rel in self.body)
		return True

	def substitute(self, mapping: Mapping[Var, Var]) -> Implication:
		return Implication(
			self.family,
			tuple(rel.substitute(mapping) for rel in self.guard),
			tuple(rel.substitute(mapping) for rel in self.body),
		)

	def __str__(self) -> str:
		body = " & ".join(str(rel) for rel in self.body)
		if not self.guard:
			return body
		return " & ".join(str(rel) for rel in self.guard) + " => " + body


IRConstraint = Union[Linear, Implication]


@dataclass(frozen=True)
class IndicatorSum:
	"""
	The definition aux = H(Σ cells): 1 when any cell is set, 0 otherwise
	"""

	aux: Var
	cells: tuple[Var, ...]

	def value(self, values: Values) -> int:
		return int(any(values[cell] for cell in self.cells))

	def holds(self, values: Values) -> bool:
		return values[self.aux] == self.value(values)

	def __str__(self) -> str:
		return f"{self.aux} = H({' + '.join(str(c) for c in self.cells)})"


@dataclass(frozen=True)
class Column:
	"""
	The content of one machine: its offer (0 when unused), price and hosted components
	"""

	offer: int
	price: int
	hosted: frozenset[int]

	@property
	def load(self) -> int:
		return len(self.hosted)

	def bits(self, components: Iterable[int]) -> tuple[int, ...]:
		return tuple(int(i in self.hosted) for i in components)


def linear(family: Family, terms: Iterable[Term], op: Op, rhs: int) -> Linear:
	return Linear(family, relation(terms, op, rhs))


def fix(family: Family, var: Var, value: int) -> Linear:
	"""
	Return the constraint var = value
	"""
	return Linear(family, Relation(((1, var),), Op.EQ, value))


def iter_variables(constraints: Iterable[IRConstraint]) -> Iterator[Var]:
	for constraint in constraints:
		yield from constraint.variables
