# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""
Exceptions raised by the package
"""

from __future__ import annotations

from collections.abc import Sequence
from typing import TYPE_CHECKING

__all__ = [
	"DeployOptError",
	"SpecParseError", "SchemaViolation",
	"InvalidSpec", "DanglingComponentRef", "ConflictColocateClash", "UnsatisfiableComponent",
	"InvalidConstraint",
	"DimensionMismatch", "MappingMismatch", "ColocatedConflict",
	"InfeasibleInstanceCounts", "NoFeasiblePointWithinBound",
	"InsufficientMachines",
	"IncompatibleBreakers", "EmptyCatalog", "MalformedIR", "UnloweredIndicator",
	"SpaceTooLarge",
	"ModelParseError", "ModelInconsistent",
	"ExternalUnavailable", "ExternalTimeout", "ExternalFailure",
]


class DeployOptError(Exception):
	"""
	Base class of all errors raised by the package
	"""


class SpecParseError(DeployOptError, ValueError):
	"""
	Raised when an input file is not well-formed JSON

	The arguments are the file name, line, column and the parser's message.
	"""

	if TYPE_CHECKING:
		def __init__(self, source: str, line: int, column: int, message: str): ...

	def __str__(self) -> str:  # pragma: no-cover
		source, line, column, message = self.args
		return f"{source}:{line}:{column}: {message}"

	@property
	def line(self) -> int:
		"""
		The 1-based line number of the error
		"""
		assert isinstance(self.args[1], int)
		return self.args[1]


class SchemaViolation(DeployOptError, ValueError):
	"""
	Raised when an input document does not match its JSON schema

	The arguments are the file name, a JSON pointer to the offending value and the
	validator's message.
	"""

	if TYPE_CHECKING:
		def __init__(self, source: str, pointer: str, message: str): ...

	def __str__(self) -> str:  # pragma: no-cover
		source, pointer, message = self.args
		return f"{source}: {pointer or '/'}: {message}"

	@property
	def pointer(self) -> str:
		"""
		The JSON pointer of the value that failed validation
		"""
		assert isinstance(self.args[1], str)
		return self.args[1]


class InvalidSpec(DeployOptError, ValueError):
	"""
	Base class for structural problems found in an application spec
	"""


class DanglingComponentRef(InvalidSpec):
	"""
	Raised when a constraint references a component id that does not exist
	"""

	if TYPE_CHECKING:
		def __init__(self, component: int, constraint: object): ...

	def __str__(self) -> str:  # pragma: no-cover
		return f"unknown component {self.args[0]} referenced by {self.args[1]}"

	@property
	def component(self) -> int:
		"""
		The id that could not be resolved
		"""
		assert isinstance(self.args[0], int)
		return self.args[0]


class ConflictColocateClash(InvalidSpec):
	"""
	Raised when a pair of components is declared both in conflict and co-located
	"""

	if TYPE_CHECKING:
		def __init__(self, first: int, second: int): ...

	def __str__(self) -> str:  # pragma: no-cover
		return f"components {self.args[0]} and {self.args[1]} are both in conflict and co-located"


class UnsatisfiableComponent(InvalidSpec):
	"""
	Raised when a component does not fit alone in any offer of a catalog

	The arguments are the component id, its name and the name of a dimension which exceeds
	the capacity of every offer (or an empty string if no single dimension is to blame).
	"""

	if TYPE_CHECKING:
		def __init__(self, component: int, name: str, dimension: str): ...

	def __str__(self) -> str:  # pragma: no-cover
		component, name, dimension = self.args
		if dimension:
			return f"component {component} ({name}) needs more {dimension} than any offer provides"
		return f"component {component} ({name}) does not fit in any offer"

	@property
	def component(self) -> int:
		"""
		The id of the component that cannot be placed
		"""
		assert isinstance(self.args[0], int)
		return self.args[0]

	@property
	def dimension(self) -> str:
		"""
		The name of the exceeded dimension, if any
		"""
		assert isinstance(self.args[2], str)
		return self.args[2]


class InvalidConstraint(InvalidSpec):
	"""
	Raised for constraints with malformed arguments, such as `Conflict(1, 1)` or `n = 0`
	"""

	if TYPE_CHECKING:
		def __init__(self, constraint: object, reason: str): ...

	def __str__(self) -> str:  # pragma: no-cover
		return f"{self.args[0]}: {self.args[1]}"


class DimensionMismatch(DeployOptError, ValueError):
	"""
	Raised when a plan's shape does not match the spec or catalog it is checked against
	"""


class MappingMismatch(DeployOptError, ValueError):
	"""
	Raised when a plan does not use the merged components of a co-location mapping
	"""


class ColocatedConflict(InvalidSpec):
	"""
	Raised when two members of one co-location group are also in conflict
	"""

	if TYPE_CHECKING:
		def __init__(self, first: int, second: int): ...

	def __str__(self) -> str:  # pragma: no-cover
		return f"components {self.args[0]} and {self.args[1]} must share machines but conflict"


class InfeasibleInstanceCounts(DeployOptError, ValueError):
	"""
	Raised when no vector of instance counts satisfies the instance-count constraints
	"""


class NoFeasiblePointWithinBound(InfeasibleInstanceCounts):
	"""
	Raised by the exhaustive surrogate search when nothing feasible lies inside the box
	"""

	if TYPE_CHECKING:
		def __init__(self, bound: int): ...

	def __str__(self) -> str:  # pragma: no-cover
		return f"no feasible instance counts with every count at most {self.args[0]}"


class InsufficientMachines(DeployOptError, ValueError):
	"""
	Raised when fixed clique instances need more machines than are available
	"""

	if TYPE_CHECKING:
		def __init__(self, needed: int, available: int): ...

	def __str__(self) -> str:  # pragma: no-cover
		return f"fixing needs {self.args[0]} machines but only {self.args[1]} are available"


class IncompatibleBreakers(DeployOptError, ValueError):
	"""
	Raised when symmetry breakers reference cells outside of the problem's dimensions
	"""


class EmptyCatalog(DeployOptError, ValueError):
	"""
	Raised when a problem is built against a catalog with no offers
	"""


class MalformedIR(DeployOptError, ValueError):
	"""
	Raised when a constraint IR references undeclared variables or lacks its structure
	"""


class UnloweredIndicator(DeployOptError, ValueError):
	"""
	Raised when an IR still containing indicator sums is emitted as SMT-LIB
	"""


class SpaceTooLarge(DeployOptError, ValueError):
	"""
	Raised when an exhaustive search would enumerate more points than allowed
	"""

	if TYPE_CHECKING:
		def __init__(self, size: int, limit: int): ...

	def __str__(self) -> str:  # pragma: no-cover
		return f"search space of {self.args[0]} points exceeds the limit of {self.args[1]}"


class ModelParseError(DeployOptError, ValueError):
	"""
	Raised when solver output does not contain a readable model
	"""


class ModelInconsistent(DeployOptError, ValueError):
	"""
	Raised when a solver's model violates the constraints it was given

	The second argument lists descriptions of the violated constraints.
	"""

	if TYPE_CHECKING:
		def __init__(self, message: str, violations: Sequence[str] = ...): ...

	def __str__(self) -> str:  # pragma: no-cover
		message = self.args[0]
		if len(self.args) > 1 and self.args[1]:
			shown = "; ".join(self.args[1][:5])
			return f"{message}: {shown}"
		return str(message)


class ExternalUnavailable(DeployOptError, RuntimeError):
	"""
	Raised when no external solver command is configured or its binary cannot be found
	"""


class ExternalTimeout(DeployOptError, TimeoutError):
	"""
	Raised when an external solver exceeds its wall-clock limit
	"""

	if TYPE_CHECKING:
		def __init__(self, command: str, limit: float): ...

	def __str__(self) -> str:  # pragma: no-cover
		return f"{self.args[0]!r} did not finish within {self.args[1]} seconds"


class ExternalFailure(ExternalUnavailable):
	"""
	Raised when an external solver exits with a non-zero status
	"""

	if TYPE_CHECKING:
		def __init__(self, command: str, status: int, stderr: str): ...

	def __str__(self) -> str:  # pragma: no-cover
		command, status, stderr = self.args
		return f"{command!r} exited with status {status}: {stderr.strip()[:200]}"
