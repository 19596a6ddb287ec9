"""
Tests for the JSON formats in deployopt.schema
"""

from __future__ import annotations

import tempfile
from decimal import Decimal
from pathlib import Path
from unittest import TestCase

from deployopt.exceptions import SchemaViolation
from deployopt.exceptions import SpecParseError
from deployopt.model import DeploymentPlan
from deployopt.model import RequireProvide
from deployopt.schema import dump_spec
from deployopt.schema import parse_offers
from deployopt.schema import parse_spec
from deployopt.schema import plan_from_json
from deployopt.schema import plan_to_json
from deployopt.schema import read_json

SPEC = {
	"name": "pair",
	"dimensions": ["cpu", "memory"],
	"parameters": {"k": 2},
	"components": [
		{"id": 1, "name": "Web", "requirements": {"cpu": 1, "memory": 512}},
		{"id": 2, "name": "DB", "requirements": {"memory": 1024, "cpu": 2}},
	],
	"constraints": [
		{"kind": "conflict", "components": [1, 2]},
		{"kind": "require-provide", "components": [1, 2], "n": {"param": "k"}, "m": 3},
		{"kind": "bound", "components": [1], "op": "≥", "n": 2},
	],
}


class ParseSpecTests(TestCase):
	"""
	Tests for parse_spec
	"""

	def test_parse(self) -> None:
		"""
		Check that components, requirements and constraints are converted
		"""
		spec = parse_spec(SPEC)
		assert spec.ids == (1, 2)
		assert tuple(spec.component(2).requirements) == (2, 1024)
		assert len(spec.constraints) == 3
		assert spec.constraints[1] == RequireProvide(1, 2, 2, 3)

	def test_parameter_override(self) -> None:
		"""
		Check that given parameters replace the document's defaults
		"""
		spec = parse_spec(SPEC, parameters={"k": 5})
		assert spec.constraints[1] == RequireProvide(1, 2, 5, 3)
		assert dict(spec.parameters) == {"k": 5}

	def test_undefined_parameter(self) -> None:
		"""
		Check that a constraint naming an unknown parameter is a schema violation
		"""
		document = dict(SPEC, parameters={})
		with self.assertRaises(SchemaViolation) as cm:
			parse_spec(document)
		assert cm.exception.pointer == "/constraints/1/n"

	def test_wrong_requirements(self) -> None:
		"""
		Check that requirements must name exactly the declared dimensions
		"""
		document = dict(SPEC, components=[{"id": 1, "name": "A", "requirements": {"cpu": 1}}])
		with self.assertRaises(SchemaViolation) as cm:
			parse_spec(document)
		assert cm.exception.pointer == "/components/0/requirements"

	def test_unknown_kind(self) -> None:
		"""
		Check that an unknown constraint kind is refused
		"""
		document = dict(SPEC, constraints=[{"kind": "affinity", "components": [1, 2]}])
		with self.assertRaises(SchemaViolation):
			parse_spec(document)

	def test_dump(self) -> None:
		"""
		Check that a dumped spec parses back to an equal spec
		"""
		spec = parse_spec(SPEC)
		assert parse_spec(dump_spec(spec)).constraints == spec.constraints


class ParseOffersTests(TestCase):
	"""
	Tests for parse_offers
	"""

	def test_decimal_price(self) -> None:
		"""
		Check that a price in currency units is stored exactly in micro-units
		"""
		document = [{"id": 1, "capacity": {"cpu": 2, "memory": 4}, "price": Decimal("8.403")}]
		catalog = parse_offers(document)
		assert catalog[1].price == 8_403_000

	def test_float_price(self) -> None:
		"""
		Check that a float price converts without binary rounding
		"""
		document = [{"id": 1, "capacity": {"cpu": 2}, "price": 8.403}]
		assert parse_offers(document)[1].price == 8_403_000

	def test_dimension_order(self) -> None:
		"""
		Check that capacities follow the requested dimension order
		"""
		document = {"offers": [{"id": 1, "capacity": {"memory": 4, "cpu": 2}, "price_micro": 1}]}
		catalog = parse_offers(document, dimensions=("cpu", "memory"))
		assert tuple(catalog[1].capacity) == (2, 4)

	def test_zero_capacity(self) -> None:
		"""
		Check that a zero capacity is a schema violation
		"""
		document = [{"id": 1, "capacity": {"cpu": 0}, "price_micro": 5}]
		with self.assertRaises(SchemaViolation):
			parse_offers(document)

	def test_duplicates_kept(self) -> None:
		"""
		Check that identical offers are both kept
		"""
		offer = {"capacity": {"cpu": 2}, "price_micro": 5}
		catalog = parse_offers([dict(offer, id=1), dict(offer, id=2)])
		assert len(catalog) == 2


class ReadJsonTests(TestCase):
	"""
	Tests for reading files
	"""

	def test_syntax_error(self) -> None:
		"""
		Check that malformed JSON raises SpecParseError with the line number
		"""
		with tempfile.TemporaryDirectory() as tmp:
			path = Path(tmp) / "bad.json"
			path.write_text('{\n  "name": "x",\n  oops\n}\n')
			with self.assertRaises(SpecParseError) as cm:
				read_json(path)
		assert cm.exception.line == 3


class PlanJsonTests(TestCase):
	"""
	Tests for the plan document format
	"""

	def test_occupancy_derived(self) -> None:
		"""
		Check that occupancy is derived when a plan document omits it
		"""
		document = {"components": [1], "assignment": [[1, 0]], "types": [2, 0], "total_price": 7}
		plan = plan_from_json(document)
		assert plan.occupancy == (1, 0)

	def test_to_json(self) -> None:
		"""
		Check that a plan converts to plain lists
		"""
		plan = DeploymentPlan((1,), ((1, 0),), (2, 0), (1, 0), 7)
		assert plan_to_json(plan) == {
			"components": [1],
			"assignment": [[1, 0]],
			"types": [2, 0],
			"occupancy": [1, 0],
			"total_price": 7,
		}
