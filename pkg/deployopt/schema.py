# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""
JSON formats for application specs, offer catalogs and deployment plans

Documents are checked against a JSON schema before conversion, so errors name the
offending value with a JSON pointer.  Prices are read with `decimal.Decimal` so that a
price given in currency units (such as 8.403) converts exactly to integer micro-units.
"""

from __future__ import annotations

import json
from collections.abc import Mapping
from decimal import Decimal
from pathlib import Path
from typing import Any

from jsonschema import Draft202012Validator
from jsonschema.exceptions import best_match

from .exceptions import SchemaViolation
from .exceptions import SpecParseError
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
from .model import OfferCatalog
from .model import Op
from .model import RequireProvide
from .model import ResourceVector
from .model import StructuralConstraint
from .model import VMOffer

__all__ = [
	"SPEC_SCHEMA", "OFFERS_SCHEMA", "PLAN_SCHEMA",
	"read_json", "check_document", "parse_spec", "load_spec", "dump_spec",
	"parse_offers", "load_offers",
	"dump_offers", "plan_to_json", "plan_from_json", "load_plan",
]

MICRO = 1_000_000

_COUNT = {
	"oneOf": [
		{"type": "integer", "minimum": 1},
		{
			"type": "object",
			"properties": {"param": {"type": "string"}},
			"required": ["param"],
			"additionalProperties": False,
		},
	],
}
_PAIR = {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2}
_SET = {"type": "array", "items": {"type": "integer"}, "minItems": 1}
_OP = {"enum": ["=", "==", "<=", ">=", "≤", "≥"]}


def _kind(name: str, properties: dict[str, Any], required: list[str]) -> dict[str, Any]:
	return {
		"type": "object",
		"properties": {"kind": {"const": name}, **properties},
		"required": ["kind", *required],
		"additionalProperties": False,
	}


SPEC_SCHEMA: dict[str, Any] = {
	"$schema": "https://json-schema.org/draft/2020-12/schema",
	"type": "object",
	"required": ["name", "dimensions", "components"],
	"additionalProperties": False,
	"properties": {
		"name": {"type": "string"},
		"description": {"type": "string"},
		"dimensions": {
			"type": "array", "items": {"type": "string"}, "minItems": 1, "uniqueItems": True,
		},
		"parameters": {
			"type": "object", "additionalProperties": {"type": "integer", "minimum": 0},
		},
		"reference": {
			"type": "object",
			"additionalProperties": {
				"oneOf": [
					{"type": "integer"},
					{
						"type": "object",
						"properties": {
							"by": {"type": "string"},
							"values": {
								"type": "object", "additionalProperties": {"type": "integer"},
							},
						},
						"required": ["by", "values"],
						"additionalProperties": False,
					},
				],
			},
		},
		"components": {
			"type": "array",
			"minItems": 1,
			"items": {
				"type": "object",
				"required": ["id", "name", "requirements"],
				"additionalProperties": False,
				"properties": {
					"id": {"type": "integer", "minimum": 1},
					"name": {"type": "string"},
					"requirements": {
						"type": "object",
						"additionalProperties": {"type": "integer", "minimum": 0},
					},
				},
			},
		},
		"constraints": {
			"type": "array",
			"items": {
				"type": "object",
				"required": ["kind"],
				"properties": {
					"kind": {
						"enum": [
							"conflict", "colocate", "exclusive", "require-provide",
							"exact-ratio", "full-deploy", "bound", "conditional-bound",
						],
					},
				},
				"oneOf": [
					_kind("conflict", {"components": _PAIR}, ["components"]),
					_kind("colocate", {"components": _PAIR}, ["components"]),
					_kind("exclusive", {"components": _SET}, ["components"]),
					_kind(
						"require-provide",
						{"components": _PAIR, "n": _COUNT, "m": _COUNT},
						["components", "n", "m"],
					),
					_kind("exact-ratio", {"components": _PAIR, "n": _COUNT}, ["components", "n"]),
					_kind("full-deploy", {"component": {"type": "integer"}}, ["component"]),
					_kind(
						"bound",
						{"components": _SET, "op": _OP, "n": _COUNT},
						["components", "op", "n"],
					),
					_kind(
						"conditional-bound",
						{"guard": {"type": "integer"}, "components": _SET, "op": _OP, "n": _COUNT},
						["guard", "components", "op", "n"],
					),
				],
			},
		},
	},
}

_OFFER = {
	"type": "object",
	"required": ["id", "capacity"],
	"additionalProperties": False,
	"properties": {
		"id": {"type": "integer", "minimum": 1},
		"name": {"type": "string"},
		"capacity": {
			"type": "object",
			"minProperties": 1,
			"additionalProperties": {"type": "integer", "exclusiveMinimum": 0},
		},
		"price_micro": {"type": "integer", "exclusiveMinimum": 0},
		"price": {"type": "number", "exclusiveMinimum": 0},
	},
	"oneOf": [
		{"required": ["price_micro"], "not": {"required": ["price"]}},
		{"required": ["price"], "not": {"required": ["price_micro"]}},
	],
}

OFFERS_SCHEMA: dict[str, Any] = {
	"$schema": "https://json-schema.org/draft/2020-12/schema",
	"oneOf": [
		{"type": "array", "items": _OFFER},
		{
			"type": "object",
			"required": ["offers"],
			"additionalProperties": False,
			"properties": {
				"name": {"type": "string"},
				"dimensions": {"type": "array", "items": {"type": "string"}, "minItems": 1},
				"offers": {"type": "array", "items": _OFFER},
			},
		},
	],
}

PLAN_SCHEMA: dict[str, Any] = {
	"$schema": "https://json-schema.org/draft/2020-12/schema",
	"type": "object",
	"required": ["components", "assignment", "types", "total_price"],
	"properties": {
		"components": {"type": "array", "items": {"type": "integer"}},
		"assignment": {
			"type": "array",
			"items": {"type": "array", "items": {"enum": [0, 1]}},
		},
		"types": {"type": "array", "items": {"type": "integer", "minimum": 0}},
		"occupancy": {"type": "array", "items": {"enum": [0, 1]}},
		"total_price": {"type": "integer", "minimum": 0},
	},
}


def read_json(path: Path|str) -> Any:
	"""
	Read a JSON document, reporting syntax errors with their line and column
	"""
	path = Path(path)
	text = path.read_text(encoding="utf-8")
	try:
		return json.loads(text, parse_float=Decimal)
	except json.JSONDecodeError as exc:
		raise SpecParseError(str(path), exc.lineno, exc.colno, exc.msg) from exc


def check_document(document: object, schema: Mapping[str, Any], source: str) -> None:
	"""
	Raise `SchemaViolation` for the most relevant error of a document against a schema
	"""
	error = best_match(Draft202012Validator(schema).iter_errors(document))
	if error is not None:
		pointer = "".join(f"/{part}" for part in error.absolute_path)
		raise SchemaViolation(source, pointer, error.message)


def _count(value: int|Mapping[str, str], parameters: Mapping[str, int], where: str, source: str) -> int:
	if isinstance(value, int):
		return value
	name = value["param"]
	try:
		return parameters[name]
	except KeyError:
		raise SchemaViolation(source, where, f"undefined parameter {name!r}") from None


def _constraint(
	document: Mapping[str, Any],
	parameters: Mapping[str, int],
	where: str,
	source: str,
) -> StructuralConstraint:
	def count(key: str) -> int:
		return _count(document[key], parameters, f"{where}/{key}", source)

	match document["kind"]:
		case "conflict":
			return Conflict(*document["components"])
		case "colocate":
			return Colocate(*document["components"])
		case "exclusive":
			return ExclusiveDeploy(tuple(document["components"]))
		case "require-provide":
			consumer, provider = document["components"]
			return RequireProvide(consumer, provider, count("n"), count("m"))
		case "exact-ratio":
			many, one = document["components"]
			return ExactRatio(many, one, count("n"))
		case "full-deploy":
			return FullDeploy(document["component"])
		case "bound":
			return BoundInstances(tuple(document["components"]), Op.parse(document["op"]), count("n"))
		case "conditional-bound":
			return ConditionalBound(
				document["guard"], tuple(document["components"]),
				Op.parse(document["op"]), count("n"),
			)
	raise AssertionError(document["kind"])  # pragma: no-cover


def parse_spec(
	document: object,
	source: str = "<spec>",
	parameters: Mapping[str, int]|None = None,
) -> ApplicationSpec:
	"""
	Convert a JSON document into an `ApplicationSpec`

	Values given in `parameters` override the defaults the document declares.
	"""
	check_document(document, SPEC_SCHEMA, source)
	assert isinstance(document, dict)
	params = dict(document.get("parameters", {}))
	params.update(parameters or {})
	dimensions = tuple(document["dimensions"])

	components = []
	for index, item in enumerate(document["components"]):
		where = f"/components/{index}/requirements"
		reqs = item["requirements"]
		if set(reqs) != set(dimensions):
			raise SchemaViolation(source, where, f"requirements must name exactly {list(dimensions)}")
		amounts = ResourceVector(tuple(reqs[d] for d in dimensions))
		components.append(Component(item["id"], item["name"], amounts))

	constraints = tuple(
		_constraint(item, params, f"/constraints/{index}", source)
		for index, item in enumerate(document.get("constraints", []))
	)

	reference = []
	for key, value in document.get("reference", {}).items():
		if isinstance(value, int):
			reference.append((key, value))
		elif (chosen := params.get(value["by"])) is not None and str(chosen) in value["values"]:
			reference.append((key, value["values"][str(chosen)]))

	return ApplicationSpec(
		name=document["name"],
		dimensions=dimensions,
		components=tuple(components),
		constraints=constraints,
		description=document.get("description", ""),
		parameters=tuple(sorted(params.items())),
		reference=tuple(reference),
	)


def load_spec(path: Path|str, parameters: Mapping[str, int]|None = None) -> ApplicationSpec:
	"""
	Read and convert an application spec file
	"""
	return parse_spec(read_json(path), str(path), parameters)


def _constraint_json(constraint: StructuralConstraint) -> dict[str, Any]:
	match constraint:
		case Conflict(first, second) | Colocate(first, second):
			return {"kind": constraint.kind, "components": [first, second]}
		case ExclusiveDeploy(members):
			return {"kind": constraint.kind, "components": list(members)}
		case RequireProvide(consumer, provider, n, m):
			return {"kind": constraint.kind, "components": [consumer, provider], "n": n, "m": m}
		case ExactRatio(many, one, n):
			return {"kind": constraint.kind, "components": [many, one], "n": n}
		case FullDeploy(component):
			return {"kind": constraint.kind, "component": component}
		case BoundInstances(members, op, n):
			return {"kind": constraint.kind, "components": list(members), "op": op.value, "n": n}
		case ConditionalBound(guard, members, op, n):
			return {
				"kind": constraint.kind, "guard": guard, "components": list(members),
				"op": op.value, "n": n,
			}
	raise AssertionError(constraint)  # pragma: no-cover


def dump_spec(spec: ApplicationSpec) -> dict[str, Any]:
	"""
	Convert a spec to its JSON document; `parse_spec` of the result is equal to `spec`
	"""
	document: dict[str, Any] = {
		"name": spec.name,
		"dimensions": list(spec.dimensions),
		"components": [
			{
				"id": c.id,
				"name": c.name,
				"requirements": dict(zip(spec.dimensions, c.requirements)),
			}
			for c in spec.components
		],
		"constraints": [_constraint_json(c) for c in spec.constraints],
	}
	if spec.description:
		document["description"] = spec.description
	if spec.parameters:
		document["parameters"] = dict(spec.parameters)
	if spec.reference:
		document["reference"] = dict(spec.reference)
	return document


def _micro(offer: Mapping[str, Any], where: str, source: str) -> int:
	if "price_micro" in offer:
		return int(offer["price_micro"])
	scaled = Decimal(str(offer["price"])) * MICRO
	if scaled != scaled.to_integral_value():
		raise SchemaViolation(source, f"{where}/price", "price is finer than one micro-unit")
	return int(scaled)


def parse_offers(
	document: object,
	source: str = "<offers>",
	dimensions: tuple[str, ...]|None = None,
) -> OfferCatalog:
	"""
	Convert a JSON document (a list of offers, or an object with an "offers" list) into a catalog

	Capacities are ordered by `dimensions` if given, else by the document's "dimensions" or
	the key order of the first offer.
	"""
	check_document(document, OFFERS_SCHEMA, source)
	if isinstance(document, dict):
		items = document["offers"]
		declared = document.get("dimensions")
	else:
		assert isinstance(document, list)
		items, declared = document, None
	if dimensions is None:
		dimensions = tuple(declared or (items[0]["capacity"] if items else ()))
	offers = []
	for index, item in enumerate(items):
		where = f"/offers/{index}" if isinstance(document, dict) else f"/{index}"
		capacity = item["capacity"]
		if set(capacity) != set(dimensions):
			raise SchemaViolation(source, f"{where}/capacity", f"capacity must name exactly {list(dimensions)}")
		offers.append(VMOffer(
			id=item["id"],
			capacity=ResourceVector(tuple(capacity[d] for d in dimensions)),
			price=_micro(item, where, source),
			name=item.get("name", ""),
		))
	offers.sort(key=lambda o: o.id)
	return OfferCatalog(tuple(dimensions), tuple(offers))


def load_offers(path: Path|str, dimensions: tuple[str, ...]|None = None) -> OfferCatalog:
	"""
	Read and convert an offer catalog file
	"""
	return parse_offers(read_json(path), str(path), dimensions)


def dump_offers(catalog: OfferCatalog) -> dict[str, Any]:
	return {
		"dimensions": list(catalog.dimensions),
		"offers": [
			{
				"id": o.id,
				**({"name": o.name} if o.name else {}),
				"capacity": dict(zip(catalog.dimensions, o.capacity)),
				"price_micro": o.price,
			}
			for o in catalog
		],
	}


def plan_to_json(plan: DeploymentPlan) -> dict[str, Any]:
	return {
		"components": list(plan.components),
		"assignment": [list(row) for row in plan.assignment],
		"types": list(plan.types),
		"occupancy": list(plan.occupancy),
		"total_price": plan.total_price,
	}


def plan_from_json(document: object, source: str = "<plan>") -> DeploymentPlan:
	"""
	Convert a plan document; occupancy is derived from the assignment when absent
	"""
	check_document(document, PLAN_SCHEMA, source)
	assert isinstance(document, dict)
	rows = tuple(tuple(row) for row in document["assignment"])
	types = tuple(document["types"])
	if "occupancy" in document:
		occupancy = tuple(document["occupancy"])
	else:
		occupancy = tuple(int(any(row[k] for row in rows)) for k in range(len(types)))
	return DeploymentPlan(
		tuple(document["components"]), rows, types, occupancy, document["total_price"],
	)


def load_plan(path: Path|str) -> DeploymentPlan:
	return plan_from_json(read_json(path), str(path))
