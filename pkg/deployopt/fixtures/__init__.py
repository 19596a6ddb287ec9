# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""
Case-study application specs and nested offer catalogs shipped with the package

Specs: secure-web, secure-billing, wordpress (parameter "min-wordpress-instances"), oryx2.
Catalogs: offers-20 ⊂ offers-40 ⊂ offers-250 ⊂ offers-500, nested by offer id.
"""

from __future__ import annotations

from importlib.resources import files
from pathlib import Path

SPECS = ("secure-web", "secure-billing", "wordpress", "oryx2")
CATALOG_SIZES = (20, 40, 250, 500)


def path(name: str) -> Path:
	"""
	Return the path of a shipped fixture, given its name with or without ".json"
	"""
	stem = name.removesuffix(".json")
	resource = files(__name__).joinpath(f"{stem}.json")
	if not resource.is_file():
		raise FileNotFoundError(f"no fixture named {name!r}")
	return Path(str(resource))


def catalog_path(size: int) -> Path:
	return path(f"offers-{size}")


def resolve(name_or_path: str|Path) -> Path:
	"""
	Return an existing file path, falling back to a fixture of that name
	"""
	candidate = Path(name_or_path)
	if candidate.is_file():
		return candidate
	return path(str(name_or_path))
