"""Domain types for quantity-aware sentence retrieval.

A sentence is the retrieval unit. Each sentence carries zero or more
quantities, a quantity being an exact decimal value paired with a canonical
unit from a configurable catalog. Queries combine free-text terms with an
optional numerical condition (equal, less-than, greater-than) over a single
quantity.

Values are held as decimal.Decimal (integer mantissa plus base-10 exponent)
so that equal values compare equal regardless of how they were written in
text: 17, 17.0 and 17.00 land on one index key.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from enum import Enum
from importlib import resources
from typing import Iterable, Optional

DIMENSIONLESS = "dimensionless"


class Condition(str, Enum):
    """Numerical condition of a query. Bounds are strict (open intervals)."""

    EQ = "eq"
    LT = "lt"
    GT = "gt"


class CatalogError(ValueError):
    """Raised for unreadable or structurally invalid catalog/lexicon files."""


class DataError(ValueError):
    """Raised for malformed corpus, query or run inputs."""


def parse_decimal(text: str) -> Decimal:
    """Parse an exact decimal from its serialized form.

    Raises DataError for anything that is not a finite decimal literal.
    """
    try:
        value = Decimal(text)
    except InvalidOperation as exc:
        raise DataError(f"not a decimal value: {text!r}") from exc
    if not value.is_finite():
        raise DataError(f"non-finite value rejected: {text!r}")
    return value


def decimal_str(value: Decimal) -> str:
    """Serialize a decimal losslessly (Decimal(decimal_str(v)) == v,
    digit-for-digit)."""
    return str(value)


def plain_digits(value: Decimal) -> str:
    """Render a decimal in plain positional notation, no exponent."""
    text = format(value, "f")
    return text


@dataclass(frozen=True)
class Unit:
    """A catalog unit.

    canonical: stable identifier, e.g. "pound-sterling".
    family: group of mutually related units, e.g. "currency".
    prefix_surfaces: written forms appearing before the value ("$", "US$").
    suffix_surfaces: written forms appearing after the value ("dollars").
    conversion_factor: optional multiplier to the family base unit. Only
        consulted when cross-unit conversion is explicitly enabled.
    """

    canonical: str
    family: str
    prefix_surfaces: tuple[str, ...] = ()
    suffix_surfaces: tuple[str, ...] = ()
    conversion_factor: Optional[Decimal] = None

    def surfaces(self) -> tuple[str, ...]:
        return self.prefix_surfaces + self.suffix_surfaces


@dataclass(frozen=True)
class Quantity:
    """An extracted quantity: exact decimal value plus canonical unit.

    span is the (start, end) character range of the value text in its source
    sentence; unit_span covers the matched unit surface when one was found.
    Spans are what masking and sample rewriting operate on.
    """

    value: Decimal
    unit: str = DIMENSIONLESS
    span: tuple[int, int] = (0, 0)
    unit_span: Optional[tuple[int, int]] = None

    def __post_init__(self) -> None:
        if not isinstance(self.value, Decimal):
            object.__setattr__(self, "value", Decimal(str(self.value)))
        if not self.value.is_finite():
            raise DataError(f"non-finite quantity value: {self.value}")
        if self.span[0] > self.span[1]:
            raise DataError(f"invalid span: {self.span}")

    def to_dict(self) -> dict:
        out = {
            "value": decimal_str(self.value),
            "unit": self.unit,
            "span": list(self.span),
        }
        if self.unit_span is not None:
            out["unit_span"] = list(self.unit_span)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Quantity":
        unit_span = data.get("unit_span")
        return cls(
            value=parse_decimal(data["value"]),
            unit=data.get("unit", DIMENSIONLESS),
            span=tuple(data.get("span", (0, 0))),
            unit_span=tuple(unit_span) if unit_span is not None else None,
        )


@dataclass(frozen=True)
class Sentence:
    """A retrieval unit: one sentence of one source document.

    sent_id follows "<doc_id>#<ordinal>" with a zero-based ordinal assigned
    in splitting order.
    """

    sent_id: str
    doc_id: str
    text: str
    quantities: tuple[Quantity, ...] = ()

    def to_dict(self) -> dict:
        return {
            "sent_id": self.sent_id,
            "doc_id": self.doc_id,
            "text": self.text,
            "quantities": [q.to_dict() for q in self.quantities],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Sentence":
        return cls(
            sent_id=data["sent_id"],
            doc_id=data.get("doc_id", data["sent_id"].split("#")[0]),
            text=data["text"],
            quantities=tuple(
                Quantity.from_dict(q) for q in data.get("quantities", ())
            ),
        )


def make_sent_id(doc_id: str, ordinal: int) -> str:
    return f"{doc_id}#{ordinal}"


@dataclass(frozen=True)
class QuantityQuery:
    """A parsed query: terms plus an optional (condition, quantity) pair.

    The condition is present exactly when the quantity is. A query without a
    quantity is a plain term query and never produces quantity scores.
    """

    qid: str
    raw_text: str
    terms: tuple[str, ...]
    condition: Optional[Condition] = None
    quantity: Optional[Quantity] = None

    def __post_init__(self) -> None:
        if (self.condition is None) != (self.quantity is None):
            raise DataError(
                "condition and quantity must be present together or absent together"
            )

    @property
    def has_quantity(self) -> bool:
        return self.quantity is not None


class UnitCatalog:
    """Parsed unit catalog with surface lookup tables.

    Surface matching is case-insensitive; lookup tables hold casefolded
    surfaces sorted longest-first so that "pound sterling" wins over "pound".
    """

    def __init__(self, units: Iterable[Unit]):
        self.units: dict[str, Unit] = {}
        for unit in units:
            if unit.canonical in self.units:
                raise CatalogError(f"duplicate canonical unit: {unit.canonical}")
            self.units[unit.canonical] = unit
        # (casefolded surface, canonical) sorted by surface length descending,
        # then alphabetically for determinism
        self.prefixes: list[tuple[str, str]] = []
        self.suffixes: list[tuple[str, str]] = []
        for unit in self.units.values():
            for s in unit.prefix_surfaces:
                self.prefixes.append((s.casefold(), unit.canonical))
            for s in unit.suffix_surfaces:
                self.suffixes.append((s.casefold(), unit.canonical))
        self.prefixes.sort(key=lambda p: (-len(p[0]), p[0]))
        self.suffixes.sort(key=lambda p: (-len(p[0]), p[0]))
        self._families: dict[str, list[str]] = {}
        for unit in self.units.values():
            self._families.setdefault(unit.family, []).append(unit.canonical)
        for members in self._families.values():
            members.sort()

    def __contains__(self, canonical: str) -> bool:
        return canonical in self.units or canonical == DIMENSIONLESS

    def get(self, canonical: str) -> Optional[Unit]:
        return self.units.get(canonical)

    def family_members(self, family: str) -> list[str]:
        return list(self._families.get(family, ()))

    def families(self) -> list[str]:
        return sorted(self._families)

    def surfaces_of(self, canonical: str) -> list[tuple[str, bool]]:
        """All surfaces of a unit as (surface, is_prefix) pairs."""
        unit = self.units[canonical]
        out = [(s, True) for s in unit.prefix_surfaces]
        out.extend((s, False) for s in unit.suffix_surfaces)
        return out


def _unit_from_record(record: dict, where: str) -> Unit:
    try:
        canonical = record["canonical"]
        family = record["family"]
    except KeyError as exc:
        raise CatalogError(f"{where}: missing field {exc}") from None
    factor = record.get("conversion_factor")
    if factor is not None:
        try:
            factor = Decimal(str(factor))
        except InvalidOperation:
            raise CatalogError(
                f"{where}: bad conversion_factor {record['conversion_factor']!r}"
            ) from None
    return Unit(
        canonical=canonical,
        family=family,
        prefix_surfaces=tuple(record.get("prefix_surfaces", ())),
        suffix_surfaces=tuple(record.get("suffix_surfaces", ())),
        conversion_factor=factor,
    )


def validate_catalog(records: list[dict]) -> list[str]:
    """Check catalog structure. Returns a list of violation messages.

    Violations: empty catalog, missing fields, a surface string mapped to two
    different canonical units (case-insensitive compare), empty surface.
    """
    violations: list[str] = []
    if not records:
        violations.append("catalog defines no units")
        return violations
    seen_canonical: set[str] = set()
    surface_owner: dict[str, str] = {}
    for i, record in enumerate(records):
        where = f"unit #{i}"
        try:
            unit = _unit_from_record(record, where)
        except CatalogError as exc:
            violations.append(str(exc))
            continue
        if unit.canonical in seen_canonical:
            violations.append(f"duplicate canonical unit: {unit.canonical}")
        seen_canonical.add(unit.canonical)
        if not unit.surfaces() and unit.canonical != DIMENSIONLESS:
            violations.append(f"{unit.canonical}: no surfaces defined")
        for surface in unit.surfaces():
            if not surface:
                violations.append(f"{unit.canonical}: empty surface string")
                continue
            key = surface.casefold()
            owner = surface_owner.get(key)
            if owner is not None and owner != unit.canonical:
                violations.append(
                    f"surface {surface!r} maps to multiple units: "
                    f"{owner}, {unit.canonical}"
                )
            else:
                surface_owner[key] = unit.canonical
    return violations


def load_catalog(path) -> UnitCatalog:
    """Load and validate a unit catalog from a JSON file.

    Raises CatalogError with position context for unreadable input, and with
    the full violation list for structurally invalid catalogs.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            records = json.load(fh)
    except OSError as exc:
        raise CatalogError(f"cannot read catalog {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CatalogError(
            f"catalog {path} is not valid JSON (line {exc.lineno}, column {exc.colno})"
        ) from exc
    if not isinstance(records, list):
        raise CatalogError(f"catalog {path}: top level must be a list of units")
    violations = validate_catalog(records)
    if violations:
        raise CatalogError(
            f"catalog {path} invalid: " + "; ".join(violations)
        )
    return UnitCatalog(_unit_from_record(r, f"unit #{i}") for i, r in enumerate(records))


class ConditionLexicon:
    """Surface phrases for each condition, longest-first for matching."""

    def __init__(self, phrases: dict[Condition, tuple[str, ...]]):
        self.phrases = phrases
        # (casefolded phrase, condition) sorted longest-first so overlapping
        # phrases resolve to the longest ("no more than" beats "more than")
        self.ordered: list[tuple[str, Condition]] = []
        for cond, items in phrases.items():
            for phrase in items:
                self.ordered.append((phrase.casefold(), cond))
        self.ordered.sort(key=lambda p: (-len(p[0]), p[0]))

    def surfaces(self, condition: Condition) -> tuple[str, ...]:
        return self.phrases[condition]


_CONDITION_KEYS = {"equal": Condition.EQ, "greater": Condition.GT, "less": Condition.LT}


def load_conditions(path) -> ConditionLexicon:
    """Load the condition surface dictionary from JSON.

    Expects exactly the keys "equal", "greater" and "less", each holding a
    list of phrases.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise CatalogError(f"cannot read condition dictionary {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CatalogError(
            f"condition dictionary {path} is not valid JSON "
            f"(line {exc.lineno}, column {exc.colno})"
        ) from exc
    unknown = set(data) - set(_CONDITION_KEYS)
    if unknown:
        raise CatalogError(f"unknown condition keys: {sorted(unknown)}")
    phrases: dict[Condition, tuple[str, ...]] = {}
    for key, cond in _CONDITION_KEYS.items():
        items = data.get(key, ())
        if not items:
            raise CatalogError(f"condition dictionary missing phrases for {key!r}")
        phrases[cond] = tuple(items)
    return ConditionLexicon(phrases)


def _data_path(name: str):
    return resources.files("quantrank.data").joinpath(name)


def default_catalog() -> UnitCatalog:
    """The starter catalog shipped with the package."""
    with resources.as_file(_data_path("units.json")) as path:
        return load_catalog(path)


def default_conditions() -> ConditionLexicon:
    """The condition surface dictionary shipped with the package."""
    with resources.as_file(_data_path("conditions.json")) as path:
        return load_conditions(path)


def default_expansions() -> dict[str, list[str]]:
    """Sample concept expansion map shipped with the package."""
    with resources.as_file(_data_path("expansions.json")) as path:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
