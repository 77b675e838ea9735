"""Affordance data schemas: a small, strict subset of TD/JSON-Schema.

Schemas serialize to the JSON shape used inside Thing Descriptions and MCP
``inputSchema`` objects, and :func:`validate` is total: any input either
validates or raises :class:`SchemaViolation`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

from swarmloop.errors import SchemaViolation

TYPES = ("number", "integer", "string", "boolean", "array", "object", "null")
ANY = ("number", "integer", "string", "boolean", "array", "object", "null")


@dataclass(frozen=True)
class FieldSpec:
    type: str | tuple[str, ...]
    required: bool = True
    description: str = ""
    minimum: float | None = None
    maximum: float | None = None
    exclusive_minimum: float | None = None
    exclusive_maximum: float | None = None
    enum: tuple | None = None
    items: FieldSpec | None = None
    properties: AffordanceSchema | None = None

    @property
    def types(self) -> tuple[str, ...]:
        return (self.type,) if isinstance(self.type, str) else tuple(self.type)

    def check(self) -> None:
        for t in self.types:
            if t not in TYPES:
                raise ValueError(f"undeclared type {t!r}")
        lo = self.minimum if self.minimum is not None else self.exclusive_minimum
        hi = self.maximum if self.maximum is not None else self.exclusive_maximum
        if lo is not None and hi is not None and lo > hi:
            raise ValueError(f"minimum {lo} exceeds maximum {hi}")
        if self.items is not None:
            self.items.check()
        if self.properties is not None:
            self.properties.check()

    def to_json(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"type": self.type if isinstance(self.type, str) else list(self.type)}
        if self.description:
            doc["description"] = self.description
        for key, attr in (
            ("minimum", "minimum"),
            ("maximum", "maximum"),
            ("exclusiveMinimum", "exclusive_minimum"),
            ("exclusiveMaximum", "exclusive_maximum"),
        ):
            value = getattr(self, attr)
            if value is not None:
                doc[key] = value
        if self.enum is not None:
            doc["enum"] = list(self.enum)
        if self.items is not None:
            doc["items"] = self.items.to_json()
        if self.properties is not None:
            doc.update(self.properties.to_json())
            doc["type"] = self.type if isinstance(self.type, str) else list(self.type)
        return doc

    @classmethod
    def from_json(cls, doc: Mapping[str, Any], required: bool = True) -> FieldSpec:
        t = doc["type"]
        props = None
        if "properties" in doc:
            props = AffordanceSchema.from_json(doc)
        return cls(
            type=t if isinstance(t, str) else tuple(t),
            required=required,
            description=doc.get("description", ""),
            minimum=doc.get("minimum"),
            maximum=doc.get("maximum"),
            exclusive_minimum=doc.get("exclusiveMinimum"),
            exclusive_maximum=doc.get("exclusiveMaximum"),
            enum=tuple(doc["enum"]) if "enum" in doc else None,
            items=cls.from_json(doc["items"]) if "items" in doc else None,
            properties=props,
        )


@dataclass(frozen=True)
class AffordanceSchema:
    """Object schema: named fields, no additional properties."""

    fields: Mapping[str, FieldSpec] = field(default_factory=dict)

    def check(self) -> None:
        for spec in self.fields.values():
            spec.check()

    def to_json(self) -> dict[str, Any]:
        return {
            "type": "object",
            "properties": {name: spec.to_json() for name, spec in self.fields.items()},
            "required": sorted(name for name, spec in self.fields.items() if spec.required),
            "additionalProperties": False,
        }

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> AffordanceSchema:
        required = set(doc.get("required", ()))
        return cls(
            {
                name: FieldSpec.from_json(sub, required=name in required)
                for name, sub in doc.get("properties", {}).items()
            }
        )


def obj(**fields: FieldSpec) -> AffordanceSchema:
    return AffordanceSchema(dict(fields))


def num(**kw) -> FieldSpec:
    return FieldSpec("number", **kw)


def integer(**kw) -> FieldSpec:
    return FieldSpec("integer", **kw)


def string(**kw) -> FieldSpec:
    return FieldSpec("string", **kw)


def boolean(**kw) -> FieldSpec:
    return FieldSpec("boolean", **kw)


def array(items: FieldSpec | None = None, **kw) -> FieldSpec:
    return FieldSpec("array", items=items, **kw)


def nested(schema: AffordanceSchema, **kw) -> FieldSpec:
    return FieldSpec("object", properties=schema, **kw)


def anything(**kw) -> FieldSpec:
    return FieldSpec(ANY, **kw)


def _type_matches(t: str, value: Any) -> bool:
    if t == "null":
        return value is None
    if t == "boolean":
        return isinstance(value, bool)
    if t == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    if t == "number":
        return (
            isinstance(value, (int, float))
            and not isinstance(value, bool)
            and math.isfinite(value)
        )
    if t == "string":
        return isinstance(value, str)
    if t == "array":
        return isinstance(value, list)
    if t == "object":
        return isinstance(value, dict)
    return False


def _join(path: str, name: str) -> str:
    return f"{path}.{name}" if path else name


def validate_field(spec: FieldSpec, value: Any, path: str) -> None:
    matched = [t for t in spec.types if _type_matches(t, value)]
    if not matched:
        raise SchemaViolation(path, f"expected {'|'.join(spec.types)}, got {type(value).__name__}")
    if spec.enum is not None and value not in spec.enum:
        raise SchemaViolation(path, f"must be one of {list(spec.enum)}")
    if matched[0] in ("number", "integer"):
        if spec.minimum is not None and value < spec.minimum:
            raise SchemaViolation(path, f"must be >= {spec.minimum}")
        if spec.maximum is not None and value > spec.maximum:
            raise SchemaViolation(path, f"must be <= {spec.maximum}")
        if spec.exclusive_minimum is not None and value <= spec.exclusive_minimum:
            raise SchemaViolation(path, f"must be > {spec.exclusive_minimum}")
        if spec.exclusive_maximum is not None and value >= spec.exclusive_maximum:
            raise SchemaViolation(path, f"must be < {spec.exclusive_maximum}")
    if matched[0] == "array" and spec.items is not None:
        for i, item in enumerate(value):
            validate_field(spec.items, item, f"{path}[{i}]")
    if matched[0] == "object" and spec.properties is not None:
        validate(spec.properties, value, path)


def validate(schema: AffordanceSchema, value: Any, path: str = "") -> dict[str, Any]:
    """Validate ``value`` against an object schema; ``None`` means ``{}``."""
    if value is None:
        value = {}
    if not isinstance(value, dict):
        raise SchemaViolation(path, f"expected object, got {type(value).__name__}")
    for key in value:
        if not isinstance(key, str) or key not in schema.fields:
            raise SchemaViolation(_join(path, str(key)), "unknown field")
    for name, spec in schema.fields.items():
        if name not in value:
            if spec.required:
                raise SchemaViolation(_join(path, name), "required field missing")
            continue
        validate_field(spec, value[name], _join(path, name))
    return value
