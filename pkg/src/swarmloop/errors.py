"""Domain errors shared across the world, WoT, gateway and harness layers.

Every error carries a stable string ``code`` which is what crosses the tool
gateway boundary (``ToolResult.error_code``) and the JSON-RPC wire.
"""

from __future__ import annotations


class SwarmError(Exception):
    code = "SwarmError"

    def __init__(self, detail: str = ""):
        super().__init__(detail or self.code)
        self.detail = detail or self.code


# sim-world
class UnknownDrone(SwarmError):
    code = "UnknownDrone"


class DisarmWhileAirborne(SwarmError):
    code = "DisarmWhileAirborne"


class NonPositiveAltitude(SwarmError):
    code = "NonPositiveAltitude"


class NotArmed(SwarmError):
    code = "NotArmed"


class NotAirborne(SwarmError):
    code = "NotAirborne"


class InvalidMode(SwarmError):
    code = "InvalidMode"


class OutOfRange(SwarmError):
    code = "OutOfRange"


class UnknownDevice(SwarmError):
    code = "UnknownDevice"


class NotAnActuator(SwarmError):
    code = "NotAnActuator"


class NotASensor(SwarmError):
    code = "NotASensor"


# wot-things
class UnknownThing(SwarmError):
    code = "UnknownThing"


class UnknownAffordance(SwarmError):
    code = "UnknownAffordance"


class ReadOnlyProperty(SwarmError):
    code = "ReadOnlyProperty"


class SchemaViolation(SwarmError):
    code = "SchemaViolation"

    def __init__(self, field: str, reason: str):
        super().__init__(f"{field or '<root>'}: {reason}")
        self.field = field
        self.reason = reason


# thing-directory
class DuplicateId(SwarmError):
    code = "DuplicateId"


class UnknownId(SwarmError):
    code = "UnknownId"


class MalformedExpression(SwarmError):
    code = "MalformedExpression"


# tool-gateway
class UnknownTool(SwarmError):
    code = "UnknownTool"


class UnknownCall(SwarmError):
    code = "UnknownCall"


# mission-planners
class InvalidFov(SwarmError):
    code = "InvalidFov"


class InvalidRegion(SwarmError):
    code = "InvalidRegion"


class InvalidAltitudeBounds(SwarmError):
    code = "InvalidAltitudeBounds"


class InvalidSpacing(SwarmError):
    code = "InvalidSpacing"


class UnsupportedShape(SwarmError):
    code = "UnsupportedShape"


class SizeMismatch(SwarmError):
    code = "SizeMismatch"


# agent-core
class HelperDisabled(SwarmError):
    code = "HelperDisabled"


class ReasonerFailure(SwarmError):
    code = "ReasonerFailure"

    def __init__(self, detail: str = "", trace=None):
        super().__init__(detail)
        self.trace = trace


class MalformedToolCall(SwarmError):
    code = "MalformedToolCall"


class UnsupportedMission(SwarmError):
    code = "UnsupportedMission"


# eval-harness
class MissingPlan(SwarmError):
    code = "MissingPlan"


class BadSensorLayout(SwarmError):
    code = "BadSensorLayout"
