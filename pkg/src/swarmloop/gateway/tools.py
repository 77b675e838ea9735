"""Tool catalogue exposed to the agent: core, planning and helper tools."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from swarmloop.wot.schema import AffordanceSchema, FieldSpec, anything, array, boolean, nested, num, obj, string
from swarmloop.wot.things import COVERAGE_INPUT, COVERAGE_OUTPUT, FORMATION_INPUT, FORMATION_OUTPUT

CATEGORIES = ("core", "planning", "helper")
DEFAULT_PAYLOAD_CAP = 16 * 1024


@dataclass(frozen=True)
class ToolDefinition:
    name: str
    description: str
    input_schema: AffordanceSchema
    output_schema: AffordanceSchema
    category: str = "core"

    def to_mcp(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "description": self.description,
            "inputSchema": self.input_schema.to_json(),
            "outputSchema": self.output_schema.to_json(),
        }

    def to_openai(self) -> dict[str, Any]:
        return {
            "type": "function",
            "function": {
                "name": self.name,
                "description": self.description,
                "parameters": self.input_schema.to_json(),
            },
        }


@dataclass
class ToolCall:
    call_id: str
    tool: str
    arguments: Any = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"call_id": self.call_id, "tool": self.tool, "arguments": self.arguments}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ToolCall:
        return cls(data["call_id"], data["tool"], data.get("arguments", {}))


@dataclass
class ToolResult:
    call_id: str
    status: str
    payload: Any = None
    error_code: str | None = None
    error_detail: str | None = None

    def __post_init__(self):
        if (self.status == "error") != (self.error_code is not None):
            raise ValueError("status=error iff error_code is set")

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> dict[str, Any]:
        return {
            "call_id": self.call_id,
            "status": self.status,
            "payload": self.payload,
            "error_code": self.error_code,
            "error_detail": self.error_detail,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ToolResult:
        return cls(data["call_id"], data["status"], data.get("payload"), data.get("error_code"), data.get("error_detail"))

    def to_content(self, cap: int = DEFAULT_PAYLOAD_CAP) -> str:
        """Text form handed back to the model, truncated to ``cap`` bytes."""
        if self.ok:
            body = {"status": "ok", "result": self.payload}
        else:
            body = {"status": "error", "error_code": self.error_code, "detail": self.error_detail}
        text = json.dumps(body, sort_keys=True, separators=(",", ":"))
        raw = text.encode()
        if len(raw) <= cap:
            return text
        kept = raw[:cap].decode(errors="ignore")
        return f"{kept}...[truncated {len(raw) - len(kept.encode())} bytes]"


THING_SUMMARY = obj(
    id=string(),
    title=string(),
    thing_class=string(),
    td=FieldSpec("object", required=False),
)

CORE_TOOLS = (
    ToolDefinition(
        "list_web_things",
        "Discover WoT Things registered in the Thing Description Directory. "
        "Optional `query` is a JSONPath expression over each TD, e.g. $.actions.takeoff; "
        "`detail` returns the full TDs.",
        obj(query=string(required=False), detail=boolean(required=False)),
        obj(things=array(nested(THING_SUMMARY))),
    ),
    ToolDefinition(
        "read_web_thing_property",
        "Read telemetry and state properties (e.g. position, mode, battery, state, action_status).",
        obj(thing=string(), property=string()),
        obj(thing=string(), property=string(), value=anything()),
    ),
    ToolDefinition(
        "write_web_thing_property",
        "Update configurable properties where supported (e.g. param.cruise_speed).",
        obj(thing=string(), property=string(), value=anything()),
        obj(thing=string(), property=string(), value=anything()),
    ),
    ToolDefinition(
        "call_web_thing_action",
        "Invoke a WoT action on a UAV, sensor, actuator or service. Motion actions return an "
        "acknowledgement; verify completion through property reads (state, action_status).",
        obj(thing=string(), action=string(), input=FieldSpec("object", required=False)),
        obj(
            thing=string(),
            action=string(),
            call_id=string(),
            state=string(enum=("accepted", "running", "completed", "failed")),
            output=FieldSpec("object"),
        ),
    ),
)

PLANNING_TOOLS = (
    ToolDefinition(
        "plan_drone_formation",
        "Compute target positions for geometric formations (line, star, circle) around a centre "
        "and orientation; with `drones` also returns the drone-to-slot assignment.",
        FORMATION_INPUT,
        FORMATION_OUTPUT,
        "planning",
    ),
    ToolDefinition(
        "plan_area_coverage",
        "Generate coverage waypoints (one grid cell centre per drone) and a shared altitude "
        "from region geometry, altitude bounds and camera FOV.",
        COVERAGE_INPUT,
        COVERAGE_OUTPUT,
        "planning",
    ),
)

_WAIT_INPUT = obj(
    drones=array(string(), description="Drone ids or titles"),
    timeout_s=num(minimum=0, maximum=3600),
)
_WAIT_OUTPUT = obj(
    satisfied=boolean(),
    elapsed_s=num(minimum=0),
    drones=array(nested(obj(drone=string(), satisfied=boolean(), detail=string()))),
)

HELPER_TOOLS = (
    ToolDefinition(
        "send_drones_to_positions",
        "Dispatch multiple goto commands in a single call; failures are reported per drone.",
        obj(
            targets=array(
                nested(obj(drone=string(), x=num(), y=num(), alt=num(exclusive_minimum=0)))
            )
        ),
        obj(
            results=array(
                nested(
                    obj(
                        drone=string(),
                        status=string(enum=("ok", "error")),
                        call_id=FieldSpec(("string", "null")),
                        error_code=FieldSpec(("string", "null")),
                        detail=string(),
                    )
                )
            )
        ),
        "helper",
    ),
    ToolDefinition(
        "wait_until_armed",
        "Wait (observing only) until every listed drone reports armed=true, or timeout.",
        _WAIT_INPUT,
        _WAIT_OUTPUT,
        "helper",
    ),
    ToolDefinition(
        "wait_until_arrived",
        "Wait (observing only) until every listed drone is airborne within the arrival tolerance "
        "of its current target, or timeout.",
        _WAIT_INPUT,
        _WAIT_OUTPUT,
        "helper",
    ),
    ToolDefinition(
        "wait_until_landed",
        "Wait (observing only) until every listed drone is on the ground, or timeout.",
        _WAIT_INPUT,
        _WAIT_OUTPUT,
        "helper",
    ),
)

ALL_TOOLS = {t.name: t for t in CORE_TOOLS + PLANNING_TOOLS + HELPER_TOOLS}

# service Thing hosting each planning tool
PLANNING_SERVICES = {"plan_area_coverage": "coverage-planner", "plan_drone_formation": "formation-planner"}


@dataclass(frozen=True)
class GatewayConfig:
    planning_tools: tuple[str, ...] = ()
    helpers: bool = False
    payload_cap: int = DEFAULT_PAYLOAD_CAP

    def __post_init__(self):
        for name in self.planning_tools:
            if name not in PLANNING_SERVICES:
                raise ValueError(f"unknown planning tool {name!r}")


def list_tools(config: GatewayConfig = GatewayConfig()) -> list[ToolDefinition]:
    tools = list(CORE_TOOLS)
    tools += [t for t in PLANNING_TOOLS if t.name in config.planning_tools]
    if config.helpers:
        tools += list(HELPER_TOOLS)
    return tools
