"""Thing Descriptions for drones, ground devices, planner services and the mission."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping

from swarmloop.errors import UnknownDevice, UnknownDrone
from swarmloop.sim.world import MODES, World
from swarmloop.wot.schema import (
    AffordanceSchema,
    FieldSpec,
    anything,
    array,
    boolean,
    integer,
    nested,
    num,
    obj,
    string,
)

TD_CONTEXT = "https://www.w3.org/2022/wot/td/v1.1"
THING_CLASSES = ("physical", "virtual", "service")
URN_PREFIX = "urn:swarmloop:"


@dataclass(frozen=True)
class PropertyAffordance:
    schema: FieldSpec
    read_only: bool = True

    def to_json(self) -> dict[str, Any]:
        doc = self.schema.to_json()
        doc["readOnly"] = self.read_only
        return doc

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> PropertyAffordance:
        return cls(FieldSpec.from_json(doc), bool(doc.get("readOnly", True)))


@dataclass(frozen=True)
class ActionAffordance:
    input: AffordanceSchema
    output: AffordanceSchema
    description: str = ""

    def to_json(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"input": self.input.to_json(), "output": self.output.to_json()}
        if self.description:
            doc["description"] = self.description
        return doc

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> ActionAffordance:
        return cls(
            AffordanceSchema.from_json(doc.get("input", {})),
            AffordanceSchema.from_json(doc.get("output", {})),
            doc.get("description", ""),
        )


@dataclass(frozen=True)
class ThingDescription:
    id: str
    title: str
    thing_class: str
    properties: Mapping[str, PropertyAffordance] = field(default_factory=dict)
    actions: Mapping[str, ActionAffordance] = field(default_factory=dict)
    events: Mapping[str, Any] = field(default_factory=dict)
    forms: tuple[dict[str, str], ...] = ()
    description: str = ""

    def __post_init__(self):
        if self.thing_class not in THING_CLASSES:
            raise ValueError(f"thing_class must be one of {THING_CLASSES}")
        for spec in self.properties.values():
            spec.schema.check()
        for act in self.actions.values():
            act.input.check()
            act.output.check()
        for form in self.forms:
            kind, name = form["href"].split("/")[-2:]
            table = {"properties": self.properties, "actions": self.actions, "events": self.events}.get(kind)
            if table is None or name not in table:
                raise ValueError(f"form {form['href']} references a missing affordance")

    def to_json(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "@context": TD_CONTEXT,
            "id": self.id,
            "title": self.title,
            "thing_class": self.thing_class,
            "properties": {k: v.to_json() for k, v in self.properties.items()},
            "actions": {k: v.to_json() for k, v in self.actions.items()},
            "events": dict(self.events),
            "forms": [dict(f) for f in self.forms],
        }
        if self.description:
            doc["description"] = self.description
        return doc

    def serialize(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> ThingDescription:
        return cls(
            id=doc["id"],
            title=doc["title"],
            thing_class=doc["thing_class"],
            properties={k: PropertyAffordance.from_json(v) for k, v in doc.get("properties", {}).items()},
            actions={k: ActionAffordance.from_json(v) for k, v in doc.get("actions", {}).items()},
            events=dict(doc.get("events", {})),
            forms=tuple(dict(f) for f in doc.get("forms", ())),
            description=doc.get("description", ""),
        )

    @classmethod
    def parse(cls, text: str) -> ThingDescription:
        return cls.from_json(json.loads(text))


def thing_id(name: str) -> str:
    return name if name.startswith(URN_PREFIX) else URN_PREFIX + name


def _forms(tid: str, properties, actions) -> tuple[dict[str, str], ...]:
    forms = []
    for name, prop in properties.items():
        href = f"/things/{tid}/properties/{name}"
        forms.append({"href": href, "op": "readproperty"})
        if not prop.read_only:
            forms.append({"href": href, "op": "writeproperty"})
    for name in actions:
        forms.append({"href": f"/things/{tid}/actions/{name}", "op": "invokeaction"})
    return tuple(forms)


def _td(name: str, thing_class: str, properties, actions, description: str) -> ThingDescription:
    tid = thing_id(name)
    properties = dict(properties)
    properties["action_status"] = PropertyAffordance(
        FieldSpec("object", description="Latest state of each action invoked on this Thing, by call id")
    )
    return ThingDescription(
        id=tid,
        title=name,
        thing_class=thing_class,
        properties=properties,
        actions=dict(actions),
        forms=_forms(tid, properties, actions),
        description=description,
    )


XYZ = obj(x=num(), y=num(), z=num())
XY = obj(x=num(), y=num())
NO_INPUT = obj()


def uav_telemetry_schema() -> AffordanceSchema:
    return obj(
        position=nested(XYZ),
        mode=string(enum=MODES),
        armed=boolean(),
        airborne=boolean(),
        battery=num(minimum=0),
        target=FieldSpec(("object", "null"), properties=XYZ),
    )


def build_uav_td(world: World, drone_id: str) -> ThingDescription:
    if drone_id not in world.drones:
        raise UnknownDrone(f"no drone {drone_id!r}")
    props = {
        "position": PropertyAffordance(nested(XYZ, description="Local ENU position in metres")),
        "mode": PropertyAffordance(string(enum=MODES, description="Flight mode")),
        "armed": PropertyAffordance(boolean(description="Motors armed")),
        "airborne": PropertyAffordance(boolean(description="True while off the ground")),
        "battery": PropertyAffordance(
            num(minimum=0, maximum=world.config.capacity_mah, description="Remaining charge in mAh")
        ),
        "target": PropertyAffordance(
            FieldSpec(("object", "null"), properties=XYZ, description="Current GUIDED target, if any")
        ),
        "home": PropertyAffordance(nested(XYZ, description="Launch position")),
        "state": PropertyAffordance(
            nested(uav_telemetry_schema(), description="Telemetry snapshot in a single read")
        ),
        "param.cruise_speed": PropertyAffordance(
            num(
                exclusive_minimum=0,
                maximum=world.config.horiz_speed,
                description="Horizontal cruise speed in m/s",
            ),
            read_only=False,
        ),
    }
    target_out = obj(target=nested(XYZ))
    actions = {
        "arm": ActionAffordance(NO_INPUT, obj(armed=boolean()), "Arm motors"),
        "disarm": ActionAffordance(NO_INPUT, obj(armed=boolean()), "Disarm motors; only on the ground"),
        "takeoff": ActionAffordance(
            obj(alt=num(exclusive_minimum=0, description="Target altitude in metres")),
            obj(mode=string(enum=MODES), target=nested(XYZ)),
            "Switch to GUIDED and climb to alt; completion is observed, not awaited",
        ),
        "goto": ActionAffordance(
            obj(x=num(), y=num(), alt=num(exclusive_minimum=0)),
            target_out,
            "Fly to a local ENU waypoint; requires airborne and GUIDED",
        ),
        "land": ActionAffordance(NO_INPUT, obj(mode=string(enum=MODES)), "Descend and disarm"),
        "rtl": ActionAffordance(NO_INPUT, obj(mode=string(enum=MODES)), "Return to launch and land"),
        "set_mode": ActionAffordance(
            obj(mode=string(enum=MODES)), obj(mode=string(enum=MODES)), "Switch flight mode"
        ),
    }
    return _td(drone_id, "physical", props, actions, f"Multirotor UAV (sysid {world.drones[drone_id].sysid})")


def _device_props(world: World, device_id: str) -> dict[str, PropertyAffordance]:
    return {
        "position": PropertyAffordance(nested(XY, description="Ground position in metres")),
        "kind": PropertyAffordance(string()),
    }


def build_sensor_td(world: World, device_id: str) -> ThingDescription:
    dev = world.devices.get(device_id)
    if dev is None or dev.kind == "irrigation_actuator":
        raise UnknownDevice(f"no sensor {device_id!r}")
    props = _device_props(world, device_id)
    props["comm_range"] = PropertyAffordance(
        num(exclusive_minimum=0, description="A drone must be within this horizontal range to sample")
    )
    props["unit"] = PropertyAffordance(string())
    actions = {
        "sample": ActionAffordance(
            obj(requester_id=string(description="Drone relaying the reading")),
            obj(device=string(), kind=string(), value=num(), unit=string(), requester=string()),
            "Read the sensor through a drone in communication range",
        )
    }
    return _td(device_id, "physical", props, actions, f"Ground {dev.kind.replace('_', ' ')}")


def build_actuator_td(world: World, device_id: str) -> ThingDescription:
    dev = world.devices.get(device_id)
    if dev is None or dev.kind != "irrigation_actuator":
        raise UnknownDevice(f"no actuator {device_id!r}")
    props = _device_props(world, device_id)
    props["triggered"] = PropertyAffordance(boolean())
    actions = {"trigger": ActionAffordance(NO_INPUT, obj(triggered=boolean()), "Start irrigation")}
    return _td(device_id, "physical", props, actions, "Ground irrigation actuator")


SLOT = obj(x=num(), y=num(), alt=num())

COVERAGE_INPUT = obj(
    width=num(exclusive_minimum=0),
    height=num(exclusive_minimum=0),
    origin_x=num(required=False),
    origin_y=num(required=False),
    n=integer(minimum=1, maximum=64),
    fov_deg=num(exclusive_minimum=0, exclusive_maximum=180),
    alt_min=num(exclusive_minimum=0),
    alt_max=num(exclusive_minimum=0),
)
COVERAGE_OUTPUT = obj(
    rows=integer(minimum=1),
    cols=integer(minimum=1),
    cell_w=num(),
    cell_h=num(),
    r_cell=num(),
    altitude=num(),
    clamped=boolean(),
    slots=array(nested(SLOT)),
)
DRONE_POS = obj(id=string(), x=num(), y=num(), z=num(required=False))
FORMATION_INPUT = obj(
    shape=string(enum=("line", "star", "circle")),
    center_x=num(),
    center_y=num(),
    orientation_deg=num(required=False),
    spacing=num(exclusive_minimum=0),
    altitude=num(exclusive_minimum=0),
    n=integer(minimum=1, maximum=64, required=False),
    drones=array(nested(DRONE_POS), required=False),
    objective=string(enum=("maximize", "minimize"), required=False),
)
ASSIGNED = obj(drone=string(), slot=integer(minimum=0), x=num(), y=num(), alt=num())
FORMATION_OUTPUT = obj(
    shape=string(),
    center=nested(XY),
    orientation=num(),
    spacing=num(),
    slots=array(nested(SLOT)),
    assignment=array(nested(ASSIGNED)),
    total_displacement=FieldSpec(("number", "null")),
    objective=FieldSpec(("string", "null")),
)

SERVICES = {
    "coverage-planner": (
        "plan_area_coverage",
        ActionAffordance(
            COVERAGE_INPUT,
            COVERAGE_OUTPUT,
            "Near-square grid of cell-centre waypoints and a shared altitude from region and camera FOV",
        ),
    ),
    "formation-planner": (
        "plan_drone_formation",
        ActionAffordance(
            FORMATION_INPUT,
            FORMATION_OUTPUT,
            "Formation slots (line, star, circle) and optional drone-to-slot assignment",
        ),
    ),
}


def build_service_td(service: str) -> ThingDescription:
    if service not in SERVICES:
        raise UnknownDevice(f"no service {service!r}")
    action, affordance = SERVICES[service]
    return _td(service, "service", {}, {action: affordance}, f"Planning service: {action}")


def build_mission_td(name: str = "mission") -> ThingDescription:
    props = {
        "kind": PropertyAffordance(string()),
        "region": PropertyAffordance(
            nested(obj(x=num(), y=num(), width=num(), height=num()), description="Target rectangle")
        ),
        "altitude_bounds": PropertyAffordance(nested(obj(min=num(), max=num()))),
        "camera_fov_deg": PropertyAffordance(num()),
        "parameters": PropertyAffordance(FieldSpec("object", description="Mission-specific settings")),
    }
    return _td(name, "virtual", props, {}, "Mission context")
