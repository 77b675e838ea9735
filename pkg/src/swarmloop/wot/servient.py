"""In-process servient hosting every Thing of a mission.

Inputs are validated against the affordance schema before anything reaches
the world or a planner; outputs are validated against the declared output
schema on the way back.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Any, Iterable

from swarmloop import planners
from swarmloop.errors import (
    ReadOnlyProperty,
    SchemaViolation,
    SizeMismatch,
    UnknownAffordance,
    UnknownCall,
    UnknownThing,
)
from swarmloop.sim.world import World
from swarmloop.wot import things as tds
from swarmloop.wot.schema import validate, validate_field
from swarmloop.wot.things import ThingDescription

MOTION_ACTIONS = ("takeoff", "goto", "land", "rtl")
UNITS = {"humidity_sensor": "%", "temperature_sensor": "degC"}


@dataclass
class ActionRecord:
    call_id: str
    thing_id: str
    action: str
    subject: str | None
    issued_tick: int
    state: str = "accepted"
    detail: str = ""
    target: tuple[float, float, float] | None = None

    def status(self) -> dict[str, str]:
        return {"action": self.action, "state": self.state, "detail": self.detail}


@dataclass(frozen=True)
class ActionAck:
    call_id: str
    state: str
    output: dict[str, Any]


class Servient:
    def __init__(self, world: World, mission_info: dict[str, Any] | None = None, formation_objective: str = "maximize"):
        self.world = world
        self.mission_info = mission_info or {}
        self.formation_objective = formation_objective
        self._lock = threading.RLock()
        self._things: dict[str, ThingDescription] = {}
        self._binding: dict[str, tuple[str, str]] = {}
        self._titles: dict[str, str] = {}
        self._actions: dict[str, ActionRecord] = {}
        self._counter = 0
        world.add_tick_listener(self._on_tick)

    # ------------------------------------------------------------ exposure
    def _expose(self, td: ThingDescription, kind: str, local: str) -> ThingDescription:
        with self._lock:
            if td.id in self._things:
                raise ValueError(f"thing {td.id} already exposed")
            self._things[td.id] = td
            self._binding[td.id] = (kind, local)
            self._titles[td.title] = td.id
            return td

    def expose_uav(self, drone_id: str) -> ThingDescription:
        return self._expose(tds.build_uav_td(self.world, drone_id), "uav", drone_id)

    def expose_sensor(self, device_id: str) -> ThingDescription:
        return self._expose(tds.build_sensor_td(self.world, device_id), "sensor", device_id)

    def expose_actuator(self, device_id: str) -> ThingDescription:
        return self._expose(tds.build_actuator_td(self.world, device_id), "actuator", device_id)

    def expose_service(self, service: str) -> ThingDescription:
        return self._expose(tds.build_service_td(service), "service", service)

    def expose_mission(self, name: str = "mission") -> ThingDescription:
        return self._expose(tds.build_mission_td(name), "mission", name)

    def expose_world(self, services: Iterable[str] = (), mission: bool = True) -> list[ThingDescription]:
        out = [self.expose_uav(d) for d in self.world.drones]
        for dev in self.world.devices.values():
            if dev.kind == "irrigation_actuator":
                out.append(self.expose_actuator(dev.id))
            else:
                out.append(self.expose_sensor(dev.id))
        out.extend(self.expose_service(s) for s in services)
        if mission:
            out.append(self.expose_mission())
        return out

    def things(self) -> list[ThingDescription]:
        with self._lock:
            return list(self._things.values())

    def resolve(self, thing: Any) -> str:
        if isinstance(thing, str):
            if thing in self._things:
                return thing
            if thing in self._titles:
                return self._titles[thing]
        raise UnknownThing(f"no thing {thing!r}")

    def td(self, thing: str) -> ThingDescription:
        return self._things[self.resolve(thing)]

    # ---------------------------------------------------------- invocation
    def invoke_affordance(self, thing: str, kind: str, name: str, input: Any = None) -> Any:
        if kind == "property_read":
            return self.read_property(thing, name)
        if kind == "property_write":
            return self.write_property(thing, name, input)
        if kind == "action":
            return self.invoke_action(thing, name, input).output
        raise UnknownAffordance(f"unknown affordance kind {kind!r}")

    def read_property(self, thing: str, name: str) -> Any:
        tid = self.resolve(thing)
        td = self._things[tid]
        if not isinstance(name, str) or name not in td.properties:
            raise UnknownAffordance(f"{td.title} has no property {name!r}")
        value = self._read(tid, name)
        validate_field(td.properties[name].schema, value, name)
        return value

    def write_property(self, thing: str, name: str, value: Any) -> Any:
        tid = self.resolve(thing)
        td = self._things[tid]
        if not isinstance(name, str) or name not in td.properties:
            raise UnknownAffordance(f"{td.title} has no property {name!r}")
        prop = td.properties[name]
        if prop.read_only:
            raise ReadOnlyProperty(f"{td.title}.{name} is read-only")
        validate_field(prop.schema, value, name)
        kind, local = self._binding[tid]
        if kind == "uav" and name == "param.cruise_speed":
            self.world.set_cruise_speed(local, value)
        return self._read(tid, name)

    def invoke_action(self, thing: str, name: str, input: Any = None, call_id: str | None = None) -> ActionAck:
        tid = self.resolve(thing)
        td = self._things[tid]
        if not isinstance(name, str) or name not in td.actions:
            raise UnknownAffordance(f"{td.title} has no action {name!r}")
        affordance = td.actions[name]
        args = validate(affordance.input, input, "input")
        with self.world._lock, self._lock:
            call_id = self._new_call_id(call_id)
            kind, local = self._binding[tid]
            output = self._dispatch(kind, local, name, args, call_id)
            validate(affordance.output, output, "output")
            record = ActionRecord(call_id, tid, name, local if kind == "uav" else None, self.world.tick_index)
            if kind == "uav" and name in MOTION_ACTIONS:
                snap = self.world.drone_snapshot(local)
                if snap["target"] is not None:
                    t = snap["target"]
                    record.target = (t["x"], t["y"], t["z"])
            else:
                record.state = "completed"
            if kind == "uav" and (name in MOTION_ACTIONS or name == "set_mode"):
                self._supersede(local, call_id, name)
            self._actions[call_id] = record
            return ActionAck(call_id, record.state, output)

    def action_status(self, thing: str, call_id: str) -> dict[str, str]:
        tid = self.resolve(thing)
        with self._lock:
            rec = self._actions.get(call_id)
            if rec is None or rec.thing_id != tid:
                raise UnknownCall(f"no action call {call_id!r} on {thing}")
            return {"state": rec.state, "detail": rec.detail}

    def has_call(self, call_id: str) -> bool:
        return call_id in self._actions

    # ------------------------------------------------------------ internals
    def _new_call_id(self, call_id: str | None) -> str:
        if call_id is None:
            self._counter += 1
            call_id = f"act-{self._counter}"
        base, k = call_id, 1
        while call_id in self._actions:
            k += 1
            call_id = f"{base}#{k}"
        return call_id

    def _supersede(self, drone_id: str, new_call: str, action: str) -> None:
        for rec in self._actions.values():
            if rec.subject == drone_id and rec.call_id != new_call and rec.state in ("accepted", "running"):
                rec.state = "failed"
                rec.detail = f"superseded by {action} ({new_call})"

    def _on_tick(self, world: World) -> None:
        with self._lock:
            for rec in self._actions.values():
                if rec.state in ("accepted", "running"):
                    self._evaluate(rec)

    def _evaluate(self, rec: ActionRecord) -> None:
        d = self.world.drones[rec.subject]
        tol = self.world.config.arrival_tol
        if rec.action in ("takeoff", "goto"):
            if d.mode != "GUIDED":
                rec.state, rec.detail = "failed", f"mode changed to {d.mode}"
                return
            if rec.target is not None and d.airborne and math.dist(d.position, rec.target) <= tol:
                rec.state, rec.detail = "completed", "target reached"
                return
        else:
            wanted = "LAND" if rec.action == "land" else "RTL"
            if d.mode != wanted:
                rec.state, rec.detail = "failed", f"mode changed to {d.mode}"
                return
            if not d.airborne and not d.armed:
                rec.state, rec.detail = "completed", "landed and disarmed"
                return
        rec.state = "running"

    def _read(self, tid: str, name: str) -> Any:
        kind, local = self._binding[tid]
        if name == "action_status":
            with self._lock:
                return {c: r.status() for c, r in self._actions.items() if r.thing_id == tid}
        if kind == "uav":
            s = self.world.drone_snapshot(local)
            if name == "param.cruise_speed":
                return self.world.cruise_speed(local)
            state = {
                "position": s["position"],
                "mode": s["mode"],
                "armed": s["armed"],
                "airborne": s["airborne"],
                "battery": s["battery_mah"],
                "target": s["target"],
            }
            if name == "state":
                return state
            if name == "home":
                return s["home"]
            return state[name]
        if kind in ("sensor", "actuator"):
            s = self.world.device_snapshot(local)
            return {
                "position": s["position"],
                "kind": s["kind"],
                "comm_range": s["comm_range_m"],
                "unit": UNITS.get(s["kind"], ""),
                "triggered": s["triggered"],
            }[name]
        if kind == "mission":
            return self.mission_info[name]
        raise UnknownAffordance(name)  # pragma: no cover - TDs and bindings agree

    def _dispatch(self, kind: str, local: str, name: str, args: dict[str, Any], call_id: str) -> dict[str, Any]:
        w = self.world
        if kind == "uav":
            if name == "arm":
                return w.cmd_arm(local, tag=call_id)
            if name == "disarm":
                return w.cmd_disarm(local, tag=call_id)
            if name == "takeoff":
                return w.cmd_takeoff(local, args["alt"], tag=call_id)
            if name == "goto":
                return w.cmd_goto(local, args["x"], args["y"], args["alt"], tag=call_id)
            if name == "land":
                return w.cmd_land(local, tag=call_id)
            if name == "rtl":
                return w.cmd_rtl(local, tag=call_id)
            if name == "set_mode":
                return w.set_mode(local, args["mode"], tag=call_id)
        if kind == "sensor" and name == "sample":
            requester = args["requester_id"]
            if requester.startswith(tds.URN_PREFIX):
                requester = requester[len(tds.URN_PREFIX):]
            value = w.sample_sensor(local, requester, tag=call_id)
            dev_kind = w.devices[local].kind
            return {"device": local, "kind": dev_kind, "value": value, "unit": UNITS[dev_kind], "requester": requester}
        if kind == "actuator" and name == "trigger":
            return w.trigger_irrigation(local, tag=call_id)
        if kind == "service":
            return self._plan(name, args)
        raise UnknownAffordance(name)  # pragma: no cover

    def _plan(self, name: str, args: dict[str, Any]) -> dict[str, Any]:
        if name == "plan_area_coverage":
            region = planners.Region((args.get("origin_x", 0.0), args.get("origin_y", 0.0)), args["width"], args["height"])
            plan = planners.plan_area_coverage(
                region, args["n"], math.radians(args["fov_deg"]), args["alt_min"], args["alt_max"]
            )
            return plan.to_dict()
        drones = args.get("drones")
        n = args.get("n")
        if drones is None and n is None:
            raise SchemaViolation("input.n", "required when drones is absent")
        if drones is not None:
            if n is not None and n != len(drones):
                raise SizeMismatch(f"n={n} but {len(drones)} drones given")
            n = len(drones)
            if n == 0:
                raise SchemaViolation("input.drones", "must not be empty")
        plan = planners.plan_drone_formation(
            args["shape"],
            (args["center_x"], args["center_y"]),
            math.radians(args.get("orientation_deg", 0.0)),
            args["spacing"],
            n,
            args["altitude"],
        )
        out = plan.to_dict()
        out["assignment"] = []
        out["total_displacement"] = None
        out["objective"] = None
        if drones:
            objective = args.get("objective", self.formation_objective)
            result = planners.assign_slots([(d["x"], d["y"]) for d in drones], plan.slots, objective)
            out["assignment"] = [
                {"drone": d["id"], "slot": j, "x": plan.slots[j][0], "y": plan.slots[j][1], "alt": plan.slots[j][2]}
                for d, j in zip(drones, result.permutation)
            ]
            out["total_displacement"] = result.total_displacement
            out["objective"] = objective
        return out
