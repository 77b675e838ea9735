"""Deterministic oracle agent.

It follows the intended flow of each mission through gateway tools only:
discover, read mission context, plan, arm, take off, fly, verify, land,
verify disarmed, conclude.  Tool results are read back from the tool messages
in the context, exactly as a language model would see them.

Transits are de-conflicted by altitude: drone ``k`` climbs to its own layer
``base + 3k``, flies level to its target, and only then changes altitude on
the spot.  Slots are at least the formation spacing apart, so vertical moves
cannot conflict either.
"""

from __future__ import annotations

import json
import math
import re
from typing import Any, Generator

from swarmloop.agent.ledger import completion_composition, context_composition, estimate_tokens
from swarmloop.agent.types import INFEASIBLE_PREFIX, AgentContext, ReasonerStep, Usage
from swarmloop.errors import UnsupportedMission
from swarmloop.gateway.tools import ToolCall, ToolDefinition
from swarmloop.planners.coverage import Region, plan_area_coverage

MISSION_KINDS = ("coverage_with_tool", "coverage_no_tool", "formation", "irrigation")
LAYER_GAP = 3.0
ARRIVE_TOL = 1.0
MAX_POLLS = 60
WAIT_TIMEOUT = 600.0

Action = list[tuple[str, dict[str, Any]]]
Policy = Generator["Action | str", list[dict[str, Any]], None]


class _Abort(Exception):
    pass


def _num(title: str) -> tuple[int, str]:
    m = re.search(r"(\d+)$", title)
    return (int(m.group(1)) if m else 0, title)


def _read(thing: str, prop: str) -> tuple[str, dict[str, Any]]:
    return "read_web_thing_property", {"thing": thing, "property": prop}


def _act(thing: str, action: str, **inp: Any) -> tuple[str, dict[str, Any]]:
    args: dict[str, Any] = {"thing": thing, "action": action}
    if inp:
        args["input"] = inp
    return "call_web_thing_action", args


def _value(r: dict[str, Any]) -> Any:
    if r.get("status") != "ok":
        raise _Abort(f"{r.get('error_code')}: {r.get('detail')}")
    return r["result"]


def _arrived(state: dict[str, Any]) -> bool:
    t = state.get("target")
    if not state["airborne"] or t is None or state["mode"] != "GUIDED":
        return False
    p = state["position"]
    return math.dist((p["x"], p["y"], p["z"]), (t["x"], t["y"], t["z"])) <= ARRIVE_TOL


class ScriptedReasoner:
    count_tokens = staticmethod(estimate_tokens)

    def __init__(self, mission_kind: str, seed: int = 0, layer_base: float | None = None):
        if mission_kind not in MISSION_KINDS:
            raise UnsupportedMission(f"no scripted policy for {mission_kind!r}")
        self.kind = mission_kind
        self.seed = seed  # the policy is deterministic; kept for interface parity
        self.layer_base = layer_base
        self._policy: Policy | None = None
        self._recovering = False
        self._pending: list[str] = []
        self._step = 0
        self._tools: set[str] = set()

    # ---------------------------------------------------------------- plumbing
    def _results(self, context: AgentContext) -> list[dict[str, Any]]:
        by_id: dict[str, dict[str, Any]] = {}
        for m in context.messages:
            if m.role == "tool" and m.call_id in self._pending:
                try:
                    by_id[m.call_id] = json.loads(m.content)
                except json.JSONDecodeError:
                    by_id[m.call_id] = {"status": "error", "error_code": "Truncated", "detail": m.content[:80]}
        return [by_id.get(c, {"status": "error", "error_code": "Missing"}) for c in self._pending]

    def _guardrail_since_last_step(self, context: AgentContext) -> bool:
        for m in reversed(context.messages):
            if m.role == "assistant":
                return False
            if m.role == "system" and (m.source or "").startswith("guardrail:"):
                return True
        return False

    def step(self, context: AgentContext, tools: list[ToolDefinition]) -> ReasonerStep:
        self._tools = {t.name for t in tools}
        prompt = sum(estimate_tokens(s) for v in context_composition(context).values() for s in v)
        if self._policy is None:
            self._policy = self._run()
            action = next(self._policy)
        else:
            results = self._results(context)
            try:
                action = self._policy.send(results)
            except StopIteration:
                action = None
            if self._guardrail_since_last_step(context) and not self._recovering:
                self._recovering = True
                self._policy = self._recover()
                action = next(self._policy)
            elif action is None:
                action = "Mission concluded."
        self._step += 1
        if isinstance(action, str):
            self._pending = []
            step = ReasonerStep(final_text=action)
        else:
            calls = [ToolCall(f"s{self._step}-{k}", tool, args) for k, (tool, args) in enumerate(action)]
            self._pending = [c.call_id for c in calls]
            step = ReasonerStep(tool_calls=calls, content=f"step {self._step}")
        completion = sum(estimate_tokens(s) for v in completion_composition(step).values() for s in v)
        step.usage = Usage(prompt, completion)
        return step

    # ---------------------------------------------------------------- policy
    def _run(self) -> Policy:
        r = yield [
            ("list_web_things", {"query": "$.actions.takeoff"}),
            ("list_web_things", {"query": "$[?(@.thing_class=='virtual')]"}),
            ("list_web_things", {"query": "$.actions.sample"}),
            ("list_web_things", {"query": "$.actions.trigger"}),
        ]
        uavs = sorted((t["title"] for t in _value(r[0])["things"]), key=_num)
        mission = _value(r[1])["things"][0]["id"]
        sensors = sorted((t["title"] for t in _value(r[2])["things"]), key=_num)
        actuators = sorted(t["title"] for t in _value(r[3])["things"])

        props = ("kind", "region", "altitude_bounds", "camera_fov_deg", "parameters")
        calls = [_read(mission, p) for p in props] + [_read(u, "state") for u in uavs]
        if self.kind == "irrigation":
            calls += [_read(s, p) for s in sensors for p in ("kind", "position", "comm_range")]
        r = yield calls
        info = {p: _value(x) for p, x in zip(props, r)}
        states = {u: _value(x)["value"] for u, x in zip(uavs, r[len(props) : len(props) + len(uavs)])}
        info = {k: v["value"] for k, v in info.items()}
        sensor_info: dict[str, dict[str, Any]] = {}
        if self.kind == "irrigation":
            rest = r[len(props) + len(uavs) :]
            for i, s in enumerate(sensors):
                kind, pos, rng = (_value(x)["value"] for x in rest[3 * i : 3 * i + 3])
                sensor_info[s] = {"kind": kind, "position": pos, "range": rng}

        bounds = info["altitude_bounds"]
        base = self.layer_base if self.layer_base is not None else bounds["min"] + 5.0
        outcome = ""
        flying: list[str] = []
        try:
            targets = yield from self._plan(info, uavs, states, sensor_info)
            flying = [u for u, *_ in targets]
            layers = {u: base + LAYER_GAP * k for k, u in enumerate(flying)}
            if max(layers.values()) > bounds["max"]:
                raise _Abort("not enough altitude layers inside the bounds")
            # a target altitude of None means: stay on the transit layer
            targets = [(u, x, y, layers[u] if alt is None else alt) for u, x, y, alt in targets]

            r = yield [_act(u, "arm") for u in flying]
            [_value(x) for x in r]
            r = yield [_act(u, "takeoff", alt=layers[u]) for u in flying]
            [_value(x) for x in r]
            yield from self._await_arrival(flying)

            yield from self._goto({u: (x, y, layers[u]) for u, x, y, _ in targets})
            if any(abs(alt - layers[u]) > 1e-9 for u, _, _, alt in targets):
                yield from self._goto({u: (x, y, alt) for u, x, y, alt in targets})

            if self.kind == "irrigation":
                outcome = yield from self._irrigate(targets, sensor_info, actuators, info["parameters"])
            else:
                outcome = f"{len(flying)} drones reached their {self.kind.replace('_', ' ')} targets"
        except _Abort as exc:
            outcome = f"{INFEASIBLE_PREFIX} {exc}"
        if flying:
            yield from self._land(flying)
        if outcome.startswith(INFEASIBLE_PREFIX):
            yield outcome
        else:
            yield f"Mission complete: {outcome}; all participating drones landed and disarmed."

    def _plan(self, info, uavs, states, sensor_info) -> Generator[Any, Any, list[tuple[str, float, float, float | None]]]:
        region = info["region"]
        bounds = info["altitude_bounds"]
        if self.kind in ("coverage_with_tool", "coverage_no_tool"):
            if self.kind == "coverage_with_tool" and "plan_area_coverage" in self._tools:
                r = yield [
                    (
                        "plan_area_coverage",
                        {
                            "width": region["width"], "height": region["height"],
                            "origin_x": region["x"], "origin_y": region["y"], "n": len(uavs),
                            "fov_deg": info["camera_fov_deg"],
                            "alt_min": bounds["min"], "alt_max": bounds["max"],
                        },
                    )
                ]
                slots = _value(r[0])["slots"]
            else:
                plan = plan_area_coverage(
                    Region((region["x"], region["y"]), region["width"], region["height"]),
                    len(uavs), math.radians(info["camera_fov_deg"]), bounds["min"], bounds["max"],
                )
                slots = plan.to_dict()["slots"]
            return [(u, s["x"], s["y"], s["alt"]) for u, s in zip(uavs, slots)]
        if self.kind == "formation":
            p = info["parameters"]
            drones = [
                {"id": u, "x": states[u]["position"]["x"], "y": states[u]["position"]["y"], "z": states[u]["position"]["z"]}
                for u in uavs
            ]
            r = yield [
                (
                    "plan_drone_formation",
                    {
                        "shape": p["shape"], "center_x": p["center_x"], "center_y": p["center_y"],
                        "orientation_deg": p["orientation_deg"], "spacing": p["spacing"],
                        "altitude": p["altitude"], "drones": drones,
                    },
                )
            ]
            return [(a["drone"], a["x"], a["y"], a["alt"]) for a in _value(r[0])["assignment"]]
        # irrigation: one drone per sensor, hovering right above it at its transit layer
        if len(uavs) < len(sensors := list(sensor_info)):
            raise _Abort("fewer drones than sensors")
        return [
            (u, sensor_info[s]["position"]["x"], sensor_info[s]["position"]["y"], None)
            for u, s in zip(uavs, sensors)
        ]

    def _states(self, drones: list[str]):
        r = yield [_read(u, "state") for u in drones]
        return {u: _value(x)["value"] for u, x in zip(drones, r)}

    def _await_arrival(self, drones: list[str]):
        if "wait_until_arrived" in self._tools:
            r = yield [("wait_until_arrived", {"drones": drones, "timeout_s": WAIT_TIMEOUT})]
            if not _value(r[0])["satisfied"]:
                raise _Abort("drones did not reach their targets in time")
            return
        for _ in range(MAX_POLLS):
            states = yield from self._states(drones)
            if all(_arrived(s) for s in states.values()):
                return
        raise _Abort("drones did not reach their targets in time")

    def _goto(self, targets: dict[str, tuple[float, float, float]]):
        if "send_drones_to_positions" in self._tools:
            r = yield [
                (
                    "send_drones_to_positions",
                    {"targets": [{"drone": u, "x": x, "y": y, "alt": a} for u, (x, y, a) in targets.items()]},
                )
            ]
            bad = [e for e in _value(r[0])["results"] if e["status"] != "ok"]
            if bad:
                raise _Abort(f"goto rejected for {bad[0]['drone']}: {bad[0]['error_code']}")
        else:
            r = yield [_act(u, "goto", x=x, y=y, alt=a) for u, (x, y, a) in targets.items()]
            [_value(x) for x in r]
        yield from self._await_arrival(list(targets))

    def _irrigate(self, targets, sensor_info, actuators, params):
        sensors = list(sensor_info)
        r = yield [_act(s, "sample", requester_id=u) for (u, *_), s in zip(targets, sensors)]
        readings = [_value(x)["output"] for x in r]
        humidity = [x["value"] for x in readings if x["kind"] == "humidity_sensor"]
        temperature = [x["value"] for x in readings if x["kind"] == "temperature_sensor"]
        if not humidity or not temperature:
            raise _Abort("missing humidity or temperature readings")
        h_mean = sum(humidity) / len(humidity)
        t_mean = sum(temperature) / len(temperature)
        required = h_mean <= params["humidity_max"] or t_mean >= params["temperature_min"]
        if required:
            if not actuators:
                raise _Abort("irrigation required but no actuator was discovered")
            r = yield [_act(actuators[0], "trigger")]
            _value(r[0])
        verdict = "triggered" if required else "not required"
        return f"mean humidity {h_mean:.2f}%, temperature {t_mean:.2f} degC, irrigation {verdict}"

    def _land(self, drones: list[str]):
        states = yield from self._states(drones)
        airborne = [u for u in drones if states[u]["airborne"]]
        if airborne:
            yield [_act(u, "land") for u in airborne]
            if "wait_until_landed" in self._tools:
                yield [("wait_until_landed", {"drones": airborne, "timeout_s": WAIT_TIMEOUT})]
        for _ in range(MAX_POLLS):
            states = yield from self._states(drones)
            if not any(s["airborne"] for s in states.values()):
                break
        armed = [u for u in drones if states[u]["armed"] and not states[u]["airborne"]]
        if armed:
            yield [_act(u, "disarm") for u in armed]
            yield from self._states(drones)

    def _recover(self) -> Policy:
        """Answer to a guardrail after concluding: land whatever still flies, then verify."""
        r = yield [("list_web_things", {"query": "$.actions.takeoff"})]
        drones = sorted((t["title"] for t in _value(r[0])["things"]), key=_num)
        yield from self._land(drones)
        yield "Re-verified drone state after the guardrail; every drone is on the ground and disarmed."


def scripted_reasoner(mission_kind: str, seed: int = 0) -> ScriptedReasoner:
    return ScriptedReasoner(mission_kind, seed)
