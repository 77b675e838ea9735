"""Binary success criteria and run metrics.

Every scorer is a pure function of the persisted trace, the exported world
record and the mission spec, so re-scoring a stored run gives the same verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

from swarmloop.agent.types import RunTrace
from swarmloop.errors import BadSensorLayout, MissingPlan, SizeMismatch, UnsupportedShape
from swarmloop.harness.mission import MissionSpec
from swarmloop.planners import FormationPlan, Region, detect_star
from swarmloop.sim.world import irrigation_required

OUTCOMES = ("full", "early_exit", "fail")
LANDED_MODES = ("LAND", "RTL")
# telemetry row layout: x, y, z, mode, armed, airborne, battery
X, Y, Z, MODE, ARMED, AIRBORNE = range(6)


@dataclass(frozen=True)
class SuccessVerdict:
    outcome: str
    reasons: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.outcome not in OUTCOMES:
            raise ValueError(f"unknown outcome {self.outcome!r}")
        if self.outcome == "full" and self.reasons:
            raise ValueError("a full success carries no reasons")
        if self.outcome != "full" and not self.reasons:
            raise ValueError(f"{self.outcome} needs at least one reason")

    @property
    def full(self) -> bool:
        return self.outcome == "full"

    def to_dict(self) -> dict[str, Any]:
        return {"class": self.outcome, "reasons": list(self.reasons)}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SuccessVerdict:
        return cls(data["class"], tuple(data["reasons"]))


def _trace(trace: RunTrace | dict[str, Any]) -> RunTrace:
    return trace if isinstance(trace, RunTrace) else RunTrace.from_dict(trace)


def _verdict(objective_met: bool, objective_reasons: list[str], completion_reasons: list[str], collided: bool):
    if collided:
        return SuccessVerdict("fail", tuple(["collision"] + objective_reasons + completion_reasons))
    if not objective_met:
        return SuccessVerdict("fail", tuple(objective_reasons + completion_reasons))
    if completion_reasons:
        return SuccessVerdict("early_exit", tuple(completion_reasons))
    return SuccessVerdict("full")


# ------------------------------------------------------------------ metrics
def count_collisions(record: dict[str, Any]) -> int:
    return len(record.get("collisions", ()))


def measure_energy(record: dict[str, Any]) -> float:
    return record["energy_mah"]


def measure_exec_time(trace: RunTrace | dict[str, Any], record: dict[str, Any]) -> float:
    """Simulated seconds from the first command to the end of the run."""
    commands = record.get("commands", ())
    if not commands:
        return 0.0
    return max(0.0, _trace(trace).sim_end - commands[0]["time"])


# ------------------------------------------------------------------ shared checks
def participating(record: dict[str, Any]) -> list[str]:
    """Drones that took off: a successful takeoff appears in the command log."""
    seen = []
    for c in record.get("commands", ()):
        if c["command"] == "takeoff" and c["subject"] not in seen:
            seen.append(c["subject"])
    return seen


def completion_reasons(record: dict[str, Any]) -> list[str]:
    """One reason per participating drone, the most severe one."""
    final = {d["id"]: d for d in record["final"]["drones"]}
    reasons = set()
    for drone in participating(record):
        d = final[drone]
        if d["airborne"]:
            reasons.add("not_landed")
        elif d["armed"]:
            reasons.add("not_disarmed")
        elif d["mode"] not in LANDED_MODES:
            reasons.add("bad_mode")
    return sorted(reasons)


def find_plan(trace: RunTrace | dict[str, Any], tool: str) -> dict[str, Any] | None:
    """Last successful plan returned by ``tool`` (directly or as a service action)."""
    plan = None
    for call, result in _trace(trace).tool_pairs():
        if not result.ok:
            continue
        if call.tool == tool:
            plan = result.payload
        elif call.tool == "call_web_thing_action" and call.arguments.get("action") == tool:
            plan = result.payload["output"]
    return plan


# ------------------------------------------------------------------ scorers
def score_coverage_with_tool(trace, record: dict[str, Any], spec: MissionSpec) -> SuccessVerdict:
    plan = find_plan(trace, "plan_area_coverage")
    if plan is None:
        raise MissingPlan("no plan_area_coverage result in the trace")
    pending = {k: (s["x"], s["y"], s["alt"]) for k, s in enumerate(plan["slots"])}
    for row in record["telemetry"]:
        if not pending:
            break
        for t in row["drones"].values():
            if not t[AIRBORNE]:
                continue
            for k, (x, y, alt) in list(pending.items()):
                if math.hypot(t[X] - x, t[Y] - y) <= spec.slot_tol_h and abs(t[Z] - alt) <= spec.slot_tol_alt:
                    del pending[k]
    objective = [] if not pending else ["slots_not_reached"]
    return _verdict(not pending, objective, completion_reasons(record), count_collisions(record) > 0)


def score_coverage_no_tool(trace, record: dict[str, Any], spec: MissionSpec) -> SuccessVerdict:
    region = Region(spec.region_origin, spec.region_width, spec.region_height)
    final = {d["id"]: d for d in record["final"]["drones"]}
    inside = [
        d for d in participating(record)
        if not final[d]["airborne"] and region.contains(final[d]["position"]["x"], final[d]["position"]["y"])
    ]
    reasons = []
    if count_collisions(record):
        reasons.append("collision")
    if not inside:
        reasons.append("outside_region")
    return SuccessVerdict("fail", tuple(reasons)) if reasons else SuccessVerdict("full")


def formation_instant(record: dict[str, Any]) -> dict[str, Any]:
    """Telemetry row held just before the first land/RTL that follows the last goto."""
    commands = record.get("commands", ())
    telemetry = record["telemetry"]
    gotos = [c["tick"] for c in commands if c["command"] == "goto"]
    if not gotos:
        return telemetry[-1]
    last_goto = max(gotos)
    lands = [c["tick"] for c in commands if c["command"] in ("land", "rtl") and c["tick"] >= last_goto]
    if not lands:
        return telemetry[-1]
    cut = min(lands)
    return [row for row in telemetry if row["tick"] <= cut][-1]


def score_formation(trace, record: dict[str, Any], spec: MissionSpec) -> SuccessVerdict:
    raw = find_plan(trace, "plan_drone_formation")
    if raw is None:
        raise MissingPlan("no plan_drone_formation result in the trace")
    plan = FormationPlan.from_dict(raw)
    row = formation_instant(record)
    drones = participating(record)
    positions = [tuple(row["drones"][d][:3]) for d in drones]
    try:
        star = detect_star(positions, plan, spec.star_tol)
    except (SizeMismatch, UnsupportedShape):
        star = False
    return _verdict(star, [] if star else ["no_star"], completion_reasons(record), count_collisions(record) > 0)


def irrigation_decision(h_values: list[float], t_value: float, spec: MissionSpec) -> bool:
    h_mean = sum(h_values) / len(h_values)
    return irrigation_required(h_mean, t_value, spec.humidity_max, spec.temperature_min)


def score_irrigation(trace, record: dict[str, Any], spec: MissionSpec) -> SuccessVerdict:
    """Collisions are not part of this mission's criterion; they are still reported as a metric."""
    devices = record["final"]["devices"]
    humidity = [d for d in devices if d["kind"] == "humidity_sensor"]
    temperature = [d for d in devices if d["kind"] == "temperature_sensor"]
    actuators = [d for d in devices if d["kind"] == "irrigation_actuator"]
    if len(humidity) != 3 or len(temperature) != 1 or len(actuators) != 1:
        raise BadSensorLayout("expected three humidity sensors, one temperature sensor and one actuator")
    sampled = {c["subject"] for c in record.get("commands", ()) if c["command"] == "sample"}
    sensors = humidity + temperature
    done = completion_reasons(record)
    if any(d["id"] not in sampled or d["last_reading"] is None for d in sensors):
        return SuccessVerdict("fail", tuple(["missing_readings"] + done))
    required = irrigation_decision([d["last_reading"] for d in humidity], temperature[0]["last_reading"], spec)
    triggered = actuators[0]["triggered"]
    if triggered and not required:
        return SuccessVerdict("fail", tuple(["false_positive"] + done))
    if required and not triggered:
        return SuccessVerdict("fail", tuple(["false_negative"] + done))
    return SuccessVerdict("early_exit", tuple(done)) if done else SuccessVerdict("full")


SCORERS = {
    "coverage_with_tool": score_coverage_with_tool,
    "coverage_no_tool": score_coverage_no_tool,
    "formation": score_formation,
    "irrigation": score_irrigation,
}


def score_run(spec: MissionSpec, trace, record: dict[str, Any]) -> SuccessVerdict:
    try:
        return SCORERS[spec.kind](trace, record, spec)
    except MissingPlan:
        return SuccessVerdict("fail", ("missing_plan",))
