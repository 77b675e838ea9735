"""Discrete-time swarm world standing in for a fleet of SITL vehicles.

All mutation goes through :class:`World` methods, which serialize on one
re-entrant lock.  Readers get plain dict snapshots.
"""

from __future__ import annotations

import json
import math
import random
import threading
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable

from swarmloop.errors import (
    DisarmWhileAirborne,
    InvalidMode,
    NonPositiveAltitude,
    NotAirborne,
    NotAnActuator,
    NotArmed,
    NotASensor,
    OutOfRange,
    UnknownDevice,
    UnknownDrone,
)

MODES = ("GUIDED", "LAND", "RTL", "STABILIZE")
DEVICE_KINDS = ("humidity_sensor", "temperature_sensor", "irrigation_actuator")
SENSOR_KINDS = ("humidity_sensor", "temperature_sensor")

_EPS = 1e-9


@dataclass
class WorldConfig:
    tick_dt: float = 0.1
    horiz_speed: float = 10.0
    climb_speed: float = 2.5
    arrival_tol: float = 1.0
    collision_horiz: float = 2.0
    collision_vert: float = 1.0
    drain_ground_armed: float = 0.2
    drain_hover: float = 1.0
    drain_cruise: float = 1.5
    capacity_mah: float = 5000.0
    region_origin: tuple[float, float] = (0.0, 0.0)
    region_width: float = 400.0
    region_height: float = 300.0
    rng_seed: int = 0
    n_drones: int = 10
    start_pitch: float = 5.0
    telemetry_stride_s: float = 1.0
    auto_disarm: bool = True
    # synthetic sensor generation
    humidity_target_range: tuple[float, float] = (47.0, 67.0)
    temperature_target_range: tuple[float, float] = (25.0, 35.0)
    humidity_threshold: float = 57.0
    temperature_threshold: float = 30.0
    humidity_spread: float = 4.0

    def __post_init__(self):
        self.region_origin = tuple(float(v) for v in self.region_origin)
        self.humidity_target_range = tuple(self.humidity_target_range)
        self.temperature_target_range = tuple(self.temperature_target_range)
        positive = (
            "tick_dt horiz_speed climb_speed arrival_tol collision_horiz collision_vert "
            "drain_ground_armed drain_hover drain_cruise capacity_mah region_width "
            "region_height start_pitch telemetry_stride_s"
        ).split()
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"WorldConfig.{name} must be strictly positive")
        if self.tick_dt > 1:
            raise ValueError("WorldConfig.tick_dt must lie in (0, 1]")
        if self.n_drones < 0:
            raise ValueError("WorldConfig.n_drones must be non-negative")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> WorldConfig:
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown WorldConfig keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str | Path) -> WorldConfig:
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        for key in ("region_origin", "humidity_target_range", "temperature_target_range"):
            data[key] = list(data[key])
        return data


@dataclass
class DroneState:
    id: str
    sysid: int
    position: list[float]
    home: list[float]
    mode: str = "STABILIZE"
    armed: bool = False
    battery_mah: float = 5000.0
    capacity_mah: float = 5000.0
    target: list[float] | None = None
    airborne: bool = False
    cruise_speed: float | None = None

    def snapshot(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "sysid": self.sysid,
            "position": {"x": self.position[0], "y": self.position[1], "z": self.position[2]},
            "home": {"x": self.home[0], "y": self.home[1], "z": self.home[2]},
            "mode": self.mode,
            "armed": self.armed,
            "battery_mah": self.battery_mah,
            "capacity_mah": self.capacity_mah,
            "target": None
            if self.target is None
            else {"x": self.target[0], "y": self.target[1], "z": self.target[2]},
            "airborne": self.airborne,
        }


@dataclass
class GroundDevice:
    id: str
    kind: str
    position: tuple[float, float]
    comm_range_m: float = 30.0
    value_seed: int = 0
    last_reading: float | None = None
    triggered: bool = False
    value: float | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in DEVICE_KINDS:
            raise ValueError(f"unknown device kind {self.kind!r}")
        if not self.comm_range_m > 0:
            raise ValueError("comm_range_m must be strictly positive")
        self.position = (float(self.position[0]), float(self.position[1]))

    def snapshot(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "kind": self.kind,
            "position": {"x": self.position[0], "y": self.position[1]},
            "comm_range_m": self.comm_range_m,
            "value_seed": self.value_seed,
            "last_reading": self.last_reading,
            "triggered": self.triggered,
        }


@dataclass(frozen=True)
class CollisionEvent:
    tick: int
    drone_a: str
    drone_b: str
    separation_m: float

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def irrigation_required(h_mean: float, t_mean: float, h_max: float = 57.0, t_min: float = 30.0) -> bool:
    return h_mean <= h_max or t_mean >= t_min


def _device_rng(value_seed: int, run_seed: int) -> random.Random:
    return random.Random((int(run_seed) << 32) ^ (int(value_seed) & 0xFFFFFFFF) ^ 0x5EED)


def generate_sensor_values(
    devices: Iterable[GroundDevice], run_seed: int, config: WorldConfig
) -> dict[str, float]:
    """Draw per-sensor synthetic values for one run.

    The run-level means are drawn by rejection from the configured ranges so
    that the irrigation rule holds with probability one half.  Individual
    humidity sensors scatter around the mean with offsets that sum to zero.
    """
    devices = list(devices)
    rng = random.Random(int(run_seed) * 7919 + 17)
    want_required = rng.random() < 0.5
    h_lo, h_hi = config.humidity_target_range
    t_lo, t_hi = config.temperature_target_range
    while True:
        h_mean = rng.uniform(h_lo, h_hi)
        t_mean = rng.uniform(t_lo, t_hi)
        required = irrigation_required(
            h_mean, t_mean, config.humidity_threshold, config.temperature_threshold
        )
        if required == want_required:
            break

    values: dict[str, float] = {}
    for kind, mean, clip in (
        ("humidity_sensor", h_mean, (0.0, 100.0)),
        ("temperature_sensor", t_mean, (-50.0, 70.0)),
    ):
        group = sorted((d for d in devices if d.kind == kind), key=lambda d: d.id)
        if not group:
            continue
        offsets = [
            _device_rng(d.value_seed, run_seed).uniform(-config.humidity_spread, config.humidity_spread)
            if kind == "humidity_sensor"
            else 0.0
            for d in group
        ]
        centre = sum(offsets) / len(offsets)
        for d, off in zip(group, offsets):
            values[d.id] = min(clip[1], max(clip[0], mean + off - centre))
    return values


class World:
    """Owner of all simulated vehicle and ground-device state."""

    def __init__(self, config: WorldConfig | None = None, devices: Iterable[GroundDevice] = ()):
        self.config = config or WorldConfig()
        self._lock = threading.RLock()
        self.tick_index = 0
        c = self.config
        self.drones: dict[str, DroneState] = {}
        for k in range(c.n_drones):
            start = [c.region_origin[0] + k * c.start_pitch, c.region_origin[1], 0.0]
            self.drones[f"uav-{k + 1}"] = DroneState(
                id=f"uav-{k + 1}",
                sysid=k + 1,
                position=list(start),
                home=list(start),
                battery_mah=c.capacity_mah,
                capacity_mah=c.capacity_mah,
            )
        self.devices: dict[str, GroundDevice] = {}
        for d in devices:
            if d.id in self.devices or d.id in self.drones:
                raise ValueError(f"duplicate id {d.id!r}")
            self.devices[d.id] = d
        for dev_id, value in generate_sensor_values(self.devices.values(), c.rng_seed, c).items():
            self.devices[dev_id].value = value
        self.collisions: list[CollisionEvent] = []
        self._contacts: set[tuple[str, str]] = set()
        self.command_log: list[dict[str, Any]] = []
        self.telemetry: list[dict[str, Any]] = []
        self._stride_ticks = max(1, round(c.telemetry_stride_s / c.tick_dt))
        self._listeners: list[Callable[[World], None]] = []
        self._initial = self._state_doc()
        self._record_telemetry()

    # ------------------------------------------------------------------ time
    @property
    def time(self) -> float:
        return self.tick_index * self.config.tick_dt

    def advance(self, seconds: float) -> list[CollisionEvent]:
        """Run enough ticks to cover ``seconds`` of simulated time."""
        n = max(1, round(seconds / self.config.tick_dt))
        events: list[CollisionEvent] = []
        for _ in range(n):
            events.extend(self.tick())
        return events

    def tick(self) -> list[CollisionEvent]:
        with self._lock:
            self.tick_index += 1
            for drone in self.drones.values():
                self._step_drone(drone)
            events = self._detect_collisions()
            if self.tick_index % self._stride_ticks == 0:
                self._record_telemetry()
            for listener in self._listeners:
                listener(self)
            return events

    def add_tick_listener(self, fn: Callable[[World], None]) -> None:
        """Call ``fn(world)`` at the end of every tick, under the world lock."""
        self._listeners.append(fn)

    def _step_drone(self, d: DroneState) -> None:
        c = self.config
        dt = c.tick_dt
        before = tuple(d.position)
        if d.armed:
            if d.mode == "GUIDED" and d.target is not None and (d.airborne or d.target[2] > 0):
                speed = d.cruise_speed or c.horiz_speed
                self._move_towards(d, d.target, speed, c.climb_speed)
            elif d.mode == "LAND" and d.airborne:
                d.position[2] = max(0.0, d.position[2] - c.climb_speed * dt)
            elif d.mode == "RTL" and d.airborne:
                dx = d.home[0] - d.position[0]
                dy = d.home[1] - d.position[1]
                if math.hypot(dx, dy) > _EPS:
                    goal = (d.home[0], d.home[1], d.position[2])
                    self._move_towards(d, goal, d.cruise_speed or c.horiz_speed, c.climb_speed)
                else:
                    d.position[2] = max(0.0, d.position[2] - c.climb_speed * dt)
        moved = tuple(d.position) != before

        if d.position[2] > 0:
            d.airborne = True
        elif d.airborne:
            # touchdown
            d.position[2] = 0.0
            d.airborne = False
            d.target = None
            if c.auto_disarm:
                d.armed = False

        if d.armed:
            if d.airborne:
                rate = c.drain_cruise if moved else c.drain_hover
            else:
                rate = c.drain_ground_armed
            d.battery_mah = max(0.0, d.battery_mah - rate * dt)
            if d.battery_mah == 0.0 and d.airborne and d.mode not in ("LAND", "RTL"):
                d.mode = "LAND"
                d.target = None
                self._log("failsafe_land", d.id, {}, None)

    def _move_towards(self, d: DroneState, goal, h_speed: float, v_speed: float) -> None:
        dt = self.config.tick_dt
        dx = goal[0] - d.position[0]
        dy = goal[1] - d.position[1]
        dist = math.hypot(dx, dy)
        step = h_speed * dt
        if dist <= step:
            d.position[0], d.position[1] = float(goal[0]), float(goal[1])
        else:
            d.position[0] += dx / dist * step
            d.position[1] += dy / dist * step
        dz = goal[2] - d.position[2]
        vstep = v_speed * dt
        if abs(dz) <= vstep:
            d.position[2] = float(goal[2])
        else:
            d.position[2] += math.copysign(vstep, dz)

    def _detect_collisions(self) -> list[CollisionEvent]:
        c = self.config
        flying = [d for d in self.drones.values() if d.airborne]
        current: set[tuple[str, str]] = set()
        events = []
        for i, a in enumerate(flying):
            for b in flying[i + 1 :]:
                horiz = math.hypot(a.position[0] - b.position[0], a.position[1] - b.position[1])
                vert = abs(a.position[2] - b.position[2])
                if horiz < c.collision_horiz and vert < c.collision_vert:
                    pair = (a.id, b.id) if a.id < b.id else (b.id, a.id)
                    current.add(pair)
                    if pair not in self._contacts:
                        sep = math.sqrt(horiz * horiz + vert * vert)
                        events.append(CollisionEvent(self.tick_index, pair[0], pair[1], sep))
        self._contacts = current
        self.collisions.extend(events)
        return events

    # -------------------------------------------------------------- commands
    def _drone(self, drone_id: str) -> DroneState:
        try:
            return self.drones[drone_id]
        except (KeyError, TypeError):
            raise UnknownDrone(f"no drone {drone_id!r}") from None

    def _device(self, device_id: str) -> GroundDevice:
        try:
            return self.devices[device_id]
        except (KeyError, TypeError):
            raise UnknownDevice(f"no device {device_id!r}") from None

    def _log(self, command: str, subject: str, args: dict[str, Any], tag: str | None) -> None:
        if not self.telemetry or self.telemetry[-1]["tick"] != self.tick_index:
            self._record_telemetry()
        self.command_log.append(
            {
                "tick": self.tick_index,
                "time": self.time,
                "command": command,
                "subject": subject,
                "args": args,
                "tag": tag,
            }
        )

    def cmd_arm(self, drone_id: str, tag: str | None = None) -> dict[str, Any]:
        with self._lock:
            d = self._drone(drone_id)
            d.armed = True
            self._log("arm", d.id, {}, tag)
            return {"armed": True}

    def cmd_disarm(self, drone_id: str, tag: str | None = None) -> dict[str, Any]:
        with self._lock:
            d = self._drone(drone_id)
            if d.airborne:
                raise DisarmWhileAirborne(f"{d.id} is airborne")
            d.armed = False
            d.target = None
            self._log("disarm", d.id, {}, tag)
            return {"armed": False}

    def cmd_takeoff(self, drone_id: str, alt: float, tag: str | None = None) -> dict[str, Any]:
        with self._lock:
            d = self._drone(drone_id)
            if not alt > 0:
                raise NonPositiveAltitude(f"takeoff altitude must be > 0, got {alt}")
            if not d.armed:
                raise NotArmed(f"{d.id} is not armed")
            d.mode = "GUIDED"
            d.target = [d.position[0], d.position[1], float(alt)]
            self._log("takeoff", d.id, {"alt": float(alt)}, tag)
            return {"mode": "GUIDED", "target": _xyz(d.target)}

    def cmd_goto(self, drone_id: str, x: float, y: float, alt: float, tag: str | None = None) -> dict[str, Any]:
        with self._lock:
            d = self._drone(drone_id)
            if not d.airborne:
                raise NotAirborne(f"{d.id} is not airborne")
            if d.mode != "GUIDED":
                raise InvalidMode(f"goto requires GUIDED, {d.id} is in {d.mode}")
            if not alt > 0:
                raise NonPositiveAltitude(f"goto altitude must be > 0, got {alt}")
            d.target = [float(x), float(y), float(alt)]
            self._log("goto", d.id, {"x": float(x), "y": float(y), "alt": float(alt)}, tag)
            return {"target": _xyz(d.target)}

    def cmd_land(self, drone_id: str, tag: str | None = None) -> dict[str, Any]:
        with self._lock:
            d = self._drone(drone_id)
            if not d.airborne:
                raise NotAirborne(f"{d.id} is not airborne")
            d.mode = "LAND"
            d.target = None
            self._log("land", d.id, {}, tag)
            return {"mode": "LAND"}

    def cmd_rtl(self, drone_id: str, tag: str | None = None) -> dict[str, Any]:
        with self._lock:
            d = self._drone(drone_id)
            if not d.airborne:
                raise NotAirborne(f"{d.id} is not airborne")
            d.mode = "RTL"
            d.target = None
            self._log("rtl", d.id, {}, tag)
            return {"mode": "RTL"}

    def set_mode(self, drone_id: str, mode: str, tag: str | None = None) -> dict[str, Any]:
        with self._lock:
            d = self._drone(drone_id)
            if mode not in MODES:
                raise InvalidMode(f"unknown mode {mode!r}")
            if mode != d.mode:
                if mode == "GUIDED" and d.airborne:
                    d.target = list(d.position)
                elif mode != "GUIDED":
                    d.target = None
                d.mode = mode
            # land/rtl through a mode switch are logged under their own name
            self._log(mode.lower() if mode in ("LAND", "RTL") else "set_mode", d.id, {"mode": mode}, tag)
            return {"mode": d.mode}

    def set_cruise_speed(self, drone_id: str, speed: float, tag: str | None = None) -> dict[str, Any]:
        with self._lock:
            d = self._drone(drone_id)
            if not 0 < speed <= self.config.horiz_speed:
                raise ValueError(f"cruise speed must lie in (0, {self.config.horiz_speed}]")
            d.cruise_speed = float(speed)
            self._log("set_cruise_speed", d.id, {"speed": float(speed)}, tag)
            return {"cruise_speed": d.cruise_speed}

    def cruise_speed(self, drone_id: str) -> float:
        with self._lock:
            d = self._drone(drone_id)
            return d.cruise_speed or self.config.horiz_speed

    # ---------------------------------------------------------------- sensing
    def read_telemetry(self, drone_id: str) -> dict[str, Any]:
        with self._lock:
            snap = self._drone(drone_id).snapshot()
            return {
                "position": snap["position"],
                "mode": snap["mode"],
                "armed": snap["armed"],
                "battery_mah": snap["battery_mah"],
                "airborne": snap["airborne"],
                "target": snap["target"],
            }

    def drone_snapshot(self, drone_id: str) -> dict[str, Any]:
        with self._lock:
            return self._drone(drone_id).snapshot()

    def device_snapshot(self, device_id: str) -> dict[str, Any]:
        with self._lock:
            return self._device(device_id).snapshot()

    def sample_sensor(self, device_id: str, requester_id: str, tag: str | None = None) -> float:
        with self._lock:
            dev = self._device(device_id)
            if dev.kind not in SENSOR_KINDS:
                raise NotASensor(f"{dev.id} is a {dev.kind}")
            d = self._drone(requester_id)
            dist = math.hypot(d.position[0] - dev.position[0], d.position[1] - dev.position[1])
            if dist > dev.comm_range_m:
                raise OutOfRange(
                    f"{d.id} is {dist:.2f} m from {dev.id}, range is {dev.comm_range_m} m"
                )
            dev.last_reading = dev.value
            self._log("sample", dev.id, {"requester": d.id}, tag)
            return dev.value

    def trigger_irrigation(self, actuator_id: str, tag: str | None = None) -> dict[str, Any]:
        with self._lock:
            dev = self._device(actuator_id)
            if dev.kind != "irrigation_actuator":
                raise NotAnActuator(f"{dev.id} is a {dev.kind}")
            dev.triggered = True
            self._log("trigger", dev.id, {}, tag)
            return {"triggered": True}

    def energy_consumed(self) -> float:
        with self._lock:
            return sum(d.capacity_mah - d.battery_mah for d in self.drones.values())

    # ---------------------------------------------------------------- records
    def _record_telemetry(self) -> None:
        self.telemetry.append(
            {
                "tick": self.tick_index,
                "time": self.time,
                "drones": {
                    d.id: [
                        d.position[0],
                        d.position[1],
                        d.position[2],
                        d.mode,
                        d.armed,
                        d.airborne,
                        d.battery_mah,
                    ]
                    for d in self.drones.values()
                },
            }
        )

    def _state_doc(self) -> dict[str, Any]:
        return {
            "tick": self.tick_index,
            "time": self.time,
            "drones": [d.snapshot() for d in self.drones.values()],
            "devices": [dev.snapshot() for dev in self.devices.values()],
        }

    def export(self) -> dict[str, Any]:
        """Full JSON-ready record used for scoring and persistence."""
        with self._lock:
            return {
                "config": self.config.to_dict(),
                "initial": self._initial,
                "final": self._state_doc(),
                "energy_mah": self.energy_consumed(),
                "collisions": [e.to_dict() for e in self.collisions],
                "commands": [dict(c) for c in self.command_log],
                "telemetry": list(self.telemetry),
            }

    def write_jsonl(self, collisions_path: str | Path, telemetry_path: str | Path) -> None:
        with self._lock:
            with open(collisions_path, "w") as fh:
                for e in self.collisions:
                    fh.write(json.dumps(e.to_dict(), sort_keys=True) + "\n")
            with open(telemetry_path, "w") as fh:
                for row in self.telemetry:
                    fh.write(json.dumps(row, sort_keys=True) + "\n")


def _xyz(v) -> dict[str, float]:
    return {"x": v[0], "y": v[1], "z": v[2]}


class SimClock:
    """Simulated clock: sleeping advances the world."""

    def __init__(self, world: World):
        self._world = world

    def now(self) -> float:
        return self._world.time

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            self._world.advance(seconds)


class RealtimeDriver:
    """Background thread ticking a world against the wall clock.

    Used when an external client drives the gateway (stdio / HTTP) and no
    simulated clock owner exists.
    """

    def __init__(self, world: World, speedup: float = 1.0):
        self.world = world
        self.speedup = speedup
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)

    def start(self) -> RealtimeDriver:
        self._thread.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        self._thread.join(timeout=2)

    def _run(self) -> None:
        period = self.world.config.tick_dt / self.speedup
        next_t = time.monotonic()
        while not self._stop.is_set():
            self.world.tick()
            next_t += period
            self._stop.wait(max(0.0, next_t - time.monotonic()))

    def now(self) -> float:
        return self.world.time

    def sleep(self, seconds: float) -> None:
        time.sleep(seconds / self.speedup)
