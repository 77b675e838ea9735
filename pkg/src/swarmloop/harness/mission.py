"""Mission definitions and environment assembly."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any

from swarmloop.agent import HelperConfig, HelperSuite, Limits, PromptArtifact, load_user
from swarmloop.directory import ThingDirectory
from swarmloop.errors import BadSensorLayout, UnsupportedMission
from swarmloop.gateway import Gateway, GatewayConfig
from swarmloop.sim import GroundDevice, SimClock, World, WorldConfig
from swarmloop.wot import Servient

MISSION_KINDS = ("coverage_with_tool", "coverage_no_tool", "formation", "irrigation")
CLI_NAMES = {
    "coverage": "coverage_with_tool",
    "coverage-no-tool": "coverage_no_tool",
    "formation": "formation",
    "irrigation": "irrigation",
}
PLANNING_TOOLS = ("plan_area_coverage", "plan_drone_formation")
SERVICES = ("coverage-planner", "formation-planner")


@dataclass(frozen=True)
class DeviceSpec:
    id: str
    kind: str
    x: float
    y: float
    comm_range: float = 30.0

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


DEFAULT_DEVICES = (
    DeviceSpec("humidity-1", "humidity_sensor", 100.0, 100.0),
    DeviceSpec("humidity-2", "humidity_sensor", 300.0, 100.0),
    DeviceSpec("humidity-3", "humidity_sensor", 200.0, 250.0),
    DeviceSpec("temperature-1", "temperature_sensor", 350.0, 250.0),
    DeviceSpec("irrigation-1", "irrigation_actuator", 200.0, 150.0),
)


@dataclass(frozen=True)
class MissionSpec:
    kind: str
    n_drones: int = 10
    region_origin: tuple[float, float] = (0.0, 0.0)
    region_width: float = 400.0
    region_height: float = 300.0
    fov_deg: float = 90.0
    alt_min: float = 10.0
    alt_max: float = 120.0
    formation_shape: str = "star"
    formation_spacing: float = 5.0
    formation_center: tuple[float, float] = (200.0, 150.0)
    formation_orientation_deg: float = 0.0
    formation_altitude: float = 20.0
    formation_objective: str = "maximize"
    devices: tuple[DeviceSpec, ...] = DEFAULT_DEVICES
    humidity_max: float = 57.0
    temperature_min: float = 30.0
    planner: bool = True
    helpers: bool = False
    seed: int = 0
    world_overrides: dict[str, Any] = field(default_factory=dict)
    # scoring tolerances
    slot_tol_h: float = 2.0
    slot_tol_alt: float = 2.0
    star_tol: float = 2.0
    # loop limits
    max_iterations: int = 80
    sim_timeout: float = 1800.0
    iteration_dt: float = 5.0

    def __post_init__(self):
        if self.kind not in MISSION_KINDS:
            raise UnsupportedMission(f"unknown mission kind {self.kind!r}")
        if self.kind == "coverage_no_tool" and self.planner:
            object.__setattr__(self, "planner", False)
        object.__setattr__(self, "region_origin", tuple(float(v) for v in self.region_origin))
        object.__setattr__(self, "formation_center", tuple(float(v) for v in self.formation_center))
        object.__setattr__(
            self, "devices", tuple(d if isinstance(d, DeviceSpec) else DeviceSpec(**d) for d in self.devices)
        )
        if self.n_drones < 1:
            raise ValueError("a mission needs at least one drone")
        if self.kind == "irrigation":
            kinds = [d.kind for d in self.devices]
            if kinds.count("humidity_sensor") != 3 or kinds.count("temperature_sensor") != 1:
                raise BadSensorLayout("irrigation needs three humidity sensors and one temperature sensor")

    @property
    def mission_id(self) -> str:
        return f"{self.kind}-seed{self.seed}"

    @property
    def limits(self) -> Limits:
        return Limits(self.max_iterations, self.sim_timeout, self.iteration_dt)

    def with_seed(self, seed: int) -> MissionSpec:
        return dataclasses.replace(self, seed=seed)

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        out["region_origin"] = list(self.region_origin)
        out["formation_center"] = list(self.formation_center)
        out["devices"] = [d.to_dict() for d in self.devices]
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> MissionSpec:
        known = {f.name for f in dataclasses.fields(cls)}
        kwargs = {k: v for k, v in data.items() if k in known}
        kwargs["devices"] = tuple(DeviceSpec(**d) for d in kwargs.get("devices", [d.to_dict() for d in DEFAULT_DEVICES]))
        return cls(**kwargs)

    # ----------------------------------------------------------- derived
    def world_config(self) -> WorldConfig:
        base = {
            "rng_seed": self.seed,
            "n_drones": self.n_drones,
            "region_origin": self.region_origin,
            "region_width": self.region_width,
            "region_height": self.region_height,
            "humidity_threshold": self.humidity_max,
            "temperature_threshold": self.temperature_min,
        }
        return WorldConfig.from_dict({**base, **self.world_overrides})

    def mission_devices(self) -> list[GroundDevice]:
        if self.kind != "irrigation":
            return []
        return [GroundDevice(d.id, d.kind, (d.x, d.y), d.comm_range, value_seed=i) for i, d in enumerate(self.devices)]

    def parameters(self) -> dict[str, Any]:
        if self.kind == "formation":
            return {
                "shape": self.formation_shape,
                "center_x": self.formation_center[0],
                "center_y": self.formation_center[1],
                "orientation_deg": self.formation_orientation_deg,
                "spacing": self.formation_spacing,
                "altitude": self.formation_altitude,
            }
        if self.kind == "irrigation":
            return {"humidity_max": self.humidity_max, "temperature_min": self.temperature_min}
        return {}

    def mission_info(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "region": {
                "x": self.region_origin[0],
                "y": self.region_origin[1],
                "width": self.region_width,
                "height": self.region_height,
            },
            "altitude_bounds": {"min": self.alt_min, "max": self.alt_max},
            "camera_fov_deg": self.fov_deg,
            "parameters": self.parameters(),
        }

    def user_prompt(self) -> PromptArtifact:
        p = self.parameters()
        return load_user(
            self.kind,
            n_drones=self.n_drones,
            shape=p.get("shape", ""),
            center_x=p.get("center_x", ""),
            center_y=p.get("center_y", ""),
            spacing=p.get("spacing", ""),
            altitude=p.get("altitude", ""),
            humidity_max=self.humidity_max,
            temperature_min=self.temperature_min,
        )


@dataclass
class Environment:
    spec: MissionSpec
    world: World
    servient: Servient
    directory: ThingDirectory
    gateway: Gateway
    clock: SimClock


def build_environment(spec: MissionSpec) -> Environment:
    world = World(spec.world_config(), spec.mission_devices())
    servient = Servient(world, spec.mission_info(), spec.formation_objective)
    directory = ThingDirectory(clock=lambda: world.time)
    for td in servient.expose_world(SERVICES if spec.planner else (), mission=True):
        directory.register(td)
    config = GatewayConfig(planning_tools=PLANNING_TOOLS if spec.planner else (), helpers=spec.helpers)
    gateway = Gateway(servient, directory, config)
    clock = SimClock(world)
    if spec.helpers:
        gateway.attach_helpers(HelperSuite(gateway, clock, HelperConfig(arrival_tol=world.config.arrival_tol)))
    return Environment(spec, world, servient, directory, gateway, clock)
