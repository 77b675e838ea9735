from swarmloop.sim.world import (
    DEVICE_KINDS,
    MODES,
    SENSOR_KINDS,
    CollisionEvent,
    DroneState,
    GroundDevice,
    RealtimeDriver,
    SimClock,
    World,
    WorldConfig,
    generate_sensor_values,
    irrigation_required,
)

__all__ = [
    "DEVICE_KINDS",
    "MODES",
    "SENSOR_KINDS",
    "CollisionEvent",
    "DroneState",
    "GroundDevice",
    "RealtimeDriver",
    "SimClock",
    "World",
    "WorldConfig",
    "generate_sensor_values",
    "irrigation_required",
]
