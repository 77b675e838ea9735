from swarmloop.wot.schema import AffordanceSchema, FieldSpec, validate, validate_field
from swarmloop.wot.servient import ActionAck, Servient
from swarmloop.wot.things import (
    ActionAffordance,
    PropertyAffordance,
    ThingDescription,
    build_actuator_td,
    build_mission_td,
    build_sensor_td,
    build_service_td,
    build_uav_td,
    thing_id,
)

__all__ = [
    "ActionAck",
    "ActionAffordance",
    "AffordanceSchema",
    "FieldSpec",
    "PropertyAffordance",
    "Servient",
    "ThingDescription",
    "build_actuator_td",
    "build_mission_td",
    "build_sensor_td",
    "build_service_td",
    "build_uav_td",
    "thing_id",
    "validate",
    "validate_field",
]
