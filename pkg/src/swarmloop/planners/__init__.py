from swarmloop.planners.assignment import AssignmentResult, assign_slots, distance
from swarmloop.planners.coverage import (
    CameraModel,
    CoveragePlan,
    Region,
    choose_grid,
    coverage_ratio,
    footprint_radius,
    plan_area_coverage,
)
from swarmloop.planners.formation import (
    FormationPlan,
    detect_star,
    min_pairwise_distance,
    plan_drone_formation,
)

__all__ = [
    "AssignmentResult",
    "CameraModel",
    "CoveragePlan",
    "FormationPlan",
    "Region",
    "assign_slots",
    "choose_grid",
    "coverage_ratio",
    "detect_star",
    "distance",
    "footprint_radius",
    "min_pairwise_distance",
    "plan_area_coverage",
    "plan_drone_formation",
]
