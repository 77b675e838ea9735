"""Geometric formation slots and star detection."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from swarmloop.errors import InvalidSpacing, SizeMismatch, UnsupportedShape
from swarmloop.planners.assignment import assign_slots, distance

SHAPES = ("line", "star", "circle")
STAR_INNER_RATIO = 0.5
DEFAULT_STAR_TOL = 2.0


@dataclass
class FormationPlan:
    shape: str
    center: tuple[float, float]
    orientation: float
    spacing: float
    slots: list[tuple[float, float, float]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "shape": self.shape,
            "center": {"x": self.center[0], "y": self.center[1]},
            "orientation": self.orientation,
            "spacing": self.spacing,
            "slots": [{"x": x, "y": y, "alt": a} for x, y, a in self.slots],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> FormationPlan:
        return cls(
            shape=data["shape"],
            center=(data["center"]["x"], data["center"]["y"]),
            orientation=data["orientation"],
            spacing=data["spacing"],
            slots=[(s["x"], s["y"], s["alt"]) for s in data["slots"]],
        )


def min_pairwise_distance(points: Sequence[Sequence[float]]) -> float:
    if len(points) < 2:
        return math.inf
    return min(distance(p, q) for p, q in itertools.combinations(points, 2))


def _unit_star(n: int) -> list[tuple[float, float]]:
    # ceil(n/2)-pointed star: vertices alternate outer radius 1 and inner radius 1/2
    points = math.ceil(n / 2)
    verts = []
    for k in range(2 * points):
        ang = math.pi * k / points
        r = 1.0 if k % 2 == 0 else STAR_INNER_RATIO
        verts.append((r * math.cos(ang), r * math.sin(ang)))
    return verts[:n]


def plan_drone_formation(
    shape: str,
    center: Sequence[float],
    orientation: float,
    spacing: float,
    n: int,
    altitude: float,
) -> FormationPlan:
    """Slots for ``n`` drones around ``center``; ``orientation`` in radians."""
    if shape not in SHAPES:
        raise UnsupportedShape(f"shape must be one of {SHAPES}, got {shape!r}")
    if not spacing > 0:
        raise InvalidSpacing(f"spacing must be > 0, got {spacing}")
    if n < 1:
        raise ValueError("need at least one slot")
    cx, cy = float(center[0]), float(center[1])

    if shape == "line":
        local = [((k - (n - 1) / 2) * spacing, 0.0) for k in range(n)]
    elif n == 1:
        local = [(0.0, 0.0)]
    elif shape == "circle":
        radius = spacing / (2 * math.sin(math.pi / n))
        local = [
            (radius * math.cos(2 * math.pi * k / n), radius * math.sin(2 * math.pi * k / n))
            for k in range(n)
        ]
    else:
        unit = _unit_star(n)
        scale = spacing / min_pairwise_distance(unit)
        local = [(scale * x, scale * y) for x, y in unit]

    c, s = math.cos(orientation), math.sin(orientation)
    slots = [(cx + c * x - s * y, cy + s * x + c * y, float(altitude)) for x, y in local]
    return FormationPlan(shape, (cx, cy), float(orientation), float(spacing), slots)


def detect_star(final_positions, plan: FormationPlan, tol: float = DEFAULT_STAR_TOL) -> bool:
    """True iff every position sits within ``tol`` of a distinct slot.

    Positions with two coordinates are matched horizontally, three
    coordinates against the slot altitude as well.
    """
    if plan.shape != "star":
        raise UnsupportedShape(f"detect_star needs a star plan, got {plan.shape!r}")
    if len(final_positions) != len(plan.slots):
        raise SizeMismatch(f"{len(final_positions)} positions vs {len(plan.slots)} slots")
    if not final_positions:
        return True
    match = assign_slots(final_positions, plan.slots, objective="minimize")
    worst = max(distance(p, plan.slots[j]) for p, j in zip(final_positions, match.permutation))
    return worst <= tol
