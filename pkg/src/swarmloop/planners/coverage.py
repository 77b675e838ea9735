"""Area-coverage planning over a rectangular region with a downward camera."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from swarmloop.errors import InvalidAltitudeBounds, InvalidFov, InvalidRegion


@dataclass(frozen=True)
class Region:
    origin: tuple[float, float] = (0.0, 0.0)
    width: float = 400.0
    height: float = 300.0

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise InvalidRegion(f"region must have positive size, got {self.width}x{self.height}")

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, x: float, y: float, strict: bool = True) -> bool:
        ox, oy = self.origin
        if strict:
            return ox < x < ox + self.width and oy < y < oy + self.height
        return ox <= x <= ox + self.width and oy <= y <= oy + self.height

    def to_dict(self) -> dict[str, float]:
        return {"x": self.origin[0], "y": self.origin[1], "width": self.width, "height": self.height}


@dataclass(frozen=True)
class CameraModel:
    fov: float = math.pi / 2  # full angle, radians

    def __post_init__(self):
        _check_fov(self.fov)


@dataclass
class CoveragePlan:
    rows: int
    cols: int
    cell_w: float
    cell_h: float
    r_cell: float
    altitude: float
    clamped: bool
    slots: list[tuple[float, float, float]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "cell_w": self.cell_w,
            "cell_h": self.cell_h,
            "r_cell": self.r_cell,
            "altitude": self.altitude,
            "clamped": self.clamped,
            "slots": [{"x": x, "y": y, "alt": a} for x, y, a in self.slots],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> CoveragePlan:
        return cls(
            rows=data["rows"],
            cols=data["cols"],
            cell_w=data["cell_w"],
            cell_h=data["cell_h"],
            r_cell=data["r_cell"],
            altitude=data["altitude"],
            clamped=data["clamped"],
            slots=[(s["x"], s["y"], s["alt"]) for s in data["slots"]],
        )


def _check_fov(fov: float) -> None:
    if not (0 < fov < math.pi):
        raise InvalidFov(f"fov must lie in (0, pi) radians, got {fov}")


def footprint_radius(h: float, fov: float) -> float:
    """Ground radius seen from altitude ``h`` with full field of view ``fov``."""
    _check_fov(fov)
    if h < 0:
        raise ValueError(f"altitude must be non-negative, got {h}")
    return h * math.tan(fov / 2)


def _altitude_of(drone: Any) -> float | None:
    """Altitude of an airborne drone given as DroneState or snapshot mapping."""
    if isinstance(drone, Mapping):
        if not drone.get("airborne", True):
            return None
        pos = drone.get("position", drone)
        return float(pos["z"]) if isinstance(pos, Mapping) else float(pos[2])
    if not getattr(drone, "airborne", True):
        return None
    return float(drone.position[2])


def coverage_ratio(drones: Iterable[Any], fov: float, region: Region) -> float:
    """Sum of footprint disc areas over the region area.

    Overlap is deliberately double counted, so the value can exceed 1.
    """
    total = 0.0
    for d in drones:
        h = _altitude_of(d)
        if h is None:
            continue
        r = footprint_radius(max(h, 0.0), fov)
        total += math.pi * r * r
    return total / region.area


def choose_grid(n: int, width: float, height: float) -> tuple[int, int]:
    """Pick (rows, cols) for ``n`` drones with cells as close to square as possible.

    Candidates cover at least ``n`` cells with fewer than ``min(rows, cols)``
    spare cells.  Ties prefer fewer cells, then fewer rows.
    """
    if n < 1:
        raise ValueError("need at least one drone")
    best = None
    for rows in range(1, n + 1):
        for cols in range(1, n + 1):
            cells = rows * cols
            if cells < n or cells - n >= min(rows, cols):
                continue
            aspect = (width / cols) / (height / rows)
            key = (abs(aspect - 1.0), cells, rows)
            if best is None or key < best[0]:
                best = (key, rows, cols)
    return best[1], best[2]


def plan_area_coverage(
    region: Region,
    n: int,
    camera: CameraModel | float,
    alt_min: float,
    alt_max: float,
) -> CoveragePlan:
    fov = camera.fov if isinstance(camera, CameraModel) else float(camera)
    _check_fov(fov)
    if not isinstance(region, Region):
        raise InvalidRegion("region must be a Region")
    if not (0 < alt_min <= alt_max):
        raise InvalidAltitudeBounds(f"need 0 < alt_min <= alt_max, got [{alt_min}, {alt_max}]")
    if n < 1:
        raise ValueError("need at least one drone")

    rows, cols = choose_grid(n, region.width, region.height)
    cell_w = region.width / cols
    cell_h = region.height / rows
    r_cell = math.sqrt(cell_w**2 + cell_h**2) / 2
    raw = r_cell / math.tan(fov / 2)
    altitude = float(min(max(raw, alt_min), alt_max))
    ox, oy = region.origin
    slots = []
    for r in range(rows):
        for c in range(cols):
            if len(slots) == n:
                break
            slots.append((ox + (c + 0.5) * cell_w, oy + (r + 0.5) * cell_h, altitude))
    return CoveragePlan(
        rows=rows,
        cols=cols,
        cell_w=cell_w,
        cell_h=cell_h,
        r_cell=r_cell,
        altitude=altitude,
        clamped=altitude != raw,
        slots=slots,
    )
