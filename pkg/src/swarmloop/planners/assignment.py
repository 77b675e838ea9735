"""Exact drone-to-slot assignment with lexicographic tie-breaking."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from swarmloop.errors import SizeMismatch

MAX_ASSIGNMENT = 64


@dataclass
class AssignmentResult:
    permutation: list[int]
    total_displacement: float
    objective: str

    def to_dict(self):
        return {
            "permutation": list(self.permutation),
            "total_displacement": self.total_displacement,
            "objective": self.objective,
        }


def distance(p: Sequence[float], q: Sequence[float]) -> float:
    k = min(len(p), len(q))
    return math.sqrt(sum((p[i] - q[i]) ** 2 for i in range(k)))


def distance_matrix(positions, slots) -> np.ndarray:
    return np.array([[distance(p, s) for s in slots] for p in positions], dtype=float)


def _optimum(cost: np.ndarray) -> float:
    if cost.size == 0:
        return 0.0
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum())


def assign_slots(positions, slots, objective: str = "maximize") -> AssignmentResult:
    """Bijection drones -> slots extremizing the summed Euclidean distance.

    The optimum is exact.  Among optimal bijections the lexicographically
    smallest permutation wins: slots are fixed drone by drone, each time
    taking the lowest slot index that still admits an optimal completion.
    """
    n = len(positions)
    if n != len(slots):
        raise SizeMismatch(f"{n} positions vs {len(slots)} slots")
    if n > MAX_ASSIGNMENT:
        raise SizeMismatch(f"at most {MAX_ASSIGNMENT} drones supported, got {n}")
    if objective not in ("maximize", "minimize"):
        raise ValueError(f"objective must be 'maximize' or 'minimize', got {objective!r}")
    dist = distance_matrix(positions, slots)
    if n == 0:
        return AssignmentResult([], 0.0, objective)
    cost = -dist if objective == "maximize" else dist
    target = _optimum(cost)
    tol = 1e-9 * (1.0 + abs(target))

    perm: list[int] = []
    free = list(range(n))
    spent = 0.0
    for i in range(n):
        rest_rows = list(range(i + 1, n))
        for j in free:
            others = [s for s in free if s != j]
            sub = cost[np.ix_(rest_rows, others)] if rest_rows else np.zeros((0, 0))
            if spent + cost[i, j] + _optimum(sub) <= target + tol:
                perm.append(j)
                spent += cost[i, j]
                free.remove(j)
                break
        else:  # pragma: no cover - numerical safety net
            raise RuntimeError("tie-break search lost the optimum")
    total = float(sum(dist[i, perm[i]] for i in range(n)))
    return AssignmentResult(perm, total, objective)
