"""Run missions, score them and aggregate batches."""

from __future__ import annotations

import json
import logging
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from swarmloop.agent import Reasoner, RunTrace, ScriptedReasoner, remote_reasoner, run_mission
from swarmloop.errors import ReasonerFailure
from swarmloop.harness.mission import MissionSpec, build_environment
from swarmloop.harness.scoring import (
    SuccessVerdict,
    count_collisions,
    measure_energy,
    measure_exec_time,
    score_run,
)

log = logging.getLogger(__name__)

ReasonerFactory = Callable[[int], Reasoner]


@dataclass
class RunReport:
    index: int
    world_seed: int
    reasoner_seed: int
    verdict: SuccessVerdict
    exec_time_s: float
    energy_mah: float
    collisions: int
    tokens: int
    iterations: int
    termination: str
    trace_file: str | None = None
    wall_time_s: float = 0.0

    def __post_init__(self):
        if self.collisions < 0:
            raise ValueError("collisions cannot be negative")

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "world_seed": self.world_seed,
            "reasoner_seed": self.reasoner_seed,
            "verdict": self.verdict.to_dict(),
            "exec_time_s": self.exec_time_s,
            "energy_mah": self.energy_mah,
            "collisions": self.collisions,
            "tokens": self.tokens,
            "iterations": self.iterations,
            "termination": self.termination,
            "trace_file": self.trace_file,
            "wall_time_s": self.wall_time_s,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RunReport:
        data = dict(data)
        data["verdict"] = SuccessVerdict.from_dict(data["verdict"])
        return cls(**data)


def _stats(values: list[float]) -> dict[str, float] | None:
    if not values:
        return None
    return {"mean": statistics.fmean(values), "std": statistics.pstdev(values) if len(values) > 1 else 0.0}


@dataclass
class BatchReport:
    mission: dict[str, Any]
    runs: list[RunReport]

    @property
    def n_full(self) -> int:
        return sum(r.verdict.full for r in self.runs)

    @property
    def success_rate(self) -> float:
        return self.n_full / len(self.runs) if self.runs else 0.0

    def summary(self) -> dict[str, Any]:
        """Means and standard deviations over full successes only."""
        full = [r for r in self.runs if r.verdict.full]
        return {
            "exec_time_s": _stats([r.exec_time_s for r in full]),
            "energy_mah": _stats([r.energy_mah for r in full]),
            "tokens": _stats([float(r.tokens) for r in full]),
            "iterations": _stats([float(r.iterations) for r in full]),
        }

    def to_dict(self) -> dict[str, Any]:
        return {
            "mission": self.mission,
            "n_runs": len(self.runs),
            "n_full": self.n_full,
            "n_early_exit": sum(r.verdict.outcome == "early_exit" for r in self.runs),
            "success_rate": self.success_rate,
            "collisions_total": sum(r.collisions for r in self.runs),
            "full_success_stats": self.summary(),
            "runs": [r.to_dict() for r in self.runs],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> BatchReport:
        return cls(data["mission"], [RunReport.from_dict(r) for r in data["runs"]])

    def table(self) -> str:
        fmt = lambda s: "N/A" if s is None else f"{s['mean']:.1f} ± {s['std']:.1f}"  # noqa: E731
        stats = self.summary()
        lines = [
            f"mission {self.mission.get('kind')}  runs {len(self.runs)}  success {self.success_rate:.2f}",
            f"{'run':>4} {'class':<11} {'time_s':>8} {'energy':>9} {'tokens':>8} {'coll':>4} {'iter':>4}  reasons",
        ]
        for r in self.runs:
            lines.append(
                f"{r.index:>4} {r.verdict.outcome:<11} {r.exec_time_s:>8.1f} {r.energy_mah:>9.1f} "
                f"{r.tokens:>8} {r.collisions:>4} {r.iterations:>4}  {','.join(r.verdict.reasons)}"
            )
        lines.append(
            f"full-success means: time {fmt(stats['exec_time_s'])} s, energy {fmt(stats['energy_mah'])} mAh, "
            f"tokens {fmt(stats['tokens'])}"
        )
        return "\n".join(lines)


@dataclass
class RunOutcome:
    spec: MissionSpec
    trace: RunTrace
    record: dict[str, Any]
    verdict: SuccessVerdict

    def to_document(self) -> dict[str, Any]:
        return {"mission": self.spec.to_dict(), "trace": self.trace.to_dict(), "world": self.record}


def execute_run(spec: MissionSpec, reasoner: Reasoner) -> RunOutcome:
    """One mission run; a broken reasoner yields a fail verdict with reason run_error."""
    env = build_environment(spec)
    try:
        trace = run_mission(spec.mission_id, spec.user_prompt(), reasoner, env.gateway, spec.limits, env.clock)
        verdict = score_run(spec, trace, env.world.export())
    except ReasonerFailure as exc:
        trace = exc.trace or RunTrace(spec.mission_id, termination="error", detail=exc.detail)
        verdict = SuccessVerdict("fail", ("run_error",))
    return RunOutcome(spec, trace, env.world.export(), verdict)


def make_reasoner_factory(kind: str, mission_kind: str, **remote_kwargs: Any) -> ReasonerFactory:
    if kind == "scripted":
        return lambda seed: ScriptedReasoner(mission_kind, seed)
    if kind == "remote":
        return lambda seed: remote_reasoner(seed=seed, **remote_kwargs)
    raise ValueError(f"unknown reasoner {kind!r}")


def _report(i: int, outcome: RunOutcome, reasoner_seed: int, trace_file: str | None) -> RunReport:
    return RunReport(
        index=i,
        world_seed=outcome.spec.seed,
        reasoner_seed=reasoner_seed,
        verdict=outcome.verdict,
        exec_time_s=measure_exec_time(outcome.trace, outcome.record),
        energy_mah=measure_energy(outcome.record),
        collisions=count_collisions(outcome.record),
        tokens=int(outcome.trace.ledger.get("T_run", 0)),
        iterations=len(outcome.trace.iterations),
        termination=outcome.trace.termination,
        trace_file=trace_file,
        wall_time_s=outcome.trace.wall_time_s,
    )


def write_json(path: Path, data: Any) -> None:
    path.write_text(json.dumps(data, sort_keys=True, separators=(",", ":")))


def run_batch(
    spec: MissionSpec,
    reasoner: ReasonerFactory | str,
    n_runs: int,
    base_seed: int = 0,
    out_dir: str | Path | None = None,
    parallel: int = 0,
) -> BatchReport:
    """Repeat a mission from identical initial conditions.

    Every run uses world seed ``base_seed``; run ``i`` gets reasoner seed
    ``base_seed + i``.  With ``out_dir`` each run is written to
    ``run_XXX.json`` next to a ``batch.json`` summary.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    factory = make_reasoner_factory(reasoner, spec.kind) if isinstance(reasoner, str) else reasoner
    run_spec = spec.with_seed(base_seed)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    def one(i: int) -> RunReport:
        seed = base_seed + i
        try:
            outcome = execute_run(run_spec, factory(seed))
        except Exception as exc:  # an unusable reasoner still yields a report
            log.exception("run %d failed before starting", i)
            trace = RunTrace(run_spec.mission_id, termination="error", detail=repr(exc))
            outcome = RunOutcome(run_spec, trace, build_environment(run_spec).world.export(),
                                 SuccessVerdict("fail", ("run_error",)))
        name = None
        if out is not None:
            name = f"run_{i:03d}.json"
            write_json(out / name, outcome.to_document())
        return _report(i, outcome, seed, name)

    if parallel and parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            runs = list(pool.map(one, range(n_runs)))
    else:
        runs = [one(i) for i in range(n_runs)]
    batch = BatchReport(spec.to_dict() | {"seed": base_seed}, runs)
    if out is not None:
        (out / "batch.json").write_text(json.dumps(batch.to_dict(), sort_keys=True, indent=1))
    return batch


def rescore(document: dict[str, Any]) -> SuccessVerdict:
    """Verdict for a persisted run document."""
    spec = MissionSpec.from_dict(document["mission"])
    if document["trace"]["termination"] == "error":
        return SuccessVerdict("fail", ("run_error",))
    return score_run(spec, document["trace"], document["world"])
