from swarmloop.harness.batch import (
    BatchReport,
    RunOutcome,
    RunReport,
    execute_run,
    make_reasoner_factory,
    rescore,
    run_batch,
)
from swarmloop.harness.mission import (
    CLI_NAMES,
    DEFAULT_DEVICES,
    DeviceSpec,
    Environment,
    MissionSpec,
    build_environment,
)
from swarmloop.harness.scoring import (
    SuccessVerdict,
    count_collisions,
    formation_instant,
    irrigation_decision,
    measure_energy,
    measure_exec_time,
    participating,
    score_coverage_no_tool,
    score_coverage_with_tool,
    score_formation,
    score_irrigation,
    score_run,
)

__all__ = [
    "BatchReport",
    "CLI_NAMES",
    "DEFAULT_DEVICES",
    "DeviceSpec",
    "Environment",
    "MissionSpec",
    "RunOutcome",
    "RunReport",
    "SuccessVerdict",
    "build_environment",
    "count_collisions",
    "execute_run",
    "formation_instant",
    "irrigation_decision",
    "make_reasoner_factory",
    "measure_energy",
    "measure_exec_time",
    "participating",
    "rescore",
    "run_batch",
    "score_coverage_no_tool",
    "score_coverage_with_tool",
    "score_formation",
    "score_irrigation",
    "score_run",
]
