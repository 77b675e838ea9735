"""Acceptance criteria, one test per criterion.

Each test prints a ``PASS``/``FAIL`` line and repeats it in the terminal
summary, so ``pytest -v`` output carries the full acceptance report.
"""

from __future__ import annotations

import itertools
import json
import math
import random
import time

import pytest

from conftest import ACCEPTANCE_LINES
from oracles import PlaybackReasoner, brute_force_assignment, fuzz_calls, jsonpath_oracle, td_corpus
from swarmloop.agent import GuardrailConfig, Limits, ReasonerStep, Usage, run_mission
from swarmloop.agent.ledger import estimate_tokens
from swarmloop.directory import ThingDirectory, query
from swarmloop.errors import DuplicateId, SwarmError, UnknownId
from swarmloop.gateway import ToolCall
from swarmloop.harness import MissionSpec, build_environment, run_batch
from swarmloop.harness.scoring import score_irrigation
from swarmloop.planners import Region, assign_slots, detect_star, plan_area_coverage, plan_drone_formation
from swarmloop.planners.coverage import footprint_radius
from swarmloop.sim import GroundDevice, WorldConfig
from swarmloop.sim.world import generate_sensor_values, irrigation_required

MISSIONS = ["coverage_with_tool", "coverage_no_tool", "formation", "irrigation"]
SEEDS = range(10)


def verdict(number: int, title: str, failures: list[str]) -> None:
    line = f"{'PASS' if not failures else 'FAIL'} criterion {number}: {title}"
    if failures:
        line += f" ({len(failures)} failures, first: {failures[0]})"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert not failures, line


@pytest.fixture(scope="module")
def oracle_batches(tmp_path_factory):
    """Scripted runs for all four missions and seeds 0-9, persisted to disk."""
    root = tmp_path_factory.mktemp("oracle")
    started = time.perf_counter()
    batches = {
        (kind, seed): run_batch(MissionSpec(kind), "scripted", 1, base_seed=seed, out_dir=root / f"{kind}-{seed}")
        for kind in MISSIONS
        for seed in SEEDS
    }
    return root, batches, time.perf_counter() - started


# ------------------------------------------------------------------ 1
def test_criterion_1_oracle_end_to_end(oracle_batches):
    _, batches, elapsed = oracle_batches
    failures = []
    for kind in MISSIONS:
        full = sum(batches[kind, s].n_full for s in SEEDS)
        if full != 10:
            failures.append(f"{kind}: {full}/10 full")
    for (kind, seed), batch in batches.items():
        run = batch.runs[0]
        if run.collisions:
            failures.append(f"{kind} seed {seed}: {run.collisions} collisions")
        if not run.verdict.full:
            failures.append(f"{kind} seed {seed}: {run.verdict.outcome} {run.verdict.reasons}")
    if elapsed >= 120:
        failures.append(f"runtime {elapsed:.1f} s")
    verdict(1, f"scripted reasoner 40/40 full, zero collisions, {elapsed:.1f} s", failures)


# ------------------------------------------------------------------ 2
def test_criterion_2_coverage_math():
    region = Region((0, 0), 400, 300)
    fov = math.pi / 2
    failures = []
    for n in (1, 4, 10, 12):
        plan = plan_area_coverage(region, n, fov, 1, 1000)
        if plan.clamped:
            failures.append(f"n={n} clamped")
        r_fp = footprint_radius(plan.altitude, fov)
        if abs(r_fp - plan.r_cell) > 1e-9 * plan.r_cell:
            failures.append(f"n={n}: footprint {r_fp} vs r_cell {plan.r_cell}")
        for x, y, _ in plan.slots:
            for dx, dy in itertools.product((-0.5, 0.5), repeat=2):
                if math.dist((x, y), (x + dx * plan.cell_w, y + dy * plan.cell_h)) > plan.r_cell * (1 + 1e-12):
                    failures.append(f"n={n}: corner outside r_cell at ({x}, {y})")
    single = plan_area_coverage(region, 1, fov, 1, 1000)
    if single.r_cell != 250.0:
        failures.append(f"n=1 r_cell {single.r_cell}")
    verdict(2, "coverage footprint equals r_cell and covers every cell corner; n=1 gives 250 m", failures)


# ------------------------------------------------------------------ 3
def test_criterion_3_assignment_exactness():
    rng = random.Random(2024)
    failures = []
    for k in range(200):
        n = rng.randint(1, 8)
        positions = [(rng.uniform(-50, 50), rng.uniform(-50, 50)) for _ in range(n)]
        slots = [(rng.uniform(-50, 50), rng.uniform(-50, 50)) for _ in range(n)]
        for objective in ("minimize", "maximize"):
            got = assign_slots(positions, slots, objective)
            _, best = brute_force_assignment(positions, slots, objective)
            if abs(got.total_displacement - best) > 1e-9 * (1 + best):
                failures.append(f"instance {k} {objective}: {got.total_displacement} vs {best}")
    degenerate = [
        # every slot coincides: all permutations tie
        ([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)], [(5.0, 5.0)] * 4),
        # drones stacked on one point: all permutations tie
        ([(1.0, 1.0)] * 3, [(0.0, 0.0), (4.0, 0.0), (0.0, 3.0)]),
        # a symmetric square where the two diagonal matchings tie
        ([(0.0, 0.0), (2.0, 2.0)], [(2.0, 0.0), (0.0, 2.0)]),
    ]
    for k, (positions, slots) in enumerate(degenerate):
        for objective in ("minimize", "maximize"):
            perm, _ = brute_force_assignment(positions, slots, objective)
            got = assign_slots(positions, slots, objective).permutation
            if got != perm or got != sorted(got):
                failures.append(f"degenerate {k} {objective}: {got} vs {perm}")
    verdict(3, "assignment matches brute force on 200 instances and 3 tie-break cases", failures)


# ------------------------------------------------------------------ 4
def test_criterion_4_formation_geometry():
    failures = []
    tol = 2.0
    for n in (4, 6, 10):
        for shape in ("star", "circle"):
            plan = plan_drone_formation(shape, (200, 150), 0.4, 5.0, n, 20)
            d = min(math.dist(p[:2], q[:2]) for p, q in itertools.combinations(plan.slots, 2))
            if abs(d - 5.0) > 1e-6:
                failures.append(f"{shape} n={n}: min spacing {d}")
        star = plan_drone_formation("star", (200, 150), 0.4, 5.0, n, 20)
        shuffled = list(star.slots)
        random.Random(n).shuffle(shuffled)
        if not detect_star(shuffled, star, tol):
            failures.append(f"n={n}: permuted exact slots rejected")
        for k in range(n):
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                moved = list(shuffled)
                x, y, z = moved[k]
                moved[k] = (x + dx * (tol + 0.01), y + dy * (tol + 0.01), z)
                if detect_star(moved, star, tol):
                    failures.append(f"n={n}: slot {k} moved by {tol + 0.01} accepted")
    verdict(4, "formation spacing exact and star detection honours the tolerance", failures)


# ------------------------------------------------------------------ 5
def irrigation_verdict(h: float, t: float, triggered: bool) -> str:
    devices = [{"id": f"humidity-{k}", "kind": "humidity_sensor", "last_reading": h} for k in (1, 2, 3)]
    devices.append({"id": "temperature-1", "kind": "temperature_sensor", "last_reading": t})
    devices.append({"id": "irrigation-1", "kind": "irrigation_actuator", "last_reading": None, "triggered": triggered})
    record = {
        "final": {"drones": [{"id": "uav-1", "position": {"x": 0, "y": 0, "z": 0}, "mode": "LAND",
                              "armed": False, "airborne": False}], "devices": devices},
        "commands": [{"command": "takeoff", "subject": "uav-1", "tick": 1, "time": 0.1}]
        + [{"command": "sample", "subject": d["id"], "tick": 5, "time": 0.5} for d in devices[:4]],
        "telemetry": [],
        "collisions": [],
    }
    from swarmloop.agent import RunTrace

    return score_irrigation(RunTrace("t"), record, MissionSpec("irrigation")).outcome


def test_criterion_5_irrigation_rule():
    failures = []
    table = {(57.0, 29.99): True, (57.0, 30.0): True, (57.01, 29.99): False, (57.01, 30.0): True}
    for (h, t), required in table.items():
        if irrigation_required(h, t) != required:
            failures.append(f"rule({h}, {t}) != {required}")
        # the scorer reaches the same decision: triggering is correct exactly when required
        if irrigation_verdict(h, t, required) != "full" or irrigation_verdict(h, t, not required) == "full":
            failures.append(f"scorer disagrees at ({h}, {t})")
    devices = [GroundDevice(f"humidity-{k}", "humidity_sensor", (0, 0), value_seed=k) for k in (1, 2, 3)]
    devices.append(GroundDevice("temperature-1", "temperature_sensor", (0, 0), value_seed=4))
    cfg = WorldConfig()
    required = 0
    for seed in range(200):
        values = generate_sensor_values(devices, seed, cfg)
        h = sum(values[f"humidity-{k}"] for k in (1, 2, 3)) / 3
        required += irrigation_required(h, values["temperature-1"])
    fraction = required / 200
    if not 0.35 <= fraction <= 0.65:
        failures.append(f"required fraction {fraction}")
    verdict(5, f"irrigation truth table exact; required fraction {fraction:.3f}", failures)


# ------------------------------------------------------------------ 6
def read_call(call_id: str) -> ToolCall:
    return ToolCall(call_id, "read_web_thing_property", {"thing": "uav-1", "property": "state"})


def test_criterion_6_token_accounting(oracle_batches):
    root, _, _ = oracle_batches
    failures = []
    docs = sorted(root.rglob("run_*.json"))
    if len(docs) != 40:
        failures.append(f"{len(docs)} persisted traces")
    for path in docs:
        ledger = json.loads(path.read_text())["trace"]["ledger"]
        total = sum(r["prompt"] + r["completion"] for r in ledger["iterations"])
        if not isinstance(ledger["T_run"], int) or ledger["T_run"] != total:
            failures.append(f"{path.name}: T_run {ledger['T_run']} vs {total}")

    e = build_environment(MissionSpec("formation"))

    def script(i, ctx):
        if i == 0:
            return ReasonerStep(tool_calls=[read_call("c0")], usage=Usage(100, 30))
        return ReasonerStep(final_text="done", usage=Usage(120, 20))

    reasoner = PlaybackReasoner(script, count_tokens=estimate_tokens)
    trace = run_mission("t", "fly", reasoner, e.gateway, Limits(max_iterations=2), e.clock)
    first, second = trace.ledger["iterations"][:2]
    if trace.ledger["T_run"] != 270:
        failures.append(f"two-iteration T_run {trace.ledger['T_run']}")
    if first["prompt_parts"]["toolout"] != 0:
        failures.append("tool output attributed to the iteration that produced it")
    if second["prompt_parts"]["toolout"] <= 0:
        failures.append("tool output missing from the following prompt")
    verdict(6, "T_run is the integer sum over 40 persisted traces; tool output feeds the next prompt", failures)


# ------------------------------------------------------------------ 7
def test_criterion_7_guardrails():
    failures = []
    cfg = GuardrailConfig(stall_window=3, max_firings=3)

    def run(script, limits=Limits(max_iterations=40)):
        e = build_environment(MissionSpec("formation"))
        return run_mission("t", "fly", PlaybackReasoner(script), e.gateway, limits, e.clock, guardrails=cfg)

    def fired(trace, name):
        return [r.index for r in trace.iterations if name in r.guardrails]

    # declares completion without ever reading state
    unverified = run(lambda i, ctx: ReasonerStep(final_text="done") if i != 1
                     else ReasonerStep(tool_calls=[read_call("r")]))
    if fired(unverified, "unverified_completion") != [0]:
        failures.append(f"unverified_completion fired at {fired(unverified, 'unverified_completion')}")

    # declares completion with a drone still armed
    arm = ToolCall("a", "call_web_thing_action", {"thing": "uav-1", "action": "arm"})
    disarm = ToolCall("d", "call_web_thing_action", {"thing": "uav-1", "action": "disarm"})
    steps = [[arm, read_call("s")], None, [disarm, read_call("s2")]]

    def unsafe_script(i, ctx):
        if i < len(steps) and steps[i] is not None:
            return ReasonerStep(tool_calls=steps[i])
        return ReasonerStep(final_text="done")

    unsafe = run(unsafe_script)
    if fired(unsafe, "unsafe_termination") != [1]:
        failures.append(f"unsafe_termination fired at {fired(unsafe, 'unsafe_termination')}")

    # repeats one observation forever
    stalled = run(lambda i, ctx: ReasonerStep(tool_calls=[read_call(f"c{i}")]))
    stall_fired = fired(stalled, "stalled_execution")
    if not stall_fired or stall_fired[0] > cfg.stall_window - 1:
        failures.append(f"stalled_execution fired at {stall_fired}")
    if stalled.termination != "infeasible":
        failures.append(f"permanent stall terminated as {stalled.termination}")
    verdict(7, f"all three guardrails fire in window; stalled run ends {stalled.termination}", failures)


# ------------------------------------------------------------------ 8
EXPRESSIONS = [
    "$", "$.actions.takeoff", "$.actions.sample", "$.actions.trigger", "$.properties.comm_range",
    "$.properties.*", "$.actions.*", "$.forms[0]", "$.forms[-1].op", "$.forms[40]", "$['title']",
    "$.properties['param.cruise_speed']", "$[?(@.thing_class=='physical')]", "$[?(@.thing_class!='physical')]",
    "$[?(@.title=='uav-3')]", "$.forms[?(@.op=='writeproperty')]",
    "$.actions.takeoff.input.properties.alt[?(@.exclusiveMinimum==0)]",
    "$.properties.battery[?(@.maximum==5000)]", "$.actions.goto.input.required[1]", "$.events.*",
]


class Clock:
    def __init__(self):
        self.t = 0.0

    def __call__(self) -> float:
        return self.t


def test_criterion_8_directory_and_query():
    failures = []
    corpus = td_corpus()
    if len(corpus) != 14:
        failures.append(f"corpus has {len(corpus)} TDs")
    directory = ThingDirectory(Clock())
    for td in corpus:
        directory.register(td)
    for expression in EXPRESSIONS:
        expected = sorted(td["id"] for td in corpus if jsonpath_oracle(expression, td))
        got = [td["id"] for td in directory.query(expression)]
        if got != expected:
            failures.append(f"{expression}: {got} vs {expected}")
        if any(query(expression, td) != jsonpath_oracle(expression, td) for td in corpus):
            failures.append(f"{expression}: selected nodes differ")

    rng = random.Random(8)
    clock = Clock()
    fuzzed = ThingDirectory(clock)
    live: dict[str, tuple[float | None, float]] = {}

    def alive(tid):
        return tid in live and (live[tid][0] is None or clock.t <= live[tid][1] + live[tid][0])

    for step in range(1000):
        td = rng.choice(corpus)
        tid = td["id"]
        op = rng.choice(["register", "update", "get", "delete", "list", "tick"])
        try:
            if op == "tick":
                clock.t += rng.choice([0.0, 0.5, 1.5])
            elif op == "register":
                ttl = rng.choice([None, 1.0, 3.0])
                fuzzed.register(td, ttl_s=ttl)
                if alive(tid):
                    failures.append(f"op {step}: duplicate register accepted")
                live[tid] = (ttl, clock.t)
            elif op == "update":
                fuzzed.update(td)
                if not alive(tid):
                    failures.append(f"op {step}: update of absent id accepted")
                live[tid] = (live[tid][0], clock.t)
            elif op == "get":
                if fuzzed.get(tid) != td or not alive(tid):
                    failures.append(f"op {step}: get returned a stale or wrong document")
            elif op == "delete":
                fuzzed.delete(tid)
                if not alive(tid):
                    failures.append(f"op {step}: delete of absent id accepted")
                live.pop(tid, None)
        except (DuplicateId, UnknownId):
            expected_error = alive(tid) if op == "register" else not alive(tid)
            if not expected_error:
                failures.append(f"op {step}: unexpected error on {op}")
        listed = [t["id"] for t in fuzzed.list()]
        if listed != sorted(t for t in live if alive(t)):
            failures.append(f"op {step}: listing {listed}")
        if fuzzed.query("$") != fuzzed.list():
            failures.append(f"op {step}: root query differs from list")
    verdict(8, "20 expressions match the tree-walker on 14 TDs; 1000-op CRUDL fuzz clean", failures)


# ------------------------------------------------------------------ 9
def test_criterion_9_determinism(tmp_path):
    failures = []
    for kind in MISSIONS:
        a, b = tmp_path / f"{kind}-a", tmp_path / f"{kind}-b"
        run_batch(MissionSpec(kind), "scripted", 3, base_seed=4, out_dir=a)
        run_batch(MissionSpec(kind), "scripted", 3, base_seed=4, out_dir=b)
        for name in (f"run_{i:03d}.json" for i in range(3)):
            if (a / name).read_bytes() != (b / name).read_bytes():
                failures.append(f"{kind}/{name} differs between identical batches")
        # runs within a batch differ only in reasoner seed
        inits = set()
        for i in range(3):
            world = json.loads((a / f"run_{i:03d}.json").read_text())["world"]
            inits.add(json.dumps({"config": world["config"], "initial": world["initial"]}, sort_keys=True))
        if len(inits) != 1:
            failures.append(f"{kind}: reasoner seed changed world initialization")
    verdict(9, "identical seeds give byte-identical traces; reasoner seed leaves the world untouched", failures)


# ------------------------------------------------------------------ 10
def test_criterion_10_schema_totality():
    failures = []
    e = build_environment(MissionSpec("irrigation", helpers=True))
    tools = e.gateway.list_tools()
    domain = {cls.code for cls in SwarmError.__subclasses__()}
    allowed = {"UnknownTool", "SchemaViolation"} | domain
    count = 0
    for call_id, name, args, kind in fuzz_calls(tools, e.servient.things(), random.Random(10), 10_000):
        count += 1
        result = e.gateway.call_tool(ToolCall(call_id, name, args))
        if result.ok:
            failures.append(f"{name} {args}: accepted")
        elif result.error_code not in allowed - {"InternalError"}:
            failures.append(f"{name} {args}: {result.error_code}")
        elif kind == "name" and result.error_code != "UnknownTool":
            failures.append(f"{name}: {result.error_code}")
    verdict(10, f"{count} fuzzed calls rejected with UnknownTool, SchemaViolation or a domain error", failures)
