from __future__ import annotations

import ast
import json
import re
from pathlib import Path

import httpx
import pytest

import swarmloop.agent as agent_pkg
from swarmloop.agent import (
    AgentContext,
    GuardrailConfig,
    HelperConfig,
    HelperSuite,
    Limits,
    ManualClock,
    Message,
    PromptArtifact,
    ReasonerStep,
    RemoteReasoner,
    RunTrace,
    TokenLedger,
    Usage,
    run_mission,
)
from swarmloop.agent.helpers import helper_send_drones_to_positions, helper_wait_until
from swarmloop.agent.ledger import estimate_tokens, record_usage, rescale
from swarmloop.agent.prompts import MISSION_KINDS, load_core, load_guardrail, load_user
from swarmloop.agent.remote import parse_response, remote_reasoner
from swarmloop.errors import ReasonerFailure
from swarmloop.gateway import ToolCall
from swarmloop.harness import MissionSpec, build_environment

from oracles import PlaybackReasoner


def env(kind="formation", **kw):
    return build_environment(MissionSpec(kind, **kw))


def read(thing="uav-1", prop="state", call_id="r"):
    return ToolCall(call_id, "read_web_thing_property", {"thing": thing, "property": prop})


def calls(*tool_calls, usage=None):
    return ReasonerStep(tool_calls=list(tool_calls), usage=usage or Usage())


def final(text="done", usage=None):
    return ReasonerStep(final_text=text, usage=usage or Usage())


def run(e, script, limits=Limits(max_iterations=40), guardrails=GuardrailConfig(), **kw):
    reasoner = PlaybackReasoner(script, **kw)
    return run_mission("test", "fly", reasoner, e.gateway, limits, e.clock, guardrails=guardrails)


# ------------------------------------------------------------------ types and prompts
def test_step_is_either_calls_or_final():
    with pytest.raises(ValueError):
        ReasonerStep()
    with pytest.raises(ValueError):
        ReasonerStep(tool_calls=[read()], final_text="x")


def test_context_injects_only_guardrails():
    ctx = AgentContext(load_core(), PromptArtifact("user", "go"))
    with pytest.raises(ValueError):
        ctx.inject(PromptArtifact("user", "sneaky"))
    ctx.inject(load_guardrail("stalled_execution"))
    assert ctx.messages[-1].role == "system" and ctx.injected_guardrails == ["stalled_execution"]


def test_tool_message_needs_an_open_call():
    ctx = AgentContext(load_core(), PromptArtifact("user", "go"))
    with pytest.raises(ValueError):
        ctx.append(Message("tool", "{}", call_id="nope"))


@pytest.mark.parametrize("kind", MISSION_KINDS)
def test_user_prompts_render(kind):
    text = MissionSpec(kind).user_prompt().text
    assert not re.search(r"\{[a-z_]+\}", text)
    assert load_user(kind, n_drones=3, shape="star", center_x=1, center_y=2, spacing=5, altitude=20,
                     humidity_max=57, temperature_min=30).kind == "user"


def test_prompt_root_is_replaceable(tmp_path):
    (tmp_path / "guardrails").mkdir()
    (tmp_path / "core.txt").write_text("custom core")
    (tmp_path / "guardrails" / "stalled_execution.txt").write_text("custom stall")
    assert load_core(tmp_path).text == "custom core"
    assert load_guardrail("stalled_execution", tmp_path).text == "custom stall"


# ------------------------------------------------------------------ token ledger
def test_ledger_sums_iterations():
    ledger = TokenLedger()
    record_usage(ledger, calls(read(), usage=Usage(100, 30)), {"system": ["x"]})
    record_usage(ledger, final(usage=Usage(120, 20)), {"system": ["x"]})
    assert ledger.total == 270
    assert ledger.to_dict()["T_run"] == 270
    assert TokenLedger().total == 0


def test_ledger_components_rescale_to_aggregate():
    ledger = TokenLedger()
    comp = {"system": ["a" * 40], "user": ["b" * 20], "history": [], "toolout": ["c" * 8]}
    record_usage(ledger, final("x" * 12, Usage(100, 7)), comp, estimate_tokens)
    rec = ledger.records[0]
    assert sum(rec.prompt_parts.values()) == 100 and sum(rec.completion_parts.values()) == 7
    ledger.check()


def test_rescale_largest_remainder():
    assert rescale({"a": 1, "b": 1, "c": 1}, 10) == {"a": 4, "b": 3, "c": 3}
    assert rescale({"a": 0, "b": 0}, 5) is None
    assert rescale({"a": 2, "b": 3}, 5) == {"a": 2, "b": 3}


def test_unattributed_without_counter():
    ledger = TokenLedger()
    record_usage(ledger, final(usage=Usage(10, 5)), {"system": ["abc"]})
    assert ledger.component_totals() is None and ledger.records[0].source == "reported"
    record_usage(ledger, final(), {"system": ["abcdefgh"]})
    assert ledger.records[1].prompt == 2 and ledger.records[1].source == "estimate"


def test_tool_output_lands_in_next_prompt():
    e = env()

    def script(i, ctx):
        return calls(read(call_id="c0")) if i == 0 else final()

    trace = run(e, script, count_tokens=estimate_tokens)
    first, second = trace.ledger["iterations"][:2]
    assert first["prompt_parts"]["toolout"] == 0
    assert second["prompt_parts"]["toolout"] > 0
    assert second["prompt_parts"]["history"] > 0
    assert trace.ledger["T_run"] == sum(r["prompt"] + r["completion"] for r in trace.ledger["iterations"])


# ------------------------------------------------------------------ guardrails
def test_unverified_completion_fires():
    e = env()
    trace = run(e, lambda i, ctx: final() if i == 0 else calls(read()) if i == 1 else final())
    assert trace.iterations[0].guardrails == ["unverified_completion"]
    assert trace.termination == "completed" and len(trace.iterations) == 3


def test_unsafe_termination_fires_and_probe_is_logged():
    e = env()

    def script(i, ctx):
        if i == 0:
            return calls(ToolCall("a", "call_web_thing_action", {"thing": "uav-1", "action": "arm"}), read(call_id="s"))
        if i == 1:
            return final()
        if i == 2:
            return calls(ToolCall("d", "call_web_thing_action", {"thing": "uav-1", "action": "disarm"}),
                         read(call_id="s2"))
        return final()

    trace = run(e, script)
    assert trace.iterations[1].guardrails == ["unsafe_termination"]
    assert trace.iterations[1].probes and all(p.ok for p in trace.iterations[1].probes)
    assert trace.termination == "completed"


@pytest.mark.parametrize("window", range(2, 11))
def test_stall_fires_within_window(window):
    e = env()
    trace = run(e, lambda i, ctx: calls(read(prop="battery", call_id=f"c{i}")),
                limits=Limits(max_iterations=window + 1), guardrails=GuardrailConfig(stall_window=window))
    fired = [r.index for r in trace.iterations if "stalled_execution" in r.guardrails]
    assert fired and fired[0] <= window


def test_changing_observations_are_not_a_stall():
    e = env()
    e.gateway.call_tool(ToolCall("x", "call_web_thing_action", {"thing": "uav-1", "action": "arm"}))
    e.gateway.call_tool(ToolCall("y", "call_web_thing_action", {"thing": "uav-1", "action": "takeoff", "input": {"alt": 30}}))
    e.world.advance(15.0)
    # a long horizontal leg keeps the observed position changing
    e.gateway.call_tool(ToolCall("z", "call_web_thing_action",
                                 {"thing": "uav-1", "action": "goto", "input": {"x": 400, "y": 0, "alt": 30}}))
    trace = run(e, lambda i, ctx: calls(read(prop="position", call_id=f"c{i}")) if i < 6 else final(),
                guardrails=GuardrailConfig(stall_window=3))
    assert not any(r.guardrails for r in trace.iterations[:6])


def test_firing_cap_gives_infeasible():
    e = env()
    trace = run(e, lambda i, ctx: calls(read(prop="battery", call_id=f"c{i}")),
                guardrails=GuardrailConfig(stall_window=3, max_firings=3))
    assert trace.termination == "infeasible"
    fired = [r.index for r in trace.iterations if r.guardrails]
    assert fired == [2, 5, 8]
    assert len(trace.iterations) == 12


def test_infeasible_declaration():
    e = env()
    trace = run(e, lambda i, ctx: calls(read()) if i == 0 else final("INFEASIBLE: no drones"))
    assert trace.termination == "infeasible" and trace.final_text.startswith("INFEASIBLE:")


# ------------------------------------------------------------------ loop limits and errors
def test_iteration_cap_of_one():
    e = env()
    trace = run(e, lambda i, ctx: calls(read(call_id=f"c{i}")), limits=Limits(max_iterations=1))
    assert trace.termination == "iteration_cap" and len(trace.iterations) == 1


def test_simulated_time_limit():
    e = env()
    trace = run(e, lambda i, ctx: calls(read(call_id=f"c{i}", prop="mode")),
                limits=Limits(max_iterations=100, sim_timeout=12.0, iteration_dt=5.0),
                guardrails=GuardrailConfig(stall_window=10))
    assert trace.termination == "iteration_cap" and "simulated" in trace.detail
    assert len(trace.iterations) == 3


def test_reasoner_exception_carries_partial_trace():
    e = env()

    def script(i, ctx):
        if i == 1:
            raise RuntimeError("boom")
        return calls(read())

    with pytest.raises(ReasonerFailure) as info:
        run(e, script)
    assert info.value.trace.termination == "error" and len(info.value.trace.iterations) == 1


def test_trace_roundtrip():
    e = env()
    trace = run(e, lambda i, ctx: calls(read()) if i == 0 else final())
    again = RunTrace.from_dict(json.loads(trace.serialize()))
    assert again.serialize() == trace.serialize()
    assert [c.call_id for c, _ in again.tool_pairs()] == ["r"]


# ------------------------------------------------------------------ helpers
def airborne_env(n=10):
    e = env("coverage_with_tool", n_drones=n, helpers=True)
    for k in range(1, n + 1):
        e.world.cmd_arm(f"uav-{k}")
        e.world.cmd_takeoff(f"uav-{k}", 10 + 3 * k)
    e.world.advance(20.0)
    return e


def test_send_drones_to_positions_fans_out():
    e = airborne_env()
    targets = [{"drone": f"uav-{k}", "x": 20.0 * k, "y": 50.0, "alt": 10.0 + 3 * k} for k in range(1, 11)]
    res = e.gateway.call_tool(ToolCall("h", "send_drones_to_positions", {"targets": targets}))
    assert res.ok and [r["status"] for r in res.payload["results"]] == ["ok"] * 10
    nested = [entry for entry in e.gateway.log if entry.parent == "h"]
    assert len(nested) == 10 and all(entry.call.tool == "call_web_thing_action" for entry in nested)
    assert sum(c["command"] == "goto" for c in e.world.command_log) == 10


def test_send_drones_reports_partial_failure():
    e = airborne_env(3)
    e.world.cmd_land("uav-2")
    e.world.advance(30.0)
    targets = [{"drone": f"uav-{k}", "x": 50.0, "y": 10.0 * k, "alt": 20.0} for k in (1, 2, 3)]
    out = helper_send_drones_to_positions(e.gateway, targets)["results"]
    assert [r["status"] for r in out] == ["ok", "error", "ok"]
    assert out[1]["error_code"] == "NotAirborne"


def test_disabled_helpers():
    e = airborne_env(2)
    e.gateway.attach_helpers(HelperSuite(e.gateway, e.clock, HelperConfig(enabled=False)))
    res = e.gateway.call_tool(ToolCall("h", "wait_until_landed", {"drones": ["uav-1"], "timeout_s": 5}))
    assert res.error_code == "HelperDisabled"
    with pytest.raises(Exception):
        helper_send_drones_to_positions(e.gateway, [], enabled=False)


def test_wait_with_zero_timeout_does_not_sleep():
    e = airborne_env(2)
    e.world.cmd_goto("uav-1", 300, 200, 13)
    t0 = e.clock.now()
    out = helper_wait_until(e.gateway, e.clock, "arrived", ["uav-1"], 0)
    assert out["satisfied"] is False and out["elapsed_s"] == 0 and e.clock.now() == t0


def test_wait_until_arrived_polls_until_true():
    e = airborne_env(2)
    e.world.cmd_goto("uav-1", 60, 0, 13)
    out = helper_wait_until(e.gateway, e.clock, "arrived", ["uav-1"], 60)
    assert out["satisfied"] and 4.0 <= out["elapsed_s"] <= 8.0
    # waiting only observes: no new commands were issued
    assert [c["command"] for c in e.world.command_log].count("goto") == 1


# ------------------------------------------------------------------ remote reasoner
def completion(message, usage=None):
    body = {"choices": [{"message": message}]}
    if usage:
        body["usage"] = usage
    return httpx.Response(200, json=body)


def goto_message(arguments):
    return {
        "role": "assistant",
        "content": None,
        "tool_calls": [{"id": "call_1", "type": "function",
                        "function": {"name": "call_web_thing_action", "arguments": arguments}}],
    }


def test_remote_parses_tool_calls():
    step = parse_response({"choices": [{"message": goto_message(json.dumps(
        {"thing": "uav-1", "action": "goto", "input": {"x": 1, "y": 2, "alt": 10}}))}],
        "usage": {"prompt_tokens": 50, "completion_tokens": 9}})
    assert step.tool_calls[0].arguments["input"] == {"x": 1, "y": 2, "alt": 10}
    assert step.usage == Usage(50, 9)


def test_remote_request_shape_and_malformed_arguments():
    seen = []
    read_state = json.dumps({"thing": "uav-1", "property": "state"})
    replies = [
        completion(goto_message("{not json")),
        completion(goto_message(read_state) | {"tool_calls": [{"id": "call_2", "type": "function", "function": {
            "name": "read_web_thing_property", "arguments": read_state}}]}),
    ]

    def handler(request):
        seen.append(json.loads(request.content))
        return replies[len(seen) - 1] if len(seen) <= len(replies) else completion({"role": "assistant", "content": "done"})

    reasoner = RemoteReasoner("http://llm.test/v1", "m", "key", seed=4, transport=httpx.MockTransport(handler))
    e = env()
    trace = run_mission("t", "fly", reasoner, e.gateway, Limits(max_iterations=5), e.clock)
    assert seen[0]["model"] == "m" and seen[0]["seed"] == 4
    assert {t["function"]["name"] for t in seen[0]["tools"]} >= {"list_web_things"}
    assert trace.iterations[0].results[0].error_code == "MalformedToolCall"
    # the tool message for the malformed call is in the second request
    assert seen[1]["messages"][-1]["role"] == "tool"
    # no usage and no counter: estimated aggregate, components unattributed
    assert trace.termination == "completed"
    assert trace.ledger["components"] is None
    assert all(r["source"] == "estimate" for r in trace.ledger["iterations"])


def test_remote_retries_transient_errors():
    statuses = iter([503, 429, 200])
    sleeps = []

    def handler(request):
        code = next(statuses)
        if code != 200:
            return httpx.Response(code)
        return completion({"role": "assistant", "content": "ok"}, {"prompt_tokens": 3, "completion_tokens": 1})

    reasoner = RemoteReasoner("http://llm.test", "m", transport=httpx.MockTransport(handler), sleep=sleeps.append)
    step = reasoner.step(AgentContext(load_core(), PromptArtifact("user", "go")), [])
    assert step.final_text == "ok" and sleeps == [0.5, 1.0]


def test_remote_gives_up_and_rejects_client_errors():
    always = RemoteReasoner("http://llm.test", "m", retries=2, sleep=lambda s: None,
                            transport=httpx.MockTransport(lambda r: httpx.Response(500)))
    ctx = AgentContext(load_core(), PromptArtifact("user", "go"))
    with pytest.raises(ReasonerFailure):
        always.step(ctx, [])
    denied = RemoteReasoner("http://llm.test", "m", transport=httpx.MockTransport(lambda r: httpx.Response(401)))
    with pytest.raises(ReasonerFailure):
        denied.step(ctx, [])


def test_remote_factory_reads_environment(monkeypatch):
    monkeypatch.delenv("SWARMLOOP_ENDPOINT", raising=False)
    with pytest.raises(ReasonerFailure):
        remote_reasoner(model_name="m")
    monkeypatch.setenv("SWARMLOOP_ENDPOINT", "http://llm.test/v1/")
    monkeypatch.setenv("SWARMLOOP_MODEL", "m")
    assert remote_reasoner().url == "http://llm.test/v1/chat/completions"


# ------------------------------------------------------------------ isolation
def test_agent_never_imports_sim_or_wot():
    root = Path(agent_pkg.__file__).parent
    forbidden = ("swarmloop.sim", "swarmloop.wot", "swarmloop.directory", "swarmloop.harness")
    for path in root.rglob("*.py"):
        tree = ast.parse(path.read_text())
        for node in ast.walk(tree):
            names = []
            if isinstance(node, ast.Import):
                names = [a.name for a in node.names]
            elif isinstance(node, ast.ImportFrom) and node.module:
                names = [node.module]
            for name in names:
                assert not name.startswith(forbidden), f"{path.name} imports {name}"


@pytest.mark.parametrize("kind", MISSION_KINDS)
def test_every_world_command_comes_from_a_logged_tool_call(kind):
    from swarmloop.agent import ScriptedReasoner

    e = env(kind, helpers=True)
    run_mission("audit", e.spec.user_prompt(), ScriptedReasoner(kind), e.gateway, e.spec.limits, e.clock)
    logged = {entry.call.call_id for entry in e.gateway.log if entry.result.ok}
    assert e.world.command_log
    assert all(c["tag"] in logged for c in e.world.command_log)


def test_manual_clock():
    clock = ManualClock(1.0)
    clock.sleep(2.0)
    assert clock.now() == 3.0
