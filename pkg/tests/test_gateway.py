from __future__ import annotations

import io
import json
import random

import pytest

from swarmloop.errors import SwarmError, UnknownCall
from swarmloop.gateway import ALL_TOOLS, CORE_TOOLS, Gateway, GatewayConfig, StdioServer, ToolCall, ToolResult
from swarmloop.harness import MissionSpec, build_environment

from oracles import fuzz_calls

DOMAIN_CODES = {cls.code for cls in SwarmError.__subclasses__()} - {"UnknownTool", "SchemaViolation"}


def env(**kw):
    return build_environment(MissionSpec("irrigation", n_drones=3, **kw))


def call(gw: Gateway, tool: str, **arguments) -> ToolResult:
    return gw.call_tool(ToolCall("", tool, arguments))


def test_core_tool_names():
    assert [t.name for t in CORE_TOOLS] == [
        "list_web_things",
        "read_web_thing_property",
        "write_web_thing_property",
        "call_web_thing_action",
    ]
    assert len(ALL_TOOLS) == 10


def test_catalogue_follows_config():
    names = lambda e: {t.name for t in e.gateway.list_tools()}  # noqa: E731
    assert names(env(planner=False)) == {t.name for t in CORE_TOOLS}
    full = names(env(helpers=True))
    assert {"plan_area_coverage", "plan_drone_formation", "wait_until_landed"} <= full
    with pytest.raises(ValueError):
        GatewayConfig(planning_tools=("plan_everything",))


def test_unknown_and_disabled_tools():
    e = env(planner=False)
    assert call(e.gateway, "plan_area_coverage", width=1).error_code == "UnknownTool"
    assert call(e.gateway, "wait_until_armed", drones=[], timeout_s=1).error_code == "UnknownTool"


def test_discovery_and_invocation():
    e = env()
    found = call(e.gateway, "list_web_things", query="$.actions.takeoff").payload["things"]
    assert [t["title"] for t in found] == ["uav-1", "uav-2", "uav-3"]
    ack = call(e.gateway, "call_web_thing_action", thing="uav-1", action="arm")
    assert ack.ok and ack.payload["state"] == "completed"
    read = call(e.gateway, "read_web_thing_property", thing="uav-1", property="armed")
    assert read.payload["value"] is True
    bad = call(e.gateway, "call_web_thing_action", thing="uav-2", action="takeoff", input={"alt": 10})
    assert bad.error_code == "NotArmed"
    missing = call(e.gateway, "list_web_things", query="$$bad")
    assert missing.error_code == "MalformedExpression"


def test_action_status_through_gateway():
    e = env()
    call(e.gateway, "call_web_thing_action", thing="uav-1", action="arm")
    ack = call(e.gateway, "call_web_thing_action", thing="uav-1", action="takeoff", input={"alt": 5})
    assert ack.payload["state"] == "accepted"
    e.world.advance(4.0)
    assert e.gateway.action_status(ack.payload["thing"], ack.call_id)["state"] == "completed"
    with pytest.raises(UnknownCall):
        e.gateway.action_status(ack.payload["thing"], "nope")


def test_call_ids_are_unique_per_run():
    e = env()
    a = e.gateway.call_tool(ToolCall("c1", "list_web_things", {}))
    b = e.gateway.call_tool(ToolCall("c1", "list_web_things", {}))
    assert a.call_id != b.call_id
    assert len({entry.call.call_id for entry in e.gateway.log}) == len(e.gateway.log)


def test_planning_tools_return_plans():
    e = env()
    plan = call(e.gateway, "plan_drone_formation", shape="star", center_x=0, center_y=0, spacing=5, altitude=20, n=4)
    assert plan.ok and len(plan.payload["slots"]) == 4


def test_payload_cap_truncates_text_only():
    res = ToolResult("c", "ok", {"blob": "x" * 100})
    assert len(res.to_content(40).encode()) < 80 and "truncated" in res.to_content(40)
    assert json.loads(res.to_content())["result"] == {"blob": "x" * 100}


def test_result_invariant():
    with pytest.raises(ValueError):
        ToolResult("c", "error")
    with pytest.raises(ValueError):
        ToolResult("c", "ok", error_code="X")


def test_fuzzed_calls_are_rejected_cleanly():
    e = env(helpers=True)
    rng = random.Random(2)
    tools = e.gateway.list_tools()
    for call_id, name, args, kind in fuzz_calls(tools, e.servient.things(), rng, 1500):
        res = e.gateway.call_tool(ToolCall(call_id, name, args))
        assert not res.ok, (name, args)
        expected = {"name": {"UnknownTool"}, "arguments": {"SchemaViolation"}}.get(kind, {"SchemaViolation"})
        assert res.error_code in expected | DOMAIN_CODES, (name, args, res)


# ------------------------------------------------------------------ stdio JSON-RPC
def rpc(server: StdioServer, method: str, params=None, req_id=1):
    msg = {"jsonrpc": "2.0", "id": req_id, "method": method}
    if params is not None:
        msg["params"] = params
    return json.loads(server.handle_line(json.dumps(msg)))


def test_stdio_initialize_and_list():
    server = StdioServer(env().gateway)
    init = rpc(server, "initialize", {"protocolVersion": "2025-06-18", "capabilities": {}})
    assert init["result"]["capabilities"]["tools"] == {"listChanged": False}
    tools = rpc(server, "tools/list", req_id=2)["result"]["tools"]
    assert {"name", "description", "inputSchema"} <= set(tools[0])
    assert rpc(server, "ping", req_id=3)["result"] == {}


def test_stdio_call_and_errors():
    server = StdioServer(env().gateway)
    ok = rpc(server, "tools/call", {"name": "read_web_thing_property", "arguments": {"thing": "uav-1", "property": "mode"}})
    assert ok["result"]["structuredContent"]["value"] == "STABILIZE"
    assert json.loads(ok["result"]["content"][0]["text"])["value"] == "STABILIZE"
    unknown = rpc(server, "tools/call", {"name": "fly", "arguments": {}}, req_id=2)
    assert unknown["error"]["code"] == -32601 and unknown["error"]["data"]["error_code"] == "UnknownTool"
    bad = rpc(server, "tools/call", {"name": "list_web_things", "arguments": {"query": 3}}, req_id=3)
    assert bad["error"]["code"] == -32602
    domain = rpc(server, "tools/call", {"name": "call_web_thing_action",
                                        "arguments": {"thing": "uav-1", "action": "disarm"}}, req_id=4)
    assert domain["result"]["isError"] is False
    assert rpc(server, "resources/list", req_id=5)["error"]["code"] == -32601
    assert json.loads(server.handle_line("{oops"))["error"]["code"] == -32700
    assert server.handle_line(json.dumps({"jsonrpc": "2.0", "method": "notifications/initialized"})) is None


def test_stdio_serve_loop():
    server = StdioServer(env().gateway)
    lines = [
        json.dumps({"jsonrpc": "2.0", "id": 1, "method": "initialize", "params": {}}),
        json.dumps({"jsonrpc": "2.0", "method": "notifications/initialized"}),
        json.dumps({"jsonrpc": "2.0", "id": 2, "method": "tools/list"}),
    ]
    out = io.StringIO()
    server.serve(io.StringIO("\n".join(lines) + "\n"), out)
    replies = [json.loads(x) for x in out.getvalue().splitlines()]
    assert [r["id"] for r in replies] == [1, 2]
