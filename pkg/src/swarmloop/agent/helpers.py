"""Helper tools: wrappers that compose core gateway tools.

They never touch the world directly.  ``send_drones_to_positions`` fans out
one ``goto`` action call per target, and the ``wait_until_*`` family polls
drone state at a fixed cadence and never commands anything.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Any

from swarmloop.agent.types import Clock, ManualClock, ToolPort
from swarmloop.errors import HelperDisabled, UnknownTool
from swarmloop.gateway.tools import ToolCall

WAIT_KINDS = ("armed", "arrived", "landed")


@dataclass(frozen=True)
class HelperConfig:
    enabled: bool = True
    poll_s: float = 1.0
    arrival_tol: float = 1.0


def _predicate(kind: str, state: dict[str, Any], tol: float) -> tuple[bool, str]:
    if kind == "armed":
        return bool(state["armed"]), f"armed={state['armed']}"
    if kind == "landed":
        return not state["airborne"], f"airborne={state['airborne']}"
    target = state.get("target")
    if not state["airborne"] or target is None or state["mode"] != "GUIDED":
        return False, f"mode={state['mode']} airborne={state['airborne']} target={target}"
    p = state["position"]
    dist = math.dist((p["x"], p["y"], p["z"]), (target["x"], target["y"], target["z"]))
    return dist <= tol, f"{dist:.2f} m from target"


class HelperSuite:
    """Handler attached to a gateway; nested calls go back through the same gateway."""

    def __init__(self, gateway: ToolPort, clock: Clock, config: HelperConfig = HelperConfig()):
        self.gateway = gateway
        self.clock = clock
        self.config = config
        self._seq = itertools.count(1)

    def _call(self, parent: str, tool: str, args: dict[str, Any]):
        return self.gateway.call_tool(ToolCall(f"{parent}.{next(self._seq)}", tool, args))

    def __call__(self, call: ToolCall) -> dict[str, Any]:
        if not self.config.enabled:
            raise HelperDisabled(f"{call.tool} is disabled for this run")
        if call.tool == "send_drones_to_positions":
            return self.send_drones_to_positions(call.arguments["targets"], call.call_id)
        if call.tool.startswith("wait_until_"):
            kind = call.tool[len("wait_until_") :]
            if kind in WAIT_KINDS:
                return self.wait_until(kind, call.arguments["drones"], call.arguments["timeout_s"], call.call_id)
        raise UnknownTool(call.tool)

    def send_drones_to_positions(self, targets: list[dict[str, Any]], parent: str = "helper") -> dict[str, Any]:
        if not self.config.enabled:
            raise HelperDisabled("send_drones_to_positions is disabled for this run")
        out = []
        for t in targets:
            res = self._call(
                parent,
                "call_web_thing_action",
                {"thing": t["drone"], "action": "goto", "input": {"x": t["x"], "y": t["y"], "alt": t["alt"]}},
            )
            if res.ok:
                call_id, code, detail = res.payload["call_id"], None, res.payload["state"]
            else:
                call_id, code, detail = None, res.error_code, res.error_detail or ""
            out.append(
                {"drone": t["drone"], "status": "ok" if res.ok else "error",
                 "call_id": call_id, "error_code": code, "detail": detail}
            )
        return {"results": out}

    def wait_until(self, kind: str, drones: list[str], timeout_s: float, parent: str = "helper") -> dict[str, Any]:
        if not self.config.enabled:
            raise HelperDisabled(f"wait_until_{kind} is disabled for this run")
        if kind not in WAIT_KINDS:
            raise UnknownTool(f"wait_until_{kind}")
        start = self.clock.now()
        while True:
            status = []
            for drone in drones:
                res = self._call(parent, "read_web_thing_property", {"thing": drone, "property": "state"})
                if res.ok:
                    ok, detail = _predicate(kind, res.payload["value"], self.config.arrival_tol)
                else:
                    ok, detail = False, f"{res.error_code}: {res.error_detail}"
                status.append({"drone": drone, "satisfied": ok, "detail": detail})
            elapsed = self.clock.now() - start
            done = all(s["satisfied"] for s in status)
            if done or elapsed >= timeout_s:
                return {"satisfied": done, "elapsed_s": round(elapsed, 6), "drones": status}
            self.clock.sleep(min(self.config.poll_s, timeout_s - elapsed))


def helper_send_drones_to_positions(gateway: ToolPort, targets: list[dict[str, Any]], enabled: bool = True):
    return HelperSuite(gateway, ManualClock(), HelperConfig(enabled=enabled)).send_drones_to_positions(targets)


def helper_wait_until(
    gateway: ToolPort, clock: Clock, kind: str, drones: list[str], timeout_s: float,
    enabled: bool = True, poll_s: float = 1.0, arrival_tol: float = 1.0,
):
    return HelperSuite(gateway, clock, HelperConfig(enabled, poll_s, arrival_tol)).wait_until(kind, drones, timeout_s)
