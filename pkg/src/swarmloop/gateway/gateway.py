"""The agent's only route to the WoT layer."""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from typing import Any, Callable

from swarmloop.directory import ThingDirectory
from swarmloop.errors import HelperDisabled, SwarmError, UnknownCall, UnknownTool
from swarmloop.gateway.tools import (
    PLANNING_SERVICES,
    GatewayConfig,
    ToolCall,
    ToolDefinition,
    ToolResult,
    list_tools,
)
from swarmloop.wot import Servient, validate

log = logging.getLogger(__name__)

HelperHandler = Callable[[ToolCall], Any]


@dataclass
class LogEntry:
    call: ToolCall
    result: ToolResult
    parent: str | None = None


class Gateway:
    def __init__(self, servient: Servient, directory: ThingDirectory, config: GatewayConfig = GatewayConfig()):
        self._servient = servient
        self._directory = directory
        self.config = config
        self._tools = {t.name: t for t in list_tools(config)}
        self._helper: HelperHandler | None = None
        self._lock = threading.Lock()
        self._seen: set[str] = set()
        self._counter = 0
        self._action_calls: dict[str, str] = {}
        self.log: list[LogEntry] = []
        self._local = threading.local()

    def list_tools(self) -> list[ToolDefinition]:
        return list(self._tools.values())

    def attach_helpers(self, handler: HelperHandler) -> None:
        self._helper = handler

    # --------------------------------------------------------------- calls
    def _unique_id(self, call_id: Any) -> str:
        with self._lock:
            if not isinstance(call_id, str) or not call_id:
                self._counter += 1
                call_id = f"gw-{self._counter}"
            base, k = call_id, 1
            while call_id in self._seen:
                k += 1
                call_id = f"{base}#{k}"
            self._seen.add(call_id)
            return call_id

    def call_tool(self, call: ToolCall) -> ToolResult:
        call_id = self._unique_id(call.call_id)
        call = ToolCall(call_id, call.tool, call.arguments)
        parent = getattr(self._local, "parent", None)
        try:
            tool = self._tools.get(call.tool) if isinstance(call.tool, str) else None
            if tool is None:
                raise UnknownTool(f"no tool {call.tool!r} in this configuration")
            args = validate(tool.input_schema, call.arguments, "arguments")
            payload = self._dispatch(tool, args, call_id)
            validate(tool.output_schema, payload, "payload")
            result = ToolResult(call_id, "ok", payload)
        except SwarmError as exc:
            result = ToolResult(call_id, "error", None, exc.code, exc.detail)
        except Exception as exc:  # keep the agent loop alive on internal bugs
            log.exception("tool %s crashed", call.tool)
            result = ToolResult(call_id, "error", None, "InternalError", repr(exc))
        with self._lock:
            self.log.append(LogEntry(call, result, parent))
        return result

    def _dispatch(self, tool: ToolDefinition, args: dict[str, Any], call_id: str) -> Any:
        s = self._servient
        name = tool.name
        if name == "list_web_things":
            docs = self._directory.query(args["query"]) if "query" in args else self._directory.list()
            things = []
            for doc in docs:
                entry = {"id": doc["id"], "title": doc.get("title", doc["id"]), "thing_class": doc.get("thing_class", "")}
                if args.get("detail"):
                    entry["td"] = doc
                things.append(entry)
            return {"things": things}
        if name == "read_web_thing_property":
            tid = s.resolve(args["thing"])
            return {"thing": tid, "property": args["property"], "value": s.read_property(tid, args["property"])}
        if name == "write_web_thing_property":
            tid = s.resolve(args["thing"])
            value = s.write_property(tid, args["property"], args["value"])
            return {"thing": tid, "property": args["property"], "value": value}
        if name == "call_web_thing_action":
            tid = s.resolve(args["thing"])
            ack = s.invoke_action(tid, args["action"], args.get("input"), call_id=call_id)
            with self._lock:
                self._action_calls[ack.call_id] = tid
            return {"thing": tid, "action": args["action"], "call_id": ack.call_id, "state": ack.state, "output": ack.output}
        if name in PLANNING_SERVICES:
            ack = s.invoke_action(PLANNING_SERVICES[name], name, args, call_id=call_id)
            return ack.output
        if tool.category == "helper":
            if self._helper is None:
                raise HelperDisabled("helper tools are listed but no helper handler is attached")
            previous = getattr(self._local, "parent", None)
            self._local.parent = call_id
            try:
                return self._helper(ToolCall(call_id, name, args))
            finally:
                self._local.parent = previous
        raise UnknownTool(name)  # pragma: no cover

    # ----------------------------------------------------------- completion
    def action_status(self, thing_id: str, call_id: str) -> dict[str, str]:
        """Observed state of an action call: accepted, running, completed or failed."""
        with self._lock:
            known = call_id in self._action_calls
        if not known:
            raise UnknownCall(f"call {call_id!r} was not issued by this gateway")
        return self._servient.action_status(thing_id, call_id)

    def top_level_log(self) -> list[LogEntry]:
        return [e for e in self.log if e.parent is None]
