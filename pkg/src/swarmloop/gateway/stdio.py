"""JSON-RPC 2.0 over newline-delimited stdio, speaking MCP tools/list and tools/call."""

from __future__ import annotations

import itertools
import json
import sys
from typing import IO, Any

from swarmloop.gateway.gateway import Gateway
from swarmloop.gateway.tools import ToolCall

PROTOCOL_VERSION = "2025-06-18"

PARSE_ERROR = -32700
INVALID_REQUEST = -32600
METHOD_NOT_FOUND = -32601
INVALID_PARAMS = -32602
TOOL_ERROR = -32000

_ERROR_CODES = {"UnknownTool": METHOD_NOT_FOUND, "SchemaViolation": INVALID_PARAMS}


def _error(req_id: Any, code: int, message: str, error_code: str | None = None, detail: Any = None) -> dict:
    err: dict[str, Any] = {"code": code, "message": message}
    if error_code is not None:
        err["data"] = {"error_code": error_code, "detail": detail}
    return {"jsonrpc": "2.0", "id": req_id, "error": err}


class StdioServer:
    def __init__(self, gateway: Gateway, name: str = "swarmloop-gateway"):
        self.gateway = gateway
        self.name = name
        self._ids = itertools.count(1)

    def handle(self, message: Any) -> dict | None:
        """Answer one decoded JSON-RPC message; notifications get ``None``."""
        if not isinstance(message, dict) or message.get("jsonrpc") != "2.0" or not isinstance(message.get("method"), str):
            req_id = message.get("id") if isinstance(message, dict) else None
            return _error(req_id, INVALID_REQUEST, "invalid request")
        method = message["method"]
        req_id = message.get("id")
        is_notification = "id" not in message
        params = message.get("params") or {}
        if not isinstance(params, dict):
            return None if is_notification else _error(req_id, INVALID_PARAMS, "params must be an object")

        if method == "initialize":
            result = {
                "protocolVersion": PROTOCOL_VERSION,
                "capabilities": {"tools": {"listChanged": False}},
                "serverInfo": {"name": self.name, "version": "0.1.0"},
            }
        elif method == "ping":
            result = {}
        elif method == "tools/list":
            result = {"tools": [t.to_mcp() for t in self.gateway.list_tools()]}
        elif method == "tools/call":
            name = params.get("name")
            arguments = params.get("arguments", {})
            call_id = f"rpc-{req_id if req_id is not None else next(self._ids)}"
            res = self.gateway.call_tool(ToolCall(call_id, name, arguments))
            if is_notification:
                return None
            if not res.ok:
                code = _ERROR_CODES.get(res.error_code, TOOL_ERROR)
                return _error(req_id, code, res.error_detail or res.error_code, res.error_code, res.error_detail)
            result = {
                "content": [{"type": "text", "text": json.dumps(res.payload, sort_keys=True)}],
                "structuredContent": res.payload,
                "isError": False,
            }
        elif method.startswith("notifications/"):
            return None
        else:
            return None if is_notification else _error(req_id, METHOD_NOT_FOUND, f"unknown method {method}")
        return None if is_notification else {"jsonrpc": "2.0", "id": req_id, "result": result}

    def handle_line(self, line: str) -> str | None:
        line = line.strip()
        if not line:
            return None
        try:
            message = json.loads(line)
        except json.JSONDecodeError as exc:
            return json.dumps(_error(None, PARSE_ERROR, f"parse error: {exc.msg}"))
        reply = self.handle(message)
        return None if reply is None else json.dumps(reply, sort_keys=True)

    def serve(self, instream: IO[str] = sys.stdin, outstream: IO[str] = sys.stdout) -> None:
        for line in instream:
            reply = self.handle_line(line)
            if reply is not None:
                outstream.write(reply + "\n")
                outstream.flush()
