"""Optional HTTP bindings for Things and the directory (stdlib server).

Routes::

    GET  /things/{id}/properties/{name}
    PUT  /things/{id}/properties/{name}      body: JSON value
    POST /things/{id}/actions/{name}         body: JSON input (optional)
    GET  /td                                 all live TDs
    GET  /td/{id}
    POST /td/{id}   PUT /td/{id}             body: TD JSON
    DELETE /td/{id}
    GET  /search?q=<expression>
"""

from __future__ import annotations

import json
import threading
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any
from urllib.parse import parse_qs, unquote, urlsplit

from swarmloop.directory import ThingDirectory
from swarmloop.errors import (
    DuplicateId,
    MalformedExpression,
    SchemaViolation,
    SwarmError,
    UnknownAffordance,
    UnknownId,
    UnknownThing,
)
from swarmloop.wot import Servient

_STATUS = {
    UnknownThing: HTTPStatus.NOT_FOUND,
    UnknownAffordance: HTTPStatus.NOT_FOUND,
    UnknownId: HTTPStatus.NOT_FOUND,
    DuplicateId: HTTPStatus.CONFLICT,
    SchemaViolation: HTTPStatus.BAD_REQUEST,
    MalformedExpression: HTTPStatus.BAD_REQUEST,
}


def _error(exc: SwarmError) -> tuple[int, dict[str, Any]]:
    status = next((s for cls, s in _STATUS.items() if isinstance(exc, cls)), HTTPStatus.UNPROCESSABLE_ENTITY)
    return int(status), {"error_code": exc.code, "detail": exc.detail}


def route(
    method: str,
    target: str,
    body: Any = None,
    servient: Servient | None = None,
    directory: ThingDirectory | None = None,
) -> tuple[int, Any]:
    """Dispatch one request; returns (status, JSON-ready body)."""
    url = urlsplit(target)
    parts = [unquote(p) for p in url.path.strip("/").split("/") if p]
    try:
        if servient is not None and len(parts) == 4 and parts[0] == "things":
            _, thing, kind, name = parts
            thing = servient.resolve(thing)
            if kind == "properties" and method == "GET":
                return 200, servient.read_property(thing, name)
            if kind == "properties" and method == "PUT":
                return 200, servient.write_property(thing, name, body)
            if kind == "actions" and method == "POST":
                ack = servient.invoke_action(thing, name, body)
                return 201, {"call_id": ack.call_id, "state": ack.state, "output": ack.output}
        if directory is not None and parts[:1] == ["td"]:
            if len(parts) == 1 and method == "GET":
                return 200, directory.list()
            if len(parts) == 2:
                tid = parts[1]
                if method == "GET":
                    return 200, directory.get(tid)
                if method == "DELETE":
                    directory.delete(tid)
                    return 204, None
                if method in ("POST", "PUT"):
                    if not isinstance(body, dict) or body.get("id") != tid:
                        raise SchemaViolation("id", "body id must match the path")
                    if method == "POST":
                        directory.register(body)
                        return 201, {"id": tid}
                    directory.update(body)
                    return 200, {"id": tid}
        if directory is not None and parts == ["search"] and method == "GET":
            q = parse_qs(url.query).get("q")
            if not q:
                raise MalformedExpression("missing q parameter")
            return 200, directory.query(q[0])
    except SwarmError as exc:
        return _error(exc)
    return 404, {"error_code": "NotFound", "detail": f"no route for {method} {url.path}"}


def make_server(
    host: str, port: int, servient: Servient | None = None, directory: ThingDirectory | None = None
) -> ThreadingHTTPServer:
    class Handler(BaseHTTPRequestHandler):
        def _handle(self) -> None:
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length) if length else b""
            try:
                body = json.loads(raw) if raw else None
            except json.JSONDecodeError as exc:
                status, payload = 400, {"error_code": "ParseError", "detail": exc.msg}
            else:
                status, payload = route(self.command, self.path, body, servient, directory)
            data = b"" if payload is None else json.dumps(payload, sort_keys=True).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        do_GET = do_POST = do_PUT = do_DELETE = _handle

        def log_message(self, fmt: str, *args: Any) -> None:  # keep test output quiet
            pass

    return ThreadingHTTPServer((host, port), Handler)


def serve_in_background(server: ThreadingHTTPServer) -> threading.Thread:
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return thread
