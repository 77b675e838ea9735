"""Reasoner backed by a chat-completions endpoint with tool calling."""

from __future__ import annotations

import json
import logging
import os
import time
from typing import Any, Callable

import httpx

from swarmloop.agent.types import AgentContext, Message, ReasonerStep, Usage
from swarmloop.errors import ReasonerFailure
from swarmloop.gateway.tools import ToolCall, ToolDefinition

log = logging.getLogger(__name__)

ENV_ENDPOINT = "SWARMLOOP_ENDPOINT"
ENV_MODEL = "SWARMLOOP_MODEL"
ENV_API_KEY = "SWARMLOOP_API_KEY"
TRANSIENT_STATUS = frozenset({408, 409, 429, 500, 502, 503, 504})


def to_wire(message: Message) -> dict[str, Any]:
    if message.role == "tool":
        return {"role": "tool", "tool_call_id": message.call_id, "content": message.content}
    out: dict[str, Any] = {"role": message.role, "content": message.content}
    if message.tool_calls:
        out["tool_calls"] = [
            {
                "id": c.call_id,
                "type": "function",
                "function": {"name": c.tool, "arguments": json.dumps(c.arguments, sort_keys=True)},
            }
            for c in message.tool_calls
        ]
    return out


def parse_response(body: Any) -> ReasonerStep:
    """Turn one chat-completion response into a step; bad arguments are flagged, not fatal."""
    try:
        message = body["choices"][0]["message"]
    except (KeyError, IndexError, TypeError) as exc:
        raise ReasonerFailure(f"response has no message: {exc!r}") from exc
    calls, malformed = [], {}
    for k, raw in enumerate(message.get("tool_calls") or ()):
        fn = raw.get("function") or {}
        call_id = raw.get("id") or f"call-{k}"
        name = fn.get("name") or ""
        text = fn.get("arguments")
        try:
            args = json.loads(text) if isinstance(text, str) and text.strip() else (text or {})
        except json.JSONDecodeError as exc:
            args, malformed[call_id] = {}, f"arguments are not valid JSON: {exc.msg}"
        else:
            if not isinstance(args, dict):
                args, malformed[call_id] = {}, "arguments must be a JSON object"
        calls.append(ToolCall(call_id, name, args))
    usage_raw = body.get("usage") or {}
    usage = Usage(usage_raw.get("prompt_tokens"), usage_raw.get("completion_tokens"))
    content = message.get("content") or ""
    if calls:
        return ReasonerStep(tool_calls=calls, usage=usage, content=content, malformed=malformed)
    return ReasonerStep(final_text=content, usage=usage)


class RemoteReasoner:
    def __init__(
        self,
        endpoint: str,
        model_name: str,
        credentials: str | None = None,
        *,
        seed: int | None = None,
        retries: int = 3,
        backoff_s: float = 0.5,
        timeout_s: float = 120.0,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        url = endpoint.rstrip("/")
        self.url = url if url.endswith("/chat/completions") else url + "/chat/completions"
        self.model = model_name
        self.seed = seed
        self.retries = retries
        self.backoff_s = backoff_s
        self._sleep = sleep
        headers = {"Authorization": f"Bearer {credentials}"} if credentials else {}
        self._client = httpx.Client(headers=headers, timeout=timeout_s, transport=transport)

    def close(self) -> None:
        self._client.close()

    def request_body(self, context: AgentContext, tools: list[ToolDefinition]) -> dict[str, Any]:
        body: dict[str, Any] = {
            "model": self.model,
            "messages": [to_wire(m) for m in context.messages],
        }
        if tools:
            body["tools"] = [t.to_openai() for t in tools]
            body["tool_choice"] = "auto"
        if self.seed is not None:
            body["seed"] = self.seed
        return body

    def step(self, context: AgentContext, tools: list[ToolDefinition]) -> ReasonerStep:
        body = self.request_body(context, tools)
        last = ""
        for attempt in range(self.retries + 1):
            if attempt:
                self._sleep(self.backoff_s * 2 ** (attempt - 1))
            try:
                resp = self._client.post(self.url, json=body)
            except httpx.TransportError as exc:
                last = f"transport error: {exc!r}"
                log.warning("attempt %d: %s", attempt + 1, last)
                continue
            if resp.status_code in TRANSIENT_STATUS:
                last = f"HTTP {resp.status_code}"
                log.warning("attempt %d: %s", attempt + 1, last)
                continue
            if resp.status_code >= 400:
                raise ReasonerFailure(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                payload = resp.json()
            except ValueError as exc:
                raise ReasonerFailure(f"response is not JSON: {exc}") from exc
            return parse_response(payload)
        raise ReasonerFailure(f"gave up after {self.retries + 1} attempts: {last}")


def remote_reasoner(
    endpoint: str | None = None,
    model_name: str | None = None,
    credentials: str | None = None,
    **kwargs: Any,
) -> RemoteReasoner:
    """Build a remote reasoner; unset arguments fall back to environment variables."""
    endpoint = endpoint or os.environ.get(ENV_ENDPOINT)
    model_name = model_name or os.environ.get(ENV_MODEL)
    credentials = credentials or os.environ.get(ENV_API_KEY)
    if not endpoint or not model_name:
        raise ReasonerFailure(f"set {ENV_ENDPOINT} and {ENV_MODEL} (or pass endpoint and model)")
    return RemoteReasoner(endpoint, model_name, credentials, **kwargs)
