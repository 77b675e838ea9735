"""Data carried through the reasoning-execution loop."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Protocol, runtime_checkable

from swarmloop.gateway.tools import ToolCall, ToolDefinition, ToolResult

GUARDRAIL_IDS = ("unverified_completion", "stalled_execution", "unsafe_termination")
ROLES = ("system", "user", "assistant", "tool")
TERMINATIONS = ("completed", "infeasible", "iteration_cap", "error")
INFEASIBLE_PREFIX = "INFEASIBLE:"


@dataclass(frozen=True)
class PromptArtifact:
    kind: str  # core | user | guardrail
    text: str
    guardrail_id: str | None = None

    def __post_init__(self):
        if self.kind not in ("core", "user", "guardrail"):
            raise ValueError(f"unknown prompt kind {self.kind!r}")
        if (self.kind == "guardrail") != (self.guardrail_id is not None):
            raise ValueError("guardrail_id is set exactly for guardrail artifacts")
        if self.guardrail_id is not None and self.guardrail_id not in GUARDRAIL_IDS:
            raise ValueError(f"unknown guardrail {self.guardrail_id!r}")


@dataclass(frozen=True)
class Message:
    role: str
    content: str = ""
    tool_calls: tuple[ToolCall, ...] = ()
    call_id: str | None = None
    # which prompt artifact produced a system message; used for token attribution
    source: str | None = None

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if (self.role == "tool") != (self.call_id is not None):
            raise ValueError("call_id is set exactly for tool messages")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"role": self.role, "content": self.content}
        if self.tool_calls:
            out["tool_calls"] = [c.to_dict() for c in self.tool_calls]
        if self.call_id is not None:
            out["call_id"] = self.call_id
        if self.source is not None:
            out["source"] = self.source
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Message:
        return cls(
            data["role"],
            data.get("content", ""),
            tuple(ToolCall.from_dict(c) for c in data.get("tool_calls", ())),
            data.get("call_id"),
            data.get("source"),
        )


class AgentContext:
    """Append-only conversation plus bookkeeping for guardrail injections."""

    def __init__(self, core: PromptArtifact, user: PromptArtifact):
        if core.kind != "core" or user.kind != "user":
            raise ValueError("context starts from a core and a user artifact")
        self.core = core
        self.user = user
        self._messages: list[Message] = [
            Message("system", core.text, source="core"),
            Message("user", user.text),
        ]
        self._open_calls: Counter[str] = Counter()
        self.iteration = 0
        self.injected_guardrails: list[str] = []

    @property
    def messages(self) -> tuple[Message, ...]:
        return tuple(self._messages)

    def append(self, message: Message) -> None:
        if message.role == "tool":
            if self._open_calls[message.call_id] <= 0:
                raise ValueError(f"tool message for unknown call {message.call_id!r}")
            self._open_calls[message.call_id] -= 1
        if message.role == "assistant":
            self._open_calls.update(c.call_id for c in message.tool_calls)
        self._messages.append(message)

    def inject(self, artifact: PromptArtifact) -> None:
        if artifact.kind != "guardrail":
            raise ValueError("only guardrail artifacts are injected at runtime")
        self.injected_guardrails.append(artifact.guardrail_id)
        self._messages.append(Message("system", artifact.text, source=f"guardrail:{artifact.guardrail_id}"))


@dataclass
class Usage:
    prompt_tokens: int | None = None
    completion_tokens: int | None = None

    def to_dict(self) -> dict[str, Any]:
        return {"prompt_tokens": self.prompt_tokens, "completion_tokens": self.completion_tokens}


@dataclass
class ReasonerStep:
    tool_calls: list[ToolCall] = field(default_factory=list)
    final_text: str | None = None
    usage: Usage = field(default_factory=Usage)
    content: str = ""  # free text emitted alongside tool calls
    # call_id -> reason, for calls whose arguments could not be decoded
    malformed: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if (self.final_text is not None) == bool(self.tool_calls):
            raise ValueError("a step either calls tools or concludes with final_text")
        if not set(self.malformed) <= {c.call_id for c in self.tool_calls}:
            raise ValueError("malformed entries must name calls of this step")

    @property
    def is_final(self) -> bool:
        return self.final_text is not None

    def to_dict(self) -> dict[str, Any]:
        return {
            "tool_calls": [c.to_dict() for c in self.tool_calls],
            "final_text": self.final_text,
            "content": self.content,
            "usage": self.usage.to_dict(),
            "malformed": dict(self.malformed),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ReasonerStep:
        return cls(
            [ToolCall.from_dict(c) for c in data["tool_calls"]],
            data.get("final_text"),
            Usage(**data.get("usage", {})),
            data.get("content", ""),
            dict(data.get("malformed", {})),
        )


@runtime_checkable
class Reasoner(Protocol):
    def step(self, context: AgentContext, tools: list[ToolDefinition]) -> ReasonerStep: ...


class ToolPort(Protocol):
    """What the agent sees of the gateway."""

    def list_tools(self) -> list[ToolDefinition]: ...

    def call_tool(self, call: ToolCall) -> ToolResult: ...


class Clock(Protocol):
    def now(self) -> float: ...

    def sleep(self, seconds: float) -> None: ...


class ManualClock:
    """Clock that only moves when slept on; for runs without a world."""

    def __init__(self, start: float = 0.0):
        self._t = start

    def now(self) -> float:
        return self._t

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            self._t += seconds


@dataclass
class IterationRecord:
    index: int
    step: ReasonerStep
    results: list[ToolResult] = field(default_factory=list)
    guardrails: list[str] = field(default_factory=list)
    probes: list[ToolResult] = field(default_factory=list)
    sim_time: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "step": self.step.to_dict(),
            "results": [r.to_dict() for r in self.results],
            "guardrails": list(self.guardrails),
            "probes": [r.to_dict() for r in self.probes],
            "sim_time": self.sim_time,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> IterationRecord:
        return cls(
            data["index"],
            ReasonerStep.from_dict(data["step"]),
            [ToolResult.from_dict(r) for r in data["results"]],
            list(data["guardrails"]),
            [ToolResult.from_dict(r) for r in data.get("probes", ())],
            data.get("sim_time", 0.0),
        )


@dataclass
class RunTrace:
    mission_id: str
    iterations: list[IterationRecord] = field(default_factory=list)
    termination: str = "error"
    detail: str = ""
    final_text: str | None = None
    sim_start: float = 0.0
    sim_end: float = 0.0
    ledger: dict[str, Any] = field(default_factory=dict)
    # wall time is machine-dependent, so it stays out of the canonical form
    wall_time_s: float = 0.0

    def __post_init__(self):
        if self.termination not in TERMINATIONS:
            raise ValueError(f"unknown termination {self.termination!r}")

    @property
    def sim_time_s(self) -> float:
        return self.sim_end - self.sim_start

    def tool_pairs(self) -> list[tuple[ToolCall, ToolResult]]:
        pairs = []
        for rec in self.iterations:
            pairs.extend(zip(rec.step.tool_calls, rec.results))
        return pairs

    def to_dict(self) -> dict[str, Any]:
        return {
            "mission_id": self.mission_id,
            "iterations": [r.to_dict() for r in self.iterations],
            "termination": self.termination,
            "detail": self.detail,
            "final_text": self.final_text,
            "sim_start": self.sim_start,
            "sim_end": self.sim_end,
            "ledger": self.ledger,
        }

    def serialize(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RunTrace:
        return cls(
            data["mission_id"],
            [IterationRecord.from_dict(r) for r in data["iterations"]],
            data["termination"],
            data.get("detail", ""),
            data.get("final_text"),
            data.get("sim_start", 0.0),
            data.get("sim_end", 0.0),
            data.get("ledger", {}),
        )
