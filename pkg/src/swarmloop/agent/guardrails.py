"""Runtime guardrails, evaluated after every iteration."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

from swarmloop.agent.prompts import load_guardrail
from swarmloop.agent.types import IterationRecord, PromptArtifact, ToolPort
from swarmloop.gateway.tools import ToolCall, ToolResult

DRONE_STATE_PROPERTIES = frozenset({"state", "armed", "airborne", "mode", "position"})
WAIT_HELPERS = frozenset({"wait_until_armed", "wait_until_arrived", "wait_until_landed"})
UAV_QUERY = "$.actions.takeoff"

Probe = Callable[[], list[dict[str, Any]]]


@dataclass(frozen=True)
class GuardrailConfig:
    stall_window: int = 3  # N identical non-progressing iterations
    verify_lookback: int = 5  # K iterations searched for a drone state read
    max_firings: int = 3
    prompt_root: str | Path | None = None

    def __post_init__(self):
        if self.stall_window < 2 or self.verify_lookback < 1 or self.max_firings < 1:
            raise ValueError("guardrail thresholds out of range")


def _strip_ids(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _strip_ids(v) for k, v in value.items() if k != "call_id"}
    if isinstance(value, list):
        return [_strip_ids(v) for v in value]
    return value


def _signature(record: IterationRecord) -> str:
    rows = [
        json.dumps(
            [call.tool, call.arguments, result.status, _strip_ids(result.payload), result.error_code, result.error_detail],
            sort_keys=True,
        )
        for call, result in zip(record.step.tool_calls, record.results)
    ]
    return "\n".join(sorted(rows))


def is_state_read(call: ToolCall, result: ToolResult) -> bool:
    if not result.ok:
        return False
    if call.tool in WAIT_HELPERS:
        return True
    return call.tool == "read_web_thing_property" and call.arguments.get("property") in DRONE_STATE_PROPERTIES


def stalled(history: Sequence[IterationRecord], window: int) -> bool:
    """The last ``window`` tool iterations since the previous stall warning are identical."""
    if len(history) < window:
        return False
    tail = history[-window:]
    if any(r.step.is_final for r in tail):
        return False
    if any("stalled_execution" in r.guardrails for r in tail[:-1]):
        return False
    first = _signature(tail[0])
    return all(_signature(r) == first for r in tail[1:])


def verified_recently(history: Sequence[IterationRecord], lookback: int) -> bool:
    recent = history[-(lookback + 1) : -1] if history else []
    return any(is_state_read(c, r) for rec in recent for c, r in zip(rec.step.tool_calls, rec.results))


def evaluate_guardrails(
    history: Sequence[IterationRecord],
    probe: Probe | None = None,
    config: GuardrailConfig = GuardrailConfig(),
) -> list[PromptArtifact]:
    """Guardrails firing for the last record of ``history``.

    ``probe`` returns the current state of every drone (dicts with ``armed``
    and ``airborne``); it is only consulted when the step concludes.
    """
    if not history:
        return []
    latest = history[-1]
    fired = []
    if latest.step.is_final:
        if not verified_recently(history, config.verify_lookback):
            fired.append("unverified_completion")
        if probe is not None and any(s.get("armed") or s.get("airborne") for s in probe()):
            fired.append("unsafe_termination")
    elif stalled(history, config.stall_window):
        fired.append("stalled_execution")
    return [load_guardrail(g, config.prompt_root) for g in fired]


def gateway_probe(gateway: ToolPort, record: IterationRecord) -> Probe:
    """Probe that reads every UAV's state through the gateway, logging into ``record.probes``."""

    def probe() -> list[dict[str, Any]]:
        prefix = f"guard-{record.index}"
        listing = gateway.call_tool(ToolCall(f"{prefix}-list", "list_web_things", {"query": UAV_QUERY}))
        record.probes.append(listing)
        if not listing.ok:
            return []
        states = []
        for k, thing in enumerate(listing.payload["things"]):
            res = gateway.call_tool(
                ToolCall(f"{prefix}-{k}", "read_web_thing_property", {"thing": thing["id"], "property": "state"})
            )
            record.probes.append(res)
            if res.ok:
                states.append(res.payload["value"])
        return states

    return probe
