"""The reasoning-execution loop."""

from __future__ import annotations

import logging
import time
from collections import Counter
from dataclasses import dataclass
from typing import Any

from swarmloop.agent.guardrails import GuardrailConfig, evaluate_guardrails, gateway_probe
from swarmloop.agent.ledger import TokenLedger, context_composition, record_usage
from swarmloop.agent.prompts import load_core
from swarmloop.agent.types import (
    INFEASIBLE_PREFIX,
    AgentContext,
    Clock,
    IterationRecord,
    ManualClock,
    Message,
    PromptArtifact,
    Reasoner,
    RunTrace,
    ToolPort,
)
from swarmloop.errors import MalformedToolCall, ReasonerFailure
from swarmloop.gateway.tools import DEFAULT_PAYLOAD_CAP, ToolResult

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Limits:
    max_iterations: int = 80
    sim_timeout: float = 1800.0
    # simulated seconds that elapse per iteration, standing in for inference latency
    iteration_dt: float = 5.0

    def __post_init__(self):
        if self.max_iterations < 1 or self.sim_timeout <= 0 or self.iteration_dt < 0:
            raise ValueError("limits out of range")


def _payload_cap(gateway: Any) -> int:
    config = getattr(gateway, "config", None)
    return getattr(config, "payload_cap", DEFAULT_PAYLOAD_CAP)


def run_mission(
    mission_id: str,
    user_prompt: PromptArtifact | str,
    reasoner: Reasoner,
    gateway: ToolPort,
    limits: Limits = Limits(),
    clock: Clock | None = None,
    core_prompt: PromptArtifact | None = None,
    guardrails: GuardrailConfig = GuardrailConfig(),
) -> RunTrace:
    """Drive ``reasoner`` against ``gateway`` until it concludes or a limit trips.

    Raises ``ReasonerFailure`` (with the partial trace attached) when the
    reasoner itself breaks; every other outcome is recorded as a termination.
    """
    clock = clock or ManualClock()
    if isinstance(user_prompt, str):
        user_prompt = PromptArtifact("user", user_prompt)
    context = AgentContext(core_prompt or load_core(guardrails.prompt_root), user_prompt)
    counter = getattr(reasoner, "count_tokens", None)
    cap = _payload_cap(gateway)
    tools = gateway.list_tools()
    ledger = TokenLedger()
    firings: Counter[str] = Counter()
    trace = RunTrace(mission_id, sim_start=clock.now())
    wall_start = time.perf_counter()

    def finish(termination: str, detail: str = "") -> RunTrace:
        trace.termination = termination
        trace.detail = detail
        trace.sim_end = clock.now()
        trace.ledger = ledger.to_dict()
        trace.wall_time_s = time.perf_counter() - wall_start
        return trace

    for i in range(limits.max_iterations):
        if clock.now() - trace.sim_start >= limits.sim_timeout:
            return finish("iteration_cap", f"simulated time limit of {limits.sim_timeout} s reached")
        context.iteration = i
        composition = context_composition(context)
        try:
            step = reasoner.step(context, tools)
        except Exception as exc:
            finish("error", f"reasoner failed: {exc}")
            if isinstance(exc, ReasonerFailure):
                exc.trace = trace
                raise
            raise ReasonerFailure(repr(exc), trace=trace) from exc
        record_usage(ledger, step, composition, counter)
        record = IterationRecord(i, step, sim_time=clock.now())
        trace.iterations.append(record)
        context.append(Message("assistant", step.final_text or step.content, tuple(step.tool_calls)))

        for call in step.tool_calls:
            if call.call_id in step.malformed:
                err = MalformedToolCall(step.malformed[call.call_id])
                result = ToolResult(call.call_id, "error", None, err.code, err.detail)
            else:
                result = gateway.call_tool(call)
            record.results.append(result)
            context.append(Message("tool", result.to_content(cap), call_id=call.call_id))

        probe = gateway_probe(gateway, record) if step.is_final else None
        for artifact in evaluate_guardrails(trace.iterations, probe, guardrails):
            gid = artifact.guardrail_id
            firings[gid] += 1
            if firings[gid] > guardrails.max_firings:
                trace.final_text = step.final_text
                return finish("infeasible", f"guardrail {gid} fired more than {guardrails.max_firings} times")
            record.guardrails.append(gid)
            context.inject(artifact)
            log.debug("iteration %d: injected %s", i, gid)

        if step.is_final and not record.guardrails:
            trace.final_text = step.final_text
            if step.final_text.lstrip().startswith(INFEASIBLE_PREFIX):
                return finish("infeasible", "reasoner declared the mission infeasible")
            return finish("completed")
        clock.sleep(limits.iteration_dt)

    return finish("iteration_cap", f"max_iterations={limits.max_iterations} reached")
