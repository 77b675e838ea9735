"""Per-iteration token accounting.

The run total is the integer sum of prompt and completion tokens over all
iterations.  Prompt tokens split into system, user, history and tool-output
components; completion tokens into free text and tool-call payload.  Components
are attributed only when the reasoner exposes a token counter, and are then
rescaled (largest remainder) so they sum to the recorded aggregate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Callable, Iterable

from swarmloop.agent.types import AgentContext, Message, ReasonerStep

PROMPT_PARTS = ("system", "user", "history", "toolout")
COMPLETION_PARTS = ("text", "toolcall")

Counter = Callable[[str], int]


def estimate_tokens(text: str) -> int:
    """Four characters per token, rounded up."""
    return (len(text) + 3) // 4


def message_text(message: Message) -> str:
    text = message.content
    if message.tool_calls:
        text += json.dumps([[c.tool, c.arguments] for c in message.tool_calls], sort_keys=True)
    return text


def prompt_category(message: Message) -> str:
    return {"system": "system", "user": "user", "assistant": "history", "tool": "toolout"}[message.role]


def context_composition(context: AgentContext | Iterable[Message]) -> dict[str, list[str]]:
    """Text segments of the prompt, grouped by ledger component."""
    messages = context.messages if isinstance(context, AgentContext) else context
    out: dict[str, list[str]] = {k: [] for k in PROMPT_PARTS}
    for m in messages:
        out[prompt_category(m)].append(message_text(m))
    return out


def completion_composition(step: ReasonerStep) -> dict[str, list[str]]:
    text = step.final_text if step.final_text is not None else step.content
    calls = [json.dumps([c.tool, c.arguments], sort_keys=True) for c in step.tool_calls]
    return {"text": [text] if text else [], "toolcall": calls}


def rescale(counts: dict[str, int], total: int) -> dict[str, int] | None:
    """Integer shares of ``total`` proportional to ``counts`` (largest remainder)."""
    s = sum(counts.values())
    if total == s:
        return dict(counts)
    if s == 0:
        return None
    shares = {k: c * total // s for k, c in counts.items()}
    left = total - sum(shares.values())
    order = sorted(counts, key=lambda k: (-(counts[k] * total % s), list(counts).index(k)))
    for k in order[:left]:
        shares[k] += 1
    return shares


@dataclass
class IterationUsage:
    index: int
    prompt: int
    completion: int
    prompt_parts: dict[str, int] | None = None
    completion_parts: dict[str, int] | None = None
    source: str = "reported"  # reported | estimate

    @property
    def total(self) -> int:
        return self.prompt + self.completion

    @property
    def attributed(self) -> bool:
        return self.prompt_parts is not None

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "prompt": self.prompt,
            "completion": self.completion,
            "prompt_parts": self.prompt_parts,
            "completion_parts": self.completion_parts,
            "source": self.source,
        }


class TokenLedger:
    def __init__(self):
        self.records: list[IterationUsage] = []

    @property
    def total(self) -> int:
        return sum(r.total for r in self.records)

    @property
    def prompt_total(self) -> int:
        return sum(r.prompt for r in self.records)

    @property
    def completion_total(self) -> int:
        return sum(r.completion for r in self.records)

    def component_totals(self) -> dict[str, int] | None:
        """Summed components, or ``None`` if any iteration is unattributed."""
        if not self.records or not all(r.attributed and r.completion_parts is not None for r in self.records):
            return None
        out = {k: 0 for k in PROMPT_PARTS + COMPLETION_PARTS}
        for r in self.records:
            for k, v in {**r.prompt_parts, **r.completion_parts}.items():
                out[k] += v
        return out

    def check(self) -> None:
        for r in self.records:
            if r.prompt < 0 or r.completion < 0:
                raise ValueError(f"negative token count at iteration {r.index}")
            for parts, agg in ((r.prompt_parts, r.prompt), (r.completion_parts, r.completion)):
                if parts is not None and (sum(parts.values()) != agg or min(parts.values()) < 0):
                    raise ValueError(f"components do not sum to the aggregate at iteration {r.index}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "T_run": self.total,
            "T_prompt": self.prompt_total,
            "T_completion": self.completion_total,
            "components": self.component_totals(),
            "iterations": [r.to_dict() for r in self.records],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> TokenLedger:
        ledger = cls()
        for row in data.get("iterations", ()):
            ledger.records.append(IterationUsage(**row))
        return ledger


def _split(segments: dict[str, list[str]], aggregate: int | None, counter: Counter | None):
    """Return (aggregate, parts or None, source)."""
    if counter is not None:
        counts = {k: sum(int(counter(s)) for s in v) for k, v in segments.items()}
        if aggregate is None:
            return sum(counts.values()), counts, "estimate"
        return aggregate, rescale(counts, aggregate), "reported"
    if aggregate is None:
        return sum(estimate_tokens(s) for v in segments.values() for s in v), None, "estimate"
    return aggregate, None, "reported"


def record_usage(
    ledger: TokenLedger,
    step: ReasonerStep,
    composition: dict[str, list[str]],
    counter: Counter | None = None,
) -> TokenLedger:
    """Append one iteration; ``composition`` is the prompt as sent for this step."""
    prompt, p_parts, p_src = _split(composition, step.usage.prompt_tokens, counter)
    completion, c_parts, c_src = _split(completion_composition(step), step.usage.completion_tokens, counter)
    source = "estimate" if "estimate" in (p_src, c_src) else "reported"
    ledger.records.append(IterationUsage(len(ledger.records), prompt, completion, p_parts, c_parts, source))
    return ledger
