"""Agent core.  Nothing here imports the simulator or the WoT layer; the
gateway's tool interface is the only way out."""

from swarmloop.agent.guardrails import GuardrailConfig, evaluate_guardrails
from swarmloop.agent.helpers import (
    HelperConfig,
    HelperSuite,
    helper_send_drones_to_positions,
    helper_wait_until,
)
from swarmloop.agent.ledger import TokenLedger, estimate_tokens, record_usage
from swarmloop.agent.loop import Limits, run_mission
from swarmloop.agent.prompts import load_core, load_guardrail, load_user
from swarmloop.agent.remote import RemoteReasoner, remote_reasoner
from swarmloop.agent.scripted import ScriptedReasoner, scripted_reasoner
from swarmloop.agent.types import (
    AgentContext,
    IterationRecord,
    ManualClock,
    Message,
    PromptArtifact,
    Reasoner,
    ReasonerStep,
    RunTrace,
    Usage,
)

__all__ = [
    "AgentContext",
    "GuardrailConfig",
    "HelperConfig",
    "HelperSuite",
    "IterationRecord",
    "Limits",
    "ManualClock",
    "Message",
    "PromptArtifact",
    "Reasoner",
    "ReasonerStep",
    "RemoteReasoner",
    "RunTrace",
    "ScriptedReasoner",
    "TokenLedger",
    "Usage",
    "estimate_tokens",
    "evaluate_guardrails",
    "helper_send_drones_to_positions",
    "helper_wait_until",
    "load_core",
    "load_guardrail",
    "load_user",
    "record_usage",
    "remote_reasoner",
    "run_mission",
    "scripted_reasoner",
]
