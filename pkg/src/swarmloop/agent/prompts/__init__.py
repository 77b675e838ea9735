"""Plain-text prompt artifacts shipped with the package.

Point ``root`` at another directory with the same layout (``core.txt``,
``user/<kind>.txt``, ``guardrails/<id>.txt``) to swap in different wording.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Any

from swarmloop.agent.types import GUARDRAIL_IDS, PromptArtifact
from swarmloop.errors import UnsupportedMission

MISSION_KINDS = ("coverage_with_tool", "coverage_no_tool", "formation", "irrigation")


def _read(root: str | Path | None, *parts: str) -> str:
    if root is not None:
        return Path(root, *parts).read_text()
    return resources.files(__name__).joinpath(*parts).read_text()


def load_core(root: str | Path | None = None) -> PromptArtifact:
    return PromptArtifact("core", _read(root, "core.txt").strip())


def load_user(kind: str, root: str | Path | None = None, **params: Any) -> PromptArtifact:
    if kind not in MISSION_KINDS:
        raise UnsupportedMission(f"no user prompt for mission kind {kind!r}")
    return PromptArtifact("user", _read(root, "user", f"{kind}.txt").strip().format(**params))


def load_guardrail(guardrail_id: str, root: str | Path | None = None) -> PromptArtifact:
    if guardrail_id not in GUARDRAIL_IDS:
        raise ValueError(f"unknown guardrail {guardrail_id!r}")
    text = _read(root, "guardrails", f"{guardrail_id}.txt").strip()
    return PromptArtifact("guardrail", text, guardrail_id)
