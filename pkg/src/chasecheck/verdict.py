from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional

ACYCLIC = "acyclic"
NOT_ACYCLIC = "not-acyclic"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class Verdict:
    notion: str
    outcome: str
    witness: Optional[Dict[str, Any]] = None
    stats: Dict[str, Any] = field(default_factory=dict)
    mode: str = "universal"
    equality: str = "none"

    @property
    def acyclic(self) -> bool:
        return self.outcome == ACYCLIC

    @property
    def known(self) -> bool:
        return self.outcome != UNKNOWN

    def with_(self, **changes) -> "Verdict":
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        stats = {"facts": None, "terms": None, "depth": None, "steps": None, "elapsedMs": None}
        stats.update(self.stats)
        return {
            "notion": self.notion,
            "mode": self.mode,
            "equality": self.equality,
            "verdict": self.outcome,
            "witness": self.witness,
            "stats": stats,
        }


def verdict(notion: str, ok: bool, witness: Optional[Dict[str, Any]] = None, **stats) -> Verdict:
    return Verdict(notion, ACYCLIC if ok else NOT_ACYCLIC, None if ok else witness, stats)
