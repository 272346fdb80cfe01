from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List


@dataclass
class Report:
    """Outcome of a bounded verification suite: an empty failure list is a pass."""

    name: str
    failures: List[str] = field(default_factory=list)
    checked: int = 0
    stats: Dict[str, object] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def fail(self, msg: str) -> None:
        self.failures.append(msg)

    def summary(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"{self.name:<28} {status:<5} checked={self.checked} failures={len(self.failures)}"
