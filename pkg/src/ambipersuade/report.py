"""JSON report written by every CLI command."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        x = float(x)
    if isinstance(x, float) and not np.isfinite(x):
        return None if np.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


@dataclass
class SolveReport:
    command: list
    game_digest: Optional[str]
    config: dict
    results: dict
    seed: int
    timing: Optional[float] = None
    timestamp: Optional[str] = None
    version: str = "1"
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "version": self.version,
            "command": list(self.command),
            "game_digest": self.game_digest,
            "seed": self.seed,
            "config": self.config,
            "results": self.results,
        }
        if self.timing is not None:
            d["timing"] = self.timing
        if self.timestamp is not None:
            d["timestamp"] = self.timestamp
        if self.extra:
            d["extra"] = self.extra
        return _plain(d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "SolveReport":
        return cls(
            command=d["command"],
            game_digest=d.get("game_digest"),
            config=d.get("config", {}),
            results=d.get("results", {}),
            seed=d.get("seed", 0),
            timing=d.get("timing"),
            timestamp=d.get("timestamp"),
            version=d.get("version", "1"),
            extra=d.get("extra", {}),
        )

    @classmethod
    def from_json(cls, text: str) -> "SolveReport":
        return cls.from_dict(json.loads(text))
