"""Single-run artifacts: config snapshot + metrics + provenance, as one JSON record."""

from __future__ import annotations

import json
import os
import time
from dataclasses import asdict, dataclass
from typing import Any

from .. import __version__
from ..macsim import SimConfig, SimMetrics, run_simulation

RUN_FORMAT = {"format": "safecs-run", "version": 1}


def _timestamp() -> str:
    # SOURCE_DATE_EPOCH pins the stamp for reproducible artifacts
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = float(epoch) if epoch else time.time()
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


@dataclass
class RunArtifact:
    config: dict[str, Any]
    metrics: dict[str, Any]
    provenance: dict[str, Any]

    @classmethod
    def build(cls, cfg: SimConfig, metrics: SimMetrics) -> "RunArtifact":
        return cls(
            cfg.to_dict(),
            json.loads(metrics.to_json()),
            {"tool": "safecs", "version": __version__, "seed": cfg.seed, "timestamp": _timestamp()},
        )

    def to_json(self) -> str:
        return json.dumps({**RUN_FORMAT, **asdict(self)}, sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunArtifact":
        d = json.loads(text)
        if d.get("format") != RUN_FORMAT["format"]:
            raise ValueError("not a safecs run artifact")
        if d.get("version") != RUN_FORMAT["version"]:
            raise ValueError(f"unsupported run artifact version {d.get('version')!r}")
        return cls(d["config"], d["metrics"], d["provenance"])

    def sim_config(self) -> SimConfig:
        return SimConfig.from_dict(self.config)

    def reproduce(self) -> SimMetrics:
        return run_simulation(self.sim_config()).metrics
