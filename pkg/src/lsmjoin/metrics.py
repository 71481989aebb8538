"""Run metrics: cumulative output timeline plus per-stream I/O counters.

Serialized as JSON lines: one object per sample, final summary object
last. Everything except the wall-clock `t_ms` fields is deterministic
under a fixed seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass
class MetricsReport:
    mode: str
    samples: list[dict] = field(default_factory=list)
    outputs: int = 0
    events: int = 0
    rejected_events: int = 0
    intermediate_rows: int = 0
    aborted: bool = False
    per_stream: dict[str, dict[str, int]] = field(default_factory=dict)
    elapsed_ms: int = 0

    def add_sample(self, t_ms: int, outputs: int, per_stream: dict[str, dict[str, int]]) -> None:
        if self.samples and outputs < self.samples[-1]["outputs"]:
            raise ValueError("cumulative outputs must be non-decreasing")
        self.samples.append({"t_ms": t_ms, "outputs": outputs, "per_stream": per_stream})

    def summary(self) -> dict:
        return {
            "t_ms": self.elapsed_ms,
            "outputs": self.outputs,
            "events": self.events,
            "rejected_events": self.rejected_events,
            "intermediate_rows": self.intermediate_rows,
            "aborted": self.aborted,
            "mode": self.mode,
            "per_stream": self.per_stream,
            "final": True,
        }

    def to_jsonl(self) -> str:
        lines = [json.dumps(s, sort_keys=True) for s in self.samples]
        lines.append(json.dumps(self.summary(), sort_keys=True))
        return "\n".join(lines) + "\n"

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_jsonl())

    def deterministic_view(self) -> dict:
        """Everything except wall-clock timing, for run-to-run comparison."""
        return {
            "mode": self.mode,
            "outputs": self.outputs,
            "events": self.events,
            "rejected_events": self.rejected_events,
            "intermediate_rows": self.intermediate_rows,
            "aborted": self.aborted,
            "per_stream": self.per_stream,
            "samples": [
                {"outputs": s["outputs"], "per_stream": s["per_stream"]} for s in self.samples
            ],
        }


def read_jsonl(path: str) -> list[dict]:
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]
