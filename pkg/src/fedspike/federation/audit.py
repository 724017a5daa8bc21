"""Privacy audit: prove no shard data crossed the node boundary.

Two checks over the serialized message log:
  1. every frame's type maps to an allowed payload kind
     (probability | control | metric);
  2. a byte-subsequence scan finds no tr1/tr2/tr3 feature row, serialized
     exactly as the wire would serialize it, in any node-emitted frame.

The scan covers frames sent by nodes: those are the only messages that could
leak shard data.  Coordinator-sent frames carry the coordinator's own query
rows, which may coincidentally duplicate a shard row (identical sequences do
occur), so they prove nothing about node behaviour.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .protocol import decode_frame, payload_kind, round_sig_array


@dataclass
class AuditReport:
    ok: bool
    n_frames: int
    payload_kinds: dict
    violations: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "n_frames": self.n_frames,
                "payload_kinds": self.payload_kinds,
                "violations": self.violations}


def _row_fingerprint(row: np.ndarray) -> str:
    """A feature row as it would appear inside any frame payload."""
    return json.dumps(round_sig_array(row).tolist(),
                      separators=(",", ":"))[1:-1]   # strip brackets


def audit_run(message_lines: list[str],
              shard_rows: np.ndarray | None = None) -> AuditReport:
    """Audit a message log (JSONL lines) against optional shard features."""
    kinds: dict[str, int] = {}
    violations: list[str] = []
    node_lines: list[str] = []
    for i, line in enumerate(message_lines):
        frame = decode_frame(line)
        if frame.node != "coordinator":
            node_lines.append(line)
        kind = payload_kind(frame.type)
        if kind is None:
            violations.append(
                f"frame {i}: type {frame.type!r} has no allowed payload kind")
            continue
        kinds[kind] = kinds.get(kind, 0) + 1

    if shard_rows is not None and len(shard_rows):
        blob = "\n".join(node_lines)
        for j, row in enumerate(np.asarray(shard_rows, dtype=np.float64)):
            if _row_fingerprint(row) in blob:
                violations.append(
                    f"shard feature row {j} found in the message log")

    return AuditReport(ok=not violations, n_frames=len(message_lines),
                       payload_kinds=kinds, violations=violations)
