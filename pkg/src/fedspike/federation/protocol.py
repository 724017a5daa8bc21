"""Wire protocol: versioned JSON frames, one per line in the message log.

Every datum that crosses the node/server boundary travels inside a frame
``{"v": 1, "type": ..., "node": ..., "seq": ..., "payload": ...}``.
Probability rows are serialised at 12 significant digits so that
in-process and networked runs consume bit-identical values.
"""

from __future__ import annotations

import json
from typing import Any, Optional

from pydantic import BaseModel, ValidationError

PROTOCOL_VERSION = 1

MESSAGE_TYPES = ("HELLO", "TRAIN_DONE", "PROBA_BATCH", "GLOBAL_READY",
                 "PREDICT_REQ", "PREDICT_RESP", "METRICS", "ERROR")

# payload classification used by the privacy audit
_PAYLOAD_KINDS = {
    "HELLO": "control",
    "TRAIN_DONE": "control",
    "GLOBAL_READY": "control",
    "PREDICT_REQ": "control",      # carries only coordinator-owned rows
    "PROBA_BATCH": "probability",
    "PREDICT_RESP": "probability",
    "METRICS": "metric",
    "ERROR": "control",
}

ERR_VERSION_MISMATCH = "version_mismatch"
ERR_TIMEOUT = "timeout"
ERR_MALFORMED_FRAME = "malformed_frame"
ERR_INSUFFICIENT_NODES = "insufficient_nodes"
ERR_NODE_FAILURE = "node_failure"


class ProtocolError(RuntimeError):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


class Frame(BaseModel):
    v: int = PROTOCOL_VERSION
    type: str
    node: str
    seq: int
    payload: Any = None


def round_sig(value: float, digits: int = 12) -> float:
    """Round to a fixed number of significant digits (wire precision)."""
    return float(f"{value:.{digits}g}")


def round_sig_array(rows, digits: int = 12) -> "np.ndarray":
    """Vectorised significant-digit rounding for bulk payloads.

    Agrees with ``round_sig`` elementwise. The fast path multiplies by a
    power of ten that is exact as a double (possible while the exponent
    stays within +/-22) and divides it back out; values outside that
    magnitude window take the scalar formatting path, which is exact at
    any scale.
    """
    import numpy as np
    a = np.asarray(rows, dtype=np.float64)
    mag = np.zeros_like(a)
    nz = a != 0
    with np.errstate(divide="ignore"):
        mag[nz] = np.floor(np.log10(np.abs(a[nz])))
    shift = digits - 1 - mag
    fast = nz & (shift >= 0) & (shift <= 22)
    factor = np.where(fast, 10.0 ** np.where(fast, shift, 0.0), 1.0)
    out = np.round(a * factor) / factor
    out[~nz] = 0.0
    slow = nz & ~fast
    if slow.any():
        flat = out.reshape(-1)
        for i in np.nonzero(slow.reshape(-1))[0]:
            flat[i] = round_sig(float(a.reshape(-1)[i]), digits)
    return out


def format_rows(rows) -> list[list[float]]:
    return round_sig_array(rows).tolist()


def encode_frame(frame: Frame) -> str:
    """Compact single-line JSON; newline-delimited in logs and streams."""
    return json.dumps(frame.model_dump(), separators=(",", ":"),
                      sort_keys=True)


def decode_frame(line: str) -> Frame:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(ERR_MALFORMED_FRAME, str(exc)) from exc
    try:
        frame = Frame.model_validate(raw)
    except ValidationError as exc:
        raise ProtocolError(ERR_MALFORMED_FRAME, str(exc)) from exc
    if frame.type not in MESSAGE_TYPES:
        raise ProtocolError(ERR_MALFORMED_FRAME,
                            f"unknown message type {frame.type!r}")
    return frame


def payload_kind(msg_type: str) -> Optional[str]:
    return _PAYLOAD_KINDS.get(msg_type)


class FrameCounter:
    """Strictly increasing per-node sequence numbers."""

    def __init__(self, node_id: str):
        self.node_id = node_id
        self._seq = 0

    def frame(self, msg_type: str, payload=None) -> Frame:
        self._seq += 1
        return Frame(type=msg_type, node=self.node_id, seq=self._seq,
                     payload=payload)
