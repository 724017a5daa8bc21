"""Shard-local node runtime.

A node owns exactly one training shard. It answers coordinator frames and
only ever emits probability rows, hyperdescriptors and control fields;
shard feature rows and shard labels never leave the node.
"""

from __future__ import annotations

import time

import numpy as np

from ..dataset import LabeledMatrix
from ..learners import LearnerConfig, TrainingError, train_learner
from .protocol import (ERR_NODE_FAILURE, ERR_VERSION_MISMATCH,
                       PROTOCOL_VERSION, Frame, FrameCounter, ProtocolError,
                       encode_frame, format_rows)


class NodeRuntime:
    def __init__(self, node_id: str, shard: LabeledMatrix):
        self.node_id = node_id
        self.shard = shard
        self.counter = FrameCounter(node_id)
        self.cfg: LearnerConfig | None = None
        self.n_classes: int | None = None
        self.model = None
        self.train_time = 0.0
        self.message_log: list[str] = []   # both directions, JSONL lines

    def _emit(self, msg_type: str, payload=None) -> Frame:
        frame = self.counter.frame(msg_type, payload)
        self.message_log.append(encode_frame(frame))
        return frame

    def handle_frame(self, frame: Frame, encoded: str | None = None) -> list[Frame]:
        """Process one coordinator frame, return response frames.

        ``encoded`` lets callers that already hold the wire line avoid a
        second serialisation of bulky payloads.
        """
        self.message_log.append(encoded if encoded is not None
                                else encode_frame(frame))
        handler = {
            "HELLO": self._on_hello,
            "PREDICT_REQ": self._on_predict,
            "GLOBAL_READY": self._on_control,
            "METRICS": self._on_control,
        }.get(frame.type)
        if handler is None:
            raise ProtocolError(
                ERR_NODE_FAILURE,
                f"node {self.node_id}: unexpected frame type {frame.type!r}")
        return handler(frame)

    def _on_hello(self, frame: Frame) -> list[Frame]:
        payload = frame.payload or {}
        if payload.get("protocol") != PROTOCOL_VERSION:
            reply = self._emit("ERROR", {
                "code": ERR_VERSION_MISMATCH,
                "detail": f"node speaks protocol {PROTOCOL_VERSION}, "
                          f"got {payload.get('protocol')!r}"})
            raise ProtocolError(ERR_VERSION_MISMATCH, encode_frame(reply))
        self.cfg = LearnerConfig.from_dict(payload["cfg"])
        self.n_classes = int(payload["n_classes"])
        return [self._emit("HELLO", {"protocol": PROTOCOL_VERSION,
                                     "accepted": True})]

    def _train_if_needed(self) -> list[Frame]:
        if self.model is not None:
            return []
        if self.cfg is None:
            raise ProtocolError(ERR_NODE_FAILURE,
                                f"node {self.node_id}: no HELLO before work")
        shard = LabeledMatrix(self.shard.x, self.shard.y, self.n_classes,
                              self.shard.label_vocab)
        start = time.perf_counter()
        try:
            self.model = train_learner(shard, self.cfg)
        except TrainingError as exc:
            err = self._emit("ERROR", {"code": ERR_NODE_FAILURE,
                                       "detail": str(exc)})
            raise ProtocolError(ERR_NODE_FAILURE, encode_frame(err)) from exc
        self.train_time = time.perf_counter() - start
        descriptor = self.model.describe()
        descriptor["hyperparameters"] = self.cfg.to_dict()
        return [self._emit("TRAIN_DONE", {
            "model": descriptor, "train_time_seconds": self.train_time})]

    def _on_predict(self, frame: Frame) -> list[Frame]:
        out = self._train_if_needed()
        rows = np.array(frame.payload["rows"], dtype=np.float64)
        proba = self.model.predict_proba(rows)
        reply_type = ("PROBA_BATCH" if frame.payload.get("phase") == "train"
                      else "PREDICT_RESP")
        out.append(self._emit(reply_type, {"rows": format_rows(proba)}))
        return out

    def _on_control(self, frame: Frame) -> list[Frame]:
        return []
