"""Coordinator: drives the single federation round end to end.

The coordinator owns the split plan, the fourth training shard and the
test set. Nodes own tr1..tr3. Everything that crosses the boundary is a
protocol frame and lands in the coordinator's message log; the in-process
and HTTP transports produce identical frame streams for identical seeds.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..dataset import EmbeddedDataset, LabeledMatrix
from ..learners import LearnerConfig
from ..metrics import MetricsReport, classification_metrics
from ..mlp import (MlpArchitecture, MlpModel, TrainConfig, TrainTrace,
                   init_mlp, train_mlp)
from .nodes import NodeRuntime
from .protocol import (ERR_INSUFFICIENT_NODES, ERR_NODE_FAILURE, ERR_TIMEOUT,
                       PROTOCOL_VERSION, Frame, FrameCounter, ProtocolError,
                       encode_frame, format_rows)
from .split import SplitPlan, make_split

NODE_IDS = ("node1", "node2", "node3")


class FederationError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage}: {message}")
        self.stage = stage


class InProcessTransport:
    """Routes frames straight into NodeRuntime objects."""

    def __init__(self, runtimes: dict[str, NodeRuntime]):
        self.runtimes = runtimes

    def node_ids(self):
        return list(self.runtimes)

    def exchange(self, node_id: str, frame: Frame, encoded: str) -> list[Frame]:
        return self.runtimes[node_id].handle_frame(frame, encoded)

    def close(self):
        pass


class HttpTransport:
    """Talks to node processes over HTTP; one frame per POST."""

    def __init__(self, endpoints: dict[str, str], timeout: float = 120.0):
        import httpx
        self.endpoints = {nid: url.rstrip("/")
                          for nid, url in endpoints.items()}
        self._client = httpx.Client(timeout=timeout)

    def node_ids(self):
        return list(self.endpoints)

    def exchange(self, node_id: str, frame: Frame, encoded: str) -> list[Frame]:
        import httpx
        url = f"{self.endpoints[node_id]}/frame"
        try:
            resp = self._client.post(url, content=encoded,
                                     headers={"content-type": "application/json"})
        except httpx.TimeoutException as exc:
            raise ProtocolError(ERR_TIMEOUT,
                                f"node {node_id} timed out") from exc
        except httpx.HTTPError as exc:
            raise ProtocolError(ERR_NODE_FAILURE,
                                f"node {node_id}: {exc}") from exc
        if resp.status_code != 200:
            try:
                err = resp.json().get("error", {})
            except ValueError:
                err = {}
            raise ProtocolError(err.get("code", ERR_NODE_FAILURE),
                                err.get("detail", resp.text))
        return [Frame.model_validate(raw) for raw in resp.json()["frames"]]

    def close(self):
        self._client.close()


@dataclass
class FederationRun:
    plan: SplitPlan
    node_order: tuple
    local_descriptors: list
    global_model: MlpModel
    global_trace: TrainTrace
    message_log: list
    metrics: MetricsReport
    test_proba: np.ndarray
    test_pred: np.ndarray
    local_models: list = field(default_factory=list)  # in-process mode only
    transport: object = None
    session: object = None
    n_classes: int = 0
    train_time_seconds: float = 0.0


def assemble_global_input(batches: list[np.ndarray]) -> np.ndarray:
    """Concatenate per-node probability batches column-wise in node order."""
    rows = {b.shape[0] for b in batches}
    if len(rows) != 1:
        raise FederationError("assemble", f"row counts differ: {sorted(rows)}")
    return np.concatenate(batches, axis=1)


class _Session:
    """One coordinator conversation over a transport, with logging."""

    def __init__(self, transport):
        self.transport = transport
        self.counter = FrameCounter("coordinator")
        self.log: list[str] = []

    def send(self, node_id: str, msg_type: str, payload=None) -> list[Frame]:
        frame = self.counter.frame(msg_type, payload)
        encoded = encode_frame(frame)
        self.log.append(encoded)
        responses = self.transport.exchange(node_id, frame, encoded)
        for resp in responses:
            self.log.append(encode_frame(resp))
        return responses

    def expect(self, responses: list[Frame], msg_type: str) -> Frame:
        for resp in responses:
            if resp.type == msg_type:
                return resp
        got = [r.type for r in responses]
        raise ProtocolError(ERR_NODE_FAILURE,
                            f"expected {msg_type}, got {got}")


def _resolve_cfgs(local_cfg, seed: int) -> list[LearnerConfig]:
    if isinstance(local_cfg, LearnerConfig):
        cfgs = [local_cfg] * len(NODE_IDS)
    else:
        cfgs = list(local_cfg)
        if len(cfgs) != len(NODE_IDS):
            raise FederationError("setup",
                                  f"need {len(NODE_IDS)} local configs")
    return [replace(cfg, seed=seed * 100 + i + 1)
            for i, cfg in enumerate(cfgs)]


def run_federated_training(dataset: EmbeddedDataset | LabeledMatrix,
                           local_cfg,
                           global_cfg: TrainConfig,
                           seed: int,
                           stratified: bool = True,
                           transport=None,
                           plan: Optional[SplitPlan] = None) -> FederationRun:
    """Split, train three shard-local nodes, stack their outputs, train the
    global network on the fourth shard, evaluate on the held-out test set."""
    t_start = time.perf_counter()
    data = (dataset.to_labeled_matrix()
            if isinstance(dataset, EmbeddedDataset) else dataset)
    n, _ = data.x.shape
    c = data.n_classes

    if plan is None:
        try:
            plan = make_split(n, seed, stratified, labels=data.y)
        except Exception as exc:
            raise FederationError("split", str(exc)) from exc

    cfgs = _resolve_cfgs(local_cfg, seed)

    local_models: list = []
    if transport is None:
        runtimes = {}
        for nid, shard_idx in zip(NODE_IDS, plan.shard_idx[:3]):
            shard = data.subset(list(shard_idx))
            runtimes[nid] = NodeRuntime(nid, shard)
        transport = InProcessTransport(runtimes)

    node_ids = transport.node_ids()
    if len(node_ids) < len(NODE_IDS):
        raise ProtocolError(
            ERR_INSUFFICIENT_NODES,
            f"need {len(NODE_IDS)} nodes, have {len(node_ids)}")

    session = _Session(transport)

    # handshake
    for nid, cfg in zip(NODE_IDS, cfgs):
        try:
            responses = session.send(nid, "HELLO", {
                "protocol": PROTOCOL_VERSION, "cfg": cfg.to_dict(),
                "n_classes": c})
        except ProtocolError:
            raise
        except Exception as exc:
            raise FederationError("handshake", str(exc)) from exc
        hello = session.expect(responses, "HELLO")
        if not (hello.payload or {}).get("accepted"):
            raise ProtocolError(ERR_NODE_FAILURE,
                                f"node {nid} rejected the handshake")

    # local training + probability batches on the coordinator shard
    tr4 = data.subset(list(plan.tr4_idx))
    tr4_rows = format_rows(tr4.x)
    descriptors = []
    train_batches = []
    for nid in NODE_IDS:
        responses = session.send(nid, "PREDICT_REQ",
                                 {"phase": "train", "rows": tr4_rows})
        done = session.expect(responses, "TRAIN_DONE")
        descriptors.append(done.payload["model"])
        batch = session.expect(responses, "PROBA_BATCH")
        train_batches.append(np.array(batch.payload["rows"]))

    global_input = assemble_global_input(train_batches)
    arch = MlpArchitecture((global_input.shape[1], 25, 15, c))
    model0 = init_mlp(arch, seed)
    try:
        global_model, trace = train_mlp(model0, global_input, tr4.y,
                                        replace(global_cfg, seed=seed))
    except Exception as exc:
        raise FederationError("global-train", str(exc)) from exc

    for nid in NODE_IDS:
        session.send(nid, "GLOBAL_READY", {"status": "trained"})

    # evaluation on the held-out test set
    test = data.subset(list(plan.test_idx))
    test_rows = format_rows(test.x)
    test_batches = []
    for nid in NODE_IDS:
        responses = session.send(nid, "PREDICT_REQ",
                                 {"phase": "test", "rows": test_rows})
        batch = session.expect(responses, "PREDICT_RESP")
        test_batches.append(np.array(batch.payload["rows"]))
    test_input = assemble_global_input(test_batches)
    test_proba = global_model.predict_proba(test_input)
    test_pred = np.argmax(test_proba, axis=1)

    train_time = time.perf_counter() - t_start
    metrics = classification_metrics(test.y, test_pred, test_proba, c,
                                     train_time_seconds=train_time)

    for nid in NODE_IDS:
        session.send(nid, "METRICS", {
            name: getattr(metrics, name)
            for name in ("accuracy", "f1_weighted", "f1_macro")})

    if isinstance(transport, InProcessTransport):
        local_models = [transport.runtimes[nid].model for nid in NODE_IDS]

    return FederationRun(
        plan=plan, node_order=tuple(NODE_IDS),
        local_descriptors=descriptors,
        global_model=global_model, global_trace=trace,
        message_log=session.log, metrics=metrics,
        test_proba=test_proba, test_pred=test_pred,
        local_models=local_models, transport=transport, session=session,
        n_classes=c, train_time_seconds=train_time)


def predict_ensemble(run: FederationRun, x: np.ndarray):
    """Score new rows through the trained ensemble.

    Each node scores the rows, the batches are stacked in fixed node order
    and pushed through the global network. Returns (proba, labels); label
    ties break toward the lowest class index.
    """
    if run.session is None:
        raise FederationError("predict", "run has no live node session")
    session = run.session
    rows = format_rows(np.asarray(x, dtype=np.float64))
    batches = []
    for nid in run.node_order:
        responses = session.send(nid, "PREDICT_REQ",
                                 {"phase": "test", "rows": rows})
        batch = session.expect(responses, "PREDICT_RESP")
        batches.append(np.array(batch.payload["rows"]))
    stacked = assemble_global_input(batches)
    proba = run.global_model.predict_proba(stacked)
    return proba, np.argmax(proba, axis=1)
