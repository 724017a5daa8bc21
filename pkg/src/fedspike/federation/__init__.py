"""Federated orchestration: splitting, nodes, coordinator, wire protocol."""

from .split import SplitPlan, make_split
from .protocol import (Frame, PROTOCOL_VERSION, ProtocolError,
                       decode_frame, encode_frame, payload_kind, round_sig)
from .nodes import NodeRuntime
from .coordinator import (FederationError, FederationRun, InProcessTransport,
                          HttpTransport, assemble_global_input,
                          predict_ensemble, run_federated_training)
from .audit import AuditReport, audit_run
from .service import create_app, serve_node

__all__ = [
    "SplitPlan", "make_split",
    "Frame", "PROTOCOL_VERSION", "ProtocolError",
    "encode_frame", "decode_frame", "payload_kind", "round_sig",
    "NodeRuntime", "create_app", "serve_node",
    "FederationError", "FederationRun", "InProcessTransport", "HttpTransport",
    "assemble_global_input", "predict_ensemble", "run_federated_training",
    "AuditReport", "audit_run",
]
