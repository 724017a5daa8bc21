"""FastAPI wrapper exposing a node runtime to a remote coordinator.

One frame per POST; responses carry the node's reply frames. Protocol
failures map to structured error bodies with stable codes so the
coordinator can distinguish a version mismatch from a malformed frame or
a node-side training failure.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .nodes import NodeRuntime
from .protocol import (ERR_MALFORMED_FRAME, PROTOCOL_VERSION, Frame,
                       ProtocolError, decode_frame)


class FrameBatch(BaseModel):
    frames: list[Frame]


def create_app(runtime: NodeRuntime, log_path=None) -> FastAPI:
    app = FastAPI(title=f"fedspike node {runtime.node_id}")

    def flush_log():
        if log_path is not None:
            with open(log_path, "w") as fh:
                for line in runtime.message_log:
                    fh.write(line + "\n")

    @app.get("/health")
    def health():
        return {"status": "ok", "node": runtime.node_id,
                "protocol": PROTOCOL_VERSION,
                "shard_rows": int(runtime.shard.x.shape[0])}

    @app.post("/frame", response_model=FrameBatch)
    async def frame(request: Request):
        body = await request.body()
        try:
            incoming = decode_frame(body.decode("utf-8"))
        except ProtocolError as exc:
            return JSONResponse(status_code=400, content={
                "error": {"code": exc.code, "detail": str(exc)}})
        try:
            responses = runtime.handle_frame(incoming,
                                             body.decode("utf-8").strip())
        except ProtocolError as exc:
            flush_log()
            return JSONResponse(status_code=400, content={
                "error": {"code": exc.code, "detail": str(exc)}})
        flush_log()
        return FrameBatch(frames=responses)

    return app


def serve_node(listen: str, runtime: NodeRuntime, log_path=None) -> None:
    """Blocking uvicorn server; ``listen`` is ``host:port``."""
    import uvicorn
    host, _, port = listen.rpartition(":")
    app = create_app(runtime, log_path)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port),
                log_level="warning")
