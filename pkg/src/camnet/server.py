"""Websocket service exposing a design session to interactive clients.

Protocol: the client opens ``/ws``, sends a ``hello`` JSON message, and
receives in order a ``hello`` JSON reply, a ``points`` JSON header
followed by one binary message of float32 xyz triples, and one binary
volume frame. After that, every committed mutation is broadcast to all
clients as a ``status`` JSON message plus a binary volume frame.

All mutations funnel through one worker thread, so the session only ever
has a single writer; bursts of ``move_camera`` messages for the same
camera are coalesced to the newest pose before they are applied.
"""

from __future__ import annotations

import asyncio
import json
import logging
import queue
import threading
from contextlib import asynccontextmanager
from pathlib import Path

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .camera import CameraSpec, Pose
from .session import DesignSession, TransferFunction

log = logging.getLogger(__name__)


def _pose_from_message(cmd: dict) -> Pose:
    if "position" not in cmd:
        raise ValueError("camera message needs 'position'")
    if cmd.get("quaternion") is not None:
        return Pose(cmd["position"], cmd["quaternion"])
    if cmd.get("look_at") is not None:
        return Pose.look_at(cmd["position"], cmd["look_at"])
    raise ValueError("camera message needs 'quaternion' or 'look_at'")


def _spec_from_message(cmd: dict, default: CameraSpec) -> CameraSpec:
    doc = cmd.get("spec")
    if not doc:
        return default
    return CameraSpec(
        doc.get("perspective_angle", default.perspective_angle),
        tuple(doc.get("resolution", default.resolution)),
        doc.get("min_range", default.min_range),
        doc.get("max_range", default.max_range),
    )


class SessionServer:
    """Owns the command queue, the worker thread, and the client registry."""

    def __init__(self, session: DesignSession, default_spec: CameraSpec | None = None,
                 export_dir=None):
        self.session = session
        self.export_dir = Path(export_dir) if export_dir else None
        views = session.viewpoints()
        self.default_spec = default_spec or (views[0].spec if views else CameraSpec())
        self.commands: queue.Queue = queue.Queue()
        self.clients: set[asyncio.Queue] = set()
        self._clients_lock = threading.Lock()
        self.loop: asyncio.AbstractEventLoop | None = None
        self._worker: threading.Thread | None = None
        self.coalesced_moves = 0

    # ------------------------------------------------------------ lifecycle

    def start(self, loop: asyncio.AbstractEventLoop) -> None:
        self.loop = loop
        self._worker = threading.Thread(
            target=self._run, name="session-worker", daemon=True
        )
        self._worker.start()

    def stop(self) -> None:
        self.commands.put(None)
        if self._worker is not None:
            self._worker.join(timeout=30)
        if self.export_dir is not None:
            self.export_dir.mkdir(parents=True, exist_ok=True)
            out = self.export_dir / f"{self.session.name}-solution.json"
            out.write_text(json.dumps(self.session.export_solution(), indent=2) + "\n")
            log.info("session flushed to %s", out)

    # --------------------------------------------------------------- clients

    def register(self, q: asyncio.Queue) -> None:
        with self._clients_lock:
            self.clients.add(q)

    def unregister(self, q: asyncio.Queue) -> None:
        with self._clients_lock:
            self.clients.discard(q)

    def submit(self, cmd: dict, reply: asyncio.Queue) -> None:
        self.commands.put((cmd, reply))

    # ---------------------------------------------------------------- worker

    def _run(self) -> None:
        running = True
        while running:
            item = self.commands.get()
            if item is None:
                break
            batch = [item]
            while True:
                try:
                    nxt = self.commands.get_nowait()
                except queue.Empty:
                    break
                if nxt is None:
                    running = False
                    break
                batch.append(nxt)
            for cmd, reply in self._coalesce(batch):
                try:
                    self._apply(cmd, reply)
                except Exception:
                    log.exception("command failed: %s", cmd.get("type"))

    def _coalesce(self, batch):
        out = []
        for cmd, reply in batch:
            if (
                out
                and cmd.get("type") == "move_camera"
                and out[-1][0].get("type") == "move_camera"
                and out[-1][0].get("id") == cmd.get("id")
            ):
                out[-1] = (cmd, reply)
                self.coalesced_moves += 1
                continue
            out.append((cmd, reply))
        return out

    def _apply(self, cmd: dict, reply: asyncio.Queue) -> None:
        kind = cmd.get("type")
        session = self.session
        try:
            if kind == "move_camera":
                summary = session.move_camera(int(cmd["id"]), _pose_from_message(cmd))
                self._broadcast_commit(summary)
            elif kind == "add_camera":
                spec = _spec_from_message(cmd, self.default_spec)
                summary = session.add_camera(spec, _pose_from_message(cmd))
                self._broadcast_commit(summary)
            elif kind == "remove_camera":
                summary = session.remove_camera(int(cmd["id"]))
                self._broadcast_commit(summary)
            elif kind == "set_mode":
                session.set_transfer(TransferFunction(cmd["mode"]))
                frame = session.get_volume()
                self._broadcast(
                    json.dumps({"type": "mode", "mode": cmd["mode"],
                                "revision": frame.revision}),
                    frame.to_bytes(),
                )
            elif kind == "export":
                self._send(reply, json.dumps(
                    {"type": "export", "solution": session.export_solution()}
                ), None)
            elif kind == "get_frame":
                frame = session.get_volume()
                self._send(reply, None, frame.to_bytes())
            else:
                raise ValueError(f"unknown message type {kind!r}")
        except (KeyError, ValueError, TypeError) as err:
            self._send(reply, json.dumps({"type": "error", "message": str(err)}), None)

    def _camera_list(self) -> list[dict]:
        return self.session.export_solution()["cameras"]

    def _broadcast_commit(self, summary) -> None:
        frame = self.session.get_volume()
        status = {
            "type": "status",
            "revision": summary.revision,
            "camera_id": summary.camera_id,
            "changed_points": summary.changed_points,
            "duration_ms": summary.duration_ms,
            "coverage": self.session.coverage(),
            "cameras": self._camera_list(),
        }
        self._broadcast(json.dumps(status), frame.to_bytes())

    def _broadcast(self, text: str | None, blob: bytes | None) -> None:
        with self._clients_lock:
            targets = list(self.clients)
        for q in targets:
            self._send(q, text, blob)

    def _send(self, q: asyncio.Queue, text: str | None, blob: bytes | None) -> None:
        if self.loop is None:
            return
        try:
            self.loop.call_soon_threadsafe(q.put_nowait, (text, blob))
        except RuntimeError:
            # Event loop already gone; shutdown in progress.
            pass


def create_app(
    session: DesignSession,
    *,
    default_spec: CameraSpec | None = None,
    export_dir=None,
    ui_dir=None,
) -> FastAPI:
    server = SessionServer(session, default_spec, export_dir)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        server.start(asyncio.get_running_loop())
        try:
            yield
        finally:
            server.stop()

    app = FastAPI(lifespan=lifespan)
    app.state.server = server

    @app.get("/healthz")
    def healthz():
        return {
            "status": "ok",
            "session": session.name,
            "revision": session.revision,
            "n_points": len(session.points),
            "n_cameras": len(session.camera_ids()),
            "latency": session.latency_stats().to_dict(),
        }

    @app.get("/solution")
    def solution():
        return session.export_solution()

    @app.websocket("/ws")
    async def ws(websocket: WebSocket):
        await websocket.accept()
        outbox: asyncio.Queue = asyncio.Queue()
        try:
            first = await websocket.receive_json()
        except (WebSocketDisconnect, json.JSONDecodeError):
            return
        if first.get("type") != "hello":
            await websocket.send_json(
                {"type": "error", "message": "first message must be 'hello'"}
            )
            await websocket.close()
            return
        await websocket.send_json(
            {
                "type": "hello",
                "session": session.name,
                "revision": session.revision,
                "n_points": len(session.points),
                "coverage": session.coverage(),
                "mode": session.transfer.mode,
                "cameras": server._camera_list(),
            }
        )
        pts = np.ascontiguousarray(session.points.points, dtype="<f4")
        await websocket.send_json({"type": "points", "count": len(pts)})
        await websocket.send_bytes(pts.tobytes())
        await websocket.send_bytes(session.get_volume().to_bytes())
        server.register(outbox)

        async def pump():
            while True:
                text, blob = await outbox.get()
                if text is not None:
                    await websocket.send_text(text)
                if blob is not None:
                    await websocket.send_bytes(blob)

        sender = asyncio.create_task(pump())
        try:
            while True:
                raw = await websocket.receive_text()
                try:
                    cmd = json.loads(raw)
                except json.JSONDecodeError:
                    await outbox.put(
                        (json.dumps({"type": "error", "message": "invalid JSON"}), None)
                    )
                    continue
                server.submit(cmd, outbox)
        except WebSocketDisconnect:
            pass
        finally:
            server.unregister(outbox)
            sender.cancel()

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve(session: DesignSession, host: str = "127.0.0.1", port: int = 8765,
          *, default_spec: CameraSpec | None = None, export_dir=None,
          ui_dir=None) -> None:
    """Run the websocket service until interrupted."""
    import uvicorn

    app = create_app(
        session, default_spec=default_spec, export_dir=export_dir, ui_dir=ui_dir
    )
    uvicorn.run(app, host=host, port=port, log_level="info")
