"""Live session service: FastAPI app with a WebSocket bridge to one
simulation session, plus static hosting for the operator console.

One simulation session per server; any number of viewers share its frame
stream (slow clients drop frames, never reorder them). Operator messages
are `task` (mission text or MoreInformation answers) and `control`
(pause/resume).
"""

from __future__ import annotations

import asyncio
import base64
import errno
import os
import queue
import socket
import threading
import time as wall

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import ValidationError

from .. import __version__
from ..vehicle import image_to_png
from .frames import (ClientMessage, Frame, Pose, StatePayload, TerrainSummary)
from .scenario import ScenarioSpec, _make_policy, _make_vlm, _nav_world_from, load_scene


class PortInUse(Exception):
    def __init__(self, port: int):
        super().__init__(f"port {port} is already in use")


class _Hub:
    """Fan-out of frames to per-client asyncio queues (drop-on-full)."""

    def __init__(self, maxsize: int = 256):
        self._clients: dict[int, tuple[asyncio.AbstractEventLoop, asyncio.Queue]] = {}
        self._lock = threading.Lock()
        self._next = 0
        self.maxsize = maxsize

    def register(self, loop: asyncio.AbstractEventLoop) -> tuple[int, asyncio.Queue]:
        q: asyncio.Queue = asyncio.Queue(maxsize=self.maxsize)
        with self._lock:
            cid = self._next
            self._next += 1
            self._clients[cid] = (loop, q)
        return cid, q

    def unregister(self, cid: int) -> None:
        with self._lock:
            self._clients.pop(cid, None)

    def publish(self, frame: Frame) -> None:
        text = frame.encoded()
        with self._lock:
            clients = list(self._clients.values())
        for loop, q in clients:
            def _put(q=q):
                if q.full():
                    try:
                        q.get_nowait()  # drop the oldest frame, keep order
                    except asyncio.QueueEmpty:
                        pass
                q.put_nowait(text)
            try:
                loop.call_soon_threadsafe(_put)
            except RuntimeError:
                pass  # client loop already closed


class SimSession:
    """Background thread owning the world + orchestrator."""

    def __init__(self, spec: ScenarioSpec, pace: float = 1.0,
                 state_hz: float = 10.0, camera_hz: float = 2.0):
        self.spec = spec
        self.pace = pace          # simulated seconds per wall second; 0 = flat out
        self.state_interval = 1.0 / state_hz
        self.camera_interval = 1.0 / camera_hz if camera_hz > 0 else None
        self.hub = _Hub()
        self.seq = 0
        self._seq_lock = threading.Lock()
        self._tasks: queue.Queue[str] = queue.Queue()
        self._stop = threading.Event()
        self._paused = threading.Event()
        self.awaiting_clarification = False
        self.thread: threading.Thread | None = None
        self.params, self.resolved = load_scene(spec)
        if spec.mode != "rover_nav":
            raise ValueError("the live service hosts rover_nav scenarios")
        self.world = _nav_world_from(self.params, spec.seed)
        self._last_state_emit = -1e9
        self._last_camera_emit = -1e9
        self._wall_anchor: float | None = None
        self._sim_anchor = 0.0

    # --- frame plumbing ---------------------------------------------------
    def _next_seq(self) -> int:
        with self._seq_lock:
            self.seq += 1
            return self.seq

    def _frame(self, ftype: str, payload: dict) -> Frame:
        return Frame(type=ftype, seq=self._next_seq(),
                     time_s=self.world.state.time, payload=payload)

    def publish(self, ftype: str, payload: dict) -> None:
        self.hub.publish(self._frame(ftype, payload))

    def terrain_summary(self, stride: int = 4) -> TerrainSummary:
        hf = self.world.terrain
        sub = hf.heights[::stride, ::stride]
        return TerrainSummary(cell_size=hf.cell_size * stride,
                              origin=[hf.origin[0], hf.origin[1]],
                              shape=list(sub.shape),
                              heights=[float(v) for v in sub.ravel()],
                              stride=stride)

    def state_payload(self, with_camera: bool = False,
                      with_terrain: bool = False) -> StatePayload:
        s = self.world.state
        cam = None
        if with_camera:
            png = image_to_png(self.world.render())
            cam = base64.b64encode(png).decode("ascii")
        return StatePayload(
            pose=Pose(x=s.position[0], y=s.position[1], z=s.position[2],
                      heading=s.heading),
            wheel_steer=list(s.steer_angles),
            wheel_speeds=list(s.wheel_speeds),
            body_velocity=s.body_velocity,
            targets={o.kind: [o.position[0], o.position[1]]
                     for o in self.world.objects},
            camera_png_b64=cam,
            terrain=self.terrain_summary() if with_terrain else None,
            paused=self._paused.is_set(),
        )

    # --- simulation side ---------------------------------------------------
    def _on_step(self, world) -> None:
        while self._paused.is_set() and not self._stop.is_set():
            wall.sleep(0.02)
        if self._stop.is_set():
            raise SessionStopped()
        t = world.state.time
        if self.pace > 0:
            now = wall.monotonic()
            if self._wall_anchor is None:
                self._wall_anchor = now
                self._sim_anchor = t
            ahead = (t - self._sim_anchor) / self.pace - (now - self._wall_anchor)
            if ahead > 0.002:
                wall.sleep(ahead)
        if t - self._last_state_emit >= self.state_interval - 1e-9:
            self._last_state_emit = t
            with_cam = (self.camera_interval is not None
                        and t - self._last_camera_emit >= self.camera_interval - 1e-9)
            if with_cam:
                self._last_camera_emit = t
            self.publish("state", self.state_payload(with_camera=with_cam)
                         .model_dump())

    def _run(self) -> None:
        from ..autonomy.orchestrator import Orchestrator
        world = self.world
        world.step_listener = self._on_step
        policy = _make_policy(self.spec)
        vlm = _make_vlm(self.spec, world)

        def on_event(kind: str, payload: dict):
            self.publish(kind, payload)

        orch = Orchestrator(world, vlm, policy,
                            drive_duration=float(self.params.get("drive_duration", 20.0)),
                            on_event=on_event)
        try:
            orch.start()
            while not self._stop.is_set():
                try:
                    text = self._tasks.get(timeout=0.1)
                except queue.Empty:
                    continue
                try:
                    if self.awaiting_clarification:
                        self.awaiting_clarification = False
                        out = orch.answer_more_information(text)
                    else:
                        out = orch.submit_task(text)
                    if out.get("awaiting_clarification"):
                        self.awaiting_clarification = True
                    if out.get("shutdown"):
                        break
                except SessionStopped:
                    raise
                except Exception as exc:
                    self.publish("error", {"code": "task_failed",
                                           "detail": str(exc)})
        except SessionStopped:
            pass
        finally:
            world.step_listener = None

    # --- operator side -----------------------------------------------------
    def submit_task(self, text: str) -> None:
        self._tasks.put(text)

    def control(self, action: str) -> None:
        if action == "pause":
            self._paused.set()
        elif action == "resume":
            self._paused.clear()
        else:
            raise ValueError(f"unknown control action {action!r}")

    def start(self) -> None:
        self.thread = threading.Thread(target=self._run, daemon=True,
                                       name="sim-session")
        self.thread.start()

    def stop(self) -> None:
        self._stop.set()
        self._paused.clear()
        if self.thread is not None:
            self.thread.join(timeout=5.0)


class SessionStopped(Exception):
    pass


_FALLBACK_PAGE = """<!doctype html>
<html><head><title>lunarsim</title></head>
<body><h1>lunarsim live session</h1>
<p>The operator console assets are not built. Connect a WebSocket client
to <code>/ws</code>, or build the console: <code>cd frontend && npm install
&& npm run build</code>, then restart <code>sim serve</code>.</p>
</body></html>"""


def create_app(spec: ScenarioSpec, pace: float = 1.0,
               frontend_dir: str | None = None,
               state_hz: float = 10.0) -> FastAPI:
    session = SimSession(spec, pace=pace, state_hz=state_hz)
    app = FastAPI(title="lunarsim live service", version=__version__)
    app.state.session = session

    @app.on_event("startup")
    def _startup():
        session.start()

    @app.on_event("shutdown")
    def _shutdown():
        session.stop()

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__,
                "sim_time_s": session.world.state.time}

    @app.get("/scenario")
    def scenario_info():
        return JSONResponse({
            "scene": os.path.basename(spec.scene_path),
            "mode": spec.mode,
            "seed": spec.seed,
            "vlm": spec.vlm,
            "targets": {o.kind: list(o.position)
                        for o in session.world.objects},
        })

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        loop = asyncio.get_running_loop()
        cid, q = session.hub.register(loop)
        hello = session._frame("state", session.state_payload(
            with_camera=True, with_terrain=True).model_dump())
        await ws.send_text(hello.encoded())

        async def sender():
            while True:
                text = await q.get()
                await ws.send_text(text)

        send_task = asyncio.create_task(sender())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = ClientMessage.model_validate_json(raw)
                    if msg.type == "task":
                        text = str(msg.payload.get("text", "")).strip()
                        if not text:
                            raise ValueError("task text is empty")
                        session.submit_task(text)
                        await ws.send_text(Frame(
                            type="task", seq=session._next_seq(),
                            time_s=session.world.state.time,
                            payload={"text": text, "accepted": True}).encoded())
                    else:
                        session.control(str(msg.payload.get("action", "")))
                except (ValidationError, ValueError) as exc:
                    # malformed frames get a typed error; connection stays up
                    await ws.send_text(Frame(
                        type="error", seq=session._next_seq(),
                        time_s=session.world.state.time,
                        payload={"code": "bad_message",
                                 "detail": str(exc)}).encoded())
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            session.hub.unregister(cid)

    if frontend_dir and os.path.isdir(frontend_dir):
        app.mount("/", StaticFiles(directory=frontend_dir, html=True),
                  name="console")
    else:
        @app.get("/")
        def index():
            return HTMLResponse(_FALLBACK_PAGE)

    return app


def default_frontend_dir() -> str | None:
    here = os.path.dirname(os.path.abspath(__file__))
    for candidate in (
        os.path.join(here, "..", "..", "..", "frontend", "dist"),
        os.path.join(os.getcwd(), "frontend", "dist"),
    ):
        path = os.path.normpath(candidate)
        if os.path.isdir(path):
            return path
    return None


def serve(port: int, spec: ScenarioSpec, pace: float = 1.0,
          host: str = "127.0.0.1", frontend_dir: str | None = None) -> None:
    import uvicorn
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((host, port))
    except OSError as exc:
        if exc.errno == errno.EADDRINUSE:
            raise PortInUse(port) from exc
        raise
    finally:
        probe.close()
    app = create_app(spec, pace=pace,
                     frontend_dir=frontend_dir or default_frontend_dir())
    uvicorn.run(app, host=host, port=port, log_level="warning")
