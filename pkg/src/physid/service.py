"""Live session service: one WebSocket connection drives one simulation.

The server steps each session at a fixed 60 Hz wall-clock cadence and pushes
full-state snapshots (positions quantized to 32-bit floats).  Incoming
messages only append to the session's event queue; the stepping loop is the
sole consumer, so sessions stay deterministic per frame and isolated from
each other.
"""

from __future__ import annotations

import asyncio
import base64
import json
import logging
from pathlib import Path

import numpy as np

from .errors import MalformedMessage, PhysidError
from .mesh import TriMesh, load_obj, lump_mass
from .pipeline import RIGID, SOFT, SessionSpec
from .rigidbody import choose_hinge_anchor
from .session import (PointerSample, SimConfig, SimulationSession,
                      touch_to_impulse)
from .softbody import PROPERTY_NAMES, MaterialProperties, StaticMask

logger = logging.getLogger("physid.service")


def _quantized_positions(session: SimulationSession) -> list:
    return np.asarray(session.node_positions(), dtype=np.float32).astype(float).tolist()


def state_message(session: SimulationSession) -> str:
    return json.dumps({
        "type": "state",
        "frame": session.frame,
        "positions": _quantized_positions(session),
    })


def loaded_message(session: SimulationSession) -> str:
    return json.dumps({
        "type": "loaded",
        "nodes": session.mesh.n_vertices,
        "faces": session.mesh.faces.tolist(),
        "camera": session.config.camera.to_dict(),
    })


def error_message(code: str, detail: str = "") -> str:
    return json.dumps({"type": "error", "code": code, "detail": detail})


class _Connection:
    """Per-connection state: the session plus pointer tracking."""

    def __init__(self):
        self.session: SimulationSession | None = None
        self.last_pointer: tuple[float, float] | None = None
        self.stepper: asyncio.Task | None = None


class SessionServer:
    def __init__(self, mesh_dir=".", max_sessions: int = 8,
                 config: SimConfig | None = None):
        self.mesh_dir = Path(mesh_dir)
        self.max_sessions = max_sessions
        self.config = config or SimConfig()
        self.active = 0
        self._counter = 0

    # -- message handling ----------------------------------------------------

    def _resolve_mesh(self, spec: str) -> TriMesh:
        if "\n" in spec or spec.lstrip().startswith("v "):
            import tempfile

            with tempfile.NamedTemporaryFile(
                "w", suffix=".obj", delete=False, encoding="utf-8"
            ) as fh:
                fh.write(spec)
                tmp = fh.name
            try:
                return load_obj(tmp)
            finally:
                Path(tmp).unlink(missing_ok=True)
        name = Path(spec).name  # no directory escapes
        return load_obj(self.mesh_dir / name)

    def _build_session(self, msg: dict) -> SimulationSession:
        mesh = self._resolve_mesh(msg["mesh"])
        body = msg["body"]
        material = None
        if "material" in msg:
            material = MaterialProperties.from_dict(msg["material"])
        self._counter += 1
        sid = f"session-{self._counter}"
        if body == SOFT:
            return SimulationSession(
                SessionSpec(kind=SOFT, mesh=mesh, mass=lump_mass(mesh, 1.0),
                            material=material or MaterialProperties(0.5, 0.5, 0.5, 0.5, 0.5)),
                self.config, session_id=sid,
            )
        if body == RIGID:
            return SimulationSession(
                SessionSpec(kind=RIGID, mesh=mesh, mass=lump_mass(mesh, 1.0),
                            constraint=choose_hinge_anchor(mesh)),
                self.config, session_id=sid,
            )
        raise MalformedMessage(f"unknown body kind {body!r}")

    def _handle_pointer(self, conn: _Connection, msg: dict) -> None:
        session = conn.session
        phase = msg["phase"]
        x, y = float(msg["x"]), float(msg["y"])
        prev = conn.last_pointer if phase != "down" else None
        sample = PointerSample(
            x=x, y=y, phase=phase, strength=float(msg["strength"]),
            prev_x=None if prev is None else prev[0],
            prev_y=None if prev is None else prev[1],
        )
        conn.last_pointer = None if phase == "up" else (x, y)
        event = touch_to_impulse(
            sample, session.config.camera, session.mesh, session.node_positions(),
            impulse_max=session.config.touch_impulse_max,
            radius=session.config.touch_radius,
        )
        if event is not None:
            session.queue_event(event)

    def _handle_message(self, conn: _Connection, raw: str) -> str | None:
        """Returns a reply frame to send, or None."""
        try:
            msg = json.loads(raw)
        except json.JSONDecodeError:
            return error_message("malformed", "frame is not valid JSON")
        if not isinstance(msg, dict) or "type" not in msg:
            return error_message("malformed", "frame must be an object with a type")
        kind = msg["type"]
        try:
            if kind == "load":
                if conn.session is not None:
                    return error_message("already_loaded",
                                         "this connection already has a session")
                conn.session = self._build_session(msg)
                return loaded_message(conn.session)
            if conn.session is None:
                return error_message("no_session", "send a load message first")
            if kind == "pointer":
                self._handle_pointer(conn, msg)
                return None
            if kind == "set_material":
                material = MaterialProperties.from_dict(
                    {k: msg[k] for k in PROPERTY_NAMES}
                )
                conn.session.queue_event(material)
                return None
            if kind == "set_mask":
                raw_png = base64.b64decode(msg["png_b64"])
                mask = StaticMask.from_bytes(raw_png, conn.session.config.camera)
                conn.session.queue_event(mask)
                return None
            return error_message("malformed", f"unknown message type {kind!r}")
        except (KeyError, TypeError, ValueError, PhysidError, OSError) as exc:
            return error_message("malformed", str(exc))

    # -- asyncio plumbing ------------------------------------------------------

    async def _step_loop(self, websocket, session: SimulationSession) -> None:
        loop = asyncio.get_running_loop()
        next_tick = loop.time()
        while True:
            session.step_frame()
            await websocket.send(state_message(session))
            next_tick += session.config.dt
            delay = next_tick - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
            else:
                next_tick = loop.time()  # fell behind; skip, never spiral

    async def handler(self, websocket) -> None:
        if self.active >= self.max_sessions:
            await websocket.send(error_message(
                "session_limit", f"server caps at {self.max_sessions} sessions"
            ))
            await websocket.close()
            return
        self.active += 1
        conn = _Connection()
        try:
            async for raw in websocket:
                reply = self._handle_message(conn, raw)
                if reply is not None:
                    await websocket.send(reply)
                if conn.session is not None and conn.stepper is None:
                    conn.stepper = asyncio.create_task(
                        self._run_stepper(websocket, conn)
                    )
        finally:
            if conn.stepper is not None:
                conn.stepper.cancel()
            self.active -= 1

    async def _run_stepper(self, websocket, conn: _Connection) -> None:
        try:
            await self._step_loop(websocket, conn.session)
        except asyncio.CancelledError:
            raise
        except Exception as exc:  # session crash stays on this connection
            logger.exception("session %s crashed", conn.session.session_id)
            try:
                await websocket.send(error_message("session_crashed", str(exc)))
                await websocket.close()
            except Exception:
                pass


async def serve_async(port: int, host: str = "127.0.0.1", mesh_dir=".",
                      max_sessions: int = 8, config: SimConfig | None = None,
                      ready: asyncio.Event | None = None) -> None:
    from websockets.asyncio.server import serve as ws_serve

    server = SessionServer(mesh_dir=mesh_dir, max_sessions=max_sessions,
                           config=config)
    async with ws_serve(server.handler, host, port, max_size=16 * 1024 * 1024):
        logger.info("serving on ws://%s:%d", host, port)
        if ready is not None:
            ready.set()
        await asyncio.Future()  # run until cancelled


def serve(port: int, host: str = "127.0.0.1", mesh_dir=".",
          max_sessions: int = 8, config: SimConfig | None = None) -> None:
    try:
        asyncio.run(serve_async(port, host=host, mesh_dir=mesh_dir,
                                max_sessions=max_sessions, config=config))
    except KeyboardInterrupt:
        pass
