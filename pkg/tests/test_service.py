"""Live service tests: an in-process server plus a websockets client."""

import asyncio
import base64
import io
import json
from pathlib import Path

import jsonschema
import numpy as np
from websockets.asyncio.client import connect

from helpers import cube_obj_text, make_cloth_grid
from physid.collision import Environment, HalfSpace
from physid.mesh import save_obj
from physid.session import SimConfig
from physid.service import serve_async

SCHEMA = json.loads(
    (Path(__file__).resolve().parent.parent / "schema" / "wire.schema.json").read_text()
)
SERVER_MSG = {**SCHEMA, "$ref": "#/definitions/server_message"}

FLOATING = SimConfig(
    gravity=np.zeros(3),
    environment=Environment(planes=(HalfSpace((0, -100.0, 0), (0, 1, 0)),)),
)

MATERIAL = {
    "linear_stiffness": 0.1, "damping_coefficient": 0.4,
    "angular_stiffness": 0.05, "volume_preservation": 0.0,
    "dynamic_friction": 0.2,
}


def validate_server(msg: dict):
    jsonschema.validate(msg, SERVER_MSG)


def cloth_obj_text() -> str:
    mesh = make_cloth_grid(6, 6, spacing=0.1, origin=(-0.25, -0.25, 0.0))
    buf = io.StringIO()
    for v in mesh.vertices:
        buf.write("v %.17g %.17g %.17g\n" % tuple(v))
    for f in mesh.faces:
        buf.write("f %d %d %d\n" % (f[0] + 1, f[1] + 1, f[2] + 1))
    return buf.getvalue()


class ServiceHarness:
    """Runs serve_async on an ephemeral port inside the test's event loop."""

    def __init__(self, tmp_path, config=FLOATING, max_sessions=4):
        self.tmp_path = tmp_path
        self.config = config
        self.max_sessions = max_sessions
        self.port = None
        self._task = None

    async def __aenter__(self):
        import socket

        with socket.socket() as s:
            s.bind(("127.0.0.1", 0))
            self.port = s.getsockname()[1]
        ready = asyncio.Event()
        self._task = asyncio.create_task(serve_async(
            self.port, mesh_dir=self.tmp_path, max_sessions=self.max_sessions,
            config=self.config, ready=ready,
        ))
        await asyncio.wait_for(ready.wait(), timeout=5)
        return self

    async def __aexit__(self, *exc):
        self._task.cancel()
        try:
            await self._task
        except (asyncio.CancelledError, Exception):
            pass

    @property
    def url(self):
        return f"ws://127.0.0.1:{self.port}"


async def recv_json(ws, timeout=5.0):
    raw = await asyncio.wait_for(ws.recv(), timeout=timeout)
    msg = json.loads(raw)
    validate_server(msg)
    return msg


async def load_cloth(ws):
    await ws.send(json.dumps({
        "type": "load", "mesh": cloth_obj_text(), "body": "soft",
        "material": MATERIAL,
    }))
    msg = await recv_json(ws)
    assert msg["type"] == "loaded"
    return msg


def test_load_and_heartbeat(tmp_path):
    async def scenario():
        async with ServiceHarness(tmp_path) as srv:
            async with connect(srv.url) as ws:
                loaded = await load_cloth(ws)
                assert loaded["nodes"] == 36
                assert len(loaded["faces"]) == 50
                assert "camera" in loaded
                frames = []
                for _ in range(5):
                    msg = await recv_json(ws)
                    assert msg["type"] == "state"
                    frames.append(msg["frame"])
                assert frames == sorted(frames)
                assert frames[-1] > frames[0]
                assert len(msg["positions"]) == 36

    asyncio.run(scenario())


def test_mesh_loaded_by_name(tmp_path):
    mesh = make_cloth_grid(3, 3, spacing=0.1)
    save_obj(mesh, tmp_path / "patch.obj")

    async def scenario():
        async with ServiceHarness(tmp_path) as srv:
            async with connect(srv.url) as ws:
                await ws.send(json.dumps({
                    "type": "load", "mesh": "patch.obj", "body": "soft",
                    "material": MATERIAL,
                }))
                msg = await recv_json(ws)
                assert msg["type"] == "loaded" and msg["nodes"] == 9

    asyncio.run(scenario())


def test_malformed_frames_keep_connection_alive(tmp_path):
    async def scenario():
        async with ServiceHarness(tmp_path) as srv:
            async with connect(srv.url) as ws:
                await ws.send("{not json")
                msg = await recv_json(ws)
                assert msg == {"type": "error", "code": "malformed",
                               "detail": "frame is not valid JSON"}
                await ws.send(json.dumps({"type": "pointer", "phase": "down",
                                          "x": 1, "y": 1, "strength": 1.0}))
                msg = await recv_json(ws)
                assert msg["type"] == "error" and msg["code"] == "no_session"
                # connection still usable end-to-end
                await load_cloth(ws)
                msg = await recv_json(ws)
                assert msg["type"] == "state"

    asyncio.run(scenario())


def test_pointer_drag_displaces_nodes(tmp_path):
    async def scenario():
        async with ServiceHarness(tmp_path) as srv:
            async with connect(srv.url) as ws:
                await load_cloth(ws)
                rest = None
                msg = await recv_json(ws)
                rest = np.asarray(msg["positions"])
                await ws.send(json.dumps({"type": "pointer", "phase": "down",
                                          "x": 256, "y": 256, "strength": 1.0}))
                for dx in (24, 48, 72):
                    await ws.send(json.dumps({
                        "type": "pointer", "phase": "move",
                        "x": 256 + dx, "y": 256, "strength": 1.0,
                    }))
                await ws.send(json.dumps({"type": "pointer", "phase": "up",
                                          "x": 340, "y": 256, "strength": 0.0}))
                displaced = 0.0
                for _ in range(30):
                    msg = await recv_json(ws)
                    pos = np.asarray(msg["positions"])
                    displaced = max(displaced,
                                    np.linalg.norm(pos - rest, axis=1).max())
                assert displaced > 1e-3

    asyncio.run(scenario())


def test_set_material_and_mask_messages(tmp_path):
    from PIL import Image

    data = np.zeros((512, 512), np.uint8)
    data[:200, :] = 255
    buf = io.BytesIO()
    Image.fromarray(data).save(buf, format="PNG")
    png_b64 = base64.b64encode(buf.getvalue()).decode("ascii")

    async def scenario():
        async with ServiceHarness(tmp_path) as srv:
            async with connect(srv.url) as ws:
                await load_cloth(ws)
                await ws.send(json.dumps({"type": "set_material", **{
                    k: 0.9 if k == "linear_stiffness" else v
                    for k, v in MATERIAL.items()
                }}))
                await ws.send(json.dumps({"type": "set_mask", "png_b64": png_b64}))
                for _ in range(5):
                    msg = await recv_json(ws)
                    assert msg["type"] == "state"
                # invalid material value -> error frame, connection lives
                await ws.send(json.dumps({"type": "set_material", **{
                    k: 2.0 for k in MATERIAL
                }}))
                saw_error = False
                for _ in range(10):
                    msg = await recv_json(ws)
                    if msg["type"] == "error":
                        assert msg["code"] == "malformed"
                        saw_error = True
                        break
                assert saw_error

    asyncio.run(scenario())


def test_session_limit(tmp_path):
    async def scenario():
        async with ServiceHarness(tmp_path, max_sessions=1) as srv:
            async with connect(srv.url) as first:
                await load_cloth(first)
                async with connect(srv.url) as second:
                    msg = await recv_json(second)
                    assert msg["type"] == "error"
                    assert msg["code"] == "session_limit"

    asyncio.run(scenario())


def test_sessions_are_isolated(tmp_path):
    async def scenario():
        async with ServiceHarness(tmp_path) as srv:
            async with connect(srv.url) as a, connect(srv.url) as b:
                await load_cloth(a)
                await load_cloth(b)
                for _ in range(3):
                    ma = await recv_json(a)
                    mb = await recv_json(b)
                    assert ma["type"] == "state" and mb["type"] == "state"

    asyncio.run(scenario())


def test_double_load_rejected(tmp_path):
    async def scenario():
        async with ServiceHarness(tmp_path) as srv:
            async with connect(srv.url) as ws:
                await load_cloth(ws)
                await ws.send(json.dumps({
                    "type": "load", "mesh": cloth_obj_text(), "body": "soft",
                }))
                for _ in range(10):
                    msg = await recv_json(ws)
                    if msg["type"] == "error":
                        assert msg["code"] == "already_loaded"
                        return
                raise AssertionError("expected already_loaded error")

    asyncio.run(scenario())


def test_rigid_body_session_over_wire(tmp_path):
    async def scenario():
        async with ServiceHarness(tmp_path) as srv:
            async with connect(srv.url) as ws:
                await ws.send(json.dumps({
                    "type": "load", "mesh": cube_obj_text(), "body": "rigid",
                }))
                msg = await recv_json(ws)
                assert msg["type"] == "loaded" and msg["nodes"] == 8
                msg = await recv_json(ws)
                assert msg["type"] == "state"

    asyncio.run(scenario())
