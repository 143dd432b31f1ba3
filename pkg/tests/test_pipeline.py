import base64
import json
import time

import numpy as np
import pytest

from helpers import cube_obj_text, make_cloth_grid
from physid.camera import Camera
from physid.clients import (FixtureClient, canonical_request, request_hash,
                            write_fixture)
from physid.errors import (ClientUnavailable, InconsistentResult,
                           ResponseParseFailure, StageTimeout)
from physid.pipeline import (GRAMMARS, NONE, RIGID, SOFT, PipelineResult,
                             compose_static_mask, configure_simulation,
                             get_template, parse_classification,
                             parse_properties, parse_segments, run_pipeline)
from physid.softbody import MaterialProperties


class TestParseClassification:
    def test_keyword_hit(self):
        raw = "Answer: Yes, this object can be interacted with."
        assert parse_classification(raw, GRAMMARS["t1"]) == "yes"

    def test_no_label_raises(self):
        with pytest.raises(ResponseParseFailure) as err:
            parse_classification("a cat on a mat", GRAMMARS["t2"], task="t2")
        assert err.value.raw == "a cat on a mat"

    def test_positional_rule_on_negated_text(self):
        # only the exact phrases "soft body" / "rigid body" count, so the
        # negated "rigid" never matches and the soft label wins
        raw = "It is not rigid; it is a soft body."
        assert parse_classification(raw, GRAMMARS["t2"]) == SOFT

    def test_earliest_occurrence_wins(self):
        raw = "rigid body, though some say soft body"
        assert parse_classification(raw, GRAMMARS["t2"]) == RIGID

    def test_t3_negation_phrases(self):
        assert parse_classification("non-static region", GRAMMARS["t3"]) == "non_static"
        assert parse_classification("clearly static", GRAMMARS["t3"]) == "static"
        assert parse_classification("it is not static", GRAMMARS["t3"]) == "non_static"


class TestParseProperties:
    def test_json_keys(self):
        raw = json.dumps({
            "linear_stiffness": 0.7, "damping_coefficient": 0.2,
            "angular_stiffness": 0.3, "volume_preservation": 0.1,
            "dynamic_friction": 0.5,
        })
        props, clamped = parse_properties(raw)
        np.testing.assert_allclose(props.as_vector(), [0.7, 0.2, 0.3, 0.1, 0.5])
        assert not clamped

    def test_first_five_numbers_with_clamp(self):
        raw = "stiffness 1.4, damping 0.2, angular 0.3, volume 0.1, friction 0.5"
        props, clamped = parse_properties(raw)
        np.testing.assert_allclose(props.as_vector(), [1.0, 0.2, 0.3, 0.1, 0.5])
        assert clamped

    def test_key_name_match_in_text(self):
        raw = ("I estimate Linear Stiffness: 0.9, damping coefficient = 0.1, "
               "angular stiffness 0.4, volume preservation 0.2 and "
               "dynamic friction 0.6. Confidence: 0.8")
        props, clamped = parse_properties(raw)
        np.testing.assert_allclose(props.as_vector(), [0.9, 0.1, 0.4, 0.2, 0.6])
        assert not clamped

    def test_unparseable(self):
        with pytest.raises(ResponseParseFailure) as err:
            parse_properties("I cannot determine values")
        assert err.value.task == "t4"


def test_parse_segments_roundtrip():
    raw = json.dumps({"segments": [
        {"id": "s0", "bbox": [0, 0, 10, 10]},
        {"id": "s1", "bbox": [10, 0, 22, 14]},
    ]})
    segs = parse_segments(raw)
    assert [s["id"] for s in segs] == ["s0", "s1"]
    with pytest.raises(ResponseParseFailure):
        parse_segments("not json at all")


# ---------------------------------------------------------------------------
# Fixture-driven pipeline runs

STRATEGY = "few_shot_cot"
PROPS_TEXT = json.dumps({
    "linear_stiffness": 0.6, "damping_coefficient": 0.3,
    "angular_stiffness": 0.4, "volume_preservation": 0.2,
    "dynamic_friction": 0.5,
})
SEGMENTS_TEXT = json.dumps({"segments": [
    {"id": "top", "bbox": [0, 0, 64, 16]},
    {"id": "body", "bbox": [0, 16, 64, 48]},
]})


def seed(root, image_b64, task, text, caption="", **slots):
    prompt = get_template(task, STRATEGY).render(caption=caption, **slots)
    write_fixture(root, canonical_request(task, prompt, image_b64), text)


def seed_soft_scenario(root, image_path, caption=""):
    image_b64 = base64.b64encode(image_path.read_bytes()).decode("ascii")
    seed(root, image_b64, "t1", "Answer: yes, confidence: 0.9", caption)
    seed(root, image_b64, "t2", "Answer: soft body", caption)
    seed(root, image_b64, "t4", PROPS_TEXT, caption)
    seed(root, image_b64, "segment", SEGMENTS_TEXT, caption)
    seed(root, image_b64, "mesh", cube_obj_text(), caption)
    segs = parse_segments(SEGMENTS_TEXT)
    labels = ["Answer: static", "Answer: non-static"]
    for seg, label in zip(segs, labels):
        seed(root, image_b64, "t3", label, caption,
             region=json.dumps(seg, sort_keys=True))


@pytest.fixture
def image_file(tmp_path):
    p = tmp_path / "flag.png"
    p.write_bytes(b"\x89PNG fake image payload")
    return p


class TestRunPipeline:
    def test_full_soft_run(self, tmp_path, image_file):
        fixtures = tmp_path / "fixtures"
        seed_soft_scenario(fixtures, image_file)
        client = FixtureClient(fixtures)
        result = run_pipeline(image_file, client, STRATEGY, mesh_dir=tmp_path)
        assert result.interactable is True
        assert result.dynamics == SOFT
        assert result.confidence == pytest.approx(0.9)
        np.testing.assert_allclose(result.properties.as_vector(),
                                   [0.6, 0.3, 0.4, 0.2, 0.5])
        assert [s["label"] for s in result.static_flags] == ["static", "non_static"]
        assert result.mesh_path.endswith("flag.obj")
        from physid.mesh import load_obj

        assert load_obj(result.mesh_path).n_vertices == 8
        assert set(result.timings_ms) == {"t1", "t2", "t4", "segment", "t3", "mesh"}

    def test_rigid_run_skips_soft_stages(self, tmp_path, image_file):
        fixtures = tmp_path / "fixtures"
        image_b64 = base64.b64encode(image_file.read_bytes()).decode("ascii")
        seed(fixtures, image_b64, "t1", "yes")
        seed(fixtures, image_b64, "t2", "Answer: rigid body")
        seed(fixtures, image_b64, "mesh", cube_obj_text())
        client = FixtureClient(fixtures)
        result = run_pipeline(image_file, client, STRATEGY, mesh_dir=tmp_path)
        assert result.dynamics == RIGID
        assert result.properties is None
        assert result.static_flags is None
        assert client.calls_for("t4") == 0
        assert client.calls_for("segment") == 0

    def test_short_circuit_on_not_interactable(self, tmp_path, image_file):
        fixtures = tmp_path / "fixtures"
        image_b64 = base64.b64encode(image_file.read_bytes()).decode("ascii")
        seed(fixtures, image_b64, "t1", "Answer: no")
        client = FixtureClient(fixtures)
        result = run_pipeline(image_file, client, STRATEGY, mesh_dir=tmp_path)
        assert result.interactable is False
        assert result.dynamics == NONE
        assert [task for task, _ in client.call_log] == ["t1"]

    def test_parse_failure_names_task(self, tmp_path, image_file):
        fixtures = tmp_path / "fixtures"
        image_b64 = base64.b64encode(image_file.read_bytes()).decode("ascii")
        seed(fixtures, image_b64, "t1", "yes")
        seed(fixtures, image_b64, "t2", "Answer: soft body")
        seed(fixtures, image_b64, "t4", "very stiff")
        seed(fixtures, image_b64, "segment", SEGMENTS_TEXT)
        seed(fixtures, image_b64, "mesh", cube_obj_text())
        segs = parse_segments(SEGMENTS_TEXT)
        for seg in segs:
            seed(fixtures, image_b64, "t3", "static",
                 region=json.dumps(seg, sort_keys=True))
        with pytest.raises(ResponseParseFailure) as err:
            run_pipeline(image_file, FixtureClient(fixtures), STRATEGY,
                         mesh_dir=tmp_path)
        assert err.value.task == "t4"
        assert err.value.raw == "very stiff"

    def test_missing_fixture_is_client_unavailable(self, tmp_path, image_file):
        with pytest.raises(ClientUnavailable):
            run_pipeline(image_file, FixtureClient(tmp_path / "empty"), STRATEGY)

    def test_fixture_runs_are_deterministic(self, tmp_path, image_file):
        fixtures = tmp_path / "fixtures"
        seed_soft_scenario(fixtures, image_file)
        a = run_pipeline(image_file, FixtureClient(fixtures), STRATEGY,
                         mesh_dir=tmp_path)
        b = run_pipeline(image_file, FixtureClient(fixtures), STRATEGY,
                         mesh_dir=tmp_path)
        assert a.to_json(include_timings=False) == b.to_json(include_timings=False)

    def test_fixture_latency_under_budget(self, tmp_path, image_file):
        fixtures = tmp_path / "fixtures"
        seed_soft_scenario(fixtures, image_file)
        client = FixtureClient(fixtures)
        start = time.perf_counter()
        run_pipeline(image_file, client, STRATEGY, mesh_dir=tmp_path)
        assert time.perf_counter() - start < 1.0


class TestLiveClient:
    def test_recorded_live_responses_replay_identically(self, tmp_path, image_file):
        import threading
        from http.server import BaseHTTPRequestHandler, HTTPServer

        from physid.clients import HttpClient

        fixtures = tmp_path / "recorded"
        answers = {
            "t1": "yes", "t2": "Answer: soft body", "t4": PROPS_TEXT,
            "segment": SEGMENTS_TEXT, "mesh": cube_obj_text(), "t3": "static",
        }

        class Stub(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers["Content-Length"])
                request = json.loads(self.rfile.read(length))
                body = json.dumps({"text": answers[request["task"]]}).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):
                pass

        server = HTTPServer(("127.0.0.1", 0), Stub)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        try:
            live = HttpClient(f"http://127.0.0.1:{server.server_port}",
                              record_to=fixtures)
            first = run_pipeline(image_file, live, STRATEGY, mesh_dir=tmp_path)
        finally:
            server.shutdown()
            thread.join()
        replayed = run_pipeline(image_file, FixtureClient(fixtures), STRATEGY,
                                mesh_dir=tmp_path)
        assert first.to_json(include_timings=False) == replayed.to_json(
            include_timings=False)

    def test_dead_endpoint_is_client_unavailable(self, image_file, tmp_path):
        from physid.clients import HttpClient

        client = HttpClient("http://127.0.0.1:9", timeout=0.5)
        with pytest.raises(ClientUnavailable):
            run_pipeline(image_file, client, STRATEGY, mesh_dir=tmp_path)


def test_stage_timeout_names_stage(tmp_path, image_file):
    fixtures = tmp_path / "fixtures"
    seed_soft_scenario(fixtures, image_file)

    class SlowT4(FixtureClient):
        def _complete(self, request, digest):
            if request["task"] == "t4":
                time.sleep(0.5)
            return super()._complete(request, digest)

    with pytest.raises(StageTimeout) as err:
        run_pipeline(image_file, SlowT4(fixtures), STRATEGY, mesh_dir=tmp_path,
                     stage_timeout=0.1)
    assert err.value.stage == "t4"


class TestConfigureSimulation:
    def make_soft_result(self, mesh_path=None, static=True):
        flags = [
            {"id": "top", "bbox": [0, 0, 64, 28], "label": "static" if static else "non_static"},
            {"id": "body", "bbox": [0, 28, 64, 36], "label": "non_static"},
        ]
        return PipelineResult(
            image_id="x", prompt_strategy=STRATEGY, interactable=True,
            dynamics=SOFT,
            properties=MaterialProperties(0.6, 0.3, 0.4, 0.2, 0.5),
            static_flags=flags, mesh_path=mesh_path,
        )

    def test_soft_session_with_mask(self):
        mesh = make_cloth_grid(6, 6, spacing=0.1, origin=(-0.25, -0.25, 0.0))
        cam = Camera.look_at(eye=(0, 0, 2.0), target=(0, 0, 0), fov_y_deg=45.0,
                             viewport=(64, 64))
        spec = configure_simulation(self.make_soft_result(), mesh, camera=cam)
        assert spec.kind == SOFT
        assert spec.material.linear_stiffness == 0.6
        assert spec.static_node_flags is not None
        assert spec.static_node_flags.any()
        assert not spec.static_node_flags.all()
        pinned = spec.mass.inverse_mass == 0.0
        np.testing.assert_array_equal(pinned, spec.static_node_flags)

    def test_rigid_session_anchor_in_bottom_band(self):
        mesh = make_cloth_grid(4, 8, spacing=0.1)
        result = PipelineResult(image_id="x", prompt_strategy=STRATEGY,
                                interactable=True, dynamics=RIGID)
        spec = configure_simulation(result, mesh)
        assert spec.kind == RIGID
        ys = mesh.vertices[:, 1]
        assert spec.constraint.anchor[1] <= ys.min() + 0.05 * (ys.max() - ys.min())

    def test_none_dynamics_rejected(self):
        result = PipelineResult(image_id="x", prompt_strategy=STRATEGY,
                                interactable=False, dynamics=NONE)
        with pytest.raises(InconsistentResult):
            configure_simulation(result, make_cloth_grid(3, 3))

    def test_compose_static_mask_rasterizes_bbox(self):
        cam = Camera.look_at(eye=(0, 0, 2.0), target=(0, 0, 0), viewport=(64, 64))
        mask = compose_static_mask(
            [{"id": "a", "bbox": [4, 8, 10, 6], "label": "static"},
             {"id": "b", "bbox": [30, 30, 10, 10], "label": "non_static"}],
            cam,
        )
        assert mask.data[8, 4] == 255
        assert mask.data[13, 13] == 255
        assert mask.data[35, 35] == 0


def test_result_invariants_enforced():
    with pytest.raises(InconsistentResult):
        PipelineResult(image_id="x", prompt_strategy=STRATEGY,
                       interactable=False, dynamics=SOFT)
    with pytest.raises(InconsistentResult):
        PipelineResult(image_id="x", prompt_strategy=STRATEGY,
                       interactable=True, dynamics=NONE)


def test_request_hash_is_canonical():
    a = request_hash({"task": "t1", "prompt": "p", "image_b64": "i"})
    b = request_hash({"image_b64": "i", "prompt": "p", "task": "t1"})
    assert a == b and len(a) == 64


def test_template_rendering_non_empty():
    for task in ("t1", "t2", "t3", "t4", "mesh", "segment"):
        for strategy in ("zero_shot", "few_shot", "cot", "few_shot_cot"):
            text = get_template(task, strategy).render(caption="a flag",
                                                       region="{}")
            assert text.strip()
