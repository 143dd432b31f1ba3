"""End-to-end orchestration: suitability check, dynamics classification,
property estimation, static-region labeling and mesh generation, chained
against a pluggable external client.

Control flow: t1 gates everything.  A non-interactable verdict short-circuits
the run with zero further client calls.  Otherwise mesh generation starts
immediately and runs concurrently with t2; a soft verdict additionally fans
out into t4 (properties) and segment->t3 (static regions) in parallel.
Answer parsing is purely positional over a per-task grammar; anything that
does not match is surfaced as an explicit error, never guessed.
"""

from __future__ import annotations

import base64
import json
import re
import time
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeout
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .camera import Camera
from .clients import ExternalClient
from .errors import (InconsistentResult, InvalidParameter,
                     ResponseParseFailure, StageTimeout)
from .mesh import TriMesh, load_obj, lump_mass
from .rigidbody import HingeConeConstraint, choose_hinge_anchor
from .softbody import (MaterialProperties, StaticMask, apply_static_mask,
                       map_pixels_to_nodes)

SOFT = "soft"
RIGID = "rigid"
NONE = "none"

STRATEGIES = ("zero_shot", "few_shot", "cot", "few_shot_cot")

# Canonical labels with their accepted phrasings, matched case-insensitively;
# the earliest (then longest) hit in the response wins.
GRAMMARS: dict[str, dict[str, tuple[str, ...]]] = {
    "t1": {
        "yes": (r"\byes\b", r"\binteractable\b", r"\bsuitable for interaction\b"),
        "no": (r"\bno\b", r"\bnot interactable\b", r"\bnot suitable\b"),
    },
    "t2": {
        SOFT: (r"\bsoft body\b",),
        RIGID: (r"\brigid body\b",),
    },
    "t3": {
        "non_static": (r"\bnon-static\b", r"\bnonstatic\b", r"\bnon static\b",
                       r"\bnot static\b", r"\bdynamic\b"),
        "static": (r"\bstatic\b",),
    },
}

_FLOAT_RE = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


@dataclass(frozen=True)
class PromptTemplate:
    task: str
    strategy: str
    text: str

    def render(self, **slots) -> str:
        values = {"caption": "", "examples": "", "rationales": "", "region": ""}
        values.update({k: v for k, v in slots.items() if v is not None})
        rendered = self.text.format(**values)
        if not rendered.strip():
            raise InvalidParameter("rendered prompt is empty")
        return rendered


def _load_templates() -> dict[str, dict[str, PromptTemplate]]:
    raw = json.loads(
        resources.files("physid").joinpath("data/prompt_templates.json").read_text()
    )
    return {
        task: {
            strategy: PromptTemplate(task, strategy, text)
            for strategy, text in by_strategy.items()
        }
        for task, by_strategy in raw.items()
    }


TEMPLATES = _load_templates()


def get_template(task: str, strategy: str) -> PromptTemplate:
    if strategy not in STRATEGIES:
        raise InvalidParameter(f"unknown prompt strategy {strategy!r}")
    return TEMPLATES[task][strategy]


def parse_classification(raw: str, grammar: dict[str, tuple[str, ...]],
                         task: str = "") -> str:
    """Earliest grammar hit wins; same-position ties go to the longer match,
    then to grammar declaration order."""
    best = None
    for order, (label, patterns) in enumerate(grammar.items()):
        for pattern in patterns:
            m = re.search(pattern, raw, re.IGNORECASE)
            if m is None:
                continue
            key = (m.start(), -(m.end() - m.start()), order)
            if best is None or key < best[0]:
                best = (key, label)
    if best is None:
        raise ResponseParseFailure(task or "classification", raw)
    return best[1]


def parse_confidence(raw: str) -> float | None:
    m = re.search(rf"confidence\s*[:=]?\s*({_FLOAT_RE})", raw, re.IGNORECASE)
    if m is None:
        return None
    return min(max(float(m.group(1)), 0.0), 1.0)


def _normalize_key(k: str) -> str:
    return re.sub(r"[\s_]+", "_", k.strip().lower())


def parse_properties(raw: str) -> tuple[MaterialProperties, bool]:
    """Pull the five property values out of a model response.

    Tries, in order: a JSON object with the canonical keys, key-name matches
    in free text, then the first five numbers.  Values are clamped to [0, 1];
    the returned flag says whether any clamping happened.
    """
    from .softbody import PROPERTY_NAMES

    values = None
    try:
        obj = json.loads(raw)
    except (json.JSONDecodeError, TypeError):
        obj = None
    if isinstance(obj, dict):
        normalized = {_normalize_key(k): v for k, v in obj.items()}
        if all(name in normalized for name in PROPERTY_NAMES):
            values = [float(normalized[name]) for name in PROPERTY_NAMES]

    if values is None:
        found = []
        for name in PROPERTY_NAMES:
            words = name.split("_")
            pattern = rf"{words[0]}[\s_]+{words[1]}\s*[:=]?\s*({_FLOAT_RE})"
            m = re.search(pattern, raw, re.IGNORECASE)
            if m is None:
                break
            found.append(float(m.group(1)))
        if len(found) == 5:
            values = found

    if values is None:
        numbers = re.findall(_FLOAT_RE, raw)
        if len(numbers) < 5:
            raise ResponseParseFailure("t4", raw, "fewer than 5 numbers found")
        values = [float(x) for x in numbers[:5]]

    clamped = [min(max(v, 0.0), 1.0) for v in values]
    return MaterialProperties.from_vector(clamped), clamped != values


def parse_segments(raw: str) -> list[dict]:
    try:
        obj = json.loads(raw)
        segments = obj["segments"]
        out = []
        for seg in segments:
            bbox = [float(v) for v in seg["bbox"]]
            if len(bbox) != 4:
                raise ValueError("bbox needs 4 entries")
            out.append({"id": str(seg["id"]), "bbox": bbox})
        return out
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ResponseParseFailure("segment", raw, str(exc)) from exc


# ---------------------------------------------------------------------------
# Pipeline result

@dataclass
class PipelineResult:
    image_id: str
    prompt_strategy: str
    interactable: bool
    dynamics: str = NONE
    confidence: float | None = None
    properties: MaterialProperties | None = None
    properties_clamped: bool = False
    static_flags: list[dict] | None = None
    mesh_path: str | None = None
    timings_ms: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.interactable and self.dynamics != NONE:
            raise InconsistentResult("dynamics must be none when not interactable")
        if self.interactable and self.dynamics == NONE:
            raise InconsistentResult("interactable result needs a dynamics class")

    def to_dict(self, include_timings: bool = True) -> dict:
        out = {
            "image_id": self.image_id,
            "prompt_strategy": self.prompt_strategy,
            "interactable": self.interactable,
            "dynamics": self.dynamics,
            "confidence": self.confidence,
            "properties": self.properties.to_dict() if self.properties else None,
            "properties_clamped": self.properties_clamped,
            "static_flags": self.static_flags,
            "mesh_path": self.mesh_path,
        }
        if include_timings:
            out["timings_ms"] = {k: round(v, 3) for k, v in self.timings_ms.items()}
        return out

    def to_json(self, include_timings: bool = True) -> str:
        return json.dumps(self.to_dict(include_timings), indent=2, sort_keys=True)


class _StageTimer:
    def __init__(self):
        self.timings_ms: dict[str, float] = {}

    def run(self, stage: str, fn, *args):
        start = time.perf_counter()
        out = fn(*args)
        self.timings_ms[stage] = (time.perf_counter() - start) * 1e3
        return out


def run_pipeline(image_path, client: ExternalClient, strategy: str = "few_shot_cot",
                 caption: str = "", mesh_dir=None,
                 stage_timeout: float = 30.0) -> PipelineResult:
    """Run the full chain for one image against the given client."""
    image_path = Path(image_path)
    image_b64 = base64.b64encode(image_path.read_bytes()).decode("ascii")
    image_id = image_path.stem
    timer = _StageTimer()

    def ask(task: str, **slots) -> str:
        prompt = get_template(task, strategy).render(caption=caption, **slots)
        return client.complete(task, prompt, image_b64)

    t1_raw = timer.run("t1", ask, "t1")
    verdict = parse_classification(t1_raw, GRAMMARS["t1"], task="t1")
    confidence = parse_confidence(t1_raw)
    if verdict == "no":
        return PipelineResult(
            image_id=image_id, prompt_strategy=strategy, interactable=False,
            dynamics=NONE, confidence=confidence, timings_ms=timer.timings_ms,
        )

    mesh_dir = Path(mesh_dir) if mesh_dir is not None else image_path.parent

    def generate_mesh() -> str:
        obj_text = ask("mesh")
        out = mesh_dir / f"{image_id}.obj"
        out.write_text(obj_text, encoding="utf-8")
        return str(out)

    def estimate_properties():
        return parse_properties(ask("t4"))

    def static_regions() -> list[dict]:
        segments = parse_segments(timer.run("segment", ask, "segment"))
        labeled = []
        for seg in segments:
            raw = ask("t3", region=json.dumps(seg, sort_keys=True))
            label = parse_classification(raw, GRAMMARS["t3"], task="t3")
            labeled.append({**seg, "label": label})
        return labeled

    def wait(stage: str, future):
        try:
            return future.result(timeout=stage_timeout)
        except FutureTimeout:
            raise StageTimeout(stage, stage_timeout) from None

    with ThreadPoolExecutor(max_workers=3) as pool:
        mesh_future = pool.submit(timer.run, "mesh", generate_mesh)
        t2_raw = timer.run("t2", ask, "t2")
        dynamics = parse_classification(t2_raw, GRAMMARS["t2"], task="t2")

        properties = None
        clamped = False
        static_flags = None
        if dynamics == SOFT:
            t4_future = pool.submit(timer.run, "t4", estimate_properties)
            t3_future = pool.submit(timer.run, "t3", static_regions)
            properties, clamped = wait("t4", t4_future)
            static_flags = wait("t3", t3_future)
        mesh_path = wait("mesh", mesh_future)

    return PipelineResult(
        image_id=image_id, prompt_strategy=strategy, interactable=True,
        dynamics=dynamics, confidence=confidence, properties=properties,
        properties_clamped=clamped, static_flags=static_flags,
        mesh_path=mesh_path, timings_ms=timer.timings_ms,
    )


# ---------------------------------------------------------------------------
# Session configuration

@dataclass(frozen=True)
class SessionSpec:
    """Everything a simulation session needs, assembled from one result."""

    kind: str  # SOFT or RIGID
    mesh: TriMesh
    mass: object  # MassDistribution
    material: MaterialProperties | None = None
    static_node_flags: np.ndarray | None = None
    constraint: HingeConeConstraint | None = None


def compose_static_mask(static_flags: list[dict], camera: Camera) -> StaticMask:
    """Rasterize static-labeled segment bboxes into a display-space mask."""
    data = np.zeros((camera.height, camera.width), dtype=np.uint8)
    for seg in static_flags:
        if seg.get("label") != "static":
            continue
        x, y, w, h = seg["bbox"]
        x0 = max(int(np.floor(x)), 0)
        y0 = max(int(np.floor(y)), 0)
        x1 = min(int(np.ceil(x + w)), camera.width)
        y1 = min(int(np.ceil(y + h)), camera.height)
        data[y0:y1, x0:x1] = 255
    return StaticMask(data=data, camera=camera)


def configure_simulation(result: PipelineResult, mesh: TriMesh, *,
                         total_mass: float = 1.0, camera: Camera | None = None,
                         constraint_config: dict | None = None) -> SessionSpec:
    """Bind a pipeline result to a loaded mesh as a ready-to-run session."""
    if result.dynamics == NONE:
        raise InconsistentResult("cannot configure a session for dynamics=none")
    dist = lump_mass(mesh, total_mass)
    if result.dynamics == RIGID:
        constraint = choose_hinge_anchor(mesh, constraint_config)
        return SessionSpec(kind=RIGID, mesh=mesh, mass=dist, constraint=constraint)

    material = result.properties
    if material is None:
        raise InconsistentResult("soft result is missing material properties")
    flags = None
    if camera is not None and result.static_flags:
        mask = compose_static_mask(result.static_flags, camera)
        flags = map_pixels_to_nodes(mesh, mesh.vertices, mask)
        dist = apply_static_mask(dist, flags)
    return SessionSpec(kind=SOFT, mesh=mesh, mass=dist, material=material,
                       static_node_flags=flags)


def load_result_mesh(result: PipelineResult) -> TriMesh:
    if not result.mesh_path:
        raise InconsistentResult("result has no mesh path")
    return load_obj(result.mesh_path)
