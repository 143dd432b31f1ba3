"""Command-line entry point: simulate, serve, pipeline, eval."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import PhysidError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="physid",
        description="Interactive soft/rigid body simulation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="batch-run a soft body and export CSV")
    sim.add_argument("--mesh", required=True, help="OBJ mesh file")
    sim.add_argument("--material", required=True, help="material JSON file")
    sim.add_argument("--mask", help="static mask PNG/PGM")
    sim.add_argument("--camera", help="camera descriptor JSON (required with --mask)")
    sim.add_argument("--script", help="event script JSON")
    sim.add_argument("--steps", type=int, required=True)
    sim.add_argument("--dt", type=float, default=1.0 / 60.0)
    sim.add_argument("--out", required=True, help="trajectory CSV path")
    sim.add_argument("--env", help="environment JSON (half-spaces + restitution)")
    sim.add_argument("--gravity", type=float, nargs=3, default=[0.0, -9.81, 0.0],
                     metavar=("GX", "GY", "GZ"))

    srv = sub.add_parser("serve", help="run the live WebSocket session service")
    srv.add_argument("--port", type=int, required=True)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--max-sessions", type=int, default=8)
    srv.add_argument("--mesh-dir", default=".")
    srv.add_argument("--camera", help="camera descriptor JSON shared with clients")
    srv.add_argument("--env", help="environment JSON (half-spaces + restitution)")
    srv.add_argument("--gravity", type=float, nargs=3, default=[0.0, -9.81, 0.0],
                     metavar=("GX", "GY", "GZ"))

    pipe = sub.add_parser("pipeline", help="classify one image and stage a session")
    pipe.add_argument("--image", required=True)
    pipe.add_argument("--fixtures", help="fixture directory for offline replay")
    pipe.add_argument("--endpoint", help="live endpoint URL (overrides fixtures)")
    pipe.add_argument("--strategy", default="few_shot_cot",
                      choices=["zero_shot", "few_shot", "cot", "few_shot_cot"])
    pipe.add_argument("--caption", default="")
    pipe.add_argument("--mesh-dir", help="where generated meshes are written")
    pipe.add_argument("--out", required=True, help="result JSON path")

    ev = sub.add_parser("eval", help="score predictions against ground truth")
    ev.add_argument("--task", required=True,
                    choices=["t1", "t2", "t3", "t4", "images"])
    ev.add_argument("--pred", required=True)
    ev.add_argument("--truth", required=True)
    ev.add_argument("--weights", help="weight JSON for t4 (list of 5 numbers)")
    ev.add_argument("--positive", help="positive label override for t1/t2/t3")
    return parser


def _cmd_simulate(args) -> int:
    from .collision import Environment
    from .mesh import load_obj
    from .session import EventScript, SimConfig, run_batch
    from .softbody import MaterialProperties

    mesh = load_obj(args.mesh)
    material = MaterialProperties.from_json(args.material)
    script = EventScript.from_json(args.script) if args.script else EventScript()
    env = Environment.from_json(args.env) if args.env else Environment()
    kwargs = {}
    if args.camera:
        from .camera import Camera

        kwargs["camera"] = Camera.from_json(args.camera)
    config = SimConfig(gravity=np.asarray(args.gravity), dt=args.dt,
                       environment=env, **kwargs)
    if args.mask and not args.camera:
        raise PhysidError("--mask requires --camera")
    run_batch(mesh, material, script, steps=args.steps, dt=args.dt,
              out_path=args.out, config=config, mask_path=args.mask)
    return 0


def _cmd_serve(args) -> int:
    from .collision import Environment
    from .service import serve
    from .session import SimConfig

    kwargs = {"gravity": np.asarray(args.gravity)}
    if args.env:
        kwargs["environment"] = Environment.from_json(args.env)
    if args.camera:
        from .camera import Camera

        kwargs["camera"] = Camera.from_json(args.camera)
    serve(args.port, host=args.host, mesh_dir=args.mesh_dir,
          max_sessions=args.max_sessions, config=SimConfig(**kwargs))
    return 0


def _cmd_pipeline(args) -> int:
    from .clients import FixtureClient, HttpClient
    from .pipeline import run_pipeline

    if args.endpoint:
        client = HttpClient(args.endpoint, record_to=args.fixtures)
    elif args.fixtures:
        client = FixtureClient(args.fixtures)
    else:
        raise PhysidError("need --fixtures or --endpoint")
    result = run_pipeline(args.image, client, strategy=args.strategy,
                          caption=args.caption, mesh_dir=args.mesh_dir)
    Path(args.out).write_text(result.to_json() + "\n", encoding="utf-8")
    return 0


_POSITIVE_DEFAULTS = {"t1": "yes", "t2": "soft", "t3": "static"}


def _load_label_file(path) -> dict[str, str]:
    with open(path, "r", encoding="utf-8") as fh:
        rows = json.load(fh)
    return {str(r["id"]): str(r["label"]) for r in rows}


def _load_vector_file(path) -> dict[str, list[float]]:
    with open(path, "r", encoding="utf-8") as fh:
        rows = json.load(fh)
    return {str(r["id"]): [float(v) for v in r["values"]] for r in rows}


def _cmd_eval(args) -> int:
    from . import metrics

    if args.task in ("t1", "t2", "t3"):
        pred = _load_label_file(args.pred)
        truth = _load_label_file(args.truth)
        ids = sorted(truth)
        records = tuple((i, pred.get(i, ""), truth[i]) for i in ids)
        positive = args.positive or _POSITIVE_DEFAULTS[args.task]
        out = {"f1": metrics.f1_score(
            metrics.LabeledPredictions(records, positive)
        )}
    elif args.task == "t4":
        pred = _load_vector_file(args.pred)
        truth = _load_vector_file(args.truth)
        ids = sorted(truth)
        records = tuple((i, tuple(pred[i]), tuple(truth[i])) for i in ids)
        weights = metrics.UNIFORM_WEIGHTS
        if args.weights:
            with open(args.weights, "r", encoding="utf-8") as fh:
                weights = np.asarray(json.load(fh), dtype=np.float64)
        preds = metrics.PropertyPredictions(records, weights=weights)
        out = {
            "w_mse": metrics.weighted_mse(preds),
            "w_mae": metrics.weighted_mae(preds),
        }
    else:  # images
        from PIL import Image

        a = np.asarray(Image.open(args.pred))
        b = np.asarray(Image.open(args.truth))
        raw = metrics.image_metrics(a, b)
        out = {k: ("inf" if v == float("inf") else v) for k, v in raw.items()}
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "serve": _cmd_serve,
    "pipeline": _cmd_pipeline,
    "eval": _cmd_eval,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except PhysidError as exc:
        print(f"physid {args.command}: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"physid {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
