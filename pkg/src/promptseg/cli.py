"""Command-line front door for batch segmentation and evaluation runs.

Every command accepts --backend "kind:path" (e.g. mock:scene.json) so the
whole surface is usable without model weights, and --config pointing at a
JSON/YAML file with the documented ServiceConfig schema. Flags win over the
config file. Reports are machine-readable JSON on stdout or --out.

Exit codes: 0 success, 2 input/usage error, 3 backend/configuration error.
"""

from __future__ import annotations

import functools
import json
import statistics
import sys
import time
from pathlib import Path

import click
import numpy as np

from .config import EngineConfig, service_config
from .engine import Engine
from .errors import BackendConfigError, InputFormatError, PromptSegError, SchemaError
from .eval.coco import load_coco_json, load_proposals
from .eval.edges import edge_metrics
from .eval.proposals import evaluate_proposals
from .imageops import decode_png_gray, encode_png_gray, encode_png_rgb
from .maskgen import cache_to_dict
from .prompt import BoxPrompt, PointsPrompt, TextPrompt
from .rle import mask_to_coco

EXIT_INPUT = 2
EXIT_BACKEND = 3


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (InputFormatError, SchemaError) as exc:
            _fail(EXIT_INPUT, str(exc))
        except BackendConfigError as exc:
            _fail(EXIT_BACKEND, str(exc))
        except PromptSegError as exc:
            _fail(1, str(exc))

    return wrapper


def engine_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(exists=True), default=None,
                      help="JSON/YAML config file.")(fn)
    fn = click.option("--backend", "backend_spec", default=None,
                      help="Backend spec, e.g. mock:scene.json or torchscript:model.pt.")(fn)
    fn = click.option("--embedder", "embedder_spec", default=None,
                      help="Embedding backend spec (default: color).")(fn)
    fn = click.option("--conf-thresh", type=float, default=None)(fn)
    fn = click.option("--iou-thresh", type=float, default=None)(fn)
    fn = click.option("--input-size", type=int, default=None)(fn)
    return fn


def _build_engine(config_path, backend_spec, embedder_spec, conf_thresh, iou_thresh, input_size) -> Engine:
    cfg = service_config(config_path)
    engine_overrides = {
        k: v
        for k, v in (
            ("conf_thresh", conf_thresh),
            ("iou_thresh", iou_thresh),
            ("input_size", input_size),
        )
        if v is not None
    }
    engine_cfg = (
        EngineConfig(**{**cfg.engine.__dict__, **engine_overrides})
        if engine_overrides
        else cfg.engine
    )
    backend = backend_spec or cfg.backend
    if not backend:
        raise InputFormatError("no backend configured; pass --backend or set it in --config")
    return Engine.from_specs(backend, engine_cfg, embedder_spec or cfg.embedder or "color")


def _emit(report: dict, out: str | None):
    text = json.dumps(report, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        click.echo(text)


@click.group()
def main():
    """Real-time promptable segmentation toolkit."""


@main.command()
@click.argument("image", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None, help="Output file (json) or directory (png).")
@click.option("--format", "fmt", type=click.Choice(["json", "png"]), default="json")
@engine_options
@handle_errors
def segment(image, out, fmt, **engine_kwargs):
    """Everything mode: segment all instances and dump them."""
    engine = _build_engine(**engine_kwargs)
    cache = engine.segment_everything(Path(image).read_bytes())
    if fmt == "json":
        _emit(cache_to_dict(cache), out)
        return
    if not out:
        raise InputFormatError("--format png requires --out DIR")
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    overlay = cache.image.copy()
    rng = np.random.default_rng(0)
    for i, inst in enumerate(cache.instances):
        arr = inst.mask.to_array()
        (out_dir / f"mask_{i:03d}.png").write_bytes(encode_png_gray(arr.astype(np.float64)))
        color = rng.integers(64, 256, size=3)
        overlay[arr] = (0.5 * overlay[arr] + 0.5 * color).astype(np.uint8)
    (out_dir / "overlay.png").write_bytes(encode_png_rgb(overlay))
    (out_dir / "instances.json").write_text(json.dumps(cache_to_dict(cache), indent=2) + "\n")
    click.echo(f"wrote {len(cache.instances)} masks to {out_dir}")


def _parse_point(value: str) -> tuple[float, float, str]:
    parts = value.split(",")
    if len(parts) != 3 or parts[2] not in ("fg", "bg"):
        raise InputFormatError(f"--point must be x,y,fg|bg, got {value!r}")
    try:
        return float(parts[0]), float(parts[1]), parts[2]
    except ValueError as exc:
        raise InputFormatError(f"bad point {value!r}: {exc}") from exc


@main.command("prompt")
@click.argument("image", type=click.Path(exists=True))
@click.option("--point", "points", multiple=True, help="x,y,fg or x,y,bg; repeatable.")
@click.option("--box", "box_str", default=None, help="x1,y1,x2,y2")
@click.option("--text", "text", default=None)
@click.option("--out", type=click.Path(), default=None)
@engine_options
@handle_errors
def prompt_cmd(image, points, box_str, text, out, **engine_kwargs):
    """One-shot prompting: segment, then select by point/box/text."""
    given = [bool(points), box_str is not None, text is not None]
    if sum(given) != 1:
        raise InputFormatError("pass exactly one of --point/--box/--text")
    if points:
        spec = PointsPrompt(points=tuple(_parse_point(p) for p in points))
        if not any(lbl == "fg" for _, _, lbl in spec.points):
            raise InputFormatError("at least one fg point is required")
    elif box_str is not None:
        try:
            from .geometry import BoundingBox

            spec = BoxPrompt(box=BoundingBox.from_list(box_str.split(",")))
        except ValueError as exc:
            raise InputFormatError(f"bad box {box_str!r}: {exc}") from exc
    else:
        spec = TextPrompt(text=text)
    engine = _build_engine(**engine_kwargs)
    cache = engine.segment_everything(Path(image).read_bytes())
    result = engine.prompt(cache, spec)
    _emit(
        {
            "indices": list(result.indices),
            "scores": list(result.scores),
            "merged_mask": mask_to_coco(result.merged_mask),
            "empty": result.is_empty,
        },
        out,
    )


@main.command()
@click.argument("image", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), required=True, help="Output PNG path.")
@engine_options
@handle_errors
def edges(image, out, **engine_kwargs):
    """Edge map: everything mode -> probability aggregation -> Sobel -> NMS."""
    engine = _build_engine(**engine_kwargs)
    cache = engine.segment_everything(Path(image).read_bytes())
    Path(out).write_bytes(engine.edges(cache).to_png_bytes())
    click.echo(f"wrote {out}")


@main.command("eval-proposals")
@click.option("--ann", "ann_path", type=click.Path(exists=True), required=True)
@click.option("--props", "props_path", type=click.Path(exists=True), required=True)
@click.option("--k", "ks", default="10,100,1000", help="Comma-separated budgets.")
@click.option("--kind", type=click.Choice(["box", "mask"]), default="box")
@click.option("--out", type=click.Path(), default=None)
@handle_errors
def eval_proposals(ann_path, props_path, ks, kind, out):
    """AR@k and AUC of proposals against COCO-style annotations."""
    try:
        budgets = tuple(int(v) for v in ks.split(","))
    except ValueError as exc:
        raise InputFormatError(f"bad --k {ks!r}: {exc}") from exc
    annotations = load_coco_json(ann_path)
    proposals = load_proposals(props_path, annotations)
    _emit(evaluate_proposals(proposals, annotations, ks=budgets, kind=kind), out)


@main.command("eval-edges")
@click.option("--pred", "pred_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--gt", "gt_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--tol", type=float, default=None, help="Match tolerance in pixels.")
@click.option("--out", type=click.Path(), default=None)
@handle_errors
def eval_edges(pred_dir, gt_dir, tol, out):
    """ODS/OIS/AP/R50 of predicted edge maps against boundary PNGs."""
    gt_files = sorted(Path(gt_dir).glob("*.png"))
    if not gt_files:
        raise InputFormatError(f"no .png ground-truth maps in {gt_dir}")
    preds, gts, names = [], [], []
    for gt_file in gt_files:
        pred_file = Path(pred_dir) / gt_file.name
        if not pred_file.exists():
            raise InputFormatError(f"missing prediction for {gt_file.name}")
        preds.append(decode_png_gray(pred_file.read_bytes()))
        gts.append(decode_png_gray(gt_file.read_bytes()) > 0)
        names.append(gt_file.name)
    report = edge_metrics(preds, gts, tolerance=tol)
    report["images"] = names
    _emit(report, out)


@main.command()
@click.option("--port", type=int, default=None)
@click.option("--host", default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--backend", "backend_spec", default=None)
@click.option("--embedder", "embedder_spec", default=None)
@handle_errors
def serve(port, host, config_path, backend_spec, embedder_spec):
    """Start the HTTP service."""
    import uvicorn

    from .service import create_app

    cfg = service_config(config_path, port=port, host=host, backend=backend_spec,
                         embedder=embedder_spec)
    if not cfg.backend:
        raise InputFormatError("no backend configured; pass --backend or set it in --config")
    engine = Engine.from_specs(cfg.backend, cfg.engine, cfg.embedder)
    app = create_app(engine, cfg)
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="info")


@main.command()
@click.option("--scene", "scene_path", type=click.Path(exists=True), required=True)
@click.option("--prompts", "n_prompts", type=int, default=100)
@click.option("--out", type=click.Path(), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@handle_errors
def bench(scene_path, n_prompts, out, config_path):
    """Time stage one once, then per-prompt latency over a cached session."""
    from .backend.mock import MockBackend, SyntheticScene, render_scene

    cfg = service_config(config_path).engine
    scene = SyntheticScene.from_file(scene_path)
    backend = MockBackend(scene, input_size=cfg.input_size, reg_max=cfg.reg_max)
    engine = Engine(backend, cfg)
    image = render_scene(scene)

    start = time.perf_counter()
    cache = engine.segment_everything(image)
    stage_one_ms = (time.perf_counter() - start) * 1000.0

    targets = [s.inner_point() for s in scene.shapes] or [(scene.width / 2, scene.height / 2)]
    latencies = []
    for i in range(n_prompts):
        x, y = targets[i % len(targets)]
        spec = PointsPrompt(points=((x, y, "fg"),))
        t0 = time.perf_counter()
        engine.prompt(cache, spec)
        latencies.append((time.perf_counter() - t0) * 1000.0)
    _emit(
        {
            "scene": scene_path,
            "instance_count": len(cache.instances),
            "stage_one_ms": stage_one_ms,
            "stage_one_calls": engine.stage_one_calls,
            "prompts": n_prompts,
            "prompt_ms": {
                "first": latencies[0] if latencies else None,
                "median": statistics.median(latencies) if latencies else None,
                "p90": (
                    sorted(latencies)[int(0.9 * (len(latencies) - 1))] if latencies else None
                ),
                "mean": statistics.fmean(latencies) if latencies else None,
            },
        },
        out,
    )


if __name__ == "__main__":
    main()
