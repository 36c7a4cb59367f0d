"""Engine and service configuration, loadable from JSON/YAML with env overrides."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field

import yaml

from .errors import SchemaError


@dataclass(frozen=True)
class EngineConfig:
    input_size: int = 1024
    strides: tuple[int, ...] = (8, 16, 32)
    reg_max: int = 26
    num_prototypes: int = 32
    conf_thresh: float = 0.4
    iou_thresh: float = 0.9  # high NMS IoU keeps dense everything-mode output
    max_det: int = 300
    mask_threshold: float = 0.5
    min_mask_pixels: int = 4
    closing_kernel: int = 3
    closing_iterations: int = 1
    edge_aggregation: str = "max"  # or "sum" (clipped)


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    backend: str = ""  # e.g. "mock:scene.json", "torchscript:model.pt"
    embedder: str = "color"
    session_ttl_seconds: float = 1800.0
    session_capacity: int = 64
    max_upload_bytes: int = 32 * 1024 * 1024
    cors_origin: str | None = None
    engine: EngineConfig = field(default_factory=EngineConfig)


_ENV_OVERRIDES = {
    "PROMPTSEG_PORT": ("port", int),
    "PROMPTSEG_HOST": ("host", str),
    "PROMPTSEG_BACKEND": ("backend", str),
    "PROMPTSEG_EMBEDDER": ("embedder", str),
    "PROMPTSEG_SESSION_TTL": ("session_ttl_seconds", float),
    "PROMPTSEG_SESSION_CAPACITY": ("session_capacity", int),
    "PROMPTSEG_MAX_UPLOAD_BYTES": ("max_upload_bytes", int),
    "PROMPTSEG_CORS_ORIGIN": ("cors_origin", str),
}


def _build(cls, obj: dict, path: str):
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in obj.items():
        if key not in known:
            raise SchemaError(f"unknown config key {key!r}", path)
        if key == "engine":
            if not isinstance(value, dict):
                raise SchemaError("engine must be an object", f"{path}.engine")
            value = _build(EngineConfig, value, f"{path}.engine")
        elif key == "strides":
            value = tuple(int(v) for v in value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise SchemaError(str(exc), path) from exc


def load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            if path.endswith((".yaml", ".yml")):
                obj = yaml.safe_load(fh)
            else:
                obj = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read config: {exc}", "$") from exc
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise SchemaError(f"invalid config file: {exc}", "$") from exc
    if obj is None:
        return {}
    if not isinstance(obj, dict):
        raise SchemaError("config root must be an object", "$")
    return obj


def engine_config(path: str | None = None, **overrides) -> EngineConfig:
    obj = load_config_file(path).get("engine", {}) if path else {}
    obj.update({k: v for k, v in overrides.items() if v is not None})
    return _build(EngineConfig, obj, "$.engine")


def service_config(path: str | None = None, env: dict | None = None, **overrides) -> ServiceConfig:
    """File values, overridden by environment, overridden by explicit kwargs."""
    obj = load_config_file(path) if path else {}
    env = os.environ if env is None else env
    for var, (key, cast) in _ENV_OVERRIDES.items():
        if var in env:
            obj[key] = cast(env[var])
    obj.update({k: v for k, v in overrides.items() if v is not None})
    return _build(ServiceConfig, obj, "$")
