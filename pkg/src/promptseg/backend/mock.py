"""Deterministic synthetic backend: scenes of shapes rendered into the exact
tensor contract a real model would produce, so the whole pipeline can be
exercised and oracle-checked without weights.

Scene JSON schema::

    {
      "width": 640, "height": 480,
      "shapes": [
        {"id": 1, "type": "rect", "x": 10, "y": 20, "w": 100, "h": 50,
         "color": [255, 0, 0]},
        {"id": 2, "type": "disk", "cx": 320, "cy": 240, "r": 60},
        {"id": 3, "type": "polygon", "points": [[10, 400], [100, 420], [50, 460]]}
      ]
    }

`color` is optional (a palette color is assigned by shape order). Shapes must
lie inside the image bounds and ids must be unique.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, ImageDraw
from scipy import ndimage

from ..errors import BackendConfigError, SceneCapacityError, SchemaError
from ..geometry import BoundingBox
from ..imageops import encode_png_rgb
from .base import InferenceBackend
from .preprocess import letterbox_params
from .types import ImageTensor, PadInfo, RawNetworkOutput, make_anchor_grid

PALETTE = (
    (230, 25, 75),
    (60, 180, 75),
    (0, 130, 200),
    (255, 225, 25),
    (245, 130, 48),
    (145, 30, 180),
    (70, 240, 240),
    (240, 50, 230),
    (210, 245, 60),
    (170, 110, 40),
)

BACKGROUND = (20, 20, 20)

# Prototype maps are clipped signed-distance ramps: `slope` logits per input
# pixel, saturating at +/-`amplitude`. The 0.5-probability level set then sits
# on the true shape boundary after bilinear upsampling.
PROTO_AMPLITUDE = 10.0
PROTO_SLOPE = 0.5
NOISE_CHANNELS = 2
BASE_CLS_LOGIT = -12.0


@dataclass(frozen=True)
class Rect:
    shape_id: int
    x: float
    y: float
    w: float
    h: float
    color: tuple[int, int, int] = (255, 255, 255)

    def bbox(self) -> BoundingBox:
        return BoundingBox(self.x, self.y, self.x + self.w, self.y + self.h)

    def inner_point(self) -> tuple[float, float]:
        return self.x + self.w / 2.0, self.y + self.h / 2.0

    def signed_distance(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Distance to the boundary, positive inside, original-pixel units."""
        xs, ys = np.broadcast_arrays(xs, ys)
        inside = np.minimum.reduce(
            [xs - self.x, self.x + self.w - xs, ys - self.y, self.y + self.h - ys]
        )
        qx = np.maximum(self.x - xs, xs - (self.x + self.w))
        qy = np.maximum(self.y - ys, ys - (self.y + self.h))
        outside = np.hypot(np.maximum(qx, 0.0), np.maximum(qy, 0.0))
        return np.where(inside >= 0.0, inside, -outside)

    def to_json(self) -> dict:
        return {
            "id": self.shape_id, "type": "rect",
            "x": self.x, "y": self.y, "w": self.w, "h": self.h,
            "color": list(self.color),
        }


@dataclass(frozen=True)
class Disk:
    shape_id: int
    cx: float
    cy: float
    r: float
    color: tuple[int, int, int] = (255, 255, 255)

    def bbox(self) -> BoundingBox:
        return BoundingBox(self.cx - self.r, self.cy - self.r, self.cx + self.r, self.cy + self.r)

    def inner_point(self) -> tuple[float, float]:
        return self.cx, self.cy

    def signed_distance(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        return self.r - np.hypot(xs - self.cx, ys - self.cy)

    def to_json(self) -> dict:
        return {
            "id": self.shape_id, "type": "disk",
            "cx": self.cx, "cy": self.cy, "r": self.r, "color": list(self.color),
        }


@dataclass(frozen=True)
class Polygon:
    shape_id: int
    points: tuple[tuple[float, float], ...]
    color: tuple[int, int, int] = (255, 255, 255)

    def bbox(self) -> BoundingBox:
        xs = [p[0] for p in self.points]
        ys = [p[1] for p in self.points]
        return BoundingBox(min(xs), min(ys), max(xs), max(ys))

    def inner_point(self) -> tuple[float, float]:
        box = self.bbox()
        raster = rasterize_polygon(self.points, int(math.ceil(box.x2)) + 1, int(math.ceil(box.y2)) + 1)
        if not raster.any():
            return (box.x1 + box.x2) / 2.0, (box.y1 + box.y2) / 2.0
        dist = ndimage.distance_transform_edt(raster)
        iy, ix = np.unravel_index(int(np.argmax(dist)), dist.shape)
        return float(ix) + 0.5, float(iy) + 0.5

    def to_json(self) -> dict:
        return {
            "id": self.shape_id, "type": "polygon",
            "points": [list(p) for p in self.points], "color": list(self.color),
        }


Shape = Rect | Disk | Polygon


def rasterize_polygon(points, width: int, height: int) -> np.ndarray:
    img = Image.new("1", (width, height), 0)
    ImageDraw.Draw(img).polygon([tuple(p) for p in points], fill=1)
    return np.asarray(img, dtype=bool)


def rasterize_shape(shape: Shape, width: int, height: int) -> np.ndarray:
    """Pixel-center membership raster of a shape at a given canvas size."""
    if isinstance(shape, Polygon):
        full = np.zeros((height, width), dtype=bool)
        part = rasterize_polygon(shape.points, width, height)
        full[: part.shape[0], : part.shape[1]] = part[:height, :width]
        return full
    xs = np.arange(width, dtype=np.float64) + 0.5
    ys = np.arange(height, dtype=np.float64) + 0.5
    return shape.signed_distance(xs[None, :], ys[:, None]) > 0.0


def _parse_shape(obj: dict, index: int, path: str) -> Shape:
    kind = obj.get("type")
    shape_id = obj.get("id", index)
    color = tuple(obj["color"]) if "color" in obj else PALETTE[index % len(PALETTE)]
    try:
        if kind == "rect":
            return Rect(shape_id, float(obj["x"]), float(obj["y"]),
                        float(obj["w"]), float(obj["h"]), color)
        if kind == "disk":
            return Disk(shape_id, float(obj["cx"]), float(obj["cy"]), float(obj["r"]), color)
        if kind == "polygon":
            pts = tuple((float(p[0]), float(p[1])) for p in obj["points"])
            if len(pts) < 3:
                raise SchemaError("polygon needs >= 3 points", path)
            return Polygon(shape_id, pts, color)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad shape fields: {exc}", path) from exc
    raise SchemaError(f"unknown shape type {kind!r}", path)


@dataclass(frozen=True)
class SyntheticScene:
    width: int
    height: int
    shapes: tuple[Shape, ...] = field(default_factory=tuple)

    def __post_init__(self):
        ids = [s.shape_id for s in self.shapes]
        if len(set(ids)) != len(ids):
            raise SchemaError("duplicate shape ids", "$.shapes")
        for i, s in enumerate(self.shapes):
            box = s.bbox()
            if box.x1 < 0 or box.y1 < 0 or box.x2 > self.width or box.y2 > self.height:
                raise SchemaError(
                    f"shape id={s.shape_id} exceeds image bounds", f"$.shapes[{i}]"
                )

    @classmethod
    def from_json(cls, obj: dict) -> "SyntheticScene":
        if not isinstance(obj, dict):
            raise SchemaError("scene must be an object", "$")
        for key in ("width", "height"):
            if key not in obj:
                raise SchemaError(f"missing key {key!r}", "$")
        shapes = tuple(
            _parse_shape(s, i, f"$.shapes[{i}]")
            for i, s in enumerate(obj.get("shapes", []))
        )
        return cls(width=int(obj["width"]), height=int(obj["height"]), shapes=shapes)

    @classmethod
    def from_file(cls, path: str) -> "SyntheticScene":
        try:
            with open(path) as fh:
                return cls.from_json(json.load(fh))
        except OSError as exc:
            raise SchemaError(f"cannot read scene file: {exc}", "$") from exc
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}", "$") from exc

    def to_json(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "shapes": [s.to_json() for s in self.shapes],
        }


def render_scene(scene: SyntheticScene) -> np.ndarray:
    """Draw shapes over a dark background, later shapes on top; RGB uint8."""
    img = np.empty((scene.height, scene.width, 3), dtype=np.uint8)
    img[:] = BACKGROUND
    for shape in scene.shapes:
        raster = rasterize_shape(shape, scene.width, scene.height)
        img[raster] = shape.color
    return img


def render_scene_png(scene: SyntheticScene) -> bytes:
    return encode_png_rgb(render_scene(scene))


def _two_hot_logits(distance: float, reg_max: int, off: float = -40.0) -> np.ndarray:
    """Logits whose softmax expectation reproduces `distance` (grid units)."""
    logits = np.full(reg_max, off, dtype=np.float64)
    j0 = int(math.floor(distance))
    j0 = min(max(j0, 0), reg_max - 1)
    frac = distance - j0
    if frac <= 0.0 or j0 == reg_max - 1:
        logits[j0] = 0.0
    else:
        logits[j0] = math.log(1.0 - frac) if frac < 1.0 else off
        logits[j0 + 1] = math.log(frac)
    return logits


class MockBackend(InferenceBackend):
    """Emits one confident detection per scene shape.

    Each shape owns one prototype channel holding its clipped signed-distance
    field; its detection carries a one-hot coefficient row, a two-hot DFL
    encoding of its box, and a score of 0.9 decreasing with shape order. Two
    extra prototype channels carry structured noise that no detection selects.
    """

    def __init__(
        self,
        scene: SyntheticScene,
        input_size: int = 1024,
        reg_max: int = 26,
        strides: tuple[int, ...] = (8, 16, 32),
        num_prototypes: int | None = None,
    ):
        super().__init__(input_size=input_size, reg_max=reg_max)
        self.scene = scene
        self.strides = strides
        n_shapes = len(scene.shapes)
        self.num_prototypes = num_prototypes or max(32, n_shapes + NOISE_CHANNELS)
        if n_shapes > self.num_prototypes - NOISE_CHANNELS:
            raise SceneCapacityError(
                f"{n_shapes} shapes exceed capacity "
                f"{self.num_prototypes - NOISE_CHANNELS} "
                f"({self.num_prototypes} prototypes, {NOISE_CHANNELS} reserved)"
            )
        self.pad = letterbox_params(scene.width, scene.height, input_size)
        self._output: RawNetworkOutput | None = None

    # -- construction ------------------------------------------------------

    def _quarter_signed_distance(self, shape: Shape) -> np.ndarray:
        """Signed distance (input-pixel units) sampled on the quarter grid."""
        q = self.input_size // 4
        pad = self.pad
        centers_in = 4.0 * np.arange(q, dtype=np.float64) + 2.0
        if isinstance(shape, Polygon):
            xs_o = np.arange(self.input_size, dtype=np.float64) + 0.5
            gx = (xs_o - pad.pad_x) / pad.scale
            gy = (xs_o - pad.pad_y) / pad.scale
            # membership in original coords; padding area falls outside bounds
            inside_x = (gx >= 0) & (gx < self.scene.width)
            inside_y = (gy >= 0) & (gy < self.scene.height)
            raster = rasterize_shape(shape, self.scene.width, self.scene.height)
            ix = np.clip(np.floor(gx), 0, self.scene.width - 1).astype(int)
            iy = np.clip(np.floor(gy), 0, self.scene.height - 1).astype(int)
            grid = raster[np.ix_(iy, ix)] & inside_y[:, None] & inside_x[None, :]
            if grid.any():
                sd = ndimage.distance_transform_edt(grid) - ndimage.distance_transform_edt(~grid)
            else:
                sd = np.full(grid.shape, -self.input_size, dtype=np.float64)
            pooled = sd.reshape(q, 4, q, 4).mean(axis=(1, 3))
            return pooled
        xs = (centers_in - pad.pad_x) / pad.scale
        ys = (centers_in - pad.pad_y) / pad.scale
        return shape.signed_distance(xs[None, :], ys[:, None]) * pad.scale

    def _noise_prototypes(self) -> np.ndarray:
        q = self.input_size // 4
        xs, ys = np.meshgrid(np.arange(q, dtype=np.float64), np.arange(q, dtype=np.float64))
        g1 = 3.0 * np.sin(2 * np.pi * xs / 17.0) * np.cos(2 * np.pi * ys / 23.0)
        g2 = 3.0 * np.cos(2 * np.pi * (xs + ys) / 31.0)
        return np.stack([g1, g2])

    def _assign_anchor(self, box_in: BoundingBox, occupied: set[int]) -> tuple[int, float, float, float]:
        """Pick a free grid cell inside the box that fits the DFL range."""
        level_offsets = []
        total = 0
        for s in self.strides:
            level_offsets.append(total)
            total += (self.input_size // s) ** 2
        cx = (box_in.x1 + box_in.x2) / 2.0
        cy = (box_in.y1 + box_in.y2) / 2.0
        neighborhood = ((0, 0), (0, 1), (1, 0), (0, -1), (-1, 0), (1, 1), (1, -1), (-1, 1), (-1, -1))
        for level, s in enumerate(self.strides):
            n = self.input_size // s
            col, row = int(cx // s), int(cy // s)
            for dr, dc in neighborhood:
                r0, c0 = row + dr, col + dc
                if not (0 <= r0 < n and 0 <= c0 < n):
                    continue
                acx, acy = (c0 + 0.5) * s, (r0 + 0.5) * s
                sides = (acx - box_in.x1, acy - box_in.y1, box_in.x2 - acx, box_in.y2 - acy)
                if min(sides) < 0.0:
                    continue
                if max(sides) / s > self.reg_max - 1:
                    continue
                idx = level_offsets[level] + r0 * n + c0
                if idx in occupied:
                    continue
                occupied.add(idx)
                return idx, acx, acy, float(s)
        raise SceneCapacityError(
            f"no free anchor cell fits box {box_in.to_list()} at strides {self.strides}"
        )

    def _build(self) -> RawNetworkOutput:
        anchors = make_anchor_grid(self.input_size, self.strides)
        n = anchors.shape[0]
        k = self.num_prototypes
        q = self.input_size // 4
        cls_logits = np.full(n, BASE_CLS_LOGIT, dtype=np.float64)
        dfl_logits = np.zeros((n, 4 * self.reg_max), dtype=np.float64)
        coeffs = np.zeros((n, k), dtype=np.float64)
        protos = np.full((k, q, q), -PROTO_AMPLITUDE, dtype=np.float64)
        protos[k - NOISE_CHANNELS :] = self._noise_prototypes()

        shapes = self.scene.shapes
        occupied: set[int] = set()
        for i, shape in enumerate(shapes):
            sd = self._quarter_signed_distance(shape)
            protos[i] = np.clip(PROTO_SLOPE * sd, -PROTO_AMPLITUDE, PROTO_AMPLITUDE)

            box_in = self.pad.box_to_input(shape.bbox())
            idx, acx, acy, stride = self._assign_anchor(box_in, occupied)
            score = 0.9 - 0.35 * (i / max(len(shapes) - 1, 1))
            cls_logits[idx] = math.log(score / (1.0 - score))
            coeffs[idx, i] = 1.0
            sides = (
                (acx - box_in.x1) / stride,
                (acy - box_in.y1) / stride,
                (box_in.x2 - acx) / stride,
                (box_in.y2 - acy) / stride,
            )
            for side_idx, d in enumerate(sides):
                dfl_logits[idx, side_idx * self.reg_max : (side_idx + 1) * self.reg_max] = (
                    _two_hot_logits(d, self.reg_max)
                )

        return RawNetworkOutput(
            anchors=anchors,
            cls_logits=cls_logits.astype(np.float32),
            dfl_logits=dfl_logits.astype(np.float32),
            mask_coeffs=coeffs.astype(np.float32),
            prototypes=protos.astype(np.float32),
        )

    # -- interface ---------------------------------------------------------

    def _infer(self, tensor: ImageTensor, pad: PadInfo | None) -> RawNetworkOutput:
        if pad is not None and (pad.orig_w, pad.orig_h) != (self.scene.width, self.scene.height):
            raise BackendConfigError(
                f"image is {pad.orig_w}x{pad.orig_h} but the mock scene is "
                f"{self.scene.width}x{self.scene.height}"
            )
        if self._output is None:
            self._output = self._build()
        return self._output
