from __future__ import annotations

import numpy as np
import pytest

from promptseg.backend.mock import Disk, MockBackend, Rect, SyntheticScene, render_scene
from promptseg.config import EngineConfig
from promptseg.engine import Engine


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_scene(rng, width=640, height=480, n_shapes=3,
                 min_size=48, max_size=160, margin=16) -> SyntheticScene:
    """Scenes of rects and disks with near-disjoint boxes (IoU < 0.05)."""
    shapes = []
    boxes = []
    tries = 0
    while len(shapes) < n_shapes:
        tries += 1
        if tries > 2000:
            raise RuntimeError("could not place shapes")
        size = float(rng.uniform(min_size, max_size))
        x = float(rng.uniform(margin, width - margin - size))
        y = float(rng.uniform(margin, height - margin - size))
        candidate = (x, y, x + size, y + size)
        overlap = False
        for bx in boxes:
            ix = min(candidate[2], bx[2]) - max(candidate[0], bx[0])
            iy = min(candidate[3], bx[3]) - max(candidate[1], bx[1])
            inter = max(ix, 0.0) * max(iy, 0.0)
            union = (size * size) + (bx[2] - bx[0]) * (bx[3] - bx[1]) - inter
            if inter / union > 0.05:
                overlap = True
                break
        if overlap:
            continue
        idx = len(shapes)
        if rng.random() < 0.5:
            shapes.append(Rect(idx + 1, x, y, size, size))
        else:
            r = size / 2.0
            shapes.append(Disk(idx + 1, x + r, y + r, r))
        boxes.append(candidate)
    return SyntheticScene(width=width, height=height, shapes=tuple(shapes))


def mock_engine(scene: SyntheticScene, input_size: int = 1024, **cfg_overrides) -> Engine:
    cfg = EngineConfig(input_size=input_size, **cfg_overrides)
    backend = MockBackend(scene, input_size=cfg.input_size, reg_max=cfg.reg_max)
    return Engine(backend, cfg)


@pytest.fixture
def two_shape_scene() -> SyntheticScene:
    return SyntheticScene(
        width=640,
        height=480,
        shapes=(
            Rect(1, 50, 60, 150, 120, (230, 25, 75)),
            Disk(2, 420, 260, 90, (60, 180, 75)),
        ),
    )


@pytest.fixture
def two_shape_cache(two_shape_scene):
    engine = mock_engine(two_shape_scene)
    return engine.segment_everything(render_scene(two_shape_scene))
