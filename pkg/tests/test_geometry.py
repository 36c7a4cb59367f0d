import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from promptseg.geometry import EMPTY_BOX, BoundingBox, box_iou


def rasterized_iou(a: BoundingBox, b: BoundingBox) -> float:
    """Oracle: paint both boxes on an integer grid and count pixels."""
    w = int(max(a.x2, b.x2)) + 1
    h = int(max(a.y2, b.y2)) + 1
    grid_a = np.zeros((h, w), dtype=bool)
    grid_b = np.zeros((h, w), dtype=bool)
    grid_a[int(a.y1) : int(a.y2), int(a.x1) : int(a.x2)] = True
    grid_b[int(b.y1) : int(b.y2), int(b.x1) : int(b.x2)] = True
    union = np.logical_or(grid_a, grid_b).sum()
    if union == 0:
        return 0.0
    return np.logical_and(grid_a, grid_b).sum() / union


def test_identity_box():
    box = BoundingBox(0, 0, 10, 10)
    assert box_iou(box, box) == 1.0


def test_disjoint_boxes():
    assert box_iou(BoundingBox(0, 0, 10, 10), BoundingBox(20, 20, 30, 30)) == 0.0


def test_half_overlap_matches_raster_oracle():
    a = BoundingBox(0, 0, 10, 10)
    b = BoundingBox(5, 0, 15, 10)
    assert box_iou(a, b) == pytest.approx(1 / 3)
    assert box_iou(a, b) == pytest.approx(rasterized_iou(a, b))


def test_random_integer_boxes_match_raster_oracle(rng):
    for _ in range(50):
        ax, ay, bx, by = rng.integers(0, 40, size=4)
        aw, ah, bw, bh = rng.integers(1, 30, size=4)
        a = BoundingBox(ax, ay, ax + aw, ay + ah)
        b = BoundingBox(bx, by, bx + bw, by + bh)
        assert box_iou(a, b) == pytest.approx(rasterized_iou(a, b), abs=1e-12)


def test_degenerate_boxes_yield_zero():
    point = BoundingBox(5, 5, 5, 5)
    assert box_iou(point, point) == 0.0
    assert box_iou(point, BoundingBox(0, 0, 10, 10)) == 0.0
    assert EMPTY_BOX.area == 0.0


def test_inverted_box_rejected():
    with pytest.raises(ValueError):
        BoundingBox(10, 0, 0, 10)


boxes = st.tuples(
    st.floats(0, 100), st.floats(0, 100), st.floats(0, 100), st.floats(0, 100)
).map(lambda t: BoundingBox(min(t[0], t[2]), min(t[1], t[3]), max(t[0], t[2]), max(t[1], t[3])))


@given(boxes, boxes)
def test_iou_symmetric_and_bounded(a, b):
    iou = box_iou(a, b)
    assert iou == box_iou(b, a)
    assert 0.0 <= iou <= 1.0


@given(boxes)
def test_iou_identity_iff_equal(a):
    if a.area > 0:
        assert box_iou(a, a) == 1.0


def test_clamp_and_conversions():
    box = BoundingBox(-5, -5, 20, 20).clamped(10, 10)
    assert box.to_list() == [0, 0, 10, 10]
    assert BoundingBox.from_xywh([1, 2, 3, 4]).to_list() == [1, 2, 4, 6]
    assert BoundingBox.from_list([1, 2, 4, 6]).to_xywh() == [1, 2, 3, 4]
