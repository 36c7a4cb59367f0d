import numpy as np
import pytest

from promptseg.errors import DimensionMismatchError
from promptseg.geometry import EMPTY_BOX
from promptseg.masks import BinaryMask, bbox_of, mask_iou


def naive_mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    """Oracle: per-pixel loop."""
    inter = union = 0
    for y in range(a.shape[0]):
        for x in range(a.shape[1]):
            if a[y, x] and b[y, x]:
                inter += 1
            if a[y, x] or b[y, x]:
                union += 1
    return inter / union if union else 0.0


def test_roundtrip_and_popcount(rng):
    arr = rng.random((37, 53)) > 0.5
    mask = BinaryMask.from_array(arr)
    assert np.array_equal(mask.to_array(), arr)
    assert mask.popcount == int(arr.sum())


def test_identity_iou():
    arr = np.zeros((8, 8), dtype=bool)
    arr[2:5, 3:7] = True
    m = BinaryMask.from_array(arr)
    assert mask_iou(m, m) == 1.0


def test_empty_vs_nonempty():
    empty = BinaryMask.empty(8, 8)
    arr = np.zeros((8, 8), dtype=bool)
    arr[0, 0] = True
    assert mask_iou(empty, BinaryMask.from_array(arr)) == 0.0
    assert mask_iou(empty, BinaryMask.empty(8, 8)) == 0.0


def test_two_of_six_pixels_overlap():
    a = np.zeros((4, 4), dtype=bool)
    b = np.zeros((4, 4), dtype=bool)
    a[0, 0] = a[0, 1] = a[1, 0] = True  # 3 pixels
    b[0, 0] = b[0, 1] = b[3, 3] = True  # 3 pixels, overlap 2, union 4
    assert mask_iou(BinaryMask.from_array(a), BinaryMask.from_array(b)) == 0.5


def test_bitwise_iou_matches_naive_loop(rng):
    for _ in range(100):
        h, w = rng.integers(1, 30, size=2)
        a = rng.random((h, w)) > 0.6
        b = rng.random((h, w)) > 0.6
        got = mask_iou(BinaryMask.from_array(a), BinaryMask.from_array(b))
        assert got == naive_mask_iou(a, b)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        mask_iou(BinaryMask.empty(4, 4), BinaryMask.empty(4, 5))


def test_contains_reads_single_bits(rng):
    arr = rng.random((11, 17)) > 0.5
    mask = BinaryMask.from_array(arr)
    for y in range(11):
        for x in range(17):
            assert mask.contains(x + 0.3, y + 0.7) == arr[y, x]
    assert not mask.contains(-1, 0)
    assert not mask.contains(17, 0)


def test_bbox_single_pixel():
    arr = np.zeros((10, 10), dtype=bool)
    arr[5, 3] = True
    assert bbox_of(BinaryMask.from_array(arr)).to_list() == [3, 5, 4, 6]


def test_bbox_empty_mask():
    assert bbox_of(BinaryMask.empty(10, 10)) == EMPTY_BOX


def test_bbox_two_pixels():
    arr = np.zeros((10, 10), dtype=bool)
    arr[1, 1] = True
    arr[2, 4] = True
    assert bbox_of(BinaryMask.from_array(arr)).to_list() == [1, 1, 5, 3]


def test_bbox_covers_every_set_pixel(rng):
    for _ in range(25):
        arr = rng.random((20, 20)) > 0.9
        mask = BinaryMask.from_array(arr)
        box = bbox_of(mask)
        ys, xs = np.nonzero(arr)
        for x, y in zip(xs, ys):
            assert box.x1 <= x < box.x2 and box.y1 <= y < box.y2
        assert box.area >= mask.popcount or mask.popcount == 0
