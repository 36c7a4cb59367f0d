import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from promptseg.errors import MalformedRleError
from promptseg.masks import BinaryMask
from promptseg.rle import (
    RleMask,
    counts_to_string,
    mask_from_coco,
    mask_to_coco,
    rle_decode,
    rle_encode,
    rle_from_coco,
    string_to_counts,
)

FIXTURES = Path(__file__).parent / "fixtures"


def column_major_counts(arr: np.ndarray) -> list[int]:
    """Oracle: walk pixels down each column and count runs by hand."""
    flat = []
    for x in range(arr.shape[1]):
        for y in range(arr.shape[0]):
            flat.append(bool(arr[y, x]))
    counts = []
    current, run = False, 0
    for v in flat:
        if v == current:
            run += 1
        else:
            counts.append(run)
            current, run = v, 1
    counts.append(run)
    return counts


def test_all_zero_2x2():
    assert rle_encode(BinaryMask.empty(2, 2)).counts == (4,)


def test_all_one_2x2():
    mask = BinaryMask.from_array(np.ones((2, 2), dtype=bool))
    assert rle_encode(mask).counts == (0, 4)


def test_center_pixel_3x3():
    arr = np.zeros((3, 3), dtype=bool)
    arr[1, 1] = True
    assert rle_encode(BinaryMask.from_array(arr)).counts == (4, 1, 4)


def test_counts_match_column_major_oracle(rng):
    for _ in range(50):
        h, w = rng.integers(1, 20, size=2)
        arr = rng.random((h, w)) > 0.5
        got = rle_encode(BinaryMask.from_array(arr)).counts
        assert list(got) == column_major_counts(arr)


@settings(max_examples=200, deadline=None)
@given(
    arrays(
        dtype=bool,
        shape=st.tuples(st.integers(1, 40), st.integers(1, 40)),
    )
)
def test_roundtrip_property(arr):
    mask = BinaryMask.from_array(arr)
    assert rle_decode(rle_encode(mask)) == mask


def test_roundtrip_large_masks(rng):
    # spot checks at full scale; the bulk 1,000-mask sweep runs in acceptance
    for _ in range(5):
        h, w = rng.integers(500, 1025, size=2)
        arr = rng.random((h, w)) > rng.uniform(0.2, 0.8)
        mask = BinaryMask.from_array(arr)
        assert rle_decode(rle_encode(mask)) == mask


def test_malformed_counts_rejected():
    with pytest.raises(MalformedRleError):
        RleMask(width=2, height=2, counts=(3,))
    with pytest.raises(MalformedRleError):
        RleMask(width=2, height=2, counts=(5, -1))


# -- compressed string codec -------------------------------------------------
# hand-traced through the published COCO algorithm

HAND_TRACED = [
    ((4,), "4"),
    ((0, 4), "04"),
    ((4, 1, 4), "414"),
    ((2, 3, 1, 2, 5), "231O4"),  # negative delta at i=3: 2-3 = -1 -> 'O'
    ((100,), "T3"),  # two 5-bit chunks: 4 + 3<<5
]


@pytest.mark.parametrize("counts,expected", HAND_TRACED)
def test_compressed_string_hand_traces(counts, expected):
    assert counts_to_string(counts) == expected
    assert string_to_counts(expected) == counts


def test_string_roundtrip_random(rng):
    for _ in range(200):
        n = int(rng.integers(1, 40))
        counts = tuple(int(c) for c in rng.integers(0, 5000, size=n))
        assert string_to_counts(counts_to_string(counts)) == counts


def test_coco_dict_roundtrip(rng):
    arr = rng.random((33, 47)) > 0.5
    mask = BinaryMask.from_array(arr)
    seg = mask_to_coco(mask)
    assert seg["size"] == [33, 47]
    assert isinstance(seg["counts"], str)
    assert mask_from_coco(seg) == mask


def test_coco_dict_accepts_uncompressed_counts():
    seg = {"size": [3, 3], "counts": [4, 1, 4]}
    mask = mask_from_coco(seg)
    assert mask.popcount == 1
    assert mask.contains(1, 1)


def test_bad_string_rejected():
    with pytest.raises(MalformedRleError):
        string_to_counts("\x07")
    with pytest.raises(MalformedRleError):
        rle_from_coco({"size": [2], "counts": "4"})


def test_shared_fixture_vectors():
    """The same vectors the browser client asserts against (bit-exact)."""
    vectors = json.loads((FIXTURES / "rle_vectors.json").read_text())
    assert len(vectors) >= 8
    for vec in vectors:
        counts = tuple(vec["counts"])
        assert counts_to_string(counts) == vec["string"]
        assert string_to_counts(vec["string"]) == counts
        mask = rle_decode(RleMask(width=vec["width"], height=vec["height"], counts=counts))
        assert mask.popcount == vec["popcount"]
