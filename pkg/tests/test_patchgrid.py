import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fltrack.patchgrid import (
    PatchGridSpec,
    PatchMatrix,
    contrast_normalize,
    extract_patches,
)
from fltrack.seqio import BoundingBox, GrayFrame


def _frame(w, h, seed=0):
    return GrayFrame(np.random.default_rng(seed).integers(0, 256, size=(h, w)))


def test_49_patches():
    pm = extract_patches(_frame(64, 64), BoundingBox(10, 10, 32, 32), PatchGridSpec(8, 4))
    assert pm.data.shape == (64, 49)


@pytest.mark.parametrize("q", [1, 3, 8])
def test_single_fit(q):
    pm = extract_patches(_frame(20, 20), BoundingBox(2, 3, 8, 8), PatchGridSpec(8, q))
    assert pm.n_patches == 1
    assert pm.positions.tolist() == [[0, 0]]


def test_too_small():
    with pytest.raises(ValueError):
        extract_patches(_frame(20, 20), BoundingBox(0, 0, 6, 6), PatchGridSpec(8, 4))


def test_clipped_region_too_small():
    with pytest.raises(ValueError):
        extract_patches(_frame(20, 20), BoundingBox(15, 15, 20, 20), PatchGridSpec(8, 4))


def test_patch_content_and_positions():
    f = _frame(30, 30, 1)
    pm = extract_patches(f, BoundingBox(3, 5, 16, 12), PatchGridSpec(4, 4))
    for col, (r, c) in enumerate(pm.positions):
        expect = f.pixels[5 + r : 5 + r + 4, 3 + c : 3 + c + 4].ravel()
        assert np.array_equal(pm.data[:, col], expect)


def test_grid_spec_validation():
    with pytest.raises(ValueError):
        PatchGridSpec(1, 1)
    with pytest.raises(ValueError):
        PatchGridSpec(4, 5)


def test_grid_spec_for_target():
    assert PatchGridSpec.for_target(BoundingBox(0, 0, 40, 50)) == PatchGridSpec(8, 4)
    assert PatchGridSpec.for_target(BoundingBox(0, 0, 29, 50)) == PatchGridSpec(6, 2)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(2, 9),
    st.integers(1, 9),
    st.integers(0, 30),
    st.integers(0, 30),
)
def test_count_formula(p, q, extra_w, extra_h):
    q = min(q, p)
    W, H = p + extra_w, p + extra_h
    pm = extract_patches(_frame(W + 5, H + 5), BoundingBox(2, 1, W, H), PatchGridSpec(p, q))
    assert pm.n_patches == ((W - p) // q + 1) * ((H - p) // q + 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10), st.integers(0, 10))
def test_translation_covariance(dx, dy):
    base = np.random.default_rng(4).integers(0, 256, size=(40, 40)).astype(np.uint8)
    shifted = np.zeros((60, 60), np.uint8)
    shifted[dy : dy + 40, dx : dx + 40] = base
    spec = PatchGridSpec(6, 2)
    a = extract_patches(GrayFrame(base), BoundingBox(4, 6, 24, 20), spec)
    b = extract_patches(GrayFrame(shifted), BoundingBox(4 + dx, 6 + dy, 24, 20), spec)
    assert np.array_equal(a.data, b.data)
    assert np.array_equal(a.positions, b.positions)


def test_constant_patch_normalizes_to_zero():
    pm = PatchMatrix(np.full((16, 1), 100.0), [[0, 0]])
    assert np.all(contrast_normalize(pm).data == 0.0)


def test_two_pixel_column():
    # mean 1, var 1 -> (x - 1) / sqrt(1 + 10)
    out = contrast_normalize(PatchMatrix(np.array([[0.0], [2.0]]), [[0, 0]])).data[:, 0]
    assert np.allclose(out, [-1 / np.sqrt(11), 1 / np.sqrt(11)])
    assert abs(out.mean()) < 1e-15


def test_renormalizing_only_rescales():
    x = np.random.default_rng(2).normal(size=(64, 5)) * 30
    once = contrast_normalize(PatchMatrix(x, np.zeros((5, 2)))).data
    twice = contrast_normalize(PatchMatrix(once, np.zeros((5, 2)))).data
    # second pass: mean already 0, so each column is divided by sqrt(var + 10)
    scale = 1 / np.sqrt(once.var(axis=0) + 10)
    assert np.allclose(twice, once * scale)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.0, 200.0))
def test_normalized_moments(seed, spread):
    x = np.random.default_rng(seed).normal(120, spread + 1e-3, size=(36, 8))
    out = contrast_normalize(PatchMatrix(x, np.zeros((8, 2)))).data
    assert np.all(np.abs(out.mean(axis=0)) < 1e-9)
    assert np.all(out.var(axis=0) <= 1.0)
