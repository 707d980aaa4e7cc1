import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from fractalmark.style import (StyleLossWeights, drip_loss, gram_matrix, style_metrics,
                               texture_loss, tv_loss)

# 8-bit levels: squared differences of subnormal floats underflow to zero
images = arrays(np.int64, st.tuples(st.integers(2, 12), st.integers(2, 12)),
                elements=st.integers(0, 255)).map(lambda a: a / 255.0)


def test_default_weights():
    w = StyleLossWeights()
    assert (w.alpha, w.beta, w.gamma) == (0.001, 1e7, 0.005)
    with pytest.raises(ValueError):
        StyleLossWeights(beta=-1)


def test_gram_orthogonal_rows():
    assert np.allclose(gram_matrix(np.array([[1, 1], [1, -1]])), np.array([[2, 0], [0, 2]]) / 4)


def test_gram_constant_channel():
    c = 0.3
    assert gram_matrix(np.full((1, 5, 7), c))[0, 0] == pytest.approx(c * c)


def test_gram_matches_double_loop(rng):
    f = rng.random((3, 16))
    G = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            for k in range(16):
                G[i, j] += f[i, k] * f[j, k]
    G /= 3 * 16
    assert np.allclose(gram_matrix(f), G, atol=1e-15)


@given(st.integers(0, 2 ** 31))
def test_gram_invariant_to_pixel_permutation(seed):
    rng = np.random.default_rng(seed)
    f = rng.random((2, 4, 5))
    perm = rng.permutation(20)
    g = f.reshape(2, -1)[:, perm]
    assert np.allclose(gram_matrix(f), gram_matrix(g), atol=1e-14)


def test_tv_constant_and_pair():
    assert tv_loss(np.full((4, 4), 0.2)) == 0
    assert tv_loss(np.array([[0.0, 1.0]])) == pytest.approx(0.5)


def test_tv_ramp_closed_form():
    h, w, step = 6, 9, 0.1
    ramp = np.tile(np.arange(w) * step, (h, 1))
    # h rows of (w - 1) unit steps, no vertical change
    assert tv_loss(ramp) == pytest.approx(h * (w - 1) * step / (h * w))


def test_texture_checkerboard():
    i, j = np.indices((6, 8))
    board = ((i + j) % 2).astype(float)
    # every forward difference is +/-1, so each mean square is 1
    assert texture_loss(board) == pytest.approx(2.0 / (6 * 8))


@given(images)
def test_texture_nonnegative(img):
    assert texture_loss(img) >= 0


@given(images)
def test_tv_texture_zero_iff_constant(img):
    const = np.ptp(img) == 0
    assert (tv_loss(img) == 0) == const
    assert (texture_loss(img) == 0) == const


def test_drip_constant_zero():
    assert drip_loss(np.full((5, 5), 0.4)) == 0


def test_drip_uniform_ramp():
    h, w, c = 10, 4, 0.05
    ramp = np.tile((np.arange(h) * c)[:, None], (1, w))
    assert drip_loss(ramp) == pytest.approx(-c / (h * w))


def test_drip_decreases_with_gradient():
    vals = [drip_loss(np.tile((np.arange(10) * c)[:, None], (1, 4))) for c in (0.01, 0.02, 0.05, 0.09)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_drip_direct_summation(rng):
    img = rng.random((7, 5, 3))
    c, h, w = 3, 7, 5
    total_abs, diffs = 0.0, []
    for ch in range(c):
        for y in range(h - 1):
            for x in range(w):
                d = img[y + 1, x, ch] - img[y, x, ch]
                diffs.append(d)
                total_abs += abs(d)
    mean_d = sum(diffs) / len(diffs)
    dev = sum(abs(d - mean_d) for d in diffs) / len(diffs)
    expected = -total_abs / len(diffs) / (c * h * w) + dev / (c * h * w)
    assert drip_loss(img) == pytest.approx(expected, rel=1e-12)


def test_metrics_deterministic(rng):
    img = rng.random((9, 9, 3))
    assert style_metrics(img) == style_metrics(img.copy())
