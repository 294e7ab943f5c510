import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image as PILImage

from canapprox.imagecore import (ImageNotFoundError, ImageWriteError, MalformedImageError,
                                 UnsupportedImageError, as_image, draw_height, load_image,
                                 quantize, random_resize, resize_bilinear, save_image, to_gray)

unit = st.floats(0.0, 1.0, allow_nan=False, width=32)


def _png(path, arr, mode):
    im = PILImage.fromarray(arr)
    assert im.mode == mode
    im.save(path)
    return path


def test_load_endpoints(tmp_path):
    white = _png(tmp_path / "w.png", np.full((1, 1, 3), 255, np.uint8), "RGB")
    black = _png(tmp_path / "b.png", np.zeros((1, 1, 3), np.uint8), "RGB")
    assert load_image(white).tolist() == [[[1.0, 1.0, 1.0]]]
    assert load_image(black).tolist() == [[[0.0, 0.0, 0.0]]]
    assert load_image(white).dtype == np.float32


def test_load_gray_keeps_one_channel(tmp_path):
    p = _png(tmp_path / "g.png", np.array([[0, 51, 255]], np.uint8), "L")
    img = load_image(p)
    assert img.shape == (1, 3, 1)
    assert img[0, 1, 0] == np.float32(51) / np.float32(255)


def test_round_trip_bit_identical(tmp_path):
    rng = np.random.default_rng(0)
    for mode, shape in (("RGB", (7, 5, 3)), ("L", (4, 9))):
        p = _png(tmp_path / f"{mode}.png", rng.integers(0, 256, shape, dtype=np.uint8), mode)
        a = load_image(p)
        save_image(a, tmp_path / "again.png")
        b = load_image(tmp_path / "again.png")
        np.testing.assert_array_equal(a, b)


def test_load_errors_are_distinct(tmp_path):
    with pytest.raises(ImageNotFoundError):
        load_image(tmp_path / "missing.png")
    rgba = _png(tmp_path / "a.png", np.zeros((2, 2, 4), np.uint8), "RGBA")
    with pytest.raises(UnsupportedImageError):
        load_image(rgba)
    deep = tmp_path / "16.png"
    PILImage.new("I;16", (2, 2)).save(deep)
    with pytest.raises(UnsupportedImageError):
        load_image(deep)
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"\x89PNG\r\n\x1a\n garbage")
    with pytest.raises(MalformedImageError):
        load_image(bad)


def test_save_quantization(tmp_path):
    p = tmp_path / "q.png"
    save_image(np.array([[[0.5], [1.7], [-0.2]]]), p)
    assert np.asarray(PILImage.open(p)).tolist() == [[128, 255, 0]]
    assert quantize(np.array([0.5 / 255, 1.5 / 255])).tolist() == [1, 2]


def test_save_unwritable(tmp_path):
    with pytest.raises(ImageWriteError):
        save_image(np.zeros((1, 1, 3)), tmp_path / "no" / "dir" / "x.png")


def test_as_image_rejects_bad_input():
    with pytest.raises(ValueError):
        as_image(np.zeros((2, 2, 2)))
    with pytest.raises(ValueError):
        as_image(np.array([[np.nan]]))
    assert as_image(np.zeros((2, 3))).shape == (2, 3, 1)


def test_resize_hand_values():
    out = resize_bilinear(np.array([[0.0, 1.0]]), 1, 4)
    np.testing.assert_allclose(out[0, :, 0], [0.0, 0.25, 0.75, 1.0], atol=1e-7)


def test_resize_identity_and_constant():
    rng = np.random.default_rng(1)
    img = rng.random((5, 6, 3)).astype(np.float32)
    np.testing.assert_array_equal(resize_bilinear(img, 5, 6), img)
    out = resize_bilinear(np.full((3, 4, 3), 0.3, np.float32), 11, 2)
    assert out.shape == (11, 2, 3)
    np.testing.assert_allclose(out, np.float32(0.3), rtol=0, atol=1e-7)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float32, st.tuples(st.integers(1, 6), st.integers(1, 6), st.sampled_from([1, 3])),
              elements=unit),
       st.integers(1, 9), st.integers(1, 9))
def test_resize_is_convex(img, h, w):
    out = resize_bilinear(img, h, w)
    assert out.shape == (h, w, img.shape[2])
    assert out.min() >= img.min() - 1e-6 and out.max() <= img.max() + 1e-6


def test_random_resize_degenerate_and_deterministic():
    img = np.random.default_rng(2).random((40, 60, 3)).astype(np.float32)
    for seed in range(5):
        out = random_resize(img, 32, 32, np.random.default_rng(seed))
        assert out.shape == (32, 48, 3)
    a = random_resize(img, 10, 50, np.random.default_rng(7))
    b = random_resize(img, 10, 50, np.random.default_rng(7))
    np.testing.assert_array_equal(a, b)
    assert abs(a.shape[1] - a.shape[0] * 1.5) <= 1


def test_height_draw_statistics():
    rng = np.random.default_rng(0)
    h = np.array([draw_height(320, 1440, rng) for _ in range(10_000)])
    assert h.min() >= 320 and h.max() <= 1440
    # uniform integers on [a, b]: variance ((b - a + 1)^2 - 1) / 12
    sigma = np.sqrt(((1440 - 320 + 1) ** 2 - 1) / 12.0 / h.size)
    assert abs(h.mean() - 880.0) < 3 * sigma


def test_draw_height_rejects_bad_bounds():
    with pytest.raises(ValueError):
        draw_height(10, 5, np.random.default_rng())
    with pytest.raises(ValueError):
        draw_height(0, 5, np.random.default_rng())


def test_to_gray_examples():
    np.testing.assert_allclose(to_gray(np.ones((1, 1, 3)))[0, 0, 0], 1.0, atol=1e-7)
    np.testing.assert_allclose(to_gray(np.array([[[1.0, 0, 0]]]))[0, 0, 0], 0.299, atol=1e-7)
    g = np.random.default_rng(3).random((4, 4, 1)).astype(np.float32)
    np.testing.assert_array_equal(to_gray(g), g)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float32, st.tuples(st.integers(1, 5), st.integers(1, 5), st.just(3)),
              elements=unit))
def test_to_gray_stays_in_range(img):
    g = to_gray(img)
    assert g.shape[2] == 1
    assert g.min() >= 0.0 and g.max() <= 1.0 + 1e-6
