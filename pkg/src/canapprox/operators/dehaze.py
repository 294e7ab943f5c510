"""Guided filter and dark-channel-prior dehazing."""

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import minimum_filter, uniform_filter

from ..imagecore import as_image, to_gray


class DegenerateAirlightError(ValueError):
    """Estimated atmospheric light has a zero channel."""


def box_mean(a, radius):
    """Mean over a (2r+1)^2 window with replicate boundary, per channel."""
    size = 2 * radius + 1
    return uniform_filter(a, size=(size, size, 1)[: a.ndim], mode="nearest")


def guided_filter(guide, src, radius, eps):
    I = as_image(guide).astype(np.float64)
    p = as_image(src).astype(np.float64)
    if I.shape != p.shape or I.shape[2] != 1:
        raise ValueError("guide and src must be single-channel and the same size")
    mean_i = box_mean(I, radius)
    mean_p = box_mean(p, radius)
    cov_ip = box_mean(I * p, radius) - mean_i * mean_p
    var_i = box_mean(I * I, radius) - mean_i * mean_i
    a = cov_ip / (var_i + eps)
    b = mean_p - a * mean_i
    return (box_mean(a, radius) * I + box_mean(b, radius)).astype(np.float32)


def dark_channel(img, radius):
    a = np.asarray(img, dtype=np.float64)
    m = a.min(axis=2)
    size = 2 * radius + 1
    return minimum_filter(m, size=size, mode="nearest")


def estimate_airlight(img, dark, top_fraction):
    h, w, _ = img.shape
    n = max(1, int(np.ceil(top_fraction * h * w)))
    # stable sort so ties resolve by raster order
    order = np.argsort(-dark.ravel(), kind="stable")[:n]
    pixels = img.reshape(-1, 3)[order]
    return pixels.max(axis=0)


@dataclass
class DehazeDecomposition:
    atmospheric_light: np.ndarray
    transmission: np.ndarray        # HxWx1 in [t0, 1]
    radiance: np.ndarray            # clamped to [0, 1]
    raw_transmission: np.ndarray    # 1 - omega * dark(I / A), before refinement
    raw_radiance: np.ndarray        # (I - A) / t + A, before clamping


def dehaze_dark_channel(img, p):
    I = as_image(img).astype(np.float64)
    if I.shape[2] != 3:
        raise ValueError("dehazing needs an RGB image")
    dark = dark_channel(I, p.patch_radius)
    A = estimate_airlight(I, dark, p.top_fraction)
    if np.any(A <= 0.0):
        raise DegenerateAirlightError(f"atmospheric light {A} has a zero channel")
    t_raw = 1.0 - p.omega * dark_channel(I / A, p.patch_radius)
    t_ref = guided_filter(to_gray(I.astype(np.float32)), t_raw[:, :, None].astype(np.float32),
                          p.guided_radius, p.guided_eps).astype(np.float64)
    # round t to storage precision first so t*J + (1-t)*A reproduces I
    t = np.clip(t_ref, p.t0, 1.0).astype(np.float32).astype(np.float64)
    J = (I - A) / t + A
    out = np.clip(J, 0.0, 1.0).astype(np.float32)
    deco = DehazeDecomposition(
        atmospheric_light=A,
        transmission=t.astype(np.float32),
        radiance=out,
        raw_transmission=t_raw[:, :, None],
        raw_radiance=J,
    )
    return out, deco
