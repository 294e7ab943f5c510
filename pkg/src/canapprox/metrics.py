"""Image quality measures: MSE/PSNR in 0-255 units, SSIM on luma, error maps."""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

from .can.config import receptive_field
from .can.network import Workspace, forward, forward_inference
from .imagecore import as_image, quantize, to_gray

PSNR_CAP = 100.0
SSIM_K1, SSIM_K2 = 0.01, 0.03
SSIM_SIGMA = 1.5
SSIM_RADIUS = 5          # 11x11 window
CSV_FIELDS = ("path", "mse255", "psnr_db", "ssim", "dssim")


@dataclass(frozen=True)
class MetricReport:
    mse255: float
    psnr: float
    ssim: float
    dssim: float

    def as_row(self):
        return (self.mse255, self.psnr, self.ssim, self.dssim)


def _pair(a, b):
    a = np.clip(as_image(a), 0.0, 1.0).astype(np.float64)
    b = np.clip(as_image(b), 0.0, 1.0).astype(np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def mse255(a, b):
    a, b = _pair(a, b)
    d = 255.0 * (a - b)
    return float(np.mean(d * d))


def psnr_from_mse(mse):
    if mse == 0:
        return PSNR_CAP
    return float(10.0 * np.log10(255.0 ** 2 / mse))


def ssim(a, b):
    """Mean SSIM of the luma images, 11x11 Gaussian window (sigma 1.5), range 255."""
    a, b = _pair(a, b)
    x = to_gray(a.astype(np.float32)).astype(np.float64)[:, :, 0] * 255.0
    y = to_gray(b.astype(np.float32)).astype(np.float64)[:, :, 0] * 255.0
    c1 = (SSIM_K1 * 255.0) ** 2
    c2 = (SSIM_K2 * 255.0) ** 2

    def blur(u):
        return gaussian_filter(u, SSIM_SIGMA, mode="nearest", truncate=SSIM_RADIUS / SSIM_SIGMA)

    mx, my = blur(x), blur(y)
    sxx = blur(x * x) - mx * mx
    syy = blur(y * y) - my * my
    sxy = blur(x * y) - mx * my
    num = (2.0 * mx * my + c1) * (2.0 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


def metric_report(a, b):
    m = mse255(a, b)
    s = ssim(a, b)
    return MetricReport(mse255=m, psnr=psnr_from_mse(m), ssim=s, dssim=(1.0 - s) / 2.0)


def error_map(a, b):
    """Per-pixel RGB distance in 8-bit levels, divided by 100, clamped to [0, 1].

    Both images are quantized to 8-bit levels first, so a difference of
    exactly 100 levels maps to exactly 1.0.
    """
    a, b = as_image(a), as_image(b)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    d = quantize(a).astype(np.float64) - quantize(b).astype(np.float64)
    dist = np.sqrt(np.sum(d * d, axis=2, keepdims=True))
    return np.clip(dist / 100.0, 0.0, 1.0).astype(np.float32)


def empirical_receptive_field(model, probe_size=None, amplitude=1.0):
    """Side of the bounding box of outputs that react to one centre pixel.

    Runs the inference pass in float64 on a zero image and on the same image
    with ``amplitude`` added at the centre; any difference counts.
    """
    cfg = model.config
    theory = receptive_field(cfg)
    if probe_size is None:
        probe_size = theory + 2
    if probe_size <= theory:
        raise ValueError(f"probe size {probe_size} must exceed the receptive field {theory}")
    n = probe_size
    x = np.zeros((n, n, cfg.in_channels))
    ws = Workspace(np.float64)
    base = forward_inference(model, x, workspace=ws)
    x[n // 2, n // 2, :3] = amplitude
    hit = forward_inference(model, x, workspace=ws)
    ys, xs = np.nonzero(np.any(base != hit, axis=2))
    if ys.size == 0:
        return 0
    return int(max(ys.max() - ys.min(), xs.max() - xs.min()) + 1)


@dataclass
class CorpusEvaluation:
    rows: list = field(default_factory=list)       # (path, MetricReport) for the model
    baseline: list = field(default_factory=list)   # (path, MetricReport) for the raw input
    failures: list = field(default_factory=list)   # (path, message)

    @staticmethod
    def _mean(rows):
        if not rows:
            return None
        vals = np.array([r.as_row() for _, r in rows], dtype=np.float64)
        return MetricReport(*(float(v) for v in vals.mean(axis=0)))

    @property
    def mean(self):
        return self._mean(self.rows)

    @property
    def baseline_mean(self):
        return self._mean(self.baseline)

    def write_csv(self, path):
        """Model rows, Input-baseline rows (``input:`` prefix), MEAN_INPUT, then MEAN."""
        def fmt(r):
            return [f"{v:.6g}" for v in r.as_row()]

        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(CSV_FIELDS)
            for p, r in self.rows:
                w.writerow([p] + fmt(r))
            for p, r in self.baseline:
                w.writerow([f"input:{p}"] + fmt(r))
            if self.baseline:
                w.writerow(["MEAN_INPUT"] + fmt(self.baseline_mean))
            if self.rows:
                w.writerow(["MEAN"] + fmt(self.mean))


def evaluate_corpus(model, ds, csv_path=None):
    """Inference on every pair of ``ds`` at its stored resolution.

    Entry failures are collected, not raised.
    """
    ev = CorpusEvaluation()
    ws = Workspace()
    for i, (src, _, aux) in enumerate(ds.entries):
        try:
            img, target = ds.load_pair(i)
            out = forward(model, img, aux=list(aux), workspace=ws)
            ev.rows.append((src, metric_report(out, target)))
            ev.baseline.append((src, metric_report(img, target)))
        except (OSError, ValueError, ArithmeticError) as exc:
            ev.failures.append((src, f"{type(exc).__name__}: {exc}"))
    if csv_path is not None:
        ev.write_csv(csv_path)
    return ev
