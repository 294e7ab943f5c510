"""Dilated 3x3 convolution with zero padding.

The kernel is applied as a true convolution: tap ``[ty, tx]`` holds K(b) for
offset b = (ty - 1, tx - 1) and output(x) = sum_b input(x - r*b) K(b).

Rows of the zero-padded input are laid out in one flat (pixels, channels)
buffer of row stride ``Wp = W + 2*px``. Every tap then reads a contiguous
slice of that buffer, so a layer is nine GEMMs without any im2col copy.
Outputs are produced on an H x Wp grid and the padding columns are dropped.
Taps that can only ever see padding (r >= H vertically, r >= W
horizontally) are skipped.
"""

import numpy as np


def pads(h, w, r):
    """Padding actually needed per axis; zero when off-centre taps are dead."""
    return (r if r < h else 0), (r if r < w else 0)


def live_taps(h, w, r):
    """Yield ``(ty, tx, by, bx)`` for the taps that can touch real pixels."""
    ys = (-1, 0, 1) if r < h else (0,)
    xs = (-1, 0, 1) if r < w else (0,)
    for by in ys:
        for bx in xs:
            yield by + 1, bx + 1, by, bx


def pad_flat(x, r, dtype):
    """Zero-pad ``x`` (H, W, C) into a flat ((H + 2py) * Wp + 2px, C) buffer.

    The 2px trailing entries let the last tap slice run over the junk columns.
    """
    h, w, c = x.shape
    py, px = pads(h, w, r)
    wp = w + 2 * px
    flat = np.zeros(((h + 2 * py) * wp + 2 * px, c), dtype=dtype)
    flat[:(h + 2 * py) * wp].reshape(h + 2 * py, wp, c)[py:py + h, px:px + w] = x
    return flat


def _offset(h, w, r, by, bx):
    py, px = pads(h, w, r)
    return (py - r * by) * (w + 2 * px) + (px - r * bx)


def conv_forward_flat(flat, shape, kernel, bias, r):
    """Convolve a buffer from :func:`pad_flat`; returns (H, W, cout) in flat's dtype."""
    h, w = shape
    _, px = pads(h, w, r)
    wp = w + 2 * px
    n = h * wp
    k = kernel.astype(flat.dtype, copy=False)
    out = np.zeros((n, k.shape[3]), dtype=flat.dtype)
    for ty, tx, by, bx in live_taps(h, w, r):
        off = _offset(h, w, r, by, bx)
        out += flat[off:off + n] @ k[ty, tx]
    # adding the bias also makes the cropped result contiguous
    return out.reshape(h, wp, -1)[:, :w] + bias.astype(flat.dtype, copy=False)


def conv_backward_flat(flat, shape, kernel, r, grad_out, need_input_grad=True):
    """Gradients of :func:`conv_forward_flat`.

    Returns ``(d_kernel, d_bias, d_input)``; ``d_input`` is None when not
    requested.
    """
    h, w = shape
    py, px = pads(h, w, r)
    wp = w + 2 * px
    n = h * wp
    dt = flat.dtype
    cout = grad_out.shape[2]
    g = np.zeros((h, wp, cout), dtype=dt)
    g[:, :w] = grad_out
    g = g.reshape(n, cout)
    k = kernel.astype(dt, copy=False)

    d_kernel = np.zeros(kernel.shape, dtype=dt)
    d_flat = np.zeros_like(flat) if need_input_grad else None
    for ty, tx, by, bx in live_taps(h, w, r):
        off = _offset(h, w, r, by, bx)
        d_kernel[ty, tx] = flat[off:off + n].T @ g
        if need_input_grad:
            d_flat[off:off + n] += g @ k[ty, tx].T
    d_bias = np.ones(n, dtype=dt) @ g
    d_input = None
    if need_input_grad:
        d_input = d_flat[:(h + 2 * py) * wp].reshape(h + 2 * py, wp, -1)[py:py + h, px:px + w]
    return d_kernel, d_bias, d_input


def conv_rows(src, kernel, bias, r, y0, y1, acc_dtype=np.float64):
    """Output rows ``[y0, y1)`` of the convolution of the full image ``src``.

    Only three horizontally padded row bands are materialized (one per
    vertical tap), so memory scales with the strip rather than the image.
    """
    h, w, c = src.shape
    _, px = pads(h, w, r)
    wp = w + 2 * px
    sh = y1 - y0
    n = sh * wp
    k = kernel.astype(acc_dtype, copy=False)
    out = np.zeros((n, k.shape[3]), dtype=acc_dtype)
    band = np.empty((n + 2 * px, c), dtype=acc_dtype)
    rows = band[:n].reshape(sh, wp, c)
    ys = (-1, 0, 1) if r < h else (0,)
    xs = (-1, 0, 1) if r < w else (0,)
    for by in ys:
        lo = y0 - r * by
        a, b = max(lo, 0), min(lo + sh, h)
        if a >= b:
            continue
        band.fill(0)
        rows[a - lo:b - lo, px:px + w] = src[a:b]
        for bx in xs:
            off = px - r * bx
            out += band[off:off + n] @ k[by + 1, bx + 1]
    out = out.reshape(sh, wp, -1)[:, :w]
    out += bias.astype(acc_dtype, copy=False)
    return out


def dilated_conv2d(x, kernel, bias, r):
    """Dilated 3x3 convolution, zero padding of width r, same-size output.

    ``x`` is (H, W, cin) or (H, W); ``kernel`` is (3, 3, cin, cout).
    Products are accumulated in float64 and the result stored as float32.
    """
    x = np.asarray(x)
    if x.ndim == 2:
        x = x[:, :, None]
    kernel = np.asarray(kernel)
    bias = np.asarray(bias)
    if r < 1 or int(r) != r:
        raise ValueError("dilation must be a positive integer")
    if kernel.shape[:2] != (3, 3) or kernel.shape[2] != x.shape[2]:
        raise ValueError(f"kernel shape {kernel.shape} does not match input {x.shape}")
    if bias.shape != (kernel.shape[3],):
        raise ValueError("bias must have one entry per output channel")
    r = int(r)
    flat = pad_flat(x, r, np.float64)
    out = conv_forward_flat(flat, x.shape[:2], kernel, bias, r)
    return out.astype(np.float32)
