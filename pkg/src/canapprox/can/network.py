"""Forward and backward passes of the context aggregation network."""

import numpy as np

from .config import dilation_schedule
from .conv import conv_backward_flat, conv_forward_flat, conv_rows, pad_flat
from .norm import colsum, fold_inference, lrelu, norm_backward, norm_forward

# target element count of one row band in the strip-wise inference pass
_BAND_ELEMS = 1 << 20


class Workspace:
    """Pair of full-resolution activation buffers reused across layers.

    ``peak_buffers`` counts full-resolution activation arrays alive at once;
    the inference pass never needs more than two.
    """

    def __init__(self, dtype=np.float32):
        self.dtype = np.dtype(dtype)
        self._bufs = None
        self.peak_buffers = 0

    def buffers(self, h, w, c):
        shape = (h, w, c)
        if self._bufs is None or self._bufs[0].shape != shape:
            self._bufs = None
            self._bufs = (np.empty(shape, self.dtype), np.empty(shape, self.dtype))
        self.peak_buffers = max(self.peak_buffers, len(self._bufs))
        return self._bufs


def attach_aux_channels(img, values, expected=None):
    """Append one constant full-resolution plane per scalar in ``values``.

    float64 input stays float64; anything else becomes float32.
    """
    img = np.asarray(img)
    img = img.astype(np.float64 if img.dtype == np.float64 else np.float32, copy=False)
    values = [] if values is None else list(values)
    if expected is not None and len(values) != expected:
        raise ValueError(f"expected {expected} aux values, got {len(values)}")
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an RGB image, got shape {img.shape}")
    if not values:
        return img
    h, w, _ = img.shape
    planes = np.broadcast_to(np.asarray(values, dtype=img.dtype), (h, w, len(values)))
    return np.concatenate([img, planes], axis=2)


def lambda_code(lam, lam_ref):
    """Aux-channel encoding of a sampled parameter: log10(lam / lam_ref)."""
    return float(np.log10(lam / lam_ref))


def one_hot(index, n):
    if not 0 <= index < n:
        raise IndexError(f"operator index {index} out of range for {n}")
    v = [0.0] * n
    v[index] = 1.0
    return v


def _prepare(model, img, aux):
    cfg = model.config
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"network input must be RGB (H, W, 3), got {img.shape}")
    return attach_aux_channels(img, aux, expected=cfg.aux_channels)


def _strip_height(h, w, c, r):
    wp = w + 2 * (r if r < w else 0)
    return int(max(1, min(h, _BAND_ELEMS // max(1, wp * c))))


def forward_inference(model, x, workspace=None):
    """Inference pass over ``x`` (H, W, cin) with running BN statistics.

    Activations ping-pong between the two workspace buffers; each layer is
    evaluated in row strips with float64 accumulation.
    """
    cfg = model.config
    h, w, cin = x.shape
    ws = workspace if workspace is not None else Workspace()
    a, b = ws.buffers(h, w, max(cfg.width, cin))
    src = a[:, :, :cin]
    src[...] = x
    alpha = cfg.lrelu_alpha
    for s, r in enumerate(dilation_schedule(cfg), start=1):
        layer = model.layer(s)
        scale, shift = fold_inference(layer, cfg.norm_mode, cfg.bn_eps)
        dst = b[:, :, :cfg.width]
        step = _strip_height(h, w, src.shape[2], r)
        for y0 in range(0, h, step):
            y1 = min(h, y0 + step)
            z = conv_rows(src, layer["weight"], layer["bias"], r, y0, y1)
            z *= scale
            z += shift
            dst[y0:y1] = lrelu(z, alpha)
        src = dst
        a, b = b, a
    wo = model.params["out.weight"].astype(np.float64)
    bo = model.params["out.bias"].astype(np.float64)
    out = b[:, :, :3]
    step = _strip_height(h, w, src.shape[2], 0)
    for y0 in range(0, h, step):
        y1 = min(h, y0 + step)
        out[y0:y1] = src[y0:y1].astype(np.float64) @ wo + bo
    return out.copy()


def forward_train(model, x, update_stats=True):
    """Training pass in the model's dtype; returns ``(output, cache)``.

    Normalization uses this image's statistics. The cache holds what
    :func:`backward` needs.
    """
    cfg = model.config
    dt = model.dtype
    act = np.asarray(x, dtype=dt)
    h, w = act.shape[:2]
    layers = []
    for s, r in enumerate(dilation_schedule(cfg), start=1):
        layer = model.layer(s)
        flat = pad_flat(act, r, dt)
        z = conv_forward_flat(flat, (h, w), layer["weight"], layer["bias"], r)
        psi, ncache = norm_forward(z, layer, cfg.norm_mode, True, cfg.bn_eps,
                                   cfg.bn_momentum, update_stats=update_stats)
        slope = np.where(psi >= 0, dt.type(1), dt.type(cfg.lrelu_alpha))
        act = psi * slope
        layers.append({"flat": flat, "r": r, "norm": ncache, "slope": slope})
    wo = model.params["out.weight"]
    out = act @ wo + model.params["out.bias"]
    return out, {"layers": layers, "last": act, "shape": (h, w)}


def backward(model, cache, grad_out):
    """Reverse pass; returns a dict of gradients keyed like ``model.params``."""
    cfg = model.config
    dt = model.dtype
    grads = {}
    last = cache["last"]
    grads["out.weight"] = np.tensordot(last, grad_out, axes=([0, 1], [0, 1])).astype(dt)
    grads["out.bias"] = colsum(grad_out).astype(dt)
    g = grad_out @ model.params["out.weight"].T
    for s in range(len(cache["layers"]), 0, -1):
        lc = cache["layers"][s - 1]
        g = g * lc["slope"]
        g, ngrads = norm_backward(g, lc["norm"])
        for key, val in ngrads.items():
            grads[f"norm{s}.{key}"] = np.asarray(val, dtype=dt)
        dk, db, g = conv_backward_flat(lc["flat"], cache["shape"],
                                       model.params[f"conv{s}.weight"], lc["r"], g,
                                       need_input_grad=s > 1)
        grads[f"conv{s}.weight"] = dk
        grads[f"conv{s}.bias"] = db
    return {k: grads[k] for k in model.params}


def forward(model, img, aux=None, training=False, workspace=None):
    """Run the network on an RGB image plus optional aux scalars.

    ``training=True`` uses per-image BN statistics and updates the running
    buffers; otherwise the inference pass is used.
    """
    x = _prepare(model, img, aux)
    if training:
        out, _ = forward_train(model, x)
        return out.astype(np.float32)
    return forward_inference(model, x, workspace=workspace)
