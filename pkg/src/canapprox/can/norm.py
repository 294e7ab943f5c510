"""Batch and adaptive normalization, psi(x) = lam * x + mu * BN(x)."""

import numpy as np

from .config import NormMode


def lrelu(x, alpha):
    return np.where(x >= 0, x, alpha * x)


def colsum(a):
    """Per-channel sum over all pixels of an (..., C) array, via one GEMV."""
    c = a.shape[-1]
    flat = a.reshape(-1, c)
    return np.ones(flat.shape[0], dtype=a.dtype) @ flat


def fold_inference(layer, mode, eps):
    """Per-channel ``(scale, shift)`` equal to the inference-mode norm."""
    w = layer["bias"].shape[0]
    if mode is NormMode.NONE:
        return np.ones(w), np.zeros(w)
    gamma = layer["gamma"].astype(np.float64)
    beta = layer["beta"].astype(np.float64)
    inv = 1.0 / np.sqrt(layer["running_var"].astype(np.float64) + eps)
    g = gamma * inv
    shift = beta - g * layer["running_mean"].astype(np.float64)
    if mode is NormMode.BATCH:
        return g, shift
    lam = float(layer["lam"][0])
    mu = float(layer["mu"][0])
    return lam + mu * g, mu * shift


def norm_forward(z, layer, mode, training, eps, momentum, update_stats=True):
    """Normalize ``z`` (H, W, C) in its own dtype; returns ``(psi, cache)``.

    In training mode the statistics of this single image are used and, when
    ``update_stats`` is set, blended into the running buffers of ``layer``.
    """
    mode = NormMode(mode)
    if mode is NormMode.NONE:
        return z, None
    dt = z.dtype
    gamma = layer["gamma"].astype(dt)
    beta = layer["beta"].astype(dt)
    n = z.shape[0] * z.shape[1]
    if training:
        mean = colsum(z) / n
        xhat = z - mean
        var = colsum(xhat * xhat) / n
        if update_stats:
            rm, rv = layer["running_mean"], layer["running_var"]
            rm[...] = momentum * rm + (1.0 - momentum) * mean
            rv[...] = momentum * rv + (1.0 - momentum) * var
    else:
        mean = layer["running_mean"].astype(dt)
        var = layer["running_var"].astype(dt)
        xhat = z - mean
    inv_std = (1.0 / np.sqrt(var + eps)).astype(dt)
    xhat *= inv_std
    cache = {"mode": mode, "xhat": xhat, "inv_std": inv_std, "gamma": gamma,
             "beta": beta, "training": training, "n": n}
    if mode is NormMode.BATCH:
        psi = xhat * gamma
        psi += beta
        return psi, cache
    lam = layer["lam"].astype(dt)[0]
    mu = layer["mu"].astype(dt)[0]
    cache.update(z=z, lam=lam, mu=mu)
    psi = xhat * (mu * gamma)
    psi += mu * beta
    psi += lam * z
    return psi, cache


def norm_backward(g, cache):
    """Backpropagate ``g = dL/dpsi``; returns ``(dL/dz, param_grads)``."""
    if cache is None:
        return g, {}
    xhat = cache["xhat"]
    gamma = cache["gamma"]
    a = colsum(g * xhat)          # sum g * xhat per channel
    b = colsum(g)                 # sum g per channel
    grads = {}
    if cache["mode"] is NormMode.ADAPTIVE:
        mu, lam = cache["mu"], cache["lam"]
        grads["lam"] = np.array([np.sum(colsum(g * cache["z"]))], dtype=g.dtype)
        # dL/dmu = sum g * (gamma * xhat + beta)
        grads["mu"] = np.array([gamma @ a + cache["beta"] @ b], dtype=g.dtype)
    else:
        mu, lam = 1.0, None
    grads["gamma"] = mu * a
    grads["beta"] = mu * b
    k = (mu * gamma * cache["inv_std"]).astype(g.dtype)
    if cache["training"]:
        # the batch statistics depend on z as well
        n = cache["n"]
        gz = g * (k if lam is None else k + lam)
        gz -= xhat * (k * a / n)
        gz -= k * b / n
    else:
        gz = g * (k if lam is None else k + lam)
    return gz, grads


def adaptive_norm(x, layer, mode, training=False, eps=1e-5, momentum=0.99):
    """Apply the normalization of one layer to ``x`` (H, W, C).

    ``layer`` is a dict as returned by ``CanModel.layer``; training mode
    updates its running statistics in place.
    """
    x = np.asarray(x, dtype=np.float64)
    psi, _ = norm_forward(x, layer, mode, training, eps, momentum)
    return psi.astype(np.float32)
