"""Forward differences with replicate (Neumann) boundary on HxWxC float64 arrays.

The last row/column difference is zero. ``grad_adjoint`` is the exact
transpose of ``grad``, so ``div = -grad_adjoint``.
"""

import numpy as np


def dx(u):
    d = np.zeros_like(u)
    d[:, :-1] = u[:, 1:] - u[:, :-1]
    return d


def dy(u):
    d = np.zeros_like(u)
    d[:-1] = u[1:] - u[:-1]
    return d


def dx_t(p):
    # transpose of dx
    out = np.zeros_like(p)
    out[:, :-1] -= p[:, :-1]
    out[:, 1:] += p[:, :-1]
    return out


def dy_t(p):
    out = np.zeros_like(p)
    out[:-1] -= p[:-1]
    out[1:] += p[:-1]
    return out


def grad(u):
    return dx(u), dy(u)


def div(px, py):
    return -(dx_t(px) + dy_t(py))


def laplacian_weighted(u, wx=None, wy=None):
    """Apply ``dx^T Wx dx + dy^T Wy dy`` (weights default to 1)."""
    gx, gy = dx(u), dy(u)
    if wx is not None:
        gx *= wx
    if wy is not None:
        gy *= wy
    return dx_t(gx) + dy_t(gy)
