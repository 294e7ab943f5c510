"""Relative total variation structure extraction (IRLS, channel-wise).

Objective per channel::

    sum_p  Dx/(Lx + eps) + Dy/(Ly + eps)  +  lam * sum_p (I - J)^2

with ``Dx = G * |dx J|`` and ``Lx = |G * dx J|`` (``y`` analogous). Each outer
iteration freezes the weights and minimizes the quadratic surrogate
``sum u w (dJ)^2 / 2 + lam ||I - J||^2``, where ``u = G * 1/(|G * dJ| + eps)``
and ``w = 1/(|dJ| + eps_s)``.
"""

import numpy as np
from scipy.ndimage import gaussian_filter

from ..imagecore import as_image
from ._cg import SolverError, conjugate_gradient
from ._diff import dx, dx_t, dy, dy_t


def _smooth(u, sigma):
    # per-channel Gaussian, replicate boundary
    return gaussian_filter(u, sigma=(sigma, sigma, 0), mode="nearest")


def _weights(u, sigma, eps, eps_s):
    out = []
    for d in (dx(u), dy(u)):
        inv = 1.0 / (np.abs(_smooth(d, sigma)) + eps)
        out.append(_smooth(inv, sigma) / (np.abs(d) + eps_s))
    return out


def rtv(img, p):
    f = as_image(img).astype(np.float64)
    u = f.copy()
    for _ in range(p.outer_iters):
        wx, wy = _weights(u, p.sigma, p.eps, p.eps_s)
        # surrogate normal equations scaled by 1/lam: (1 + L_w / (2 lam)) J = I
        cx = wx / (2.0 * p.lam)
        cy = wy / (2.0 * p.lam)

        def apply_a(v):
            return v + dx_t(cx * dx(v)) + dy_t(cy * dy(v))

        diag = 1.0 + cx + cy
        diag[:, 1:] += cx[:, :-1]
        diag[1:] += cy[:-1]
        u, _, rel = conjugate_gradient(apply_a, f, u, p.cg_tol, p.cg_max_iters,
                                       precond=lambda r: r / diag)
        if rel > p.cg_tol:
            raise SolverError("RTV conjugate gradient did not converge", rel)
    return u.astype(np.float32)


def rtv_energy(img, candidate, p):
    f = as_image(img).astype(np.float64)
    u = as_image(candidate).astype(np.float64)
    total = 0.0
    for d in (dx(u), dy(u)):
        total += float(np.sum(_smooth(np.abs(d), p.sigma)
                              / (np.abs(_smooth(d, p.sigma)) + p.eps)))
    return total + p.lam * float(np.sum((f - u) ** 2))
