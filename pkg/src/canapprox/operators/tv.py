"""ROF and TV-L1 restoration via the first-order primal-dual method.

Both minimize ``sum |grad J| + lam * data(I - J)`` per channel with
isotropic TV, forward differences and replicate boundary.
"""

import numpy as np

from ..imagecore import as_image
from ._diff import div, dx, dy


def tv_norm(u):
    """Isotropic total variation, summed over pixels and channels."""
    gx, gy = dx(u), dy(u)
    return float(np.sum(np.sqrt(gx * gx + gy * gy)))


def _primal_dual(img, p, prox, callback=None):
    f = as_image(img).astype(np.float64)
    u = f.copy()
    u_bar = u.copy()
    px = np.zeros_like(u)
    py = np.zeros_like(u)
    sigma, tau, theta = p.sigma, p.tau, p.theta
    for it in range(1, p.iters + 1):
        px += sigma * dx(u_bar)
        py += sigma * dy(u_bar)
        # project each pixel's dual vector onto the unit ball
        scale = np.maximum(1.0, np.sqrt(px * px + py * py))
        px /= scale
        py /= scale
        u_new = prox(u + tau * div(px, py), f)
        u_bar = u_new + theta * (u_new - u)
        u = u_new
        if callback is not None:
            callback(it, u)
    return u.astype(np.float32)


def rof(img, p, callback=None):
    """Rudin-Osher-Fatemi smoothing: ``TV(J) + lam * ||I - J||^2``.

    ``callback(iteration, J)`` is invoked after each iteration with the
    float64 iterate, for monitoring convergence.
    """
    c = 2.0 * p.tau * p.lam

    def prox(v, f):
        return (v + c * f) / (1.0 + c)

    return _primal_dual(img, p, prox, callback)


def tvl1(img, p, callback=None):
    """TV-L1 restoration: ``TV(J) + lam * ||I - J||_1``."""
    thr = p.tau * p.lam

    def prox(v, f):
        d = v - f
        return f + np.sign(d) * np.maximum(np.abs(d) - thr, 0.0)

    return _primal_dual(img, p, prox, callback)


def rof_energy(img, candidate, lam):
    f = as_image(img).astype(np.float64)
    u = as_image(candidate).astype(np.float64)
    return tv_norm(u) + lam * float(np.sum((f - u) ** 2))


def tvl1_energy(img, candidate, lam):
    f = as_image(img).astype(np.float64)
    u = as_image(candidate).astype(np.float64)
    return tv_norm(u) + lam * float(np.sum(np.abs(f - u)))
