"""L0 gradient minimization by half-quadratic splitting.

Objective: ``#{p : grad J(p) != 0} + lam * ||I - J||^2``. Auxiliary gradient
variables ``g`` are coupled with weight ``beta``, which grows geometrically
from ``beta0`` to ``beta_max``. The quadratic J-step is solved by conjugate
gradient on ``(lam + beta * D^T D) J = lam * I + beta * D^T g``.
"""

import numpy as np

from ..imagecore import as_image
from ._cg import conjugate_gradient
from ._diff import dx, dx_t, dy, dy_t


def _nonzero_mask(gx, gy, thresh):
    # joint test over both directions and all channels
    mag = np.sum(gx * gx + gy * gy, axis=2, keepdims=True)
    return mag > thresh


def l0_smooth(img, p):
    f = as_image(img).astype(np.float64)
    lam = p.lam
    u = f.copy()
    beta = p.beta0
    while beta < p.beta_max:
        gx, gy = dx(u), dy(u)
        keep = _nonzero_mask(gx, gy, 1.0 / beta)
        gx *= keep
        gy *= keep
        rhs = lam * f + beta * (dx_t(gx) + dy_t(gy))

        def apply_a(v, beta=beta):
            return lam * v + beta * (dx_t(dx(v)) + dy_t(dy(v)))

        u, _, _ = conjugate_gradient(apply_a, rhs, u, p.cg_tol, p.cg_max_iters)
        beta *= p.kappa
    return u.astype(np.float32)


def count_nonzero_gradients(u, zero_tol_sq):
    """Pixels whose joint squared gradient magnitude exceeds ``zero_tol_sq``."""
    u = np.asarray(u, dtype=np.float64)
    if u.ndim == 2:
        u = u[:, :, None]
    return int(np.count_nonzero(_nonzero_mask(dx(u), dy(u), zero_tol_sq)))


def l0_energy(img, candidate, p):
    """Discrete L0 objective.

    A gradient counts as nonzero when its squared magnitude exceeds
    ``1 / beta_max``, the solver's own final threshold; exact zero tests
    would count the O(lam/beta) residue left by the splitting.
    """
    f = as_image(img).astype(np.float64)
    u = as_image(candidate).astype(np.float64)
    n = count_nonzero_gradients(u, 1.0 / p.beta_max)
    return n + p.lam * float(np.sum((f - u) ** 2))
