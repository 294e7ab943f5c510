import numpy as np


class SolverError(RuntimeError):
    """An iterative solver failed to reach its tolerance."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


def conjugate_gradient(apply_a, b, x0, tol, max_iters, precond=None):
    """Solve ``A x = b`` for SPD ``A`` given as a callable on arrays.

    Works on arrays of any shape; inner products run over all elements.
    Returns ``(x, iterations, relative_residual)``.
    """
    x = x0.copy()
    r = b - apply_a(x)
    bnorm = np.sqrt(np.vdot(b, b))
    if bnorm == 0.0:
        return np.zeros_like(b), 0, 0.0
    rel = np.sqrt(np.vdot(r, r)) / bnorm
    if rel <= tol:
        return x, 0, rel
    z = r if precond is None else precond(r)
    p = z.copy()
    rz = np.vdot(r, z)
    it = 0
    while it < max_iters:
        it += 1
        ap = apply_a(p)
        pap = np.vdot(p, ap)
        if pap <= 0.0:
            break
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        rel = np.sqrt(np.vdot(r, r)) / bnorm
        if rel <= tol:
            break
        z = r if precond is None else precond(r)
        rz_new = np.vdot(r, z)
        p *= rz_new / rz
        p += z
        rz = rz_new
    return x, it, float(rel)
