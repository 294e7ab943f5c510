"""Reference image operators used to generate training targets."""

from ._cg import SolverError
from .dehaze import (DegenerateAirlightError, DehazeDecomposition, dehaze_dark_channel,
                     guided_filter)
from .l0 import l0_energy, l0_smooth
from .params import (DehazeParams, L0Params, OperatorId, OperatorSpec, RofParams,
                     RtvParams, TvL1Params)
from .rtv import rtv, rtv_energy
from .tv import rof, rof_energy, tvl1, tvl1_energy


def apply_operator(spec, img):
    """Run the operator named by ``spec`` on ``img``; same size out as in."""
    op = spec.id
    if op is OperatorId.ROF:
        return rof(img, spec.params)
    if op is OperatorId.TVL1:
        return tvl1(img, spec.params)
    if op is OperatorId.L0:
        return l0_smooth(img, spec.params)
    if op is OperatorId.RTV:
        return rtv(img, spec.params)
    if op is OperatorId.DEHAZE:
        return dehaze_dark_channel(img, spec.params)[0]
    raise ValueError(f"unknown operator {op}")


def operator_energy(spec, img, candidate):
    """Variational objective of ``spec`` evaluated at ``candidate``."""
    p = spec.params
    op = spec.id
    if op is OperatorId.ROF:
        return rof_energy(img, candidate, p.lam)
    if op is OperatorId.TVL1:
        return tvl1_energy(img, candidate, p.lam)
    if op is OperatorId.L0:
        return l0_energy(img, candidate, p)
    if op is OperatorId.RTV:
        return rtv_energy(img, candidate, p)
    raise ValueError(f"{op.value} has no variational objective")


__all__ = [
    "DegenerateAirlightError", "DehazeDecomposition", "DehazeParams", "L0Params",
    "OperatorId", "OperatorSpec", "RofParams", "RtvParams", "SolverError", "TvL1Params",
    "apply_operator", "dehaze_dark_channel", "guided_filter", "l0_smooth",
    "operator_energy", "rof", "rtv", "tvl1",
]
