"""Parameter records for the reference operators.

In every variational model here ``lam`` weights the data term, so larger
values keep the output closer to the input.
"""

import enum
import math
from dataclasses import asdict, dataclass, fields, replace

_PD_STEP = 1.0 / math.sqrt(8.0)


class OperatorId(enum.Enum):
    ROF = "rof"
    TVL1 = "tvl1"
    L0 = "l0"
    RTV = "rtv"
    DEHAZE = "dehaze"


def _positive(name, value):
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value}")


def _check_primal_dual(p):
    _positive("lam", p.lam)
    _positive("sigma", p.sigma)
    _positive("tau", p.tau)
    if not 0.0 <= p.theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    if p.iters < 1:
        raise ValueError("iters must be >= 1")
    # operator norm of the forward-difference gradient is at most sqrt(8)
    if p.sigma * p.tau * 8.0 > 1.0 + 1e-12:
        raise ValueError("primal-dual steps violate sigma*tau*8 <= 1")


@dataclass(frozen=True)
class RofParams:
    lam: float = 8.0
    sigma: float = _PD_STEP
    tau: float = _PD_STEP
    theta: float = 1.0
    iters: int = 300

    def __post_init__(self):
        _check_primal_dual(self)


@dataclass(frozen=True)
class TvL1Params:
    lam: float = 1.5
    sigma: float = _PD_STEP
    tau: float = _PD_STEP
    theta: float = 1.0
    iters: int = 300

    def __post_init__(self):
        _check_primal_dual(self)


@dataclass(frozen=True)
class L0Params:
    lam: float = 50.0
    beta0: float = 0.5
    kappa: float = 2.0
    beta_max: float = 1e5
    cg_tol: float = 1e-6
    cg_max_iters: int = 200

    def __post_init__(self):
        _positive("lam", self.lam)
        _positive("beta0", self.beta0)
        if not self.kappa > 1.0:
            raise ValueError("kappa must be > 1")
        if not self.beta_max > self.beta0:
            raise ValueError("beta_max must exceed beta0")


@dataclass(frozen=True)
class RtvParams:
    lam: float = 100.0
    sigma: float = 3.0
    eps: float = 1e-3
    eps_s: float = 0.02
    outer_iters: int = 4
    cg_tol: float = 1e-5
    cg_max_iters: int = 2000

    def __post_init__(self):
        _positive("lam", self.lam)
        _positive("sigma", self.sigma)
        if self.eps < 0:
            raise ValueError("eps must be >= 0")
        _positive("eps_s", self.eps_s)
        _positive("cg_tol", self.cg_tol)
        if self.outer_iters < 1 or self.cg_max_iters < 1:
            raise ValueError("iteration counts must be >= 1")


@dataclass(frozen=True)
class DehazeParams:
    patch_radius: int = 7
    omega: float = 0.95
    t0: float = 0.1
    top_fraction: float = 0.001
    guided_radius: int = 30
    guided_eps: float = 1e-3

    def __post_init__(self):
        if self.patch_radius < 0 or self.guided_radius < 0:
            raise ValueError("radii must be >= 0")
        if not 0.0 < self.omega <= 1.0:
            raise ValueError("omega must lie in (0, 1]")
        if not 0.0 < self.t0 < 1.0:
            raise ValueError("t0 must lie in (0, 1)")
        if not 0.0 < self.top_fraction < 1.0:
            raise ValueError("top_fraction must lie in (0, 1)")
        _positive("guided_eps", self.guided_eps)


PARAM_TYPES = {
    OperatorId.ROF: RofParams,
    OperatorId.TVL1: TvL1Params,
    OperatorId.L0: L0Params,
    OperatorId.RTV: RtvParams,
    OperatorId.DEHAZE: DehazeParams,
}

VARIATIONAL = (OperatorId.ROF, OperatorId.TVL1, OperatorId.L0, OperatorId.RTV)


@dataclass(frozen=True)
class OperatorSpec:
    id: OperatorId
    params: object = None

    def __post_init__(self):
        op_id = OperatorId(self.id)
        object.__setattr__(self, "id", op_id)
        ptype = PARAM_TYPES[op_id]
        if self.params is None:
            object.__setattr__(self, "params", ptype())
        elif not isinstance(self.params, ptype):
            raise TypeError(f"{op_id.value} needs {ptype.__name__}, "
                            f"got {type(self.params).__name__}")

    @classmethod
    def make(cls, name, **kwargs):
        """Build a spec from an operator name and keyword overrides."""
        op_id = OperatorId(name)
        return cls(op_id, PARAM_TYPES[op_id](**kwargs))

    def with_params(self, **kwargs):
        return OperatorSpec(self.id, replace(self.params, **kwargs))

    @property
    def is_variational(self):
        return self.id in VARIATIONAL

    def to_dict(self):
        return {"id": self.id.value, "params": asdict(self.params)}

    @classmethod
    def from_dict(cls, d):
        return cls.make(d["id"], **d.get("params", {}))


def param_names(op_id):
    return [f.name for f in fields(PARAM_TYPES[OperatorId(op_id)])]
