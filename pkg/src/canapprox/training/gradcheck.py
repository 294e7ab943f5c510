"""Finite-difference validation of the analytic gradients."""

from dataclasses import dataclass, field

import numpy as np

from ..can.config import CanConfig, NormMode
from ..can.model import init_model
from ..can.network import attach_aux_channels, forward_train
from .optim import loss_and_grad

# denominators below this are treated as this, so gradients that are zero
# analytically (e.g. conv biases feeding batch norm) compare on absolute error
REL_FLOOR = 1e-6


@dataclass
class GradCheckReport:
    max_rel_error: float = 0.0
    by_class: dict = field(default_factory=dict)     # kernel, bias, gamma, beta, lam, mu
    by_mode: dict = field(default_factory=dict)
    trials: list = field(default_factory=list)       # (CanConfig, (h, w), max error)
    checked: int = 0
    skipped_kinks: int = 0

    def add(self, cls, mode, err):
        self.by_class[cls] = max(self.by_class.get(cls, 0.0), err)
        self.by_mode[mode] = max(self.by_mode.get(mode, 0.0), err)
        self.max_rel_error = max(self.max_rel_error, err)


def _param_class(name):
    kind = name.split(".")[1]
    return "kernel" if kind == "weight" else kind


def random_model(cfg, rng):
    """float64 model with every parameter moved away from its initial value."""
    m = init_model(cfg, seed=int(rng.integers(2**31))).astype(np.float64)
    for p in m.params.values():
        p += rng.normal(0.0, 0.2, size=p.shape)
    for name, s in m.state.items():
        if name.endswith("running_var"):
            s[...] = rng.uniform(0.5, 1.5, size=s.shape)
        else:
            s[...] = rng.normal(0.0, 0.1, size=s.shape)
    return m


def _default_grad(model, image, aux, target):
    return loss_and_grad(model, image, aux, target, update_stats=False)


def _signs(model, x):
    _, cache = forward_train(model, x, update_stats=False)
    return [lc["slope"] < 1 for lc in cache["layers"]]


def check_model(model, image, aux, target, h=1e-4, grad_fn=None, report=None):
    """Compare every analytic gradient of one model against central differences.

    Entries whose perturbation flips the sign of any LReLU input are skipped:
    the loss has a kink there and differences are meaningless.
    """
    grad_fn = grad_fn or _default_grad
    report = report if report is not None else GradCheckReport()
    mode = model.config.norm_mode.name.lower()
    x = attach_aux_channels(image, aux).astype(np.float64)
    base = _signs(model, x)
    _, grads = grad_fn(model, image, aux, target)

    def loss_at():
        return loss_and_grad(model, image, aux, target, update_stats=False)[0]

    worst = 0.0
    for name, p in model.params.items():
        g = grads[name]
        for idx in np.ndindex(p.shape):
            orig = p[idx]
            p[idx] = orig + h
            lp = loss_at()
            kink = any(np.any(a != b) for a, b in zip(base, _signs(model, x)))
            p[idx] = orig - h
            lm = loss_at()
            kink = kink or any(np.any(a != b) for a, b in zip(base, _signs(model, x)))
            p[idx] = orig
            if kink:
                report.skipped_kinks += 1
                continue
            num = (lp - lm) / (2.0 * h)
            err = abs(num - g[idx]) / max(abs(num), abs(g[idx]), REL_FLOOR)
            report.add(_param_class(name), mode, err)
            report.checked += 1
            worst = max(worst, err)
    return worst, report


def gradient_check(trials=21, seed=0, depth=(3, 5), width=(2, 8), size=(4, 8),
                   modes=tuple(NormMode), h=1e-4, grad_fn=None):
    """Random small configurations, cycling through ``modes``, all in float64.

    ``depth``, ``width`` and ``size`` are inclusive ranges; aux channels are
    drawn from 0..2 so the input layer width varies too.
    """
    rng = np.random.default_rng(seed)
    report = GradCheckReport()
    for t in range(trials):
        cfg = CanConfig(depth=int(rng.integers(depth[0], depth[1] + 1)),
                        width=int(rng.integers(width[0], width[1] + 1)),
                        norm_mode=modes[t % len(modes)],
                        aux_channels=int(rng.integers(0, 3)))
        hh, ww = (int(v) for v in rng.integers(size[0], size[1] + 1, size=2))
        model = random_model(cfg, rng)
        image = rng.uniform(0.0, 1.0, size=(hh, ww, 3))
        aux = list(rng.uniform(-1.0, 1.0, size=cfg.aux_channels))
        target = rng.uniform(0.0, 1.0, size=(hh, ww, 3))
        worst, _ = check_model(model, image, aux, target, h=h, grad_fn=grad_fn, report=report)
        report.trials.append((cfg, (hh, ww), worst))
    return report
