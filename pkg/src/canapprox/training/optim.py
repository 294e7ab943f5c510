"""Regression loss, its gradient, and the Adam update."""

from dataclasses import dataclass

import numpy as np

from ..can.network import attach_aux_channels, backward, forward_train


class DivergenceError(FloatingPointError):
    """Non-finite loss or gradient; ``checkpoint`` names the last good model file."""

    def __init__(self, message, iteration=None, checkpoint=None):
        super().__init__(message)
        self.iteration = iteration
        self.checkpoint = checkpoint


def regression_loss(out, target):
    """Squared error summed over channels, divided by the pixel count."""
    d = out - target
    n = out.shape[0] * out.shape[1]
    return float(np.sum(d * d, dtype=np.float64) / n), d, n


def loss_and_grad(model, image, aux, target, update_stats=True):
    """Loss of one training pair and the gradient of every parameter.

    Runs in the model's dtype with per-image normalization statistics;
    running statistics are updated unless ``update_stats`` is False.
    """
    image = np.asarray(image)
    target = np.asarray(target)
    if image.shape[:2] != target.shape[:2] or target.ndim != 3 or target.shape[2] != 3:
        raise ValueError(f"input {image.shape} and target {target.shape} do not match")
    x = attach_aux_channels(image, aux, expected=model.config.aux_channels)
    dt = model.dtype
    # overflow surfaces as a non-finite loss and is reported as divergence
    with np.errstate(over="ignore", invalid="ignore"):
        out, cache = forward_train(model, x.astype(dt), update_stats=update_stats)
        loss, d, n = regression_loss(out, target.astype(dt))
        if not np.isfinite(loss):
            raise DivergenceError(f"loss is {loss}")
        grads = backward(model, cache, (2.0 / n) * d)
    return loss, grads


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0

    @classmethod
    def zeros_like(cls, params):
        return cls({k: np.zeros(p.shape) for k, p in params.items()},
                   {k: np.zeros(p.shape) for k, p in params.items()})


def adam_step(model, grads, state, cfg):
    """One bias-corrected Adam update, in place; moments kept in float64.

    ``model`` may be a CanModel or a plain dict of parameter arrays.
    """
    params = model if isinstance(model, dict) else model.params
    if grads.keys() != params.keys():
        raise KeyError("gradient set does not mirror the parameters")
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    state.t += 1
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for k, p in params.items():
        g = np.asarray(grads[k], dtype=np.float64)
        if g.shape != p.shape:
            raise ValueError(f"{k}: gradient shape {g.shape} != {p.shape}")
        m = state.m[k]
        v = state.v[k]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        step = cfg.lr * (m / c1) / (np.sqrt(v / c2) + cfg.adam_eps)
        p[...] = p - step
    return model, state
