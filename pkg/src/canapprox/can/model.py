"""CanModel container and identity-centred initialization."""

import numpy as np

from .config import CanConfig, NormMode, layer_in_channels


class CanModel:
    """Parameters and normalization state of a context aggregation network.

    ``params`` maps names to trainable arrays in serialization order:
    per 3x3 layer ``s`` (1-based) ``conv{s}.weight`` with shape
    ``(3, 3, cin, width)`` indexed ``(tap_row, tap_col, in, out)``,
    ``conv{s}.bias``, then ``norm{s}.gamma``/``norm{s}.beta`` when a norm is
    used and ``norm{s}.lam``/``norm{s}.mu`` for adaptive norm; finally
    ``out.weight`` ``(width, 3)`` and ``out.bias``. ``state`` holds the
    ``norm{s}.running_mean``/``norm{s}.running_var`` buffers.
    """

    def __init__(self, config, params, state):
        self.config = config
        self.params = params
        self.state = state

    def copy(self):
        return CanModel(self.config,
                        {k: v.copy() for k, v in self.params.items()},
                        {k: v.copy() for k, v in self.state.items()})

    def astype(self, dtype):
        return CanModel(self.config,
                        {k: v.astype(dtype) for k, v in self.params.items()},
                        {k: v.astype(dtype) for k, v in self.state.items()})

    @property
    def dtype(self):
        return self.params["out.weight"].dtype

    def layer(self, s):
        """Dict of the arrays belonging to 3x3 layer ``s`` (1-based)."""
        out = {"weight": self.params[f"conv{s}.weight"], "bias": self.params[f"conv{s}.bias"]}
        if self.config.norm_mode is not NormMode.NONE:
            for key in ("gamma", "beta"):
                out[key] = self.params[f"norm{s}.{key}"]
            for key in ("running_mean", "running_var"):
                out[key] = self.state[f"norm{s}.{key}"]
        if self.config.norm_mode is NormMode.ADAPTIVE:
            out["lam"] = self.params[f"norm{s}.lam"]
            out["mu"] = self.params[f"norm{s}.mu"]
        return out

    def __eq__(self, other):
        if not isinstance(other, CanModel) or self.config != other.config:
            return False
        for mine, theirs in ((self.params, other.params), (self.state, other.state)):
            if mine.keys() != theirs.keys():
                return False
            if not all(np.array_equal(mine[k], theirs[k]) for k in mine):
                return False
        return True


def param_shapes(cfg):
    shapes = {}
    w = cfg.width
    for s, cin in enumerate(layer_in_channels(cfg), start=1):
        shapes[f"conv{s}.weight"] = (3, 3, cin, w)
        shapes[f"conv{s}.bias"] = (w,)
        if cfg.norm_mode is not NormMode.NONE:
            shapes[f"norm{s}.gamma"] = (w,)
            shapes[f"norm{s}.beta"] = (w,)
        if cfg.norm_mode is NormMode.ADAPTIVE:
            shapes[f"norm{s}.lam"] = (1,)
            shapes[f"norm{s}.mu"] = (1,)
    shapes["out.weight"] = (w, 3)
    shapes["out.bias"] = (3,)
    return shapes


def state_shapes(cfg):
    if cfg.norm_mode is NormMode.NONE:
        return {}
    shapes = {}
    for s in range(1, cfg.depth):
        shapes[f"norm{s}.running_mean"] = (cfg.width,)
        shapes[f"norm{s}.running_var"] = (cfg.width,)
    return shapes


def init_model(cfg, seed=0):
    """Identity-centred initialization plus Gaussian noise on every tap.

    Hidden channel ``i`` of layer 1 copies input channel ``i mod cin`` through
    the centre tap; deeper layers pass channel ``i`` straight through. Each
    output colour averages the hidden channels carrying it.
    """
    if not isinstance(cfg, CanConfig):
        raise TypeError("cfg must be a CanConfig")
    rng = np.random.default_rng(seed)
    w = cfg.width
    params = {}
    for name, shape in param_shapes(cfg).items():
        params[name] = np.zeros(shape, dtype=np.float64)

    carried = np.arange(w)
    for s, cin in enumerate(layer_in_channels(cfg), start=1):
        k = params[f"conv{s}.weight"]
        src = np.arange(w) % cin
        k[1, 1, src, np.arange(w)] = 1.0
        if s == 1:
            carried = src
    for c in range(3):
        hits = carried == c
        if hits.any():
            params["out.weight"][hits, c] = 1.0 / hits.sum()

    if cfg.init_noise_std > 0:
        names = [f"conv{s}.weight" for s in range(1, cfg.depth)] + ["out.weight"]
        for name in names:
            params[name] += rng.normal(0.0, cfg.init_noise_std, size=params[name].shape)
    if cfg.norm_mode is not NormMode.NONE:
        for s in range(1, cfg.depth):
            params[f"norm{s}.gamma"][:] = 1.0
            if cfg.norm_mode is NormMode.ADAPTIVE:
                params[f"norm{s}.lam"][:] = 1.0

    state = {}
    for name, shape in state_shapes(cfg).items():
        state[name] = np.ones(shape) if name.endswith("running_var") else np.zeros(shape)

    return CanModel(cfg,
                    {k: v.astype(np.float32) for k, v in params.items()},
                    {k: v.astype(np.float32) for k, v in state.items()})
