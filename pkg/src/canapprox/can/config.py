import enum
from dataclasses import dataclass


class NormMode(enum.IntEnum):
    NONE = 0
    BATCH = 1
    ADAPTIVE = 2

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                raise ValueError(f"unknown norm mode {value!r}") from None
        return cls(value)


@dataclass(frozen=True)
class CanConfig:
    """Shape and hyperparameters of a context aggregation network.

    ``depth`` counts every layer including the final 1x1 projection, so the
    network has ``depth - 1`` 3x3 layers. ``plain=True`` drops dilation
    (every 3x3 layer uses r=1).
    """

    depth: int = 9
    width: int = 24
    norm_mode: NormMode = NormMode.ADAPTIVE
    lrelu_alpha: float = 0.2
    aux_channels: int = 0
    init_noise_std: float = 0.01
    bn_eps: float = 1e-5
    bn_momentum: float = 0.99
    plain: bool = False

    def __post_init__(self):
        object.__setattr__(self, "norm_mode", NormMode.parse(self.norm_mode))
        if self.depth < 3:
            raise ValueError("depth must be >= 3")
        if self.width < 1:
            raise ValueError("width must be >= 1")
        if self.aux_channels < 0:
            raise ValueError("aux_channels must be >= 0")
        if self.init_noise_std < 0:
            raise ValueError("init_noise_std must be >= 0")
        if not self.bn_eps > 0:
            raise ValueError("bn_eps must be > 0")
        if not 0.0 < self.bn_momentum < 1.0:
            raise ValueError("bn_momentum must lie in (0, 1)")

    @property
    def in_channels(self):
        return 3 + self.aux_channels

    @property
    def n_conv_layers(self):
        return self.depth - 1


def dilation_schedule(cfg):
    """Dilation of each 3x3 layer: 1, 2, 4, ..., 2^(d-3), then 1."""
    n = cfg.depth - 1
    if cfg.plain:
        return [1] * n
    return [2 ** s for s in range(n - 1)] + [1]


def receptive_field(cfg):
    """Side length of the square input window seen by one output pixel."""
    return 1 + 2 * sum(dilation_schedule(cfg))


def layer_in_channels(cfg):
    return [cfg.in_channels] + [cfg.width] * (cfg.depth - 2)


def param_count(cfg):
    """Return ``(conv_params, norm_params)``; running statistics excluded."""
    w = cfg.width
    conv = sum(9 * cin * w + w for cin in layer_in_channels(cfg)) + 3 * w + 3
    per_layer = {NormMode.NONE: 0, NormMode.BATCH: 2 * w, NormMode.ADAPTIVE: 2 * w + 2}
    norm = per_layer[cfg.norm_mode] * cfg.n_conv_layers
    return conv, norm
