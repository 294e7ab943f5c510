from dataclasses import dataclass, fields


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings. Defaults are desk scale (20K iterations, 128-256p)."""

    iterations: int = 20000
    lr: float = 1e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    min_res: int = 128
    max_res: int = 256
    seed: int = 0
    checkpoint_every: int = 1000
    log_every: int = 100

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not self.lr > 0:
            raise ValueError("lr must be > 0")
        for name in ("adam_beta1", "adam_beta2"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in [0, 1)")
        if not self.adam_eps > 0:
            raise ValueError("adam_eps must be > 0")
        if not 1 <= self.min_res <= self.max_res:
            raise ValueError("need 1 <= min_res <= max_res")
        if self.checkpoint_every < 0 or self.log_every < 0:
            raise ValueError("checkpoint_every and log_every must be >= 0")

    @classmethod
    def from_mapping(cls, values):
        """Build from string or typed values, rejecting unknown keys."""
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in types:
                raise KeyError(f"unknown training key {key!r}")
            conv = int if types[key] in (int, "int") else float
            if conv is int and isinstance(raw, str):
                kwargs[key] = int(float(raw)) if "e" in raw.lower() else int(raw)
            else:
                kwargs[key] = conv(raw)
        return cls(**kwargs)
