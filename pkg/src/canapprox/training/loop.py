import csv
import os
import time
from pathlib import Path

import numpy as np

from ..can.serialize import save_model
from .dataset import sample_example
from .optim import AdamState, DivergenceError, adam_step, loss_and_grad

CHECKPOINT_NAME = "checkpoint.can"
LOG_NAME = "loss.csv"


def _atomic_save(model, path):
    tmp = path.with_suffix(path.suffix + ".tmp")
    save_model(model, tmp)
    os.replace(tmp, path)


def train(model, ds, cfg, out_dir=None, progress=None):
    """Train a copy of ``model`` on ``ds``; returns ``(model, log)``.

    ``log`` holds ``(iteration, loss, wall_ms)`` rows, one every
    ``cfg.log_every`` iterations. With ``out_dir`` the rows also go to
    ``loss.csv`` and ``checkpoint.can`` is rewritten every
    ``cfg.checkpoint_every`` iterations. A non-finite loss raises
    DivergenceError and leaves the last good checkpoint in place.
    """
    model = model.copy()
    if len(ds) and ds.aux_width != model.config.aux_channels:
        raise ValueError(f"dataset has {ds.aux_width} aux values per entry, "
                         f"model expects {model.config.aux_channels}")
    rng = np.random.default_rng(cfg.seed)
    state = AdamState.zeros_like(model.params)
    log = []
    ckpt = None
    writer = log_file = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        ckpt = out_dir / CHECKPOINT_NAME
        _atomic_save(model, ckpt)
        log_file = open(out_dir / LOG_NAME, "w", newline="", encoding="utf-8")
        writer = csv.writer(log_file)
        writer.writerow(["iteration", "loss", "wall_ms"])
    t0 = time.perf_counter()
    try:
        for it in range(1, cfg.iterations + 1):
            ex = sample_example(ds, cfg, rng)
            try:
                loss, grads = loss_and_grad(model, ex.image, ex.aux, ex.target)
            except DivergenceError as exc:
                raise DivergenceError(f"iteration {it}: {exc}", it, ckpt) from None
            if not all(np.all(np.isfinite(g)) for g in grads.values()):
                raise DivergenceError(f"iteration {it}: non-finite gradient", it, ckpt)
            adam_step(model, grads, state, cfg)
            if cfg.log_every and it % cfg.log_every == 0:
                row = (it, loss, (time.perf_counter() - t0) * 1e3)
                log.append(row)
                if writer is not None:
                    writer.writerow([it, repr(loss), f"{row[2]:.1f}"])
                    log_file.flush()
                if progress is not None:
                    progress(*row)
            if ckpt is not None and cfg.checkpoint_every and it % cfg.checkpoint_every == 0:
                _atomic_save(model, ckpt)
    finally:
        if log_file is not None:
            log_file.close()
    if ckpt is not None:
        _atomic_save(model, ckpt)
    return model, log
