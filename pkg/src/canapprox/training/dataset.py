"""Training pairs generated by running a reference operator over a folder of PNGs.

Index file (UTF-8, tab separated): a header line starting with ``#`` holding
``key=value`` fields (mode, operators, lambda_ref, seed, specs as JSON), then
one line per pair: input path, target path, aux values. Paths are stored
relative to the index file's directory.
"""

import json
import math
import os
from collections import namedtuple
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..can.network import lambda_code, one_hot
from ..imagecore import (ImageError, draw_height, load_image, resize_bilinear, save_image,
                         scaled_width)
from ..operators import OperatorSpec, apply_operator

INDEX_NAME = "index.tsv"
MODES = ("fixed", "param_sampled", "multi_op")

Example = namedtuple("Example", "image aux target")


@dataclass
class DatasetIndex:
    entries: list                      # (input_path, target_path, aux tuple)
    mode: str = "fixed"
    specs: list = field(default_factory=list)
    lambda_ref: float = float("nan")
    seed: int = 0
    failures: list = field(default_factory=list)   # (input_path, message)
    root: Path = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __len__(self):
        return len(self.entries)

    @property
    def aux_width(self):
        return len(self.entries[0][2]) if self.entries else 0

    def load_pair(self, i):
        """Input and target of entry ``i`` as float32 arrays (cached)."""
        if i not in self._cache:
            src, dst, _ = self.entries[i]
            self._cache[i] = (load_image(self._resolve(src)), load_image(self._resolve(dst)))
        return self._cache[i]

    def _resolve(self, p):
        p = Path(p)
        return p if p.is_absolute() or self.root is None else self.root / p


def sample_lambda(lam_ref, rng, size=None):
    """lam = lam_ref * exp(x) with x ~ Uniform(-ln 10, ln 10)."""
    x = rng.uniform(-math.log(10.0), math.log(10.0), size=size)
    return lam_ref * np.exp(x)


def list_pngs(directory):
    d = Path(directory)
    if not d.is_dir():
        raise FileNotFoundError(f"input directory {d} does not exist")
    return sorted(p for p in d.iterdir() if p.suffix.lower() == ".png" and p.is_file())


def build_dataset(op, inputs, out, mode="fixed", seed=0):
    """Run operators over every PNG in ``inputs`` and write pairs to ``out``.

    ``op`` is an OperatorSpec for the fixed and param_sampled modes (its
    ``lam`` is the reference value) and a list of specs for multi_op. All
    random draws are made up front in file order, so a failing entry never
    shifts the draws of later ones. Failures are recorded and skipped.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    specs = list(op) if mode == "multi_op" else [op]
    if not specs or not all(isinstance(s, OperatorSpec) for s in specs):
        raise TypeError("op must be an OperatorSpec (or a non-empty list for multi_op)")
    lam_ref = float("nan")
    if mode == "param_sampled":
        if not specs[0].is_variational:
            raise ValueError("param_sampled mode needs an operator with a lambda")
        lam_ref = float(specs[0].params.lam)

    files = list_pngs(inputs)
    out = Path(out)
    (out / "targets").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    if mode == "param_sampled":
        draws = sample_lambda(lam_ref, rng, size=len(files))
    elif mode == "multi_op":
        draws = rng.integers(0, len(specs), size=len(files))
    else:
        draws = [None] * len(files)

    entries, failures = [], []
    for path, draw in zip(files, draws):
        if mode == "param_sampled":
            spec = specs[0].with_params(lam=float(draw))
            aux = (lambda_code(float(draw), lam_ref),)
        elif mode == "multi_op":
            spec = specs[int(draw)]
            aux = tuple(one_hot(int(draw), len(specs)))
        else:
            spec, aux = specs[0], ()
        target = out / "targets" / path.name
        try:
            img = load_image(path)
            if img.shape[2] != 3:
                raise ImageError("training inputs must be RGB")
            save_image(apply_operator(spec, img), target)
        except (ImageError, ArithmeticError, RuntimeError, ValueError) as exc:
            failures.append((str(path), f"{type(exc).__name__}: {exc}"))
            continue
        entries.append((_rel(path, out), _rel(target, out), aux))

    ds = DatasetIndex(entries, mode=mode, specs=specs, lambda_ref=lam_ref, seed=seed,
                      failures=failures, root=out)
    write_index(ds, out / INDEX_NAME)
    if failures:
        with open(out / "failures.tsv", "w", encoding="utf-8") as f:
            for p, msg in failures:
                f.write(f"{p}\t{msg}\n")
    return ds


def _rel(path, root):
    return os.path.relpath(Path(path).resolve(), Path(root).resolve())


def write_index(ds, path):
    header = {
        "mode": ds.mode,
        "operators": ",".join(s.id.value for s in ds.specs),
        "lambda_ref": repr(ds.lambda_ref),
        "seed": str(ds.seed),
        "specs": json.dumps([s.to_dict() for s in ds.specs], sort_keys=True),
    }
    with open(path, "w", encoding="utf-8") as f:
        f.write("#" + "\t".join(f"{k}={v}" for k, v in header.items()) + "\n")
        for src, dst, aux in ds.entries:
            f.write("\t".join([str(src), str(dst)] + [repr(float(a)) for a in aux]) + "\n")


def read_index(path):
    """Load an index file; a directory argument means ``<dir>/index.tsv``."""
    path = Path(path)
    if path.is_dir():
        path = path / INDEX_NAME
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ValueError(f"{path}: missing header line")
    header = dict(item.split("=", 1) for item in lines[0][1:].split("\t") if "=" in item)
    specs = [OperatorSpec.from_dict(d) for d in json.loads(header.get("specs", "[]"))]
    entries = []
    for n, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) < 2:
            raise ValueError(f"{path}:{n}: expected input and target paths")
        entries.append((cols[0], cols[1], tuple(float(v) for v in cols[2:])))
    widths = {len(e[2]) for e in entries}
    if len(widths) > 1:
        raise ValueError(f"{path}: inconsistent aux widths {sorted(widths)}")
    return DatasetIndex(entries, mode=header.get("mode", "fixed"), specs=specs,
                        lambda_ref=float(header.get("lambda_ref", "nan")),
                        seed=int(header.get("seed", 0)), root=path.parent)


def subset(ds, indices):
    """Dataset restricted to the given entry indices (shares the root)."""
    return replace(ds, entries=[ds.entries[i] for i in indices], failures=[], _cache={})


def sample_example(ds, cfg, rng):
    """Pick an entry uniformly and resize input and target to one random height."""
    if len(ds) == 0:
        raise ValueError("dataset is empty")
    i = int(rng.integers(len(ds)))
    src, dst = ds.load_pair(i)
    if src.shape != dst.shape:
        raise ValueError(f"entry {i}: input {src.shape} and target {dst.shape} differ")
    h = draw_height(cfg.min_res, cfg.max_res, rng)
    w = scaled_width(src.shape[0], src.shape[1], h)
    return Example(resize_bilinear(src, h, w), ds.entries[i][2], resize_bilinear(dst, h, w))
