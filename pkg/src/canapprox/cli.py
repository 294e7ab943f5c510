"""Command-line entry point: ``canapprox <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 numeric failure.
"""

import argparse
import csv
import statistics
import sys
import time
from dataclasses import fields
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import can
from .can import (CanConfig, NormMode, Workspace, dilation_schedule, forward, init_model,
                  load_model, param_count, receptive_field, save_model)
from .imagecore import ImageError, load_image, save_image
from .metrics import evaluate_corpus
from .operators import (DegenerateAirlightError, OperatorId, OperatorSpec, SolverError,
                        apply_operator)
from .operators.params import PARAM_TYPES
from .training import DivergenceError, TrainConfig, build_dataset, read_index, train

EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 1, 2, 3

MODEL_KEYS = {
    "depth": int, "width": int, "norm": str, "lrelu_alpha": float,
    "init_noise_std": float, "bn_eps": float, "bn_momentum": float, "plain": str,
    "init_seed": int,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def parse_config_text(text, source="<config>"):
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{source}:{n}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if not key:
            raise UsageError(f"{source}:{n}: empty key")
        values[key] = val
    return values


def _kv_pairs(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def _make_spec(name, lam=None, extra=None):
    try:
        op_id = OperatorId(name)
    except ValueError:
        raise UsageError(f"unknown operator {name!r}") from None
    types = {f.name: f.type for f in fields(PARAM_TYPES[op_id])}
    kwargs = {}
    try:
        for k, v in (extra or {}).items():
            if k not in types:
                raise UsageError(f"{name} has no parameter {k!r} (known: {', '.join(types)})")
            kwargs[k] = int(v) if types[k] in (int, "int") else float(v)
        if lam is not None:
            if "lam" not in types:
                raise UsageError(f"{name} takes no --lambda")
            kwargs["lam"] = lam
        return OperatorSpec.make(name, **kwargs)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _model_from_args(args):
    if getattr(args, "model", None):
        return load_model(args.model)
    if args.depth is None or args.width is None:
        raise UsageError("give --model or both --depth and --width")
    try:
        cfg = CanConfig(depth=args.depth, width=args.width, norm_mode=NormMode.parse(args.norm),
                        aux_channels=args.aux_channels, plain=args.plain)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return init_model(cfg, seed=getattr(args, "seed", 0))


def cmd_op(args):
    spec = _make_spec(args.operator, args.lam, _kv_pairs(args.param))
    img = load_image(args.input)
    save_image(apply_operator(spec, img), args.output)
    return 0


def cmd_dataset(args):
    extra = _kv_pairs(args.param)
    if args.multi_op:
        mode = "multi_op"
        op = [_make_spec(n.strip(), args.lam, extra) for n in args.multi_op.split(",") if n.strip()]
    else:
        if not args.operator:
            raise UsageError("give --operator or --multi-op")
        mode = "param_sampled" if args.param_sampled else "fixed"
        op = _make_spec(args.operator, args.lam, extra)
    try:
        ds = build_dataset(op, args.inputs, args.out, mode=mode, seed=args.seed)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    for path, msg in ds.failures:
        print(f"skipped {path}: {msg}", file=sys.stderr)
    print(f"{len(ds)} entries written to {Path(args.out) / 'index.tsv'}")
    if len(ds) == 0:
        raise OSError(f"no usable images in {args.inputs}")
    return 0


def _train_settings(args):
    values = {}
    if args.config:
        values.update(parse_config_text(Path(args.config).read_text(encoding="utf-8"),
                                        args.config))
    values.update(_kv_pairs(args.set))
    if args.seed is not None:
        values["seed"] = str(args.seed)
    train_keys = set(TrainConfig.__dataclass_fields__)
    unknown = set(values) - train_keys - set(MODEL_KEYS)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    try:
        tcfg = TrainConfig.from_mapping({k: v for k, v in values.items() if k in train_keys})
        model_kw = {k: MODEL_KEYS[k](v) for k, v in values.items() if k in MODEL_KEYS}
    except (KeyError, ValueError) as exc:
        raise UsageError(f"bad config value: {exc}") from None
    return tcfg, model_kw


def cmd_train(args):
    tcfg, mk = _train_settings(args)
    ds = read_index(args.dataset)
    if len(ds) == 0:
        raise OSError(f"dataset {args.dataset} has no entries")
    if args.init:
        model = load_model(args.init)
    else:
        try:
            cfg = CanConfig(depth=mk.get("depth", 9), width=mk.get("width", 24),
                            norm_mode=NormMode.parse(mk.get("norm", "adaptive")),
                            lrelu_alpha=mk.get("lrelu_alpha", 0.2),
                            aux_channels=ds.aux_width,
                            init_noise_std=mk.get("init_noise_std", 0.01),
                            bn_eps=mk.get("bn_eps", 1e-5),
                            bn_momentum=mk.get("bn_momentum", 0.99),
                            plain=_bool(mk.get("plain", "false")))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        model = init_model(cfg, seed=mk.get("init_seed", tcfg.seed))
    out = Path(args.out)
    workdir = Path(args.workdir) if args.workdir else out.parent / (out.stem + "_run")

    def progress(it, loss, ms):
        if not args.quiet:
            print(f"iter {it} loss {loss:.6g} ({ms / 1e3:.1f}s)", file=sys.stderr)

    trained, _ = train(model, ds, tcfg, out_dir=workdir, progress=progress)
    save_model(trained, out)
    print(f"model written to {out}; log and checkpoint in {workdir}")
    return 0


def _parse_aux(text):
    if not text:
        return []
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"bad --aux list {text!r}") from None


def cmd_apply(args):
    model = load_model(args.model)
    img = load_image(args.input)
    if img.shape[2] != 3:
        raise UsageError("apply needs an RGB input")
    aux = _parse_aux(args.aux)
    if len(aux) != model.config.aux_channels:
        raise UsageError(f"model expects {model.config.aux_channels} aux values, got {len(aux)}")
    save_image(np.clip(forward(model, img, aux=aux), 0.0, 1.0), args.output)
    return 0


def cmd_eval(args):
    model = load_model(args.model)
    ds = read_index(args.dataset)
    if ds.aux_width != model.config.aux_channels:
        raise UsageError(f"dataset has {ds.aux_width} aux values, model expects "
                         f"{model.config.aux_channels}")
    ev = evaluate_corpus(model, ds, csv_path=args.report)
    for path, msg in ev.failures:
        print(f"failed {path}: {msg}", file=sys.stderr)
    if ev.mean is None:
        raise OSError("no entry could be evaluated")
    m, b = ev.mean, ev.baseline_mean
    print(f"model  psnr {m.psnr:.3f} dB  ssim {m.ssim:.4f}  mse255 {m.mse255:.4g}")
    print(f"input  psnr {b.psnr:.3f} dB  ssim {b.ssim:.4f}  mse255 {b.mse255:.4g}")
    return 0


def cmd_inspect(args):
    model = _model_from_args(args)
    cfg = model.config
    conv, norm = param_count(cfg)
    print(f"depth {cfg.depth}")
    print(f"width {cfg.width}")
    print(f"norm {cfg.norm_mode.name.lower()}")
    print(f"aux_channels {cfg.aux_channels}")
    print(f"conv_params {conv}")
    print(f"norm_params {norm}")
    print("dilation_schedule " + ",".join(str(r) for r in dilation_schedule(cfg)))
    print(f"receptive_field {receptive_field(cfg)}")
    return 0


def bench_width(height):
    return max(1, int(np.floor(height * 16 / 9 + 0.5)))


def bench_forward(model, height, repeats=5, constant=False, seed=0, workspace=None):
    """Median wall time in ms of inference passes on one random (or constant) image.

    One untimed warm-up pass comes first.
    """
    if repeats < 3:
        raise ValueError("repeats must be >= 3")
    rng = np.random.default_rng(seed)
    w = bench_width(height)
    if constant:
        img = np.full((height, w, 3), 0.5, dtype=np.float32)
    else:
        img = rng.random((height, w, 3), dtype=np.float32)
    aux = [0.0] * model.config.aux_channels
    ws = workspace if workspace is not None else Workspace()
    forward(model, img, aux=aux, workspace=ws)
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        forward(model, img, aux=aux, workspace=ws)
        times.append((time.perf_counter() - t0) * 1e3)
    return statistics.median(times)


def cmd_bench(args):
    model = _model_from_args(args)
    try:
        heights = [int(h) for h in args.heights.split(",") if h.strip()]
    except ValueError:
        raise UsageError(f"bad --heights {args.heights!r}") from None
    if not heights or min(heights) < 1 or args.repeats < 3:
        raise UsageError("need positive heights and --repeats >= 3")
    rows = []
    for h in heights:
        ms = bench_forward(model, h, args.repeats, constant=args.constant)
        rows.append((h, bench_width(h), args.repeats, ms))
    out = open(args.csv, "w", newline="", encoding="utf-8") if args.csv else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(["height", "width", "repeats", "median_ms"])
        for h, wd, n, ms in rows:
            w.writerow([h, wd, n, f"{ms:.6g}"])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def build_parser():
    p = _Parser(prog="canapprox", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=1,
                   help="BLAS threads; 1 (default) is bit-deterministic")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def add_op_flags(q):
        q.add_argument("--lambda", dest="lam", type=float, help="data-term weight")
        q.add_argument("--param", action="append", metavar="KEY=VALUE",
                       help="other operator parameter (repeatable)")

    q = sub.add_parser("op", help="apply a reference operator to one PNG")
    q.add_argument("--operator", required=True, choices=[o.value for o in OperatorId])
    q.add_argument("--input", required=True)
    q.add_argument("--output", required=True)
    add_op_flags(q)
    q.set_defaults(func=cmd_op)

    q = sub.add_parser("dataset", help="build training pairs from a folder of PNGs")
    q.add_argument("--operator")
    q.add_argument("--multi-op", metavar="OP,OP,...")
    q.add_argument("--param-sampled", action="store_true",
                   help="draw lambda log-uniformly in [0.1, 10] x --lambda")
    q.add_argument("--inputs", required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--seed", type=int, default=0)
    add_op_flags(q)
    q.set_defaults(func=cmd_dataset)

    q = sub.add_parser("train", help="train a network on a dataset index")
    q.add_argument("--config")
    q.add_argument("--set", action="append", metavar="KEY=VALUE")
    q.add_argument("--dataset", required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--workdir", help="checkpoint and loss log directory")
    q.add_argument("--init", help="start from this model instead of a fresh one")
    q.add_argument("--seed", type=int)
    q.add_argument("--quiet", action="store_true")
    q.set_defaults(func=cmd_train)

    q = sub.add_parser("apply", help="run a trained network on one PNG")
    q.add_argument("--model", required=True)
    q.add_argument("--input", required=True)
    q.add_argument("--output", required=True)
    q.add_argument("--aux", help="comma-separated aux values")
    q.set_defaults(func=cmd_apply)

    q = sub.add_parser("eval", help="evaluate a network on a dataset index")
    q.add_argument("--model", required=True)
    q.add_argument("--dataset", required=True)
    q.add_argument("--report", required=True)
    q.set_defaults(func=cmd_eval)

    def add_arch_flags(q):
        q.add_argument("--model")
        q.add_argument("--depth", type=int)
        q.add_argument("--width", type=int)
        q.add_argument("--norm", default="adaptive", choices=["none", "batch", "adaptive"])
        q.add_argument("--aux-channels", type=int, default=0)
        q.add_argument("--plain", action="store_true")
        q.add_argument("--seed", type=int, default=0)

    q = sub.add_parser("inspect", help="parameter counts and receptive field")
    add_arch_flags(q)
    q.set_defaults(func=cmd_inspect)

    q = sub.add_parser("bench", help="median inference time at 16:9 sizes")
    add_arch_flags(q)
    q.add_argument("--heights", default="480,1080")
    q.add_argument("--repeats", type=int, default=5)
    q.add_argument("--constant", action="store_true", help="constant instead of random input")
    q.add_argument("--csv", help="write CSV here instead of stdout")
    q.set_defaults(func=cmd_bench)
    return p


def run_command(argv):
    try:
        args = build_parser().parse_args(argv)
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        with threadpool_limits(args.threads):
            return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DivergenceError, SolverError, DegenerateAirlightError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ImageError, can.ModelFormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
