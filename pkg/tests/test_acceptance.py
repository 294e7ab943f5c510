"""The twelve acceptance criteria, one test each.

Every test records a PASS/FAIL line (printed in the pytest summary) before
asserting. Criteria 7-9 train networks for up to two hours each; their
results are cached by ``experiments.py`` and recomputed only when missing.
"""

import time

import numpy as np
import pytest

import experiments
from acceptance_report import record
from corpus import cache_root, write_corpus
from oracles import grid_minimum, near_optimal_nearby, potts_1d
from canapprox.can import (CanConfig, NormMode, deserialize_model, init_model,
                           receptive_field, serialize_model)
from canapprox.can.serialize import ModelFormatError
from canapprox.cli import bench_forward, run_command
from canapprox.imagecore import load_image, resize_bilinear, save_image
from canapprox.metrics import empirical_receptive_field, error_map, metric_report, ssim
from canapprox.operators import (L0Params, OperatorSpec, RofParams, TvL1Params, l0_smooth,
                                 rof, tvl1)
from canapprox.operators.l0 import l0_energy
from canapprox.training import TrainConfig, build_dataset, gradient_check, train


def _check(number, title, passed, detail):
    record(number, title, passed, detail)
    assert passed, detail


@pytest.fixture(scope="module")
def corpus():
    return write_corpus(cache_root() / "corpus")


def test_c01_parameter_counts(capsys):
    t0 = time.perf_counter()
    got = {}
    for d, w in ((9, 24), (10, 32)):
        assert run_command(["inspect", "--depth", str(d), "--width", str(w)]) == 0
        out = dict(l.split(" ", 1) for l in capsys.readouterr().out.splitlines())
        got[(d, w)] = int(out["conv_params"])
    secs = time.perf_counter() - t0
    ok = got == {(9, 24): 37203, (10, 32): 74979} and secs < 1.0
    _check(1, "parameter counts", ok,
           f"d9/w24 {got[(9, 24)]}, d10/w32 {got[(10, 32)]} in {secs:.2f}s")


def test_c02_receptive_field():
    t0 = time.perf_counter()
    rows = []
    cfgs = [CanConfig(depth=d, width=3) for d in range(4, 11)]
    cfgs.append(CanConfig(depth=10, width=3, plain=True))
    for cfg in cfgs:
        m = init_model(cfg, seed=cfg.depth)
        rng = np.random.default_rng(cfg.depth)
        for p in m.params.values():
            p[...] = rng.normal(0.0, 0.5, p.shape)
        rows.append((cfg, empirical_receptive_field(m), receptive_field(cfg)))
    secs = time.perf_counter() - t0
    ok = all(e == t for _, e, t in rows) and rows[-1][1] == 19 and rows[-2][1] == 513
    detail = ", ".join(f"{'plain' if c.plain else 'd'}{c.depth}={e}" for c, e, _ in rows)
    _check(2, "receptive field", ok and secs < 60, f"{detail} ({secs:.1f}s)")


def test_c03_gradient_check():
    t0 = time.perf_counter()
    report = gradient_check(trials=21, seed=0)
    secs = time.perf_counter() - t0
    modes = set(report.by_mode)
    ok = (report.max_rel_error < 1e-4 and len(report.trials) >= 20
          and modes == {m.name.lower() for m in NormMode} and secs < 120)
    _check(3, "gradient correctness", ok,
           f"max rel err {report.max_rel_error:.2e} over {len(report.trials)} configs, "
           f"{report.checked} entries, {report.skipped_kinks} kink-skipped ({secs:.0f}s)")


def test_c04_l0_vs_potts():
    rng = np.random.default_rng(0)
    signals = [rng.random(32) for _ in range(100)]
    worst = {}
    for lam in (0.5, 2.0, 10.0):
        p = L0Params(lam=lam)
        ratios = []
        for s in signals:
            img = s[None, :, None]
            opt, _ = potts_1d(s, lam)
            ratios.append(l0_energy(img, l0_smooth(img, p), p) / opt)
        worst[lam] = max(ratios)
    ok = all(r <= 1.1 for r in worst.values())
    _check(4, "L0 vs exact 1-D Potts", ok,
           "worst objective ratio " + ", ".join(f"lam {k:g}: {v:.3f}" for k, v in worst.items())
           + " (limit 1.1)")


def test_c05_small_instance_oracles():
    rng = np.random.default_rng(1)
    worst_rof, tv_ok, n = 0.0, True, 0
    for shape in ((1, 2), (2, 2)):
        for _ in range(10):
            f = rng.random(shape)
            lam = float(rng.choice([0.5, 1.0, 2.0]))
            _, x = grid_minimum(f.ravel(), lam, "rof")
            out = rof(f[:, :, None], RofParams(lam=lam)).ravel()
            worst_rof = max(worst_rof, float(np.max(np.abs(out - x))))
            best, _ = grid_minimum(f.ravel(), lam, "tvl1")
            out = tvl1(f[:, :, None], TvL1Params(lam=lam)).ravel()
            tv_ok &= near_optimal_nearby(f.ravel(), lam, "tvl1", out, best)
            n += 1
    _check(5, "ROF/TV-L1 grid oracles", worst_rof <= 1e-2 and tv_ok,
           f"{n} instances; ROF max deviation {worst_rof:.1e}; TV-L1 all near-optimal: {tv_ok}")


def test_c06_lambda_monotonicity(corpus):
    _, held = corpus
    paths = sorted(held.glob("*.png"))[:10]
    imgs = [resize_bilinear(load_image(p), 64, 85) for p in paths]
    lams = (0.01, 0.1, 1.0, 10.0, 100.0)
    worst = -np.inf
    for op, ptype in ((rof, RofParams), (tvl1, TvL1Params), (l0_smooth, L0Params)):
        for img in imgs:
            d = [float(np.mean(np.abs(op(img, ptype(lam=l)).astype(np.float64) - img)))
                 for l in lams]
            worst = max(worst, max(b - a for a, b in zip(d, d[1:])))
    _check(6, "lambda monotonicity", len(imgs) == 10 and worst <= 1e-6,
           f"largest increase of mean|out-in| along lambda: {worst:.2e} (slack 1e-6)")


def test_c07_desk_l0():
    res = experiments.run("l0_desk")["result"]["eval"]
    gain = res["psnr"] - res["input_psnr"]
    _check(7, "desk-scale L0 approximation", gain >= 3.0,
           f"network {res['psnr']:.2f} dB vs input {res['input_psnr']:.2f} dB "
           f"(+{gain:.2f}, need +3) on {res['n']} held-out images")


def test_c08_multi_operator():
    res = experiments.run("multi_op")["result"]
    gaps = {op: r["correct"]["psnr"] - r["wrong"]["psnr"] for op, r in res.items()}
    _check(8, "one-hot operator selection", all(g >= 1.0 for g in gaps.values()),
           ", ".join(f"{op}: correct {res[op]['correct']['psnr']:.2f} dB vs wrong "
                     f"{res[op]['wrong']['psnr']:.2f} dB" for op in res))


def test_c09_parameter_channel():
    res = experiments.run("param_l0")["result"]
    wins = {k: r["psnr"] - r["input_psnr"] for k, r in res.items()}
    _check(9, "lambda input channel", all(g > 0 for g in wins.values()),
           ", ".join(f"{k}x: {res[k]['psnr']:.2f} vs input {res[k]['input_psnr']:.2f} dB"
                     for k in res))


def test_c10_determinism_and_serialization(tmp_path, corpus):
    t0 = time.perf_counter()
    train_dir, _ = corpus
    src = tmp_path / "in"
    src.mkdir()
    for p in sorted(train_dir.glob("*.png"))[:5]:
        save_image(resize_bilinear(load_image(p), 48, 64), src / p.name)
    ds = build_dataset(OperatorSpec.make("rof", iters=50), src, tmp_path / "ds")
    cfg = TrainConfig(iterations=150, min_res=32, max_res=48, seed=5)
    blobs = []
    for k in range(2):
        model, _ = train(init_model(CanConfig(depth=5, width=8), seed=5), ds, cfg,
                         out_dir=tmp_path / f"run{k}")
        blobs.append((tmp_path / f"run{k}" / "checkpoint.can").read_bytes())
    identical = blobs[0] == blobs[1]
    round_trip = serialize_model(deserialize_model(blobs[0])) == blobs[0]
    rejected = 0
    bad_streams = [b"XANNET01" + blobs[0][8:], blobs[0][:-3], blobs[0] + b"\0",
                   blobs[0][:-4] + np.array([np.nan], "<f4").tobytes(),
                   blobs[0][:8] + (9).to_bytes(4, "little") + blobs[0][12:]]
    for bad in bad_streams:
        try:
            deserialize_model(bad)
        except ModelFormatError:
            rejected += 1
    secs = time.perf_counter() - t0
    ok = identical and round_trip and rejected == len(bad_streams) and secs < 60
    _check(10, "determinism and serialization", ok,
           f"identical files {identical}, round trip {round_trip}, "
           f"{rejected}/{len(bad_streams)} corrupt streams rejected ({secs:.0f}s)")


def test_c11_metrics():
    rng = np.random.default_rng(2)
    img = rng.random((32, 32, 3)).astype(np.float32)
    s_same = ssim(img, img)
    base = rng.uniform(0.0, 0.9, (32, 32, 3))
    r = metric_report(base, base + 10.0 / 255.0)
    other = metric_report(img, rng.random((32, 32, 3)))
    a = np.zeros((1, 2, 3))
    b = a.copy()
    b[0, 0] = [100 / 255, 0, 0]
    b[0, 1] = [99 / 255, 0, 0]
    emap = error_map(a, b)[0, :, 0]
    ok = (abs(s_same - 1.0) <= 1e-9 and abs(r.psnr - 28.131) <= 1e-3
          and other.dssim == (1.0 - other.ssim) / 2.0 and emap[0] == 1.0 and emap[1] < 1.0)
    _check(11, "metrics", ok,
           f"SSIM(I,I)={s_same:.12f}, offset PSNR {r.psnr:.4f} dB, "
           f"error map at 100 -> {emap[0]}, at 99 -> {emap[1]:.2f}")


def test_c12_linear_runtime():
    model = init_model(CanConfig(depth=7, width=16))
    t1080 = bench_forward(model, 1080, repeats=5)
    t2160 = bench_forward(model, 2160, repeats=5)
    ratio = t2160 / t1080
    _check(12, "linear runtime scaling", 3.2 <= ratio <= 4.8,
           f"1080p {t1080:.0f} ms, 2160p {t2160:.0f} ms, ratio {ratio:.2f} (want 3.2-4.8)")
