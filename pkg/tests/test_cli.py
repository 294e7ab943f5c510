import csv
import itertools

import numpy as np
import pytest

from canapprox import cli
from canapprox.can import CanConfig, init_model, load_model, save_model
from canapprox.imagecore import load_image, save_image
from canapprox.cli import bench_forward, parse_config_text, run_command


def _png(path, seed=0, h=12, w=16):
    save_image(np.random.default_rng(seed).random((h, w, 3)), path)
    return path


def _folder(tmp_path, n=3):
    d = tmp_path / "in"
    d.mkdir()
    for i in range(n):
        _png(d / f"{i}.png", seed=i)
    return d


def test_inspect_can24(capsys):
    assert run_command(["inspect", "--depth", "9", "--width", "24", "--norm", "adaptive"]) == 0
    out = dict(line.split(" ", 1) for line in capsys.readouterr().out.splitlines())
    assert out["conv_params"] == "37203"
    assert out["receptive_field"] == "257"
    assert out["norm_params"] == "400"
    assert out["dilation_schedule"] == "1,2,4,8,16,32,64,1"


def test_inspect_saved_model(tmp_path, capsys):
    save_model(init_model(CanConfig(depth=10, width=32)), tmp_path / "m.can")
    assert run_command(["inspect", "--model", str(tmp_path / "m.can")]) == 0
    assert "conv_params 74979" in capsys.readouterr().out


def test_usage_errors_exit_1(tmp_path, capsys):
    assert run_command([]) == 1
    assert run_command(["inspect"]) == 1
    assert run_command(["inspect", "--depth", "2", "--width", "4"]) == 1
    assert run_command(["op", "--operator", "rof", "--input", "x"]) == 1
    src = _png(tmp_path / "a.png")
    assert run_command(["op", "--operator", "dehaze", "--lambda", "2", "--input", str(src),
                        "--output", str(tmp_path / "b.png")]) == 1
    assert run_command(["op", "--operator", "rof", "--param", "nope=1", "--input", str(src),
                        "--output", str(tmp_path / "b.png")]) == 1
    assert run_command(["op", "--operator", "rof", "--param", "iters=0", "--input", str(src),
                        "--output", str(tmp_path / "b.png")]) == 1
    err = capsys.readouterr().err
    assert err and all(line.startswith("error:") for line in err.splitlines())


def test_io_errors_exit_2(tmp_path):
    assert run_command(["op", "--operator", "rof", "--input", str(tmp_path / "missing.png"),
                        "--output", str(tmp_path / "o.png")]) == 2
    (tmp_path / "bad.can").write_bytes(b"not a model")
    assert run_command(["inspect", "--model", str(tmp_path / "bad.can")]) == 2
    assert run_command(["apply", "--model", str(tmp_path / "bad.can"),
                        "--input", "x.png", "--output", "y.png"]) == 2


def test_numeric_failure_exit_3(tmp_path):
    black = tmp_path / "black.png"
    save_image(np.zeros((8, 8, 3)), black)
    assert run_command(["op", "--operator", "dehaze", "--input", str(black),
                        "--output", str(tmp_path / "o.png"), "--param", "patch_radius=1"]) == 3
    d = _folder(tmp_path)
    assert run_command(["dataset", "--operator", "rof", "--param", "iters=5", "--inputs", str(d),
                        "--out", str(tmp_path / "ds")]) == 0
    assert run_command(["train", "--dataset", str(tmp_path / "ds"), "--out",
                        str(tmp_path / "m.can"), "--quiet", "--set", "iterations=50",
                        "--set", "lr=1e6", "--set", "depth=5", "--set", "width=4",
                        "--set", "norm=none", "--set", "min_res=12",
                        "--set", "max_res=12"]) == 3


def test_op_huge_lambda_is_identity(tmp_path):
    src = _png(tmp_path / "x.png")
    out = tmp_path / "y.png"
    assert run_command(["op", "--operator", "rof", "--lambda", "1e6", "--input", str(src),
                        "--output", str(out)]) == 0
    assert np.max(np.abs(load_image(out) - load_image(src))) <= 1.0 / 255 + 1e-7


def test_dataset_modes(tmp_path, capsys):
    d = _folder(tmp_path, n=4)
    assert run_command(["dataset", "--multi-op", "rof,l0", "--param", "lam=3",
                        "--inputs", str(d), "--out", str(tmp_path / "m"), "--seed", "2"]) == 0
    assert run_command(["dataset", "--operator", "l0", "--param-sampled", "--lambda", "5",
                        "--inputs", str(d), "--out", str(tmp_path / "p"), "--seed", "2"]) == 0
    assert run_command(["dataset", "--operator", "l0", "--param-sampled", "--lambda", "5",
                        "--inputs", str(d), "--out", str(tmp_path / "q"), "--seed", "2"]) == 0
    a = (tmp_path / "p" / "index.tsv").read_text()
    assert a == (tmp_path / "q" / "index.tsv").read_text().replace(str(tmp_path / "q"), "")
    assert run_command(["dataset", "--inputs", str(d), "--out", str(tmp_path / "z")]) == 1
    assert run_command(["dataset", "--operator", "rof", "--inputs", str(tmp_path / "none"),
                        "--out", str(tmp_path / "z")]) == 2


def test_train_apply_eval_round_trip(tmp_path, capsys):
    d = _folder(tmp_path)
    ds = tmp_path / "ds"
    assert run_command(["dataset", "--operator", "rof", "--param", "iters=10",
                        "--inputs", str(d), "--out", str(ds)]) == 0
    cfg = tmp_path / "train.cfg"
    cfg.write_text("# tiny run\niterations = 20\nmin_res = 8\nmax_res = 12\n"
                   "depth = 4\nwidth = 4   # narrow\nlog_every = 5\n")
    model = tmp_path / "m.can"
    assert run_command(["train", "--config", str(cfg), "--dataset", str(ds), "--out", str(model),
                        "--quiet"]) == 0
    assert (tmp_path / "m_run" / "loss.csv").exists()
    assert load_model(model).config.depth == 4

    outs = [tmp_path / "o1.png", tmp_path / "o2.png"]
    for o in outs:
        assert run_command(["apply", "--model", str(model), "--input", str(d / "0.png"),
                            "--output", str(o)]) == 0
    assert outs[0].read_bytes() == outs[1].read_bytes()
    assert run_command(["apply", "--model", str(model), "--input", str(d / "0.png"),
                        "--output", str(outs[0]), "--aux", "1"]) == 1

    report = tmp_path / "r.csv"
    assert run_command(["eval", "--model", str(model), "--dataset", str(ds),
                        "--report", str(report)]) == 0
    with open(report, newline="") as f:
        rows = list(csv.reader(f))
    model_rows = [r for r in rows[1:] if not r[0].startswith(("input:", "MEAN"))]
    base_rows = [r for r in rows[1:] if r[0].startswith("input:")]
    mean = next(r for r in rows if r[0] == "MEAN")
    mean_in = next(r for r in rows if r[0] == "MEAN_INPUT")
    assert len(model_rows) == len(base_rows) == 3
    for col in range(1, 5):
        assert float(mean[col]) == pytest.approx(np.mean([float(r[col]) for r in model_rows]),
                                                 rel=1e-5)
        assert float(mean_in[col]) == pytest.approx(
            np.mean([float(r[col]) for r in base_rows]), rel=1e-5)


def test_train_is_reproducible_and_rejects_unknown_keys(tmp_path):
    d = _folder(tmp_path)
    ds = tmp_path / "ds"
    run_command(["dataset", "--operator", "rof", "--param", "iters=10", "--inputs", str(d),
                 "--out", str(ds)])
    base = ["train", "--dataset", str(ds), "--quiet", "--seed", "3", "--set", "iterations=15",
            "--set", "depth=4", "--set", "width=3", "--set", "min_res=8", "--set", "max_res=10"]
    for name in ("a", "b"):
        assert run_command(base + ["--out", str(tmp_path / f"{name}.can")]) == 0
    assert (tmp_path / "a.can").read_bytes() == (tmp_path / "b.can").read_bytes()
    assert run_command(base + ["--out", str(tmp_path / "c.can"), "--set", "colour=red"]) == 1
    assert run_command(base + ["--out", str(tmp_path / "c.can"), "--set", "lr=-1"]) == 1


def test_parse_config_text():
    assert parse_config_text("a = 1\n\n# c\nb=x # y\n") == {"a": "1", "b": "x"}
    with pytest.raises(cli.UsageError):
        parse_config_text("just words")


def test_bench_csv(tmp_path):
    out = tmp_path / "b.csv"
    assert run_command(["bench", "--depth", "4", "--width", "3", "--heights", "18,36",
                        "--repeats", "3", "--csv", str(out)]) == 0
    with open(out, newline="") as f:
        rows = list(csv.DictReader(f))
    assert [(r["height"], r["width"], r["repeats"]) for r in rows] == [("18", "32", "3"),
                                                                         ("36", "64", "3")]
    assert run_command(["bench", "--depth", "4", "--width", "3", "--repeats", "2"]) == 1


def test_bench_median_of_three(monkeypatch):
    # warm-up is untimed; the three timed runs last 5, 1 and 3 ms
    ticks = itertools.chain([0.0, 0.005, 10.0, 10.001, 20.0, 20.003])
    monkeypatch.setattr(cli.time, "perf_counter", lambda: next(ticks))
    model = init_model(CanConfig(depth=3, width=2))
    assert bench_forward(model, 4, repeats=3) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        bench_forward(model, 4, repeats=2)


def test_bench_time_independent_of_content():
    model = init_model(CanConfig(depth=7, width=16))
    rand = bench_forward(model, 180, repeats=5)
    const = bench_forward(model, 180, repeats=5, constant=True)
    assert abs(rand - const) <= 0.2 * max(rand, const)
