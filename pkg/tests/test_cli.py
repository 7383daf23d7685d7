import csv
import json

import numpy as np
import pytest

from ggan.cli import main, resolve_run, build_parser
from ggan.data import read_pgm, write_idx

MIX = ["--instance", "gmgan", "--dataset", "mixture:K=3,N=200,dim=6,n_test=50",
       "--K", "3", "--dim-h", "2", "--hidden", "8", "--disc-hidden", "8", "--batch-size", "16"]
BOUNCE = ["--instance", "ssgan", "--dataset", "bouncing:T=3,side=6,N=20", "--dim-h", "3",
          "--dim-v", "2", "--hidden", "8", "--disc-hidden", "8", "--batch-size", "4"]


@pytest.fixture
def gm_run(tmp_path, monkeypatch):
    monkeypatch.delenv("GGAN_OUT", raising=False)
    out = tmp_path / "gm"
    assert main(["train", *MIX, "--steps", "4", "--out", str(out)]) == 0
    return out


def test_train_writes_artifacts(gm_run):
    names = sorted(p.name for p in gm_run.iterdir())
    assert names == ["ckpt-4", "metrics.csv", "samples-4.pgm"]
    rows = list(csv.DictReader(open(gm_run / "metrics.csv")))
    assert [r["step"] for r in rows] == ["1", "2", "3", "4"]
    assert rows[-1]["acc"] and rows[-1]["mse"]
    assert read_pgm(gm_run / "samples-4.pgm").shape == (8 * 2 + 7, 3 * 3 + 2)


def test_zero_steps_writes_initial_checkpoint(tmp_path, monkeypatch):
    monkeypatch.delenv("GGAN_OUT", raising=False)
    out = tmp_path / "z"
    assert main(["train", *MIX, "--steps", "0", "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["ckpt-0"]


def test_resume_appends_and_matches(tmp_path, monkeypatch):
    monkeypatch.delenv("GGAN_OUT", raising=False)
    full, split = tmp_path / "full", tmp_path / "split"
    assert main(["train", *MIX, "--steps", "6", "--out", str(full)]) == 0
    assert main(["train", *MIX, "--steps", "3", "--eval-every", "6", "--out", str(split)]) == 0
    assert main(["train", *MIX, "--steps", "6", "--out", str(split),
                 "--resume", str(split / "ckpt-3")]) == 0
    a = (full / "metrics.csv").read_text().splitlines()
    b = (split / "metrics.csv").read_text().splitlines()
    assert a == b


def test_sample_eval_infer(gm_run, tmp_path):
    ckpt = str(gm_run / "ckpt-4")
    pgm = tmp_path / "s.pgm"
    assert main(["sample", "--ckpt", ckpt, "--n", "2", "--out", str(pgm)]) == 0
    assert read_pgm(pgm).shape == (2 * 2 + 1, 3 * 3 + 2)
    ev = tmp_path / "e.csv"
    assert main(["eval", "--ckpt", ckpt, "--out", str(ev)]) == 0
    metrics = dict(r.split(",") for r in ev.read_text().splitlines()[1:])
    assert metrics["step"] == "4" and 0 <= float(metrics["acc"]) <= 1
    x = np.random.default_rng(0).uniform(-1, 1, (5, 6))
    np.save(tmp_path / "x.npy", x)
    out = tmp_path / "i.npz"
    assert main(["infer", "--ckpt", ckpt, "--inputs", str(tmp_path / "x.npy"), "--out", str(out)]) == 0
    z = np.load(out)
    assert z["h"].shape == (5, 2) and z["q_k"].shape == (5, 3) and z["recon"].shape == (5, 6)


def test_sample_zero_rows_is_runtime_error(gm_run, tmp_path):
    assert main(["sample", "--ckpt", str(gm_run / "ckpt-4"), "--n", "0",
                 "--out", str(tmp_path / "s.pgm")]) == 2


def test_ssgan_train_rollout_and_infer(tmp_path, monkeypatch):
    monkeypatch.delenv("GGAN_OUT", raising=False)
    out = tmp_path / "ss"
    assert main(["train", *BOUNCE, "--steps", "2", "--out", str(out)]) == 0
    ckpt = str(out / "ckpt-2")
    pgm = tmp_path / "roll.pgm"
    assert main(["sample", "--ckpt", ckpt, "--n", "1", "--rollout", "200", "--out", str(pgm)]) == 0
    assert read_pgm(pgm).shape == (6, 200 * 6 + 199)
    clips = np.random.default_rng(0).uniform(-1, 1, (2, 3, 36))
    np.save(tmp_path / "c.npy", clips)
    assert main(["infer", "--ckpt", ckpt, "--inputs", str(tmp_path / "c.npy"),
                 "--out", str(tmp_path / "c.npz")]) == 0
    assert np.load(tmp_path / "c.npz")["v"].shape == (2, 3, 2)
    assert main(["eval", "--ckpt", ckpt, "--out", str(tmp_path / "e.csv")]) == 0


def test_infer_from_idx(gm_run, tmp_path):
    imgs = np.random.default_rng(1).integers(0, 256, (3, 2, 3))
    write_idx(imgs, tmp_path / "x.idx")
    out = tmp_path / "i.npz"
    assert main(["infer", "--ckpt", str(gm_run / "ckpt-4"), "--inputs", str(tmp_path / "x.idx"),
                 "--out", str(out)]) == 0
    assert np.load(out)["k"].shape == (3,)


def test_custom_graph_from_config(tmp_path, monkeypatch):
    monkeypatch.delenv("GGAN_OUT", raising=False)
    graph = {"variables": [{"name": "z", "kind": "latent", "domain": {"type": "continuous", "dim": 2}},
                           {"name": "x", "kind": "observed",
                            "domain": {"type": "continuous", "dim": 6}}],
             "edges": [["z", "x"]], "recognition": {"mode": "inverse"}}
    cfg = tmp_path / "g.json"
    cfg.write_text(json.dumps(graph))
    out = tmp_path / "c"
    rc = main(["train", "--config", str(cfg), "--dataset", "mixture:K=3,N=100,dim=6,n_test=20",
               "--steps", "2", "--batch-size", "8", "--hidden", "4", "--disc-hidden", "4",
               "--out", str(out)])
    assert rc == 0
    assert main(["infer", "--ckpt", str(out / "ckpt-2"), "--inputs", str(_npy(tmp_path)),
                 "--out", str(tmp_path / "z.npz")]) == 0
    assert np.load(tmp_path / "z.npz")["z"].shape == (4, 2)


def _npy(tmp_path):
    p = tmp_path / "in.npy"
    np.save(p, np.zeros((4, 6)))
    return p


def test_oracle_and_gradcheck_exit_zero(capsys):
    assert main(["oracle", "--models", "5"]) == 0
    text = capsys.readouterr().out
    assert text.count("[ok]") == 6  # fixture plus five random chains
    assert main(["gradcheck", "gmgan", "--seeds", "1"]) == 0
    assert "all checks passed" in capsys.readouterr().out


def test_gradcheck_failure_exit_code():
    assert main(["gradcheck", "gmgan", "--seeds", "1", "--tol", "0"]) == 3


def test_usage_errors_exit_one(tmp_path):
    assert main(["train", "--mode", "both"]) == 1
    assert main(["bogus"]) == 1
    assert main(["train", "--instance", "custom", "--out", str(tmp_path)]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    assert main(["train", "--config", str(bad)]) == 1
    assert main(["sample"]) == 1


def test_missing_checkpoint_is_runtime_error(tmp_path):
    assert main(["sample", "--ckpt", str(tmp_path / "nope")]) == 2


def test_precedence_flags_over_config_over_preset(tmp_path, monkeypatch):
    monkeypatch.delenv("GGAN_OUT", raising=False)
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"trainer": {"lr": 0.001, "steps": 50}, "bundle": {"dim_h": 6},
                               "out": "from-file"}))
    p = build_parser()
    run = resolve_run(p.parse_args(["train", "--config", str(cfg), "--steps", "7"]))
    assert run.trainer["steps"] == 7 and run.trainer["lr"] == 0.001
    assert run.trainer["batch_size"] == 100  # preset
    assert run.bundle["dim_h"] == 6 and run.out == "from-file"
    run = resolve_run(p.parse_args(["train", "--config", str(cfg), "--out", "flag"]))
    assert run.out == "flag"
    monkeypatch.setenv("GGAN_OUT", str(tmp_path / "env"))
    run = resolve_run(p.parse_args(["train", "--config", str(cfg), "--out", "flag"]))
    assert run.out == str(tmp_path / "env")
