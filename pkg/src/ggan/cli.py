"""Command line: ``ggan {train,sample,eval,infer,oracle,gradcheck}``.

Settings are resolved as: command-line flags, then the ``--config`` JSON
file, then the desk-scale preset for the chosen instance and dataset, then
built-in defaults. ``GGAN_OUT``, when set, replaces the output directory.

Exit codes: 0 success, 1 usage error, 2 runtime failure, 3 failed check.
"""
import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import presets
from .checkpoint import load_state, save_state
from .data import make_bouncing_dot, make_mixture, read_idx, write_pgm_grid
from .errors import BadParameter, EmptyInput, GGanError, TrainingDiverged
from .eval import cluster_accuracy, evaluate_gmgan, reconstruction_mse
from .graph import GraphDescription
from .instances import CustomBundle, build_gmgan, build_ssgan, ssgan_rollout
from .numerics import no_grad
from .numerics import tensor as T
from .trainer import TrainerConfig, init_state, train, write_trace_csv

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_CHECK = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# run configuration

TRAINER_KEYS = [f.name for f in fields(TrainerConfig)]


@dataclass
class RunConfig:
    instance: str = "gmgan"
    dataset: str = "mixture"
    graph: dict = None
    out: str = "runs/default"
    sample_every: int = 0
    checkpoint_every: int = 0
    trainer: dict = field(default_factory=dict)
    bundle: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d["trainer"] = _jsonable(d["trainer"])
        d["bundle"] = _jsonable(d["bundle"])
        return d


def _jsonable(d):
    return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


BUNDLE_FLAGS = {"K": "K", "dim_h": "dim_h", "dim_v": "dim_v", "hidden": "hidden",
                "mean_init_scale": "mean_init_scale", "tau": "tau"}


def resolve_run(args):
    """Merge flags, config file and presets into a RunConfig."""
    file_cfg = {}
    if getattr(args, "config", None):
        with open(args.config) as f:
            file_cfg = json.load(f)
    graph = None
    if "variables" in file_cfg:
        graph = {k: file_cfg[k] for k in ("variables", "edges", "recognition") if k in file_cfg}
        file_cfg = {k: v for k, v in file_cfg.items() if k not in graph}
        file_cfg.setdefault("instance", "custom")
    if getattr(args, "graph", None):
        with open(args.graph) as f:
            graph = json.load(f)

    def pick(name, default=None):
        val = getattr(args, name, None)
        if val is not None:
            return val
        return file_cfg.get(name, default)

    instance = pick("instance", "gmgan")
    dataset = pick("dataset", "mixture" if instance != "ssgan" else "bouncing")
    preset = {}
    if instance == "gmgan" and dataset.split(":")[0] == "mixture":
        preset = presets.GMGAN_MIXTURE
    elif instance == "ssgan" and dataset.split(":")[0] == "bouncing":
        preset = presets.SSGAN_BOUNCING

    trainer = dict(preset.get("trainer", {}))
    trainer.update(file_cfg.get("trainer", {}))
    for key in TRAINER_KEYS:
        val = pick(key)
        if val is not None:
            trainer[key] = val
    bundle = dict(preset.get("bundle", {}))
    bundle.update(file_cfg.get("bundle", {}))
    for flag, key in BUNDLE_FLAGS.items():
        val = pick(flag)
        if val is not None:
            bundle[key] = val
    out = os.environ.get("GGAN_OUT") or pick("out", "runs/default")
    run = RunConfig(instance, dataset, graph, out, int(pick("sample_every", 0)),
                    int(pick("checkpoint_every", 0)), trainer, bundle)
    TrainerConfig(**trainer)  # validate early so a bad mode is a usage error
    if instance not in ("gmgan", "ssgan", "custom"):
        raise BadParameter(f"unknown instance {instance!r}")
    if instance == "custom" and graph is None:
        raise BadParameter("the custom instance needs a graph description (--graph or --config)")
    return run


# datasets

@dataclass
class Data:
    kind: str
    train: np.ndarray
    test_x: np.ndarray = None
    test_y: np.ndarray = None
    info: dict = field(default_factory=dict)


def _parse_selector(selector):
    name, _, rest = selector.partition(":")
    opts = {}
    for item in filter(None, rest.split(",")):
        key, sep, val = item.partition("=")
        if not sep:
            raise BadParameter(f"dataset option {item!r} is not key=value")
        opts[key.strip()] = val.strip()
    return name, opts


def load_dataset(selector, seed=0):
    """Datasets by selector, e.g. ``mixture:K=5``, ``bouncing:T=4``, ``mnist:images=PATH``.

    Synthetic datasets are regenerated from their seed (default: the run
    seed); the last ``n_test`` rows are held out for evaluation.
    """
    name, o = _parse_selector(selector)
    if name == "mixture":
        d = presets.GMGAN_MIXTURE["data"]
        ds = make_mixture(int(o.get("K", d["K_true"])), int(o.get("dim_latent", d["dim_latent"])),
                          int(o.get("dim", d["dim_data"])), int(o.get("N", d["N"])),
                          float(o.get("sep", d["separation"])), int(o.get("seed", seed)))
        n_test = int(o.get("n_test", presets.GMGAN_MIXTURE["n_test"]))
        train_x, (tx, ty) = ds.split(n_test)
        return Data("mixture", train_x, tx, ty, {"K": int(ds.means.shape[0])})
    if name == "bouncing":
        d = presets.SSGAN_BOUNCING["data"]
        Tn = int(o.get("T", 4))
        ds = make_bouncing_dot(Tn, int(o.get("side", d["side"])), int(o.get("N", d["N"])),
                               int(o.get("seed", seed)))
        clips = ds.flat()
        n_test = int(o.get("n_test", max(1, len(clips) // 10)))
        return Data("bouncing", clips[:-n_test], clips[-n_test:], None,
                    {"T": Tn, "side": ds.side})
    if name == "mnist":
        if "images" not in o:
            raise BadParameter("mnist needs images=PATH")
        x = read_idx(o["images"]).reshape(-1, 28 * 28)
        y = read_idx(o["labels"]) if "labels" in o else None
        n_test = int(o.get("n_test", min(1000, len(x) // 10 or 1)))
        return Data("mnist", x[:-n_test] if len(x) > n_test else x, x[-n_test:],
                    None if y is None else y[-n_test:], {"K": 10})
    if name == "npy":
        x = np.load(o["path"])
        y = np.load(o["labels"]) if "labels" in o else None
        return Data("npy", x, x, y, {})
    raise BadParameter(f"unknown dataset {name!r}")


def build_bundle(run, data, seed):
    b = {k: tuple(v) if isinstance(v, list) else v for k, v in run.bundle.items()}
    if run.instance == "gmgan":
        b.setdefault("K", data.info.get("K", 10))
        dim_x = int(np.prod(data.train.shape[1:]))
        frame = (28, 28) if data.kind == "mnist" else None
        return build_gmgan(dim_x=dim_x, seed=seed, frame_shape=frame, **b)
    if run.instance == "ssgan":
        if data.train.ndim != 3:
            raise BadParameter("ssgan needs clip data (N, T, frame)")
        _, Tn, fd = data.train.shape
        return build_ssgan(T=Tn, frame_dim=fd, seed=seed, **b)
    desc = GraphDescription.from_dict(run.graph)
    kw = {k: b[k] for k in ("hidden", "tau") if k in b}
    return CustomBundle(desc, seed=seed, **kw)


def make_eval_fn(bundle, data):
    """In-loop metrics for a bundle on the held-out split, or None."""
    if data.test_x is None:
        return None
    if bundle.kind == "gmgan" and data.test_y is not None:
        return lambda state: evaluate_gmgan(state.bundle, data.test_x, data.test_y)
    if bundle.kind == "ssgan":
        return lambda state: {"mse": ssgan_reconstruction(state.bundle, data.test_x)[0]}
    return None


def metric_columns(bundle, data):
    """Columns ``make_eval_fn`` can fill, so every metrics.csv segment shares a header."""
    if data.test_x is None:
        return ()
    if bundle.kind == "gmgan" and data.test_y is not None:
        return ("acc", "mse", "clusters_used")
    return ("mse",) if bundle.kind == "ssgan" else ()


def ssgan_reconstruction(bundle, clips):
    obs = bundle.observe(clips)
    with no_grad():
        h = bundle.content([T.Tensor(obs[x]) for x in bundle.xs])
        vs = [bundle.E2(T.Tensor(obs[x])) for x in bundle.xs]
        rec = np.stack([bundle.render(h, v).data for v in vs], axis=1)
    flat = np.stack([obs[x] for x in bundle.xs], axis=1)
    return reconstruction_mse(flat, rec), h.data, np.stack([v.data for v in vs], axis=1), rec


# sample grids

def gmgan_grid(bundle, rows, seed):
    """``rows`` x K frames, mixture component fixed per column."""
    if rows < 1:
        raise EmptyInput("need at least one row")
    ks = np.tile(np.arange(bundle.K), rows)
    frames = bundle.sample_given_k(ks, seed).reshape((-1,) + tuple(bundle.frame_shape))
    return frames, rows, bundle.K


def ssgan_grid(bundle, rows, seed, rollout=0):
    """One clip per row; with ``rollout`` each row is a ``rollout``-frame unroll."""
    if rows < 1:
        raise EmptyInput("need at least one clip")
    shape = tuple(bundle.frame_shape)
    if rollout:
        rng = np.random.default_rng(seed)
        h = rng.standard_normal((rows, bundle.dim_h))
        v1 = rng.standard_normal((rows, bundle.dim_v))
        if bundle.shared_eps:
            noise = rng.standard_normal((rows, bundle.dim_eps))
        else:
            noise = rng.standard_normal((rollout - 1, rows, bundle.dim_eps))
        frames, _ = ssgan_rollout(bundle, h, v1, rollout, noise)
        return frames.reshape((-1,) + shape), rows, rollout
    clips, _ = bundle.generate_clips(rows, seed)
    return clips.reshape((-1,) + shape), rows, bundle.T


def sample_grid(bundle, rows, seed, rollout=0):
    if bundle.kind == "gmgan":
        return gmgan_grid(bundle, rows, seed)
    if bundle.kind == "ssgan":
        return ssgan_grid(bundle, rows, seed, rollout)
    if rows < 1:
        raise EmptyInput("need at least one sample")
    s = bundle.generate(rows, seed)
    x = np.concatenate([s[v] for v in bundle.dag.observed], axis=1)
    return x[:, None, :], rows, 1


# commands

def cmd_train(args):
    run = resolve_run(args)
    os.makedirs(run.out, exist_ok=True)
    if args.resume:
        state, meta = load_state(args.resume)
        run = RunConfig(**{**meta["extra"]["run"], "out": run.out})
        cfg = TrainerConfig(**{**state.config.to_dict(), "steps": args.steps or state.config.steps})
        state.config = cfg
        seed = cfg.seed
    else:
        cfg = TrainerConfig(**run.trainer)
        seed = cfg.seed
    data = load_dataset(run.dataset, seed)
    if not args.resume:
        bundle = build_bundle(run, data, seed)
        state = init_state(cfg, bundle)
    bundle = state.bundle
    extra = {"run": run.to_dict()}

    def ckpt(st):
        save_state(st, os.path.join(run.out, f"ckpt-{st.step}"), extra)

    if cfg.steps <= state.step:
        ckpt(state)
        print(f"wrote {os.path.join(run.out, f'ckpt-{state.step}')}")
        return EXIT_OK

    eval_every = cfg.eval_every or cfg.steps
    cfg = TrainerConfig(**{**cfg.to_dict(), "eval_every": eval_every})
    state.config = cfg
    sample_every = run.sample_every or cfg.steps

    def callback(st, row):
        if st.step % sample_every == 0 or st.step == cfg.steps:
            frames, r, c = sample_grid(st.bundle, 8, seed)
            write_pgm_grid(frames, r, c, os.path.join(run.out, f"samples-{st.step}.pgm"))
        if (run.checkpoint_every and st.step % run.checkpoint_every == 0) or st.step == cfg.steps:
            ckpt(st)
        if "acc" in row or "mse" in row:
            shown = {k: round(float(row[k]), 5) for k in ("acc", "mse") if k in row}
            print(f"step {st.step} objective {row['objective']:.4f} {shown}", flush=True)

    metrics = os.path.join(run.out, "metrics.csv")
    append = bool(args.resume) and os.path.exists(metrics)
    cols = ("model_loss",) + metric_columns(bundle, data)
    try:
        state, trace = train(cfg, bundle, data.train, state=state,
                             eval_fn=make_eval_fn(bundle, data), callback=callback)
    except TrainingDiverged as exc:
        write_trace_csv(exc.trace, metrics, append, cols)
        raise
    write_trace_csv(trace, metrics, append, cols)
    print(f"trained to step {state.step}; artifacts in {run.out}")
    return EXIT_OK


def cmd_sample(args):
    state, _ = load_state(args.ckpt)
    frames, rows, cols = sample_grid(state.bundle, args.n, args.seed, args.rollout)
    write_pgm_grid(frames, rows, cols, args.out)
    print(f"wrote {rows}x{cols} grid to {args.out}")
    return EXIT_OK


def cmd_eval(args):
    state, meta = load_state(args.ckpt)
    run = meta.get("extra", {}).get("run", {})
    selector = args.dataset or run.get("dataset")
    if not selector:
        raise BadParameter("no dataset given and none recorded in the checkpoint")
    data = load_dataset(selector, state.config.seed)
    bundle = state.bundle
    rows = [("step", state.step)]
    if bundle.kind == "gmgan" and data.test_y is not None:
        out = bundle.cluster(data.test_x)
        rep = cluster_accuracy(out["h"], out["k"], data.test_y)
        mse = reconstruction_mse(data.test_x.reshape(len(data.test_x), -1), out["recon"])
        rows += [("acc", rep.accuracy), ("mse", mse), ("clusters_used", len(rep.sizes))]
        for c in sorted(rep.sizes):
            rows += [(f"cluster{c}.label", rep.predicted[c]), (f"cluster{c}.size", rep.sizes[c])]
    elif bundle.kind == "ssgan":
        rows.append(("mse", ssgan_reconstruction(bundle, data.test_x)[0]))
    else:
        raise BadParameter("evaluation needs a GMGAN with labels or an SSGAN checkpoint")
    with open(args.out, "w") as f:
        f.write("metric,value\n")
        for k, v in rows:
            f.write(f"{k},{v!r}\n" if isinstance(v, float) else f"{k},{v}\n")
    for k, v in rows:
        print(f"{k}: {v}")
    return EXIT_OK


def _read_inputs(path):
    if path.endswith(".npy"):
        return np.load(path)
    return read_idx(path)


def cmd_infer(args):
    state, _ = load_state(args.ckpt)
    bundle = state.bundle
    x = _read_inputs(args.inputs)
    if len(x) == 0:
        raise EmptyInput("no inputs")
    if bundle.kind == "gmgan":
        out = bundle.cluster(x.reshape(len(x), -1))
        result = {"h": out["h"], "q_k": out["probs"], "k": out["k"], "recon": out["recon"]}
    elif bundle.kind == "ssgan":
        _, h, v, rec = ssgan_reconstruction(bundle, x)
        result = {"h": h, "v": v, "recon": rec}
    else:
        with no_grad():
            table = bundle.sample_q(bundle.observe(x), args.seed, hard=True).numpy()
        result = {k: table[k] for k in bundle.dag.latents}
    np.savez(args.out, **result)
    print(f"wrote {', '.join(sorted(result))} for {len(x)} inputs to {args.out}")
    return EXIT_OK


def cmd_oracle(args):
    from .verify import oracle_suite

    ok = True
    for r in oracle_suite(args.models, args.seed):
        good = r["path_gap"] <= 1e-12 and r["disc_gap"] <= 1e-9
        ok &= good
        print(f"[{'ok' if good else 'FAIL'}] {r['model']}")
        for inst, term in zip(r["factors"], r["terms"]):
            print(f"    factor {','.join(inst):<10} term {term:.12f}")
        print(f"    local {r['local']:.12f}  joint JS {r['joint_js']:.12f}  "
              f"gap {r['joint_js'] - r['local']:+.3e}")
        print(f"    enumeration paths differ by {r['path_gap']:.1e}; "
              f"optimal-discriminator identity off by {r['disc_gap']:.1e}")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_gradcheck(args):
    from .verify import gradcheck_bundle, small_bundles

    names = ["gmgan", "ssgan"] if args.instance == "all" else [args.instance]
    ok = True
    for seed in range(args.seeds):
        bundles = small_bundles(seed)
        for name in names:
            for label, report in gradcheck_bundle(bundles[name], seed=seed, tol=args.tol):
                ok &= report.passed
                print(f"{name} seed {seed} {label:<14} {report}")
    print("all checks passed" if ok else "gradient checks FAILED")
    return EXIT_OK if ok else EXIT_CHECK


def _int_tuple(text):
    return tuple(int(t) for t in text.split(",") if t)


def build_parser():
    p = _Parser(prog="ggan", description="Train and inspect graphical GAN models.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="train a model and write checkpoints, metrics and samples")
    t.add_argument("--config", help="JSON run or graph description; flags override its values")
    t.add_argument("--instance", choices=["gmgan", "ssgan", "custom"])
    t.add_argument("--graph", help="graph description JSON for the custom instance")
    t.add_argument("--dataset", help="mixture[:K=5,...] | bouncing[:T=4,...] | mnist:images=P | npy:path=P")
    t.add_argument("--mode", choices=["local", "global"])
    t.add_argument("--steps", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--batch-size", dest="batch_size", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--beta1", type=float)
    t.add_argument("--beta2", type=float)
    t.add_argument("--disc-steps", dest="disc_steps", type=int)
    t.add_argument("--disc-hidden", dest="disc_hidden", type=_int_tuple)
    t.add_argument("--generator-loss", dest="generator_loss", choices=["non_saturating", "minimax"])
    t.add_argument("--eval-every", dest="eval_every", type=int)
    t.add_argument("--sample-every", dest="sample_every", type=int)
    t.add_argument("--checkpoint-every", dest="checkpoint_every", type=int)
    t.add_argument("--K", type=int)
    t.add_argument("--dim-h", dest="dim_h", type=int)
    t.add_argument("--dim-v", dest="dim_v", type=int)
    t.add_argument("--hidden", type=_int_tuple)
    t.add_argument("--mean-init-scale", dest="mean_init_scale", type=float)
    t.add_argument("--tau", type=float)
    t.add_argument("--out")
    t.add_argument("--resume", help="checkpoint directory to continue from")
    t.set_defaults(fn=cmd_train)

    s = sub.add_parser("sample", help="write a PGM grid of samples from a checkpoint")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--n", type=int, default=8, help="rows (GMGAN) or clips (SSGAN)")
    s.add_argument("--rollout", type=int, default=0, help="SSGAN: frames per unrolled row")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="samples.pgm")
    s.set_defaults(fn=cmd_sample)

    e = sub.add_parser("eval", help="clustering accuracy and reconstruction error")
    e.add_argument("--ckpt", required=True)
    e.add_argument("--dataset")
    e.add_argument("--out", default="eval.csv")
    e.set_defaults(fn=cmd_eval)

    i = sub.add_parser("infer", help="latents and reconstructions for given inputs")
    i.add_argument("--ckpt", required=True)
    i.add_argument("--inputs", required=True, help=".npy array or IDX file")
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--out", default="infer.npz")
    i.set_defaults(fn=cmd_infer)

    o = sub.add_parser("oracle", help="exact divergence checks on small discrete models")
    o.add_argument("--models", type=int, default=5, help="number of random chain models")
    o.add_argument("--seed", type=int, default=0)
    o.set_defaults(fn=cmd_oracle)

    g = sub.add_parser("gradcheck", help="finite-difference checks of every network")
    g.add_argument("instance", nargs="?", default="all", choices=["gmgan", "ssgan", "all"])
    g.add_argument("--seeds", type=int, default=10)
    g.add_argument("--tol", type=float, default=1e-4)
    g.set_defaults(fn=cmd_gradcheck)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"ggan: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        if args.command == "train":
            try:
                resolve_run(args)
            except (BadParameter, TypeError, ValueError, json.JSONDecodeError) as exc:
                print(f"ggan: error: {exc}", file=sys.stderr)
                return EXIT_USAGE
        return args.fn(args)
    except (GGanError, OSError, ValueError, KeyError) as exc:
        print(f"ggan: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
