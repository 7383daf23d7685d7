"""Clustering accuracy, reconstruction error and local-vs-global comparisons."""
import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import BadParameter, EmptyInput, GGanError, ShapeMismatch


@dataclass
class ClusterReport:
    predicted: dict     # cluster index -> predicted class label
    sizes: dict         # cluster index -> member count
    accuracy: float
    assignments: np.ndarray
    representatives: dict = field(default_factory=dict)  # cluster -> sample index


def cluster_accuracy(latents, assignments, labels):
    """Score hard cluster assignments against true labels.

    Each non-empty cluster is labelled with the true label of the member
    nearest (Euclidean, in latent space) to the cluster centroid; ties go to
    the lowest sample index. Accuracy is the fraction of samples whose
    cluster label matches their own.
    """
    h = np.asarray(latents, dtype=np.float64)
    a = np.asarray(assignments)
    y = np.asarray(labels)
    if len(a) == 0:
        raise EmptyInput("no samples")
    if h.ndim == 1:
        h = h[:, None]
    if not (len(h) == len(a) == len(y)):
        raise ShapeMismatch("latents, assignments and labels must have equal length")
    predicted, sizes, reps = {}, {}, {}
    correct = 0
    for c in np.unique(a):
        members = np.flatnonzero(a == c)
        centroid = h[members].mean(axis=0)
        dist = ((h[members] - centroid) ** 2).sum(axis=1)
        rep = members[int(np.argmin(dist))]
        key = c.item() if hasattr(c, "item") else c
        predicted[key] = y[rep].item() if hasattr(y[rep], "item") else y[rep]
        sizes[key] = int(len(members))
        reps[key] = int(rep)
        correct += int(np.sum(y[members] == y[rep]))
    return ClusterReport(predicted, sizes, correct / len(a), a, reps)


def reconstruction_mse(x, x_rec):
    """Mean squared error over batch and feature dimensions."""
    x = np.asarray(x, dtype=np.float64)
    x_rec = np.asarray(x_rec, dtype=np.float64)
    if x.shape != x_rec.shape:
        raise ShapeMismatch(f"{x.shape} vs {x_rec.shape}")
    if x.size == 0:
        raise EmptyInput("empty input")
    return float(np.mean((x - x_rec) ** 2))


def evaluate_gmgan(bundle, x, labels):
    """ACC from argmax q(k|E(x)) and MSE of G(E(x)) on a labelled set."""
    out = bundle.cluster(x)
    x_flat = np.asarray(x, dtype=np.float64).reshape(len(x), -1)
    report = cluster_accuracy(out["h"], out["k"], labels)
    return {"acc": report.accuracy, "mse": reconstruction_mse(x_flat, out["recon"]),
            "clusters_used": len(report.sizes)}


@dataclass
class ModeComparison:
    rows: list                       # dicts: seed, mode, acc, mse, error
    summary: dict                    # mode -> {"acc_mean", "acc_std", "mse_mean", "mse_std", "n"}

    def mean(self, mode, metric):
        return self.summary[mode][f"{metric}_mean"]

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["seed", "mode", "acc", "mse", "error"])
        for r in self.rows:
            w.writerow([r["seed"], r["mode"], _fmt(r.get("acc")), _fmt(r.get("mse")), r.get("error") or ""])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as f:
                f.write(text)
        return text

    def text(self):
        lines = [f"{'mode':<8} {'n':>3} {'ACC mean':>10} {'ACC std':>9} {'MSE mean':>10} {'MSE std':>9}"]
        for mode, s in self.summary.items():
            lines.append(f"{mode:<8} {s['n']:>3} {_fmt(s['acc_mean'], 4):>10} {_fmt(s['acc_std'], 4):>9} "
                         f"{_fmt(s['mse_mean'], 5):>10} {_fmt(s['mse_std'], 5):>9}")
        return "\n".join(lines)


def _fmt(v, digits=None):
    if v is None:
        return "n/a" if digits else ""
    return f"{v:.{digits}f}" if digits else repr(float(v))


def _summarise(values):
    values = [v for v in values if v is not None]
    if not values:
        return None, None
    mean = float(np.mean(values))
    std = float(np.std(values, ddof=1)) if len(values) > 1 else None
    return mean, std


def compare_modes(config_local, config_global, dataset, seeds, make_bundle, evaluate=None,
                  train_fn=None):
    """Train both modes under one budget for every seed and collect ACC/MSE.

    ``dataset`` is ``(train_x, (test_x, test_labels))`` or a callable mapping
    a seed to such a pair, in which case both modes of a seed share the
    seed's data. ``make_bundle(seed)`` builds a fresh bundle. Training failures are recorded per seed rather
    than aborting the report.
    """
    from .trainer import train as default_train

    train_fn = train_fn or default_train
    evaluate = evaluate or evaluate_gmgan
    for key in ("steps", "batch_size", "lr", "beta1", "beta2"):
        if getattr(config_local, key) != getattr(config_global, key):
            raise BadParameter(f"budgets differ in {key}")
    if len(seeds) < 1:
        raise BadParameter("need at least one seed")
    rows = []
    for seed in seeds:
        train_x, (test_x, test_y) = dataset(seed) if callable(dataset) else dataset
        for cfg in (config_local, config_global):
            cfg_s = type(cfg)(**{**cfg.to_dict(), "seed": seed})
            row = {"seed": seed, "mode": cfg.mode, "acc": None, "mse": None, "error": None}
            try:
                state, _ = train_fn(cfg_s, make_bundle(seed), train_x)
                m = evaluate(state.bundle, test_x, test_y)
                row["acc"], row["mse"] = m["acc"], m["mse"]
            except GGanError as exc:
                row["error"] = f"{type(exc).__name__}: {exc}"
            rows.append(row)
    summary = {}
    for mode in (config_local.mode, config_global.mode):
        sel = [r for r in rows if r["mode"] == mode]
        acc_m, acc_s = _summarise([r["acc"] for r in sel])
        mse_m, mse_s = _summarise([r["mse"] for r in sel])
        summary[mode] = {"acc_mean": acc_m, "acc_std": acc_s, "mse_mean": mse_m, "mse_std": mse_s,
                         "n": sum(r["error"] is None for r in sel)}
    return ModeComparison(rows, summary)
