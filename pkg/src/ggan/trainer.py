"""Adversarial estimation of local (per-factor) and global JS objectives, and training.

Discriminators output a logit ``l`` with ``D = sigmoid(l)`` read as the
probability that a tuple came from the recognition side q. The estimated
objective for a factor set F is::

    V = 1/|F| * sum_A [ mean_q log D_A(A) + mean_p log(1 - D_A(A)) ]

which discriminators ascend and the model descends (or, by default, the
model minimises the non-saturating surrogate with the labels swapped).
"""
import csv
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import BadParameter, MissingVariable, NonFiniteGradient, TrainingDiverged
from .graph import FactorSet
from .numerics import MODEL_OWNERS, Mlp, MlpSpec, adam_step, no_grad
from .numerics import tensor as T

LOCAL, GLOBAL = "local", "global"
NON_SATURATING, MINIMAX = "non_saturating", "minimax"


@dataclass
class TrainerConfig:
    mode: str = LOCAL
    divergence: str = "js"
    batch_size: int = 100
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8
    steps: int = 1000
    generator_loss: str = NON_SATURATING
    seed: int = 0
    disc_steps: int = 1
    disc_hidden: tuple = (128, 128)
    disc_slope: float = 0.2
    disc_features: int = 0
    eval_every: int = 0

    def __post_init__(self):
        self.disc_hidden = tuple(self.disc_hidden)
        if self.mode not in (LOCAL, GLOBAL):
            raise BadParameter(f"mode must be 'local' or 'global', got {self.mode!r}")
        if self.divergence != "js":
            raise BadParameter("only the JS divergence is supported")
        if self.generator_loss not in (NON_SATURATING, MINIMAX):
            raise BadParameter(f"unknown generator loss {self.generator_loss!r}")
        if self.batch_size < 1:
            raise BadParameter("batch_size must be >= 1")
        if not self.lr >= 0:
            raise BadParameter("lr must be non-negative")
        if self.steps < 0 or self.disc_steps < 1:
            raise BadParameter("steps must be >= 0 and disc_steps >= 1")

    def to_dict(self):
        d = asdict(self)
        d["disc_hidden"] = list(self.disc_hidden)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


class FactorDiscriminator:
    """One discriminator shared by every tied instance of a factor.

    Its input is the concatenation of the factor's variables in order. With
    ``features > 0`` each observed variable first passes through its own
    feature network (shared across instances), mirroring the separate
    x-feature towers of image discriminators.
    """

    def __init__(self, factor, dag, store, rng, hidden=(128, 128), slope=0.2, features=0,
                 prefix=None):
        self.factor = factor
        prefix = prefix or f"disc.{factor.tie_group}"
        widths = [dag.spec(v).width for v in factor.variables]
        self.feature_nets = {}
        in_width = 0
        for pos, v in enumerate(factor.variables):
            spec = dag.spec(v)
            if features and not spec.latent:
                self.feature_nets[pos] = Mlp(
                    MlpSpec.make(spec.width, (), features, out_act="leaky_relu", slope=slope),
                    store, f"{prefix}.feat{pos}", "discriminator", rng)
                in_width += features
            else:
                in_width += widths[pos]
        self.spec = MlpSpec.make(in_width, hidden, 1, "leaky_relu", "linear", slope)
        self.net = Mlp(self.spec, store, prefix, "discriminator", rng)
        self.input_width = sum(widths)

    def logits(self, table):
        """Logits for all instances stacked along the batch axis: ``(n_inst * B, 1)``."""
        rows = []
        for inst in self.factor.instances:
            for v in inst:
                if v not in table:
                    raise MissingVariable(v)
            rows.append([table[v] for v in inst])
        cols = []
        for pos in range(len(self.factor.variables)):
            stacked = T.concat([r[pos] for r in rows], axis=0)
            if pos in self.feature_nets:
                stacked = self.feature_nets[pos](stacked)
            cols.append(stacked)
        return self.net(T.concat(cols, axis=1))


def make_discriminators(factors, dag, store, rng, config):
    return {f.tie_group: FactorDiscriminator(f, dag, store, rng, config.disc_hidden,
                                             config.disc_slope, config.disc_features)
            for f in factors}


def _instance_means(values, n_inst):
    return values.reshape(n_inst, -1).mean(axis=1)


def local_objective(factors, discs, table_p, table_q):
    """Factor-averaged adversarial JS estimate.

    Returns ``(V, per_instance_terms)`` where ``V`` is a scalar tensor and the
    terms list ``mean_q log D_A + mean_p log(1 - D_A)`` per factor instance in
    factor-set order.
    """
    if factors.size < 1:
        raise BadParameter("factor set is empty")
    total = None
    terms = []
    for f in factors:
        d = discs[f.tie_group]
        lq, lp = d.logits(table_q), d.logits(table_p)
        n = len(f.instances)
        # log sigmoid(l) = -softplus(-l); log(1 - sigmoid(l)) = -softplus(l)
        sq, sp = T.softplus(-lq), T.softplus(lp)
        group = (sq.mean() + sp.mean()) * (-float(n))
        total = group if total is None else total + group
        terms.extend((-_instance_means(sq.data, n) - _instance_means(sp.data, n)).tolist())
    return total * (1.0 / factors.size), terms


def global_objective(disc, table_p, table_q):
    """Single-discriminator (ALI-style) estimate over all variables jointly."""
    fs = FactorSet((disc.factor,))
    v, _ = local_objective(fs, {disc.factor.tie_group: disc}, table_p, table_q)
    return v


def generator_loss(factors, discs, table_p, table_q, style=NON_SATURATING):
    """Loss minimised by the generative and recognition parameters."""
    if style == MINIMAX:
        return local_objective(factors, discs, table_p, table_q)[0]
    total = None
    for f in factors:
        d = discs[f.tie_group]
        lq, lp = d.logits(table_q), d.logits(table_p)
        # swap labels: push D(q) -> 0 and D(p) -> 1
        group = (T.softplus(lq).mean() + T.softplus(-lp).mean()) * float(len(f.instances))
        total = group if total is None else total + group
    return total * (1.0 / factors.size)


@dataclass
class TrainState:
    bundle: object
    config: TrainerConfig
    factors: FactorSet
    discs: dict
    step: int = 0

    @property
    def store(self):
        return self.bundle.store


def objective_factors(bundle, mode):
    if mode == LOCAL:
        return bundle.factors
    return FactorSet.single(bundle.dag.names)


def init_state(config, bundle):
    """Attach freshly initialised discriminators for ``config.mode`` to the bundle."""
    factors = objective_factors(bundle, config.mode)
    rng = np.random.default_rng([config.seed, 0x5D15C])
    discs = make_discriminators(factors, bundle.dag, bundle.store, rng, config)
    return TrainState(bundle, config, factors, discs, 0)


def _phase_draws(seed, step, phase, n, batch):
    rng = np.random.default_rng([seed, step, phase])
    idx = rng.integers(0, n, size=batch)
    seed_p, seed_q = (int(s) for s in rng.integers(0, 2**62, size=2))
    return idx, seed_p, seed_q


def _tables(state, data, phase):
    b = state.bundle
    idx, seed_p, seed_q = _phase_draws(state.config.seed, state.step, phase, len(data),
                                       state.config.batch_size)
    table_p = b.sample_p(state.config.batch_size, seed_p)
    table_q = b.sample_q(b.observe(data[idx]), seed_q)
    return table_p, table_q


def disc_step(state, data, phase=0):
    """One Adam ascent step on the objective w.r.t. discriminator parameters only.

    Returns ``(objective_before_step, per_instance_terms)``.
    """
    cfg = state.config
    store = state.store
    with no_grad():
        table_p, table_q = _tables(state, data, phase)
    store.zero_grad()
    v, terms = local_objective(state.factors, state.discs, table_p, table_q)
    (-v).backward()
    names = store.names("discriminator")
    adam_step(store, store.grads(names), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
    store.zero_grad()
    return float(v.data), terms


def model_step(state, data, phase=1):
    """One Adam step on generative, recognition and prior parameters. Returns the loss."""
    cfg = state.config
    store = state.store
    table_p, table_q = _tables(state, data, phase)
    store.zero_grad()
    loss = generator_loss(state.factors, state.discs, table_p, table_q, cfg.generator_loss)
    loss.backward()
    names = store.names(MODEL_OWNERS)
    adam_step(store, store.grads(names), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
    store.zero_grad()
    return float(loss.data)


def train(config, bundle, dataset, state=None, eval_fn=None, callback=None):
    """Alternate discriminator and model phases until ``config.steps`` iterations.

    Every phase draws its own minibatch and noise from a generator seeded by
    ``(config.seed, step, phase)``, so a run resumed from a checkpoint
    reproduces the uninterrupted run exactly. ``eval_fn(state)`` is called
    every ``config.eval_every`` steps and its dict merged into the trace row.

    Returns ``(state, trace)``.
    """
    if state is None:
        state = init_state(config, bundle)
    trace = []
    data = np.asarray(dataset)
    while state.step < config.steps:
        try:
            for k in range(config.disc_steps):
                objective, terms = disc_step(state, data, phase=2 * k)
            loss = model_step(state, data, phase=2 * config.disc_steps + 1)
        except NonFiniteGradient as exc:
            raise TrainingDiverged({"step": state.step + 1, "error": str(exc)}, trace) from exc
        state.step += 1
        row = {"step": state.step, "mode": config.mode, "objective": objective,
               "per_factor_terms": terms, "model_loss": loss}
        if not (np.isfinite(objective) and np.isfinite(loss) and np.all(np.isfinite(terms))):
            raise TrainingDiverged(row, trace)
        if eval_fn is not None and config.eval_every and state.step % config.eval_every == 0:
            row.update(eval_fn(state))
        trace.append(row)
        if callback is not None:
            callback(state, row)
    return state, trace


TRACE_COLUMNS = ["step", "mode", "objective", "per_factor_terms"]


def write_trace_csv(trace, path, append=False, extra_columns=()):
    """Write the metrics trace; extra keys become trailing columns, blank when absent.

    When appending to an existing file its header fixes the column order.
    """
    cols = None
    if append and os.path.exists(path):
        with open(path, newline="") as f:
            cols = next(csv.reader(f), None)
    if cols is None:
        append = False
        extra = list(extra_columns)
        for row in trace:
            for k in row:
                if k not in TRACE_COLUMNS and k not in extra:
                    extra.append(k)
        cols = TRACE_COLUMNS + extra
    with open(path, "a" if append else "w", newline="") as f:
        w = csv.writer(f)
        if not append:
            w.writerow(cols)
        for row in trace:
            out = []
            for c in cols:
                val = row.get(c, "")
                if c == "per_factor_terms":
                    val = ";".join(repr(float(t)) for t in val)
                elif isinstance(val, float):
                    val = repr(val)
                out.append(val)
            w.writerow(out)


def read_trace_csv(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    for row in rows:
        row["step"] = int(row["step"])
        row["objective"] = float(row["objective"])
        row["per_factor_terms"] = [float(t) for t in row["per_factor_terms"].split(";") if t]
    return rows
