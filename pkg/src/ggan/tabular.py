"""Exact divergences on small discrete models, used as oracles for the adversarial estimates.

For a factor ``A`` with marginals ``p(A)``, ``q(A)`` and ``m = (p + q) / 2``
the local term is ``E_q log q(A)/m(A) + E_p log p(A)/m(A)``. With the
Bayes-optimal discriminator ``D*(A) = q(A) / (q(A) + p(A))`` the adversarial
objective of the factor equals that term minus ``2 log 2``.
"""
import itertools
from dataclasses import dataclass

import numpy as np

from .errors import BadParameter
from .graph import FactorSet
from .numerics import ParamStore, adam_step
from .numerics import tensor as T

LOG2 = float(np.log(2.0))


@dataclass
class TabularModel:
    names: tuple
    cards: tuple
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        self.names = tuple(self.names)
        self.cards = tuple(int(c) for c in self.cards)
        self.p = np.asarray(self.p, dtype=np.float64)
        self.q = np.asarray(self.q, dtype=np.float64)
        for label, t in (("p", self.p), ("q", self.q)):
            if t.shape != self.cards:
                raise BadParameter(f"{label} has shape {t.shape}, expected {self.cards}")
            if (t < 0).any() or abs(t.sum() - 1.0) > 1e-12:
                raise BadParameter(f"{label} must be a normalised non-negative table")

    def axes(self, variables):
        return [self.names.index(v) for v in variables]

    def marginal(self, table, variables):
        """Marginal over ``variables`` with axes in that order."""
        keep = self.axes(variables)
        drop = tuple(i for i in range(len(self.names)) if i not in keep)
        m = table.sum(axis=drop)
        kept_sorted = sorted(keep)
        return np.transpose(m, [kept_sorted.index(a) for a in keep])

    def swapped(self):
        return TabularModel(self.names, self.cards, self.q, self.p)


def _xlogy_ratio(a, b):
    """sum a * log(a / b) with 0 log 0 = 0."""
    mask = a > 0
    return float(np.sum(a[mask] * np.log(a[mask] / b[mask])))


def exact_joint_js(tab):
    """JS(q || p) over the full joint, in nats (maximum log 2)."""
    m = 0.5 * (tab.p + tab.q)
    return 0.5 * _xlogy_ratio(tab.q, m) + 0.5 * _xlogy_ratio(tab.p, m)


def _instances(factors):
    if isinstance(factors, FactorSet):
        return [tuple(i) for i in factors.instances()]
    return [tuple(f) for f in factors]


def factor_term_marginal(tab, variables):
    qa, pa = tab.marginal(tab.q, variables), tab.marginal(tab.p, variables)
    m = 0.5 * (qa + pa)
    return _xlogy_ratio(qa, m) + _xlogy_ratio(pa, m)


def factor_term_joint(tab, variables):
    """Same quantity by walking every joint state and projecting onto the factor."""
    axes = tab.axes(variables)
    qa, pa = {}, {}
    states = list(itertools.product(*[range(c) for c in tab.cards]))
    for s in states:
        key = tuple(s[a] for a in axes)
        qa[key] = qa.get(key, 0.0) + tab.q[s]
        pa[key] = pa.get(key, 0.0) + tab.p[s]
    total = 0.0
    for s in states:
        key = tuple(s[a] for a in axes)
        m = 0.5 * (qa[key] + pa[key])
        if tab.q[s] > 0:
            total += tab.q[s] * np.log(qa[key] / m)
        if tab.p[s] > 0:
            total += tab.p[s] * np.log(pa[key] / m)
    return float(total)


def exact_local_js(tab, factors, method="marginal"):
    """Factor-averaged local JS approximation; returns ``(value, per_factor_terms)``."""
    fn = factor_term_marginal if method == "marginal" else factor_term_joint
    terms = [fn(tab, inst) for inst in _instances(factors)]
    if not terms:
        raise BadParameter("no factors")
    return float(np.mean(terms)), terms


def optimal_discriminator(tab, variables):
    qa, pa = tab.marginal(tab.q, variables), tab.marginal(tab.p, variables)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(qa + pa > 0, qa / (qa + pa), 0.5)


def tabular_disc_objective(tab, factors, discriminators=None):
    """Adversarial objective evaluated exactly with per-factor probability tables.

    ``discriminators`` maps factor index -> table of D values; the
    closed-form optimum is used when omitted. Returns ``(value, terms)``.
    """
    terms = []
    for i, inst in enumerate(_instances(factors)):
        d = optimal_discriminator(tab, inst) if discriminators is None else discriminators[i]
        qa, pa = tab.marginal(tab.q, inst), tab.marginal(tab.p, inst)
        mq, mp = qa > 0, pa > 0
        terms.append(float(np.sum(qa[mq] * np.log(d[mq])) + np.sum(pa[mp] * np.log1p(-d[mp]))))
    return float(np.mean(terms)), terms


def fit_tabular_discriminators(tab, factors, steps=3000, lr=0.05):
    """Train one logit table per factor by exact-expectation gradient ascent.

    Returns the per-factor tables of ``D = sigmoid(logit)``.
    """
    store = ParamStore()
    insts = _instances(factors)
    logits = [store.add(f"d{i}", np.zeros([tab.cards[a] for a in tab.axes(inst)]), "discriminator")
              for i, inst in enumerate(insts)]
    marg = [(T.Tensor(tab.marginal(tab.q, inst)), T.Tensor(tab.marginal(tab.p, inst))) for inst in insts]
    for _ in range(steps):
        store.zero_grad()
        total = None
        for l, (qa, pa) in zip(logits, marg):
            obj = (qa * T.softplus(-l)).sum() + (pa * T.softplus(l)).sum()
            total = obj if total is None else total + obj
        total.backward()
        adam_step(store, store.grads(store.names()), lr, 0.9, 0.999)
    return [1.0 / (1.0 + np.exp(-l.data)) for l in logits]


def random_table(rng, cards, concentration=1.0):
    t = rng.gamma(concentration, size=cards)
    return t / t.sum()


def chain_model(rng, n_vars, card=2):
    """Random p factorising along a chain v1 -> v2 -> ... and an unstructured random q."""
    names = tuple(f"v{i + 1}" for i in range(n_vars))
    cards = (card,) * n_vars
    p = random_table(rng, (card,))
    for _ in range(1, n_vars):
        cond = rng.gamma(1.0, size=(card, card))
        cond /= cond.sum(axis=1, keepdims=True)
        p = p[..., None] * cond.reshape((1,) * (p.ndim - 1) + (card, card))
    p = p / p.sum()
    q = random_table(rng, cards)
    return TabularModel(names, cards, p, q)


def fixture_chain():
    """A fixed 2x2x2 model over the chain k -> h -> x with hand-set tables."""
    pk = np.array([0.6, 0.4])
    ph_k = np.array([[0.7, 0.3], [0.2, 0.8]])
    px_h = np.array([[0.9, 0.1], [0.25, 0.75]])
    p = pk[:, None, None] * ph_k[:, :, None] * px_h[None, :, :]
    q = np.array([[[0.20, 0.05], [0.10, 0.15]],
                  [[0.05, 0.10], [0.05, 0.30]]])
    return TabularModel(("k", "h", "x"), (2, 2, 2), p, q)
