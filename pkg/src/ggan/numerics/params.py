"""Named parameters with owner groups and Adam state."""
import numpy as np

from ..errors import BadParameter, NonFiniteGradient
from .tensor import Tensor

OWNERS = ("generative", "recognition", "discriminator", "prior")
MODEL_OWNERS = ("generative", "recognition", "prior")


class ParamStore:
    """Ordered collection of trainable tensors.

    Each parameter belongs to exactly one owner group; Adam moment buffers
    and step counters are kept per parameter so disjoint groups can be
    optimised by separate phases without interfering.
    """

    def __init__(self):
        self.params = {}
        self.owner = {}
        self.m = {}
        self.v = {}
        self.t = {}

    def __contains__(self, name):
        return name in self.params

    def __getitem__(self, name):
        return self.params[name]

    def __len__(self):
        return len(self.params)

    def add(self, name, value, owner):
        if owner not in OWNERS:
            raise BadParameter(f"unknown owner group {owner!r}")
        if name in self.params:
            raise BadParameter(f"parameter {name!r} already registered")
        p = Tensor(np.array(value, dtype=np.float64), requires_grad=True, name=name)
        self.params[name] = p
        self.owner[name] = owner
        self.m[name] = np.zeros_like(p.data)
        self.v[name] = np.zeros_like(p.data)
        self.t[name] = 0
        return p

    def names(self, owners=None):
        if owners is None:
            return list(self.params)
        if isinstance(owners, str):
            owners = (owners,)
        return [n for n in self.params if self.owner[n] in owners]

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def grads(self, names):
        return {n: (self.params[n].grad if self.params[n].grad is not None
                    else np.zeros_like(self.params[n].data)) for n in names}

    def snapshot(self, owners=None):
        return {n: self.params[n].data.copy() for n in self.names(owners)}

    def count(self, owners=None):
        return int(sum(self.params[n].data.size for n in self.names(owners)))


def adam_step(store, grads, lr, beta1=0.5, beta2=0.999, eps=1e-8):
    """Bias-corrected Adam descent step on the parameters named in ``grads``.

    Moment buffers start at zero, so the first step moves each coordinate by
    roughly ``-lr * sign(g)``.
    """
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(f"non-finite gradient for {name!r}")
    for name, g in grads.items():
        p = store.params[name]
        t = store.t[name] + 1
        store.t[name] = t
        m = beta1 * store.m[name] + (1.0 - beta1) * g
        v = beta2 * store.v[name] + (1.0 - beta2) * (g * g)
        store.m[name], store.v[name] = m, v
        m_hat = m / (1.0 - beta1 ** t)
        v_hat = v / (1.0 - beta2 ** t)
        p.data = p.data - lr * m_hat / (np.sqrt(v_hat) + eps)
