"""Feed-forward networks on top of the autodiff tensors."""
from dataclasses import dataclass, field

import numpy as np

from ..errors import BadParameter, ShapeMismatch
from . import tensor as T

ACTIVATIONS = ("relu", "leaky_relu", "tanh", "sigmoid", "linear", "softmax")


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths (input first) and one activation per weight layer.

    ``heads`` optionally names column slices of the output, e.g.
    ``(("mean", 0, 8), ("log_scale", 8, 16))``.
    """

    widths: tuple
    activations: tuple
    slope: float = 0.2
    heads: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        object.__setattr__(self, "activations", tuple(self.activations))
        if len(self.widths) < 2 or any(w < 1 for w in self.widths):
            raise BadParameter(f"widths must be >= 1 with at least two entries: {self.widths}")
        if len(self.activations) != len(self.widths) - 1:
            raise BadParameter("need one activation per layer")
        for a in self.activations:
            if a not in ACTIVATIONS:
                raise BadParameter(f"unknown activation {a!r}")
        if not 0.0 < self.slope < 1.0:
            raise BadParameter("leaky slope must lie in (0, 1)")
        for _, lo, hi in self.heads:
            if not 0 <= lo < hi <= self.widths[-1]:
                raise BadParameter(f"head slice [{lo}, {hi}) outside output width")

    @property
    def n_in(self):
        return self.widths[0]

    @property
    def n_out(self):
        return self.widths[-1]

    @classmethod
    def make(cls, n_in, hidden, n_out, hidden_act="leaky_relu", out_act="linear", slope=0.2):
        widths = (n_in, *hidden, n_out)
        acts = (hidden_act,) * len(hidden) + (out_act,)
        return cls(widths, acts, slope)

    def to_dict(self):
        return {"widths": list(self.widths), "activations": list(self.activations),
                "slope": self.slope, "heads": [list(h) for h in self.heads]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["widths"]), tuple(d["activations"]), d.get("slope", 0.2),
                   tuple(tuple(h) for h in d.get("heads", ())))


def _activate(x, name, slope):
    if name == "linear":
        return x
    if name == "relu":
        return T.relu(x)
    if name == "leaky_relu":
        return T.leaky_relu(x, slope)
    if name == "tanh":
        return T.tanh(x)
    if name == "sigmoid":
        return T.sigmoid(x)
    return T.softmax(x, axis=-1)


def init_params(spec, rng):
    """Glorot-uniform weights, zero biases, as a list of (W, b) arrays."""
    layers = []
    for n_in, n_out in zip(spec.widths[:-1], spec.widths[1:]):
        limit = np.sqrt(6.0 / (n_in + n_out))
        layers.append((rng.uniform(-limit, limit, size=(n_in, n_out)), np.zeros(n_out)))
    return layers


def mlp_forward(spec, params, x):
    """Run ``x`` through the network described by ``spec``.

    ``params`` is a sequence of ``(W, b)`` tensor pairs. Intermediate values
    are retained by the autodiff graph for the backward pass.
    """
    x = T.as_tensor(x)
    if x.ndim != 2 or x.shape[1] != spec.n_in:
        raise ShapeMismatch(f"expected input (batch, {spec.n_in}), got {x.shape}")
    for (W, b), act in zip(params, spec.activations):
        x = _activate(x @ W + b, act, spec.slope)
    return x


def split_heads(spec, out):
    return {name: out[:, lo:hi] for name, lo, hi in spec.heads}


class Mlp:
    """An MlpSpec bound to parameters registered in a ParamStore."""

    def __init__(self, spec, store, prefix, owner, rng):
        self.spec = spec
        self.prefix = prefix
        self.params = []
        for i, (W, b) in enumerate(init_params(spec, rng)):
            self.params.append((store.add(f"{prefix}.W{i}", W, owner),
                                store.add(f"{prefix}.b{i}", b, owner)))

    def __call__(self, x):
        return mlp_forward(self.spec, self.params, x)

    def heads(self, x):
        return split_heads(self.spec, self(x))

    @property
    def names(self):
        return [t.name for pair in self.params for t in pair]


class Linear(Mlp):
    def __init__(self, n_in, n_out, store, prefix, owner, rng):
        super().__init__(MlpSpec((n_in, n_out), ("linear",)), store, prefix, owner, rng)
