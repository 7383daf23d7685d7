"""Reparameterised sampling and ancestral sampling over generative/recognition graphs."""
from dataclasses import dataclass, field

import numpy as np

from .errors import MissingDependencyFn, MissingObserved, NonPositiveTemperature, ShapeMismatch
from .graph import Dag, RecognitionGraph, topological_order
from .numerics import tensor as T

GAUSS, GUMBEL = "gauss", "gumbel"


def gaussian_reparam(mean, log_scale, noise):
    """``mean + exp(log_scale) * noise``, differentiable in mean and log_scale."""
    mean, log_scale = T.as_tensor(mean), T.as_tensor(log_scale)
    noise = np.asarray(noise, dtype=np.float64)
    if mean.shape != noise.shape or np.broadcast_shapes(log_scale.shape, mean.shape) != mean.shape:
        raise ShapeMismatch(f"mean {mean.shape}, log_scale {log_scale.shape}, noise {noise.shape}")
    return mean + T.exp(log_scale) * noise


def gumbel_softmax(logits, temperature, gumbel_noise):
    """Relaxed one-hot sample ``softmax((logits + g) / temperature)``."""
    if not temperature > 0:
        raise NonPositiveTemperature(f"temperature must be positive, got {temperature}")
    logits = T.as_tensor(logits)
    g = np.asarray(gumbel_noise, dtype=np.float64)
    if np.broadcast_shapes(logits.shape, g.shape) != g.shape:
        raise ShapeMismatch(f"logits {logits.shape} vs noise {g.shape}")
    return T.softmax((logits + g) * (1.0 / temperature), axis=-1)


def hard_categorical(logits, gumbel_noise):
    """Exact categorical draw via the Gumbel-max trick, as a one-hot tensor."""
    data = T.as_tensor(logits).data + np.asarray(gumbel_noise)
    return T.where_max_onehot(data)


def standard_gumbel(rng, shape):
    u = rng.random(shape)
    u = np.clip(u, np.finfo(np.float64).tiny, 1.0 - np.finfo(np.float64).eps)
    return -np.log(-np.log(u))


@dataclass(frozen=True)
class NoiseSpec:
    """How to draw the noise consumed by one variable.

    Variables naming the same ``share`` key receive the identical draw.
    """

    kind: str
    width: int
    share: str = None


@dataclass
class NoiseBundle:
    values: dict = field(default_factory=dict)
    seed: object = None

    def get(self, name):
        return self.values.get(name)

    @classmethod
    def generate(cls, specs, batch, seed):
        """Draw noise for every entry of ``specs`` (ordered mapping name -> NoiseSpec).

        The same ``(specs, batch, seed)`` always reproduces the same values.
        """
        rng = np.random.default_rng(seed)
        drawn = {}
        values = {}
        for name, spec in specs.items():
            key = spec.share or name
            if key not in drawn:
                shape = (batch, spec.width)
                if spec.kind == GAUSS:
                    drawn[key] = rng.standard_normal(shape)
                elif spec.kind == GUMBEL:
                    drawn[key] = standard_gumbel(rng, shape)
                else:
                    raise ValueError(f"unknown noise kind {spec.kind!r}")
            values[name] = drawn[key]
        return cls(values, seed)


@dataclass
class SampleTable:
    """One minibatch of joint assignments drawn from p (``source='p'``) or q."""

    source: str
    values: dict
    batch: int

    def __getitem__(self, name):
        return self.values[name]

    def __contains__(self, name):
        return name in self.values

    def numpy(self):
        return {k: v.data for k, v in self.values.items()}

    def detach(self):
        return SampleTable(self.source, {k: v.detach() for k, v in self.values.items()}, self.batch)


def ancestral_sample(graph, fns, noise, observed=None, dag=None):
    """Evaluate every variable in order from its parents' values.

    For a :class:`Dag` the variables are visited in topological order and the
    result is a p-table. For a :class:`RecognitionGraph` the observed inputs
    are copied in and latents follow the elimination order, giving a q-table.

    Each ``fns[name]`` is called as ``fn(parents, noise)`` where ``parents``
    maps parent names to tensors and ``noise`` is the variable's noise array
    (or None).
    """
    values = {}
    if isinstance(graph, Dag):
        source = "p"
        order = topological_order(graph)
        parents_of = graph.parents
    elif isinstance(graph, RecognitionGraph):
        source = "q"
        if observed is None:
            raise MissingObserved("recognition sampling needs observed inputs")
        obs_names = dag.observed if dag is not None else sorted(
            {c for cs in graph.conditioning.values() for c in cs} - set(graph.elimination_order))
        for x in obs_names:
            if x not in observed:
                raise MissingObserved(x)
        for x, val in observed.items():
            values[x] = T.as_tensor(val)
        order = graph.elimination_order
        parents_of = graph.parents
    else:
        raise TypeError("graph must be a Dag or RecognitionGraph")
    for v in order:
        if v not in fns:
            raise MissingDependencyFn(v)
        parents = {p: values[p] for p in parents_of(v)}
        values[v] = T.as_tensor(fns[v](parents, noise.get(v)))
    batch = next(iter(values.values())).shape[0] if values else 0
    return SampleTable(source, values, batch)
