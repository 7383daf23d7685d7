"""Generic bundle: one small MLP per dependency function of an arbitrary DAG."""
import numpy as np

from ..graph import CATEGORICAL
from ..numerics import Mlp, MlpSpec
from ..numerics import tensor as T
from ..stochastics import GAUSS, GUMBEL, NoiseSpec, gumbel_softmax, hard_categorical
from .base import Bundle


class CustomBundle(Bundle):
    """Dependency functions wired from a :class:`~ggan.graph.GraphDescription`.

    Generative side:

    * continuous root latents are standard normal, categorical roots uniform;
    * a continuous latent with parents is ``MLP([parents, eps])``;
    * an observed variable is ``tanh`` of an MLP of its parents;
    * categorical variables with parents are Gumbel-Softmax over MLP logits.

    Recognition side: continuous latents are deterministic MLPs of their
    conditioning set, categorical latents Gumbel-Softmax over MLP logits.
    Variables sharing a ``tie_group`` (with matching input widths) share
    networks.
    """

    kind = "custom"

    def __init__(self, description, hidden=(64,), tau=0.1, seed=0):
        self.description = description
        dag = description.dag
        super().__init__(dag, description.recognition(), tau, seed)
        self.hidden = tuple(hidden)
        rng = self.rng()
        self._p, self._q = {}, {}
        nets = {}

        def net(side, v, n_in, n_out, out_act, owner):
            spec = dag.spec(v)
            key = (side, spec.tie_group or v, n_in)
            if key not in nets:
                nets[key] = Mlp(MlpSpec.make(n_in, self.hidden, n_out, "leaky_relu", out_act),
                                self.store, f"{'gen' if side == 'p' else 'rec'}.{key[1]}.{n_in}",
                                owner, rng)
            return nets[key]

        for v in dag.names:
            spec = dag.spec(v)
            pa = dag.parents(v)
            n_in = sum(dag.spec(p).width for p in pa)
            if not pa:
                continue
            if spec.domain == CATEGORICAL:
                self._p[v] = net("p", v, n_in, spec.width, "linear", "generative")
            elif spec.latent:
                self._p[v] = net("p", v, n_in + spec.width, spec.width, "linear", "generative")
            else:
                self._p[v] = net("p", v, n_in, spec.width, "tanh", "generative")
        for z, cond in description.recognition().conditioning.items():
            spec = dag.spec(z)
            n_in = sum(dag.spec(c).width for c in cond)
            if n_in == 0:
                continue
            self._q[z] = net("q", z, n_in, spec.width, "linear", "recognition")

    def config(self):
        return {"instance": "custom", "description": self.description.to_dict(),
                "hidden": list(self.hidden), "tau": self.tau, "seed": self.seed}

    def p_noise(self):
        out = {}
        for v in self.dag.names:
            spec = self.dag.spec(v)
            if spec.domain == CATEGORICAL:
                out[v] = NoiseSpec(GUMBEL, spec.width)
            elif spec.latent:
                out[v] = NoiseSpec(GAUSS, spec.width)
        return out

    def q_noise(self):
        return {z: NoiseSpec(GUMBEL, self.dag.spec(z).width)
                for z in self.dag.latents if self.dag.spec(z).domain == CATEGORICAL}

    def _fn(self, v, net, side, hard):
        spec = self.dag.spec(v)
        cat = spec.domain == CATEGORICAL

        def fn(par, noise):
            inputs = list(par.values())
            if net is None:
                if cat:
                    zeros = np.zeros(spec.width)
                    return hard_categorical(zeros, noise) if hard else gumbel_softmax(zeros, self.tau, noise)
                return T.Tensor(noise)
            if side == "p" and spec.latent and not cat:
                inputs.append(T.Tensor(noise))
            out = net(T.concat(inputs, axis=1))
            if cat:
                return hard_categorical(out, noise) if hard else gumbel_softmax(out, self.tau, noise)
            return out

        return fn

    def p_fns(self, hard=False):
        return {v: self._fn(v, self._p.get(v), "p", hard) for v in self.dag.names}

    def q_fns(self, hard=False):
        return {z: self._fn(z, self._q.get(z), "q", hard) for z in self.dag.latents}

    def observe(self, x):
        """Split dataset rows column-wise into the observed variables (declaration order)."""
        x = np.asarray(x, dtype=np.float64).reshape(len(x), -1)
        out, col = {}, 0
        for name in self.dag.observed:
            w = self.dag.spec(name).width
            out[name] = x[:, col:col + w]
            col += w
        return out

    def networks(self):
        return {net.prefix: (net, net.spec.n_in)
                for net in {id(n): n for n in [*self._p.values(), *self._q.values()]}.values()}
