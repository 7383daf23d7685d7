"""Gaussian Mixture GAN: k -> h -> x with a mixture-of-Gaussians prior on h."""
import numpy as np
from scipy.special import softmax

from ..errors import BadDimension, ShapeMismatch
from ..graph import Dag, categorical, inverse_factorization, latent, observed
from ..numerics import Mlp, MlpSpec, no_grad
from ..numerics import tensor as T
from .base import Bundle
from ..stochastics import GAUSS, GUMBEL, NoiseSpec, gaussian_reparam, gumbel_softmax, hard_categorical


def gmgan_dag(K, dim_h, dim_x):
    return Dag((categorical("k", K), latent("h", dim_h), observed("x", dim_x)),
               (("k", "h"), ("h", "x")))


def gmgan_posterior_k(h, means):
    """Responsibilities q(k|h) under a uniform prior and identity covariances."""
    h = np.atleast_2d(np.asarray(h, dtype=np.float64))
    means = np.asarray(means, dtype=np.float64)
    if means.ndim != 2 or h.shape[1] != means.shape[1]:
        raise ShapeMismatch(f"h {h.shape} vs means {means.shape}")
    sq = ((h[:, None, :] - means[None, :, :]) ** 2).sum(axis=-1)
    return softmax(-0.5 * sq, axis=1)


def posterior_logits(h, means):
    """Differentiable log q(k|h) up to a per-row constant."""
    return h @ T.transpose(means) - 0.5 * T.tsum(T.square(means), axis=1)


class GmganBundle(Bundle):
    """GMGAN with generator ``G: h -> x`` and extractor ``E: x -> h``.

    Only the mixture means are trainable prior parameters; mixing weights are
    uniform and covariances are identity.
    """

    kind = "gmgan"

    def __init__(self, K=10, dim_h=128, dim_x=784, hidden=(256,), tau=0.1, seed=0,
                 frame_shape=None, gaussian_head=False, mean_init_scale=0.1):
        if K < 2:
            raise BadDimension("GMGAN needs K >= 2")
        if dim_h < 1 or dim_x < 1:
            raise BadDimension("dimensions must be positive")
        dag = gmgan_dag(K, dim_h, dim_x)
        super().__init__(dag, inverse_factorization(dag), tau, seed)
        self.K, self.dim_h, self.dim_x = K, dim_h, dim_x
        self.hidden = tuple(hidden)
        self.gaussian_head = gaussian_head
        self.mean_init_scale = mean_init_scale
        self.frame_shape = tuple(frame_shape) if frame_shape else _default_frame(dim_x)
        rng = self.rng()
        self.mu = self.store.add("prior.mu", mean_init_scale * rng.standard_normal((K, dim_h)), "prior")
        self.G = Mlp(MlpSpec.make(dim_h, self.hidden, dim_x, "relu", "tanh"),
                     self.store, "gen.G", "generative", rng)
        e_out = 2 * dim_h if gaussian_head else dim_h
        self.E = Mlp(MlpSpec.make(dim_x, self.hidden, e_out, "leaky_relu", "linear"),
                     self.store, "rec.E", "recognition", rng)

    def config(self):
        return {"instance": "gmgan", "K": self.K, "dim_h": self.dim_h, "dim_x": self.dim_x,
                "hidden": list(self.hidden), "tau": self.tau, "seed": self.seed,
                "frame_shape": list(self.frame_shape), "gaussian_head": self.gaussian_head,
                "mean_init_scale": self.mean_init_scale}

    def p_noise(self):
        return {"k": NoiseSpec(GUMBEL, self.K), "h": NoiseSpec(GAUSS, self.dim_h)}

    def q_noise(self):
        spec = {"k": NoiseSpec(GUMBEL, self.K)}
        if self.gaussian_head:
            spec["h"] = NoiseSpec(GAUSS, self.dim_h)
        return spec

    def p_fns(self, hard=False):
        zeros = np.zeros(self.K)

        def k_fn(_, g):
            return hard_categorical(zeros, g) if hard else gumbel_softmax(zeros, self.tau, g)

        def h_fn(par, eps):
            return gaussian_reparam(par["k"] @ self.mu, 0.0, eps)

        return {"k": k_fn, "h": h_fn, "x": lambda par, _: self.G(par["h"])}

    def encode(self, x, eps=None):
        out = self.E(x)
        if not self.gaussian_head:
            return out
        mean, log_scale = out[:, :self.dim_h], out[:, self.dim_h:]
        if eps is None:
            return mean
        return gaussian_reparam(mean, log_scale, eps)

    def q_fns(self, hard=False):
        def k_fn(par, g):
            logits = posterior_logits(par["h"], self.mu)
            return hard_categorical(logits, g) if hard else gumbel_softmax(logits, self.tau, g)

        return {"h": lambda par, eps: self.encode(par["x"], eps), "k": k_fn}

    def observe(self, x):
        return {"x": np.asarray(x, dtype=np.float64).reshape(len(x), -1)}

    def networks(self):
        return {"G": (self.G, self.dim_h), "E": (self.E, self.dim_x)}

    # evaluation helpers

    @property
    def means(self):
        return self.mu.data

    def cluster(self, x):
        """Extracted latents, responsibilities, hard assignments and reconstructions."""
        with no_grad():
            h = self.encode(T.Tensor(self.observe(x)["x"])).data
            probs = gmgan_posterior_k(h, self.mu.data)
            recon = self.G(T.Tensor(h)).data
        return {"h": h, "probs": probs, "k": probs.argmax(axis=1), "recon": recon}

    def sample_given_k(self, ks, seed=0):
        """Generate one x per entry of ``ks`` with the mixture component held fixed."""
        ks = np.asarray(ks, dtype=int)
        eps = np.random.default_rng(seed).standard_normal((len(ks), self.dim_h))
        with no_grad():
            h = self.mu.data[ks] + eps
            return self.G(T.Tensor(h)).data


def _default_frame(dim):
    rows = int(np.sqrt(dim))
    while dim % rows:
        rows -= 1
    return (rows, dim // rows)


def build_gmgan(K=10, dim_h=128, dim_x=784, hidden=(256,), **kwargs):
    return GmganBundle(K=K, dim_h=dim_h, dim_x=dim_x, hidden=hidden, **kwargs)
