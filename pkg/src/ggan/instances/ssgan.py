"""State Space GAN: time-invariant content h, Markov motion latents v_t, frames x_t."""
import numpy as np

from ..errors import BadDimension, ShapeMismatch
from ..graph import Dag, latent, mean_field, observed
from ..numerics import Linear, Mlp, MlpSpec, no_grad
from ..numerics import tensor as T
from ..stochastics import GAUSS, NoiseSpec
from .base import Bundle


def ssgan_names(T_):
    return [f"v{t}" for t in range(1, T_ + 1)], [f"x{t}" for t in range(1, T_ + 1)]


def ssgan_dag(T_, dim_h, dim_v, frame_dim):
    vs, xs = ssgan_names(T_)
    nodes = [latent("h", dim_h)]
    nodes += [latent(v, dim_v, tie_group="v") for v in vs]
    nodes += [observed(x, frame_dim, tie_group="x") for x in xs]
    edges = [(vs[t], vs[t + 1]) for t in range(T_ - 1)]
    for v, x in zip(vs, xs):
        edges += [("h", x), (v, x)]
    return Dag(tuple(nodes), tuple(edges))


def ssgan_recognition(dag, T_):
    vs, xs = ssgan_names(T_)
    return mean_field(dag, {v: [x] for v, x in zip(vs, xs)})


class SsganBundle(Bundle):
    """SSGAN with transition ``O``, generator ``G`` and extractors ``E1``, ``E2``.

    ``O``, ``G`` and ``E2`` are shared across time. The transition adds a
    linear skip path: ``O(v, eps) = M([v, eps]) + S(v)``. ``E1`` pools
    per-frame features over time before mapping to ``h`` so its parameter
    count does not depend on ``T``.
    """

    kind = "ssgan"

    def __init__(self, T=4, dim_h=128, dim_v=8, frame_dim=256, hidden=(128,), dim_eps=None,
                 transition_hidden=(64, 64), shared_eps=True, seed=0, frame_shape=None, tau=0.1):
        if T < 2:
            raise BadDimension("SSGAN needs T >= 2")
        if min(dim_h, dim_v, frame_dim) < 1:
            raise BadDimension("dimensions must be positive")
        self.T = T
        self.dim_h, self.dim_v, self.frame_dim = dim_h, dim_v, frame_dim
        self.dim_eps = dim_eps or dim_v
        self.hidden = tuple(hidden)
        self.transition_hidden = tuple(transition_hidden)
        self.shared_eps = shared_eps
        dag = ssgan_dag(T, dim_h, dim_v, frame_dim)
        super().__init__(dag, ssgan_recognition(dag, T), tau, seed)
        side = int(round(np.sqrt(frame_dim)))
        self.frame_shape = tuple(frame_shape) if frame_shape else (
            (side, side) if side * side == frame_dim else (1, frame_dim))
        self.vs, self.xs = ssgan_names(T)
        rng = self.rng()
        st = self.store
        self.O_mlp = Mlp(MlpSpec.make(dim_v + self.dim_eps, self.transition_hidden, dim_v),
                         st, "gen.O", "generative", rng)
        self.O_skip = Linear(dim_v, dim_v, st, "gen.O_skip", "generative", rng)
        self.G = Mlp(MlpSpec.make(dim_h + dim_v, self.hidden, frame_dim, "relu", "tanh"),
                     st, "gen.G", "generative", rng)
        feat = self.hidden[-1] if self.hidden else dim_h
        self.E1_frame = Mlp(MlpSpec.make(frame_dim, self.hidden[:-1], feat, "leaky_relu", "leaky_relu"),
                            st, "rec.E1_frame", "recognition", rng)
        self.E1_out = Mlp(MlpSpec.make(feat, (), dim_h), st, "rec.E1_out", "recognition", rng)
        self.E2 = Mlp(MlpSpec.make(frame_dim, self.hidden, dim_v), st, "rec.E2", "recognition", rng)

    def config(self):
        return {"instance": "ssgan", "T": self.T, "dim_h": self.dim_h, "dim_v": self.dim_v,
                "frame_dim": self.frame_dim, "hidden": list(self.hidden), "dim_eps": self.dim_eps,
                "transition_hidden": list(self.transition_hidden), "shared_eps": self.shared_eps,
                "seed": self.seed, "frame_shape": list(self.frame_shape), "tau": self.tau}

    def transition(self, v, eps):
        return self.O_mlp(T.concat([v, eps], axis=1)) + self.O_skip(v)

    def render(self, h, v):
        return self.G(T.concat([h, v], axis=1))

    def content(self, frames):
        """E1 over a list of per-frame tensors."""
        B = frames[0].shape[0]
        feats = self.E1_frame(T.concat(frames, axis=0))
        pooled = T.reshape(feats, (len(frames), B, feats.shape[1])).mean(axis=0)
        return self.E1_out(pooled)

    def p_noise(self):
        spec = {"h": NoiseSpec(GAUSS, self.dim_h), "v1": NoiseSpec(GAUSS, self.dim_v)}
        for v in self.vs[1:]:
            spec[v] = NoiseSpec(GAUSS, self.dim_eps, "eps" if self.shared_eps else None)
        return spec

    def q_noise(self):
        return {}

    def p_fns(self, hard=False):
        fns = {"h": lambda _, e: T.Tensor(e), "v1": lambda _, e: T.Tensor(e)}
        for prev, v in zip(self.vs[:-1], self.vs[1:]):
            fns[v] = (lambda p: lambda par, e: self.transition(par[p], e))(prev)
        for v, x in zip(self.vs, self.xs):
            fns[x] = (lambda v: lambda par, _: self.render(par["h"], par[v]))(v)
        return fns

    def q_fns(self, hard=False):
        fns = {"h": lambda par, _: self.content([par[x] for x in self.xs])}
        for v, x in zip(self.vs, self.xs):
            fns[v] = (lambda x: lambda par, _: self.E2(par[x]))(x)
        return fns

    def observe(self, clips):
        clips = np.asarray(clips, dtype=np.float64)
        clips = clips.reshape(clips.shape[0], clips.shape[1], -1)
        if clips.shape[1] != self.T or clips.shape[2] != self.frame_dim:
            raise ShapeMismatch(f"expected clips (N, {self.T}, {self.frame_dim}), got {clips.shape}")
        return {x: clips[:, t] for t, x in enumerate(self.xs)}

    def networks(self):
        return {"O": (lambda z: self.transition(z[:, :self.dim_v], z[:, self.dim_v:]),
                      self.dim_v + self.dim_eps),
                "G": (self.G, self.dim_h + self.dim_v),
                "E1": (lambda z: self.content([z]), self.frame_dim),
                "E2": (self.E2, self.frame_dim)}

    def generate_clips(self, n, seed=0):
        s = self.generate(n, seed)
        return np.stack([s[x] for x in self.xs], axis=1), np.stack([s[v] for v in self.vs], axis=1)


def build_ssgan(T=4, dim_h=128, dim_v=8, frame_dim=256, **kwargs):
    return SsganBundle(T=T, dim_h=dim_h, dim_v=dim_v, frame_dim=frame_dim, **kwargs)


def ssgan_rollout(bundle, h, v1, steps, noise):
    """Unroll the transition for ``steps`` frames, possibly beyond the training length.

    ``noise`` is either one ``(B, dim_eps)`` array reused at every step (the
    shared-noise setting) or an array ``(steps - 1, B, dim_eps)``.
    Returns ``(frames (B, steps, frame_dim), v_path (B, steps, dim_v))``.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    h = np.atleast_2d(np.asarray(h, dtype=np.float64))
    v = np.atleast_2d(np.asarray(v1, dtype=np.float64))
    noise = np.asarray(noise, dtype=np.float64)
    frames, path = [], []
    with no_grad():
        ht, vt = T.Tensor(h), T.Tensor(v)
        for t in range(steps):
            path.append(vt.data)
            frames.append(bundle.render(ht, vt).data)
            if t < steps - 1:
                eps = noise if noise.ndim == 2 else noise[t]
                vt = bundle.transition(vt, T.Tensor(eps))
    return np.stack(frames, axis=1), np.stack(path, axis=1)


def motion_analogy(bundle, content_h, driving_frames):
    """Generate frames that follow the driving clip's motion with new content.

    The motion path ``v_t = E2(x_t)`` depends only on the driving frames;
    the content vector is held fixed. Returns ``(frames, v_path)``.
    """
    d = np.asarray(driving_frames, dtype=np.float64)
    single = d.ndim == 2
    if single:
        d = d[None]
    d = d.reshape(d.shape[0], d.shape[1], -1)
    if d.shape[1] < 1 or d.shape[2] != bundle.frame_dim:
        raise ShapeMismatch(f"driving frames must be (B, L, {bundle.frame_dim}), got {d.shape}")
    B, L, _ = d.shape
    h = np.atleast_2d(np.asarray(content_h, dtype=np.float64))
    if h.shape[1] != bundle.dim_h:
        raise ShapeMismatch(f"content must have width {bundle.dim_h}")
    if h.shape[0] == 1 and B > 1:
        h = np.repeat(h, B, axis=0)
    with no_grad():
        v = bundle.E2(T.Tensor(d.reshape(B * L, -1))).data.reshape(B, L, -1)
        hh = np.repeat(h[:, None, :], L, axis=1).reshape(B * L, -1)
        frames = bundle.render(T.Tensor(hh), T.Tensor(v.reshape(B * L, -1))).data.reshape(B, L, -1)
    if single:
        return frames[0], v[0]
    return frames, v
