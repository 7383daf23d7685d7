"""
Video with a state space model: rollout and motion analogy
==========================================================

Trains on short bouncing-dot clips, unrolls the learned transition far past
the training length, and renders one clip's motion with another clip's
content.

    python3 demos/04_ssgan_bouncing.py --T 16 --steps 5000
"""

import argparse
import os

import numpy as np

from ggan import presets
from ggan.cli import ssgan_reconstruction
from ggan.data import make_bouncing_dot, write_pgm_grid
from ggan.instances import build_ssgan, motion_analogy, ssgan_rollout
from ggan.numerics import no_grad
from ggan.numerics import tensor as T
from ggan.trainer import TrainerConfig, train

ap = argparse.ArgumentParser()
ap.add_argument("--T", type=int, default=4)
ap.add_argument("--steps", type=int, default=1000)
ap.add_argument("--rollout", type=int, default=200)
ap.add_argument("--seed", type=int, default=0)
ap.add_argument("--out", default="demo-out")
args = ap.parse_args()
os.makedirs(args.out, exist_ok=True)

# 16x16 frames, a 3x3 dot with constant speed, reflecting at the walls.
video = make_bouncing_dot(args.T, 16, 1000, seed=args.seed)
clips = video.flat()
train_clips, test_clips = clips[:900], clips[900:]

bundle = build_ssgan(T=args.T, frame_dim=256, seed=args.seed, **presets.SSGAN_BOUNCING["bundle"])
cfg = TrainerConfig(**{**presets.SSGAN_BOUNCING["trainer"], "steps": args.steps,
                       "seed": args.seed, "eval_every": max(1, args.steps // 4)})


def report(state):
    mse = ssgan_reconstruction(state.bundle, test_clips)[0]
    print(f"step {state.step:6d}  reconstruction MSE {mse:.4f}")
    return {"mse": mse}


state, trace = train(cfg, bundle, train_clips, eval_fn=report)

# Long rollout: one content vector and one noise draw per row, the
# transition applied over and over.
rng = np.random.default_rng(args.seed)
n = 4
frames, path = ssgan_rollout(bundle, rng.standard_normal((n, bundle.dim_h)),
                             rng.standard_normal((n, bundle.dim_v)), args.rollout,
                             rng.standard_normal((n, bundle.dim_eps)))
norms = np.linalg.norm(path, axis=2)
print(f"rollout of {args.rollout} frames: ||v|| from {norms.min():.2f} to {norms.max():.2f}")
write_pgm_grid(frames[:, :40].reshape(-1, 16, 16), n, 40, os.path.join(args.out, "rollout.pgm"))

# Motion analogy: the motion path comes from the driving clip only.
with no_grad():
    h = bundle.content([T.Tensor(test_clips[:3, t]) for t in range(args.T)]).data
driver = test_clips[3]
rows = [driver]
for content in h:
    f, v = motion_analogy(bundle, content, driver)
    rows.append(f)
write_pgm_grid(np.concatenate(rows).reshape(-1, 16, 16), len(rows), args.T,
               os.path.join(args.out, "analogy.pgm"))
print("wrote rollout.pgm and analogy.pgm to", args.out)
