"""
Local factor discriminators against one global discriminator
============================================================

Same model, data and budget; only the objective differs. The local run
uses one discriminator per factor (h|k and x|h), the global run a single
discriminator over (k, h, x).

    python3 demos/03_local_vs_global.py --steps 20000 --seeds 5
"""

import argparse

from ggan import presets
from ggan.cli import load_dataset
from ggan.eval import compare_modes
from ggan.instances import build_gmgan
from ggan.trainer import TrainerConfig

ap = argparse.ArgumentParser()
ap.add_argument("--steps", type=int, default=2000)
ap.add_argument("--seeds", type=int, default=2)
ap.add_argument("--csv")
args = ap.parse_args()

base = {**presets.GMGAN_MIXTURE["trainer"], "steps": args.steps}


def dataset(seed):
    d = load_dataset("mixture", seed)
    return d.train, (d.test_x, d.test_y)


def bundle(seed):
    return build_gmgan(K=5, dim_x=32, seed=seed, **presets.GMGAN_MIXTURE["bundle"])


result = compare_modes(TrainerConfig(**base, mode="local"), TrainerConfig(**base, mode="global"),
                       dataset, list(range(args.seeds)), bundle)
for row in result.rows:
    print(row)
print()
print(result.text())
if args.csv:
    result.to_csv(args.csv)
