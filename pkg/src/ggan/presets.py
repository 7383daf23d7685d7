"""Desk-scale settings shared by the command line, the demos and the acceptance runs.

The mixture runs use a small latent (the data are intrinsically 2-D) and
spread the initial mixture means so the prior starts out multimodal; with
means initialised near the origin the components overlap, the prior is
effectively unimodal and cluster assignments drift during training.
The extractor gets a Gaussian head: a point-mass encoder of data that lie
near a 2-D manifold cannot match a full-dimensional mixture in h, and the
game keeps swapping clusters between components.
"""

GMGAN_MIXTURE = {
    "bundle": {"dim_h": 4, "hidden": (64,), "mean_init_scale": 4.0,
               "gaussian_head": True},
    "trainer": {"steps": 20000, "batch_size": 100, "lr": 2e-4, "beta1": 0.5,
                "disc_hidden": (64, 64)},
    "data": {"K_true": 5, "dim_latent": 2, "dim_data": 32, "N": 5000, "separation": 8.0},
    "n_test": 1000,
}

SSGAN_BOUNCING = {
    "bundle": {"dim_h": 16, "dim_v": 8, "hidden": (64,), "transition_hidden": (64, 64)},
    "trainer": {"steps": 20000, "batch_size": 32, "lr": 1e-4, "beta1": 0.5,
                "disc_hidden": (64, 32)},
    "data": {"side": 16, "N": 1000},
}

# Long-sequence runs train on 16-frame clips for fewer steps, then unroll
# the transition well past the training length.
SSGAN_ROLLOUT = {"T": 16, "steps": 5000, "rollout": 200, "n_paths": 50}
