import numpy as np
import pytest

from ggan.errors import BadDimension, ShapeMismatch
from ggan.graph import GraphDescription, latent, observed, Dag
from ggan.instances import (CustomBundle, build_gmgan, build_ssgan, bundle_from_config,
                            gmgan_posterior_k, motion_analogy, ssgan_rollout)
from ggan.numerics import MODEL_OWNERS
from ggan.stochastics import NoiseBundle


def tiny_ssgan(T=3, **kw):
    return build_ssgan(T=T, dim_h=3, dim_v=2, frame_dim=4, hidden=(5,), transition_hidden=(4,), **kw)


def test_posterior_two_components():
    post = gmgan_posterior_k([[1.0, 0.0]], [[1.0, 0.0], [-1.0, 0.0]])[0]
    assert post == pytest.approx([0.8807970779778823, 0.11920292202211755], abs=1e-12)


def test_posterior_equal_means_and_midpoint():
    assert np.allclose(gmgan_posterior_k([[3.0, -1.0]], np.ones((4, 2)))[0], 0.25)
    post = gmgan_posterior_k([[0.0, 0.0]], [[2.0, 1.0], [-2.0, -1.0]])[0]
    assert np.allclose(post, 0.5, atol=1e-15)


def test_posterior_permutation_equivariant():
    rng = np.random.default_rng(0)
    means, h = rng.standard_normal((5, 3)), rng.standard_normal((7, 3))
    perm = rng.permutation(5)
    assert np.allclose(gmgan_posterior_k(h, means[perm]), gmgan_posterior_k(h, means)[:, perm],
                       atol=1e-15)


def test_posterior_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        gmgan_posterior_k(np.zeros((2, 3)), np.zeros((4, 2)))


def test_gmgan_structure():
    b = build_gmgan(K=4, dim_h=3, dim_x=6, hidden=(5,))
    assert b.recognition.conditioning == {"h": ("x",), "k": ("h",)}
    assert b.factors.size == 2
    assert b.store["prior.mu"].data.shape == (4, 3)
    assert set(b.store.owner.values()) == set(MODEL_OWNERS)
    with pytest.raises(BadDimension):
        build_gmgan(K=1, dim_h=2, dim_x=2)


def test_gmgan_default_mean_init_is_small():
    b = build_gmgan(K=10, dim_h=16, dim_x=8, hidden=(4,))
    assert 0.05 < b.means.std() < 0.15


def test_gmgan_cluster_and_fixed_k_samples():
    b = build_gmgan(K=3, dim_h=2, dim_x=6, hidden=(5,), mean_init_scale=2.0)
    out = b.cluster(np.random.default_rng(0).standard_normal((9, 6)))
    assert out["probs"].shape == (9, 3) and out["recon"].shape == (9, 6)
    assert np.array_equal(out["k"], out["probs"].argmax(axis=1))
    x = b.sample_given_k([0, 0, 2], seed=4)
    assert x.shape == (3, 6) and np.all(np.abs(x) <= 1)


def test_ssgan_parameter_count_independent_of_length():
    counts = {T: tiny_ssgan(T).store.count() for T in (2, 4, 8)}
    assert counts[2] == counts[4] == counts[8]
    with pytest.raises(BadDimension):
        tiny_ssgan(1)


def test_ssgan_factors_and_tying():
    b = tiny_ssgan(4)
    assert b.factors.size == 2 * 4 - 1
    groups = {f.tie_group: len(f.instances) for f in b.factors}
    assert groups == {"v|v": 3, "x|h|v": 4}


def test_ssgan_observe_shape_checks():
    b = tiny_ssgan(3)
    obs = b.observe(np.arange(2 * 3 * 4.0).reshape(2, 3, 2, 2))
    assert list(obs) == ["x1", "x2", "x3"] and obs["x2"][0].tolist() == [4, 5, 6, 7]
    with pytest.raises(ShapeMismatch):
        b.observe(np.zeros((2, 4, 4)))


def test_rollout_of_length_T_matches_ancestral_sampling():
    b = tiny_ssgan(3)
    t = b.sample_p(5, seed=2)
    noise = NoiseBundle.generate(b.p_noise(), 5, 2)
    frames, path = ssgan_rollout(b, t["h"].data, t["v1"].data, 3, noise.get("v2"))
    for i in range(3):
        assert np.allclose(frames[:, i], t[f"x{i + 1}"].data, atol=1e-12)
        assert np.allclose(path[:, i], t[f"v{i + 1}"].data, atol=1e-12)


def set_identity_transition(b):
    W, c = b.O_mlp.params[-1]
    W.data[:] = 0.0
    c.data[:] = 0.0
    W, c = b.O_skip.params[0]
    W.data[:] = np.eye(b.dim_v)
    c.data[:] = 0.0


def test_identity_transition_gives_constant_frames():
    b = tiny_ssgan(3)
    set_identity_transition(b)
    rng = np.random.default_rng(1)
    frames, path = ssgan_rollout(b, rng.standard_normal((2, 3)), rng.standard_normal((2, 2)), 20,
                                 rng.standard_normal((2, 2)))
    assert frames.shape == (2, 20, 4)
    assert np.all(frames == frames[:, :1]) and np.all(path == path[:, :1])


def test_rollout_rejects_zero_steps():
    b = tiny_ssgan(3)
    with pytest.raises(ValueError):
        ssgan_rollout(b, np.zeros((1, 3)), np.zeros((1, 2)), 0, np.zeros((1, 2)))


def test_motion_analogy_motion_depends_only_on_driver():
    b = tiny_ssgan(3)
    rng = np.random.default_rng(3)
    drive = rng.uniform(-1, 1, (6, 4))
    f1, v1 = motion_analogy(b, rng.standard_normal(3), drive)
    f2, v2 = motion_analogy(b, rng.standard_normal(3), drive)
    assert v1.tobytes() == v2.tobytes()
    assert not np.array_equal(f1, f2)
    assert f1.shape == (6, 4)
    f, v = motion_analogy(b, np.zeros(3), drive[:1])
    assert f.shape == (1, 4) and v.shape == (1, 2)
    with pytest.raises(ShapeMismatch):
        motion_analogy(b, np.zeros(2), drive)


def test_config_round_trip_rebuilds_identical_parameters():
    for b in (build_gmgan(K=3, dim_h=2, dim_x=4, hidden=(5,), seed=7), tiny_ssgan(3, seed=7)):
        again = bundle_from_config(b.config())
        assert again.config() == b.config()
        for n in b.store.names():
            assert again.store[n].data.tobytes() == b.store[n].data.tobytes()


def test_custom_bundle_tied_networks_alias():
    nodes = (latent("z", 2), latent("a", 2, tie_group="t"), latent("b", 2, tie_group="t"),
             observed("x", 3))
    edges = (("z", "a"), ("z", "b"), ("a", "x"), ("b", "x"))
    desc = GraphDescription(Dag(nodes, edges), "inverse")
    b = CustomBundle(desc, hidden=(4,))
    assert b._p["a"] is b._p["b"]
    t = b.sample_p(5, 0)
    assert t["x"].shape == (5, 3)
    q = b.sample_q(b.observe(np.zeros((5, 3))), 0)
    assert set(q.values) >= {"z", "a", "b", "x"}
    assert bundle_from_config(b.config()).store.count() == b.store.count()
