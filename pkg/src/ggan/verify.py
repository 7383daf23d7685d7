"""Self-checks run from the command line and the test suite."""
import numpy as np

from .graph import Dag, FactorSet, categorical, extract_factors
from .numerics import grad_check, no_grad
from .numerics import tensor as T
from . import tabular
from .trainer import TrainerConfig, generator_loss, init_state, local_objective


def reachable_params(output, store):
    """Store parameters that ``output`` depends on, in store order."""
    wanted = {id(store[n]): n for n in store.names()}
    seen, stack, found = set(), [output], set()
    while stack:
        t = stack.pop()
        if id(t) in seen:
            continue
        seen.add(id(t))
        if id(t) in wanted:
            found.add(wanted[id(t)])
        stack.extend(t._parents)
    return [store[n] for n in store.names() if n in found]


def _projected(fn, x, w):
    return lambda: (fn(T.Tensor(x)) * T.Tensor(w)).sum()


def gradcheck_bundle(bundle, seed=0, batch=4, tol=1e-4, max_entries=12, disc_hidden=(16,)):
    """Finite-difference checks for every network and discriminator of ``bundle``.

    Each network is checked through a random projection of its output on a
    fixed random input; every discriminator and the full model loss are
    checked with noise and minibatch frozen. Returns ``[(label, report)]``.
    """
    rng = np.random.default_rng([seed, 71])
    results = []
    for name, (fn, n_in) in bundle.networks().items():
        x = rng.standard_normal((batch, n_in))
        with no_grad():
            out_shape = fn(T.Tensor(x)).shape
        w = rng.standard_normal(out_shape)
        loss = _projected(fn, x, w)
        params = reachable_params(loss(), bundle.store)
        results.append((f"net:{name}", grad_check(loss, params, tol, max_entries=max_entries,
                                                  seed=seed)))

    cfg = TrainerConfig(seed=seed, disc_hidden=disc_hidden)
    state = init_state(cfg, bundle)
    observed = bundle.observe(_fake_data(bundle, rng, batch))
    table_p = bundle.sample_p(batch, int(rng.integers(2**31)))
    table_q = bundle.sample_q(observed, int(rng.integers(2**31)))
    fixed = (table_p.detach(), table_q.detach())
    for group, disc in state.discs.items():
        fs = FactorSet((disc.factor,))
        loss = lambda fs=fs: local_objective(fs, state.discs, *fixed)[0]
        params = reachable_params(loss(), bundle.store)
        results.append((f"disc:{group}", grad_check(loss, params, tol, max_entries=max_entries,
                                                    seed=seed)))

    noise_seeds = [int(s) for s in rng.integers(2**31, size=2)]

    def model_loss():
        tp = bundle.sample_p(batch, noise_seeds[0])
        tq = bundle.sample_q(observed, noise_seeds[1])
        return generator_loss(state.factors, state.discs, tp, tq)

    params = reachable_params(model_loss(), bundle.store)
    params = [p for p in params if bundle.store.owner[p.name] != "discriminator"]
    results.append(("model:loss", grad_check(model_loss, params, tol, max_entries=max_entries,
                                             seed=seed)))
    # drop the discriminators again so the bundle is left as it was
    for name in list(bundle.store.names("discriminator")):
        _drop(bundle.store, name)
    return results


def _drop(store, name):
    for d in (store.params, store.owner, store.m, store.v, store.t):
        d.pop(name, None)


def _fake_data(bundle, rng, batch):
    if getattr(bundle, "kind", None) == "ssgan":
        return np.tanh(rng.standard_normal((batch, bundle.T, bundle.frame_dim)))
    return np.tanh(rng.standard_normal((batch, bundle.data_dim())))


def small_bundles(seed):
    """Reduced-width GMGAN and SSGAN bundles for gradient checks.

    Odd seeds give the GMGAN extractor a Gaussian head, so both extractor
    variants are covered over a run of seeds.
    """
    from .instances import build_gmgan, build_ssgan

    return {
        "gmgan": build_gmgan(K=3, dim_h=3, dim_x=6, hidden=(5,), seed=seed, mean_init_scale=1.0,
                             gaussian_head=seed % 2 == 1),
        "ssgan": build_ssgan(T=3, dim_h=3, dim_v=2, frame_dim=4, hidden=(5,),
                             transition_hidden=(4,), seed=seed),
    }


def oracle_suite(n_random=5, seed=0):
    """Compare both enumeration paths and the optimal-discriminator identity.

    Returns a list of dicts, one per model, with per-factor terms and the
    worst discrepancies.
    """
    rng = np.random.default_rng(seed)
    models = [("fixture 2x2x2", tabular.fixture_chain())]
    for i in range(n_random):
        n = 3 + i % 3
        models.append((f"random chain n={n}", tabular.chain_model(rng, n)))
    out = []
    for label, tab in models:
        dag = Dag(tuple(categorical(v, c) for v, c in zip(tab.names, tab.cards)),
                  tuple(zip(tab.names[:-1], tab.names[1:])))
        factors = extract_factors(dag)
        marg, terms_m = tabular.exact_local_js(tab, factors, "marginal")
        joint, terms_j = tabular.exact_local_js(tab, factors, "joint")
        adv, terms_a = tabular.tabular_disc_objective(tab, factors)
        out.append({
            "model": label,
            "factors": [tuple(i) for i in factors.instances()],
            "terms": terms_m,
            "local": marg,
            "joint_js": tabular.exact_joint_js(tab),
            "path_gap": max(abs(a - b) for a, b in zip(terms_m, terms_j)),
            "disc_gap": max(abs(a - (b - 2 * tabular.LOG2)) for a, b in zip(terms_a, terms_m)),
        })
    return out
