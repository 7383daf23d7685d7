import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ggan.errors import BadParameter
from ggan.graph import Dag, categorical, extract_factors
from ggan.tabular import (LOG2, TabularModel, chain_model, exact_joint_js, exact_local_js,
                          factor_term_joint, factor_term_marginal, fit_tabular_discriminators,
                          fixture_chain, optimal_discriminator, tabular_disc_objective)


def chain_factors(tab):
    dag = Dag(tuple(categorical(v, c) for v, c in zip(tab.names, tab.cards)),
              tuple(zip(tab.names[:-1], tab.names[1:])))
    return extract_factors(dag)


def brute_js(p, q):
    """Independent JS in nats over flattened tables."""
    total = 0.0
    for a, b in zip(p.ravel(), q.ravel()):
        m = (a + b) / 2
        if b > 0:
            total += 0.5 * b * np.log(b / m)
        if a > 0:
            total += 0.5 * a * np.log(a / m)
    return total


def test_table_validation():
    with pytest.raises(BadParameter):
        TabularModel(("a",), (2,), np.array([0.5, 0.6]), np.array([0.5, 0.5]))
    with pytest.raises(BadParameter):
        TabularModel(("a",), (3,), np.array([0.5, 0.5]), np.array([0.5, 0.5]))


def test_joint_js_cases():
    p = np.array([[0.1, 0.2], [0.3, 0.4]])
    assert exact_joint_js(TabularModel("ab", (2, 2), p, p)) == 0.0
    disjoint = TabularModel("ab", (2, 2), np.array([[1.0, 0.0], [0.0, 0.0]]),
                            np.array([[0.0, 0.0], [0.0, 1.0]]))
    assert exact_joint_js(disjoint) == pytest.approx(LOG2, abs=1e-15)
    q = np.array([[0.25, 0.25], [0.4, 0.1]])
    assert exact_joint_js(TabularModel("ab", (2, 2), p, q)) == pytest.approx(brute_js(p, q), abs=1e-15)


def test_local_js_zero_when_equal():
    tab = fixture_chain()
    same = TabularModel(tab.names, tab.cards, tab.p, tab.p)
    value, terms = exact_local_js(same, chain_factors(same))
    assert value == 0.0 and terms == [0.0, 0.0]


def test_single_all_variable_factor_is_twice_joint_js():
    tab = fixture_chain()
    value, _ = exact_local_js(tab, [tab.names])
    assert value == pytest.approx(2 * exact_joint_js(tab), abs=1e-15)


def test_fixture_matches_independent_enumeration():
    tab = fixture_chain()
    factors = chain_factors(tab)
    assert [tuple(f) for f in factors.instances()] == [("h", "k"), ("x", "h")]
    expected = []
    for keep in ((1, 0), (2, 1)):
        qa, pa = {}, {}
        for s in itertools.product(range(2), repeat=3):
            key = tuple(s[i] for i in keep)
            qa[key] = qa.get(key, 0) + tab.q[s]
            pa[key] = pa.get(key, 0) + tab.p[s]
        t = 0.0
        for key in qa:
            m = (qa[key] + pa[key]) / 2
            t += qa[key] * np.log(qa[key] / m) + pa[key] * np.log(pa[key] / m)
        expected.append(t)
    value, terms = exact_local_js(tab, factors)
    assert terms == pytest.approx(expected, abs=1e-14)
    assert value == pytest.approx(np.mean(expected), abs=1e-14)


@pytest.mark.parametrize("seed", range(6))
def test_two_enumeration_paths_agree(seed):
    rng = np.random.default_rng(seed)
    tab = chain_model(rng, 3 + seed % 3)
    for inst in chain_factors(tab).instances():
        assert abs(factor_term_marginal(tab, inst) - factor_term_joint(tab, inst)) <= 1e-12


@pytest.mark.parametrize("seed", range(6))
def test_optimal_discriminator_identity(seed):
    tab = chain_model(np.random.default_rng(100 + seed), 3 + seed % 3)
    factors = chain_factors(tab)
    _, local = exact_local_js(tab, factors)
    _, adv = tabular_disc_objective(tab, factors)
    for a, b in zip(adv, local):
        assert abs(a - (b - 2 * LOG2)) <= 1e-9


def test_trained_tabular_discriminator_near_optimum():
    tab = fixture_chain()
    factors = chain_factors(tab)
    d = fit_tabular_discriminators(tab, factors, steps=3000, lr=0.05)
    trained, _ = tabular_disc_objective(tab, factors, d)
    optimum, _ = tabular_disc_objective(tab, factors)
    assert abs(trained - optimum) <= 0.05 * abs(optimum)
    for i, inst in enumerate(factors.instances()):
        assert np.allclose(d[i], optimal_discriminator(tab, inst), atol=1e-2)


def test_swap_symmetry():
    tab = chain_model(np.random.default_rng(3), 4)
    f = chain_factors(tab)
    assert abs(exact_joint_js(tab) - exact_joint_js(tab.swapped())) <= 1e-12
    assert abs(exact_local_js(tab, f)[0] - exact_local_js(tab.swapped(), f)[0]) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(3, 5))
def test_factor_terms_bounded(seed, n):
    tab = chain_model(np.random.default_rng(seed), n)
    _, terms = exact_local_js(tab, chain_factors(tab))
    # each term is 2 JS of the factor marginals
    assert all(-1e-12 <= t <= 2 * LOG2 + 1e-12 for t in terms)
    assert 0.0 <= exact_joint_js(tab) <= LOG2 + 1e-12


def test_joint_vs_local_gap_is_reported_not_bounded():
    rng = np.random.default_rng(0)
    gaps = []
    for _ in range(5):
        tab = chain_model(rng, 4)
        local, _ = exact_local_js(tab, chain_factors(tab))
        gaps.append(exact_joint_js(tab) - local / 2)
    assert all(np.isfinite(gaps))
