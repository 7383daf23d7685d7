"""
Model structure and the exact local divergence
==============================================

Builds the two pre-wired graphs, prints their recognition models and factor
sets, then checks the adversarial objective against exact enumeration on a
small discrete model.
"""

import numpy as np

from ggan.graph import Dag, categorical, extract_factors, inverse_factorization, topological_order
from ggan.instances import gmgan_dag, ssgan_dag
from ggan.instances.ssgan import ssgan_recognition
from ggan.tabular import (LOG2, exact_joint_js, exact_local_js, fit_tabular_discriminators,
                          fixture_chain, tabular_disc_objective)

# GMGAN: a categorical k picks a mixture component for h, and h generates x.
gm = gmgan_dag(K=10, dim_h=8, dim_x=32)
print("GMGAN order:", topological_order(gm))
print("inverse factorization:", inverse_factorization(gm).conditioning)
for f in extract_factors(gm):
    print("  factor", f.tie_group, [tuple(i) for i in f.instances])

# SSGAN: content h is shared by every frame, motion v_t is a Markov chain.
# Factors with the same shape share one discriminator.
ss = ssgan_dag(4, dim_h=16, dim_v=8, frame_dim=256)
print("\nSSGAN mean-field recognition:", ssgan_recognition(ss, 4).conditioning)
fs = extract_factors(ss)
print(f"{fs.size} factor instances in {len(list(fs))} tie groups")

# A hand-set binary chain k -> h -> x with a generative table p and a
# recognition table q. Every factor term is an exact sum over the table.
tab = fixture_chain()
chain = Dag((categorical("k", 2), categorical("h", 2), categorical("x", 2)),
            (("k", "h"), ("h", "x")))
factors = extract_factors(chain)
local, terms = exact_local_js(tab, factors)
print("\nper-factor terms:", np.round(terms, 6))
print("local objective:", round(local, 6), " joint JS:", round(exact_joint_js(tab), 6))

# With the best possible discriminators the adversarial objective sits
# exactly 2 log 2 below each factor term.
adv, adv_terms = tabular_disc_objective(tab, factors)
print("optimal-D objective + 2 log 2:", round(adv + 2 * LOG2, 12))

# Discriminators trained by gradient ascent on exact expectations get close.
d = fit_tabular_discriminators(tab, factors, steps=3000, lr=0.05)
trained, _ = tabular_disc_objective(tab, factors, d)
print("trained-D objective:", round(trained, 6), " optimum:", round(adv, 6))
