"""Graphical GANs: Bayesian-network generative models trained with per-factor discriminators."""
from . import data, eval, graph, instances, numerics, stochastics, tabular, trainer
from .checkpoint import load_checkpoint, load_state, save_checkpoint, save_state
from .errors import GGanError
from .graph import (Dag, FactorSet, GraphDescription, categorical, extract_factors,
                    inverse_factorization, latent, mean_field, observed, topological_order)
from .instances import GmganBundle, SsganBundle, build_gmgan, build_ssgan
from .trainer import TrainerConfig, train

__version__ = "0.1.0"
