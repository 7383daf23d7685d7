"""Common wiring shared by every model bundle."""
import numpy as np

from ..graph import extract_factors
from ..numerics import ParamStore, no_grad
from ..stochastics import NoiseBundle, ancestral_sample


class Bundle:
    """A generative DAG, its recognition graph, dependency functions and parameters.

    Subclasses provide ``p_noise``/``q_noise`` (name -> NoiseSpec),
    ``p_fns``/``q_fns`` (name -> dependency function), ``observe`` (dataset
    rows -> observed variables) and ``config`` (JSON-able constructor
    arguments, used to rebuild the bundle from a checkpoint).
    """

    kind = "custom"
    frame_shape = None

    def __init__(self, dag, recognition, tau=0.1, seed=0):
        recognition.check(dag)
        self.dag = dag
        self.recognition = recognition
        self.factors = extract_factors(dag)
        self.store = ParamStore()
        self.tau = tau
        self.seed = seed

    def rng(self, tag=0):
        return np.random.default_rng([self.seed, tag])

    def sample_p(self, batch, seed, hard=False):
        noise = NoiseBundle.generate(self.p_noise(), batch, seed)
        return ancestral_sample(self.dag, self.p_fns(hard), noise)

    def sample_q(self, observed, seed, hard=False):
        batch = len(next(iter(observed.values())))
        noise = NoiseBundle.generate(self.q_noise(), batch, seed)
        return ancestral_sample(self.recognition, self.q_fns(hard), noise, observed, dag=self.dag)

    def generate(self, n, seed=0):
        """Hard (evaluation-time) samples from p as numpy arrays."""
        with no_grad():
            return self.sample_p(n, seed, hard=True).numpy()

    def infer(self, x, seed=0):
        with no_grad():
            return self.sample_q(self.observe(x), seed, hard=True).numpy()

    def networks(self):
        """Named networks for gradient checking: name -> (callable, input width)."""
        return {}

    def data_dim(self):
        return sum(self.dag.spec(x).width for x in self.dag.observed)
