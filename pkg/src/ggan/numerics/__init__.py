from . import tensor
from .check import GradCheckReport, bce_logits, grad_check
from .mlp import Linear, Mlp, MlpSpec, init_params, mlp_forward, split_heads
from .params import MODEL_OWNERS, OWNERS, ParamStore, adam_step
from .tensor import Tensor, no_grad

__all__ = [
    "GradCheckReport", "Linear", "MODEL_OWNERS", "Mlp", "MlpSpec", "OWNERS", "ParamStore",
    "Tensor", "adam_step", "bce_logits", "grad_check", "init_params", "mlp_forward",
    "no_grad", "split_heads", "tensor",
]
