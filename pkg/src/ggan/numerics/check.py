"""Losses and finite-difference verification."""
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T


def bce_logits(logit, target):
    """Mean binary cross-entropy of ``sigmoid(logit)`` against a 0/1 target.

    Uses softplus so that |logit| up to ~700 stays finite:
    ``-log sigmoid(l) = softplus(-l)`` and ``-log(1 - sigmoid(l)) = softplus(l)``.
    """
    logit = T.as_tensor(logit)
    if target == 1:
        return T.softplus(-logit).mean()
    if target == 0:
        return T.softplus(logit).mean()
    raise ValueError("target must be 0 or 1")


@dataclass
class GradCheckReport:
    max_rel_error: float
    passed: bool
    per_param: dict = field(default_factory=dict)

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        return f"{status} (max rel err {self.max_rel_error:.3e} over {len(self.per_param)} tensors)"


def grad_check(fn, params, tol=1e-4, h=1e-6, max_entries=None, seed=0, grads=None):
    """Compare backprop gradients of scalar ``fn()`` with central differences.

    The relative error of a tensor is ``max|a - n| / max(max|a|, max|n|, 1e-10)``
    where ``a`` is the analytic and ``n`` the numeric gradient, restricted to
    the checked entries. ``max_entries`` subsamples coordinates per tensor.
    ``grads`` overrides the analytic gradients (used for negative controls).
    """
    params = list(params)
    if grads is None:
        for p in params:
            p.grad = None
        fn().backward()
        grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in params]
        for p in params:
            p.grad = None
    rng = np.random.default_rng(seed)
    per_param = {}
    for i, (p, g) in enumerate(zip(params, grads)):
        flat = p.data.reshape(-1)
        idx = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            idx = np.sort(rng.choice(flat.size, size=max_entries, replace=False))
        num = np.empty(idx.size)
        with T.no_grad():
            for j, k in enumerate(idx):
                old = flat[k]
                flat[k] = old + h
                fp = float(fn().data)
                flat[k] = old - h
                fm = float(fn().data)
                flat[k] = old
                num[j] = (fp - fm) / (2.0 * h)
        ana = np.asarray(g).reshape(-1)[idx]
        scale = max(np.abs(ana).max(initial=0.0), np.abs(num).max(initial=0.0), 1e-10)
        per_param[p.name or f"param{i}"] = float(np.abs(ana - num).max(initial=0.0) / scale)
    worst = max(per_param.values(), default=0.0)
    return GradCheckReport(worst, bool(worst <= tol), per_param)
