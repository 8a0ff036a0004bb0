"""One-step inner adaptation and the adapted (meta) loss with its exact gradient.

The meta-loss of a task is the test loss evaluated at the adapted point
``U(w) = w - alpha * grad_train(w)``. Its gradient is
``(I - alpha * hess_train(w)) @ grad_test(U(w))``, computed with a single
Hessian-vector product so the Hessian is never formed.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_positive, check_positive_int, check_random_state, check_vector
from .exceptions import ParameterError
from .tasks import LossConstants, _checked_point, constants_of, get_family, sample_batch

INNER_MODES = ("exact", "sampled")


@dataclass(frozen=True)
class AdapterConfig:
    alpha: float = 0.1
    inner_mode: str = "exact"
    batch_size: int | None = None

    def __post_init__(self):
        check_positive(self.alpha, "alpha")
        if self.inner_mode not in INNER_MODES:
            raise ParameterError(f"inner_mode must be one of {INNER_MODES}, got {self.inner_mode!r}")
        if self.inner_mode == "sampled":
            check_positive_int(self.batch_size, "batch_size")


def draw_inner_batch(task, cfg, rng):
    """Sample the train batch used by one sampled-mode evaluation."""
    if cfg.inner_mode != "sampled":
        return None
    return sample_batch(task, "train", cfg.batch_size, rng)


def _inner(task, cfg, batch, rng):
    if cfg.inner_mode == "exact":
        return None
    if batch is None:
        if rng is None:
            raise ParameterError("sampled inner mode needs either a batch or an rng")
        batch = draw_inner_batch(task, cfg, rng)
    return batch


def _inner_grad(fam, task, w, batch):
    if batch is None:
        return fam.grad(task.train_params, w)
    return fam.batch_grad(task.train_params, batch, w)


def adapt(w, task, cfg=AdapterConfig(), batch=None, rng=None):
    w = _checked_point(task, w)
    fam = get_family(task.family)
    batch = _inner(task, cfg, batch, rng)
    return w - cfg.alpha * _inner_grad(fam, task, w, batch)


def meta_loss(w, task, cfg=AdapterConfig(), batch=None, rng=None):
    w_hat = adapt(w, task, cfg, batch, rng)
    return float(get_family(task.family).loss(task.test_params, w_hat))


def meta_grad(w, task, cfg=AdapterConfig(), batch=None, rng=None):
    w = _checked_point(task, w)
    fam = get_family(task.family)
    batch = _inner(task, cfg, batch, rng)
    w_hat = w - cfg.alpha * _inner_grad(fam, task, w, batch)
    v = fam.grad(task.test_params, w_hat)
    if batch is None:
        hv = fam.hvp(task.train_params, w, v)
    else:
        hv = fam.batch_hvp(task.train_params, batch, w, v)
    return v - cfg.alpha * hv


def meta_value_and_grad(w, task, cfg=AdapterConfig(), rng=None):
    """Value and gradient of one realised meta-loss (one shared batch in sampled mode)."""
    batch = _inner(task, cfg, None, rng)
    return meta_loss(w, task, cfg, batch), meta_grad(w, task, cfg, batch)


def meta_losses(family, train, test, w, alpha):
    """Exact meta-losses of stacked tasks at a common point ``w``; shape ``(n,)``."""
    fam = get_family(family)
    w_hat = w - alpha * fam.grad(train, w)
    return fam.loss(test, w_hat)


def meta_grads(family, train, test, w, alpha):
    """Exact meta-gradients of stacked tasks at a common point ``w``; shape ``(n, p)``."""
    fam = get_family(family)
    w_hat = w - alpha * fam.grad(train, w)
    v = fam.grad(test, w_hat)
    return v - alpha * fam.hvp(train, w, v)


def meta_constants(task_constants, alpha):
    """Bound, Lipschitz and smoothness constants of the meta-loss.

    Returns ``(M, (1 + a b) L, a L H + (1 + a b)^2 b)`` for ``a = alpha``.
    """
    if not isinstance(task_constants, LossConstants):
        task_constants = LossConstants(*task_constants)
    alpha = check_positive(alpha, "alpha", strict=False)
    L, beta, H, M = task_constants.L, task_constants.beta, task_constants.H, task_constants.M
    grow = 1.0 + alpha * beta
    return M, grow * L, alpha * L * H + grow * grow * beta


def certified_radius(task, alpha):
    """Radius of a ball holding both ``w`` and ``U(w)`` for every ``||w|| <= R``."""
    return task.domain_radius + alpha * constants_of(task).L


class MetaGradientOracle:
    """Stochastic meta-gradient: exact ``meta_grad`` plus isotropic Gaussian noise.

    Noise has per-coordinate variance ``sigma**2 / p``, so its expected squared
    norm is ``sigma**2``.
    """

    def __init__(self, task, cfg=AdapterConfig(), sigma=0.0, rng=None):
        self.task = task
        self.cfg = cfg
        self.sigma = check_positive(sigma, "sigma", strict=False)
        self.rng = check_random_state(rng)

    def noise(self):
        p = self.task.n_params
        if self.sigma == 0:
            return np.zeros(p)
        return (self.sigma / math.sqrt(p)) * self.rng.standard_normal(p)

    def grad(self, w, exact=None):
        """One draw at ``w``; ``exact`` may carry a precomputed exact meta-gradient."""
        if exact is None or self.cfg.inner_mode == "sampled":
            exact = meta_grad(w, self.task, self.cfg, rng=self.rng)
        else:
            exact = check_vector(exact, "exact", dim=self.task.n_params)
        return exact + self.noise()
