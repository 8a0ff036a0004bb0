"""Online meta-learning with a one-step adapter and AdaGrad-Norm as the outer learner."""

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_positive, check_positive_int, check_vector
from .adapter import AdapterConfig, MetaGradientOracle, adapt, meta_loss
from .analysis import RegretLedger
from .exceptions import ParameterError
from .optimizer import AdaGradNorm
from .smoothing import WindowBuffer


def default_window(n_rounds):
    return max(1, math.ceil(n_rounds / 4))


class OnlineMetaLearner(BaseEstimator):
    """Meta-learner updated online from a stream of tasks.

    Each round adapts the shared parameters to the new task with one gradient
    step, averages fresh stochastic meta-gradients of the last ``window``
    tasks, and takes an AdaGrad-Norm step on that average. The exact gradient
    of the window average is logged every round, so ``regret_`` is the local
    regret accumulated so far.

    Parameters
    ----------
    alpha : float
        Inner (adaptation) step size.
    eta, b1 : float
        AdaGrad-Norm step scale and initial accumulator.
    window : int or None
        Window length ``m``. ``None`` means ``ceil(T / 4)`` in :meth:`fit`.
    sigma : float
        Noise scale of every task's meta-gradient oracle.
    w_init : array-like or None
        Starting point; zeros when None.
    inner_mode, batch_size :
        ``"exact"`` adapts with the expected train gradient, ``"sampled"`` with
        a fresh batch of ``batch_size`` train samples per oracle call.
    random_state : int, SeedSequence or None
        Seeds the oracles' independent noise streams.
    """

    def __init__(self, alpha=0.1, eta=1.0, b1=1.0, window=None, sigma=0.0, w_init=None,
                 inner_mode="exact", batch_size=None, random_state=None):
        self.alpha = alpha
        self.eta = eta
        self.b1 = b1
        self.window = window
        self.sigma = sigma
        self.w_init = w_init
        self.inner_mode = inner_mode
        self.batch_size = batch_size
        self.random_state = random_state

    def _reset(self, n_rounds=None):
        if self.window is None:
            if n_rounds is None:
                raise ParameterError("window must be set when calling partial_fit first")
            m = default_window(n_rounds)
        else:
            m = check_positive_int(self.window, "window")
        check_positive(self.sigma, "sigma", strict=False)
        self.adapter_ = AdapterConfig(self.alpha, self.inner_mode, self.batch_size)
        self.window_ = m
        self.buffer_ = WindowBuffer(m, self.adapter_)
        self.ledger_ = RegretLedger()
        seq = self.random_state
        if not isinstance(seq, np.random.SeedSequence):
            seq = np.random.SeedSequence(seq)
        self._seed_seq = seq
        self._optimizer = None
        self.iterates_ = []
        self.test_losses_ = []

    def fit(self, stream):
        stream = list(stream)
        self._reset(len(stream))
        for task in stream:
            self._round(task)
        return self

    def partial_fit(self, task):
        if not hasattr(self, "ledger_"):
            self._reset()
        self._round(task)
        return self

    def _round(self, task):
        if self._optimizer is None:
            w0 = np.zeros(task.n_params) if self.w_init is None else self.w_init
            self._optimizer = AdaGradNorm(check_vector(w0, "w_init", dim=task.n_params),
                                          self.eta, self.b1)
            self.iterates_.append(self._optimizer.w.copy())
        rng = np.random.default_rng(self._seed_seq.spawn(1)[0])
        self.buffer_.push(task, MetaGradientOracle(task, self.adapter_, self.sigma, rng))

        w = self._optimizer.w
        m = self.buffer_.m
        values = self.buffer_.task_values(w)
        grads = self.buffer_.task_grads(w)
        window_grad = grads.sum(axis=0) / m
        G = self.buffer_.stoch_grad(w, task_grads=grads)
        w_next = self._optimizer.step(G)
        self.iterates_.append(w_next.copy())
        self.test_losses_.append(float(values[-1]))
        self.ledger_.record_round(
            self.buffer_.t,
            float(window_grad @ window_grad),
            F_t_at_wt=float(values.sum()) / m,
            F_t_at_wt1=self.buffer_.value(w_next),
            b_next=self._optimizer.b,
            eff_step=self._optimizer.effective_step(),
            domain_flag=float(np.linalg.norm(w)) > task.domain_radius,
            test_loss=float(values[-1]),
        )

    @property
    def coef_(self):
        check_is_fitted(self, "ledger_")
        if self._optimizer is None:
            raise AttributeError("coef_ is set after the first round")
        return self._optimizer.w.copy()

    @property
    def regret_(self):
        check_is_fitted(self, "ledger_")
        return self.ledger_.running_regret

    @property
    def b_sq_(self):
        return self._optimizer.b_sq

    def transform(self, tasks):
        """Adapted parameters ``U(w, task)`` of each task at the current meta-parameters."""
        w = self.coef_
        return np.stack([adapt(w, task, self.adapter_, rng=self._adapt_rng()) for task in tasks])

    def score(self, tasks):
        """Negative mean post-adaptation test loss (higher is better)."""
        w = self.coef_
        return -float(np.mean([meta_loss(w, task, self.adapter_, rng=self._adapt_rng())
                               for task in tasks]))

    def _adapt_rng(self):
        if self.adapter_.inner_mode == "exact":
            return None
        return np.random.default_rng(self._seed_seq.spawn(1)[0])
