"""Per-round retraining baselines: train-from-scratch (TFS) and train-on-everything (TOE).

Both start every round from a fresh point and run plain gradient descent with
a fixed step on a uniform mixture of losses. TFS uses the current task's train
loss only. TOE adds the train and test losses of every earlier task.
"""

from collections import deque
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_positive, check_positive_int, check_vector
from .exceptions import ParameterError
from .tasks import get_family

BASELINE_KINDS = ("TFS", "TOE")


@dataclass(frozen=True)
class BaselineConfig:
    kind: str = "TFS"
    inner_steps: int = 100
    step_size: float | None = None
    toe_buffer_cap: int | None = None

    def __post_init__(self):
        if self.kind not in BASELINE_KINDS:
            raise ParameterError(f"baseline kind must be one of {BASELINE_KINDS}, got {self.kind!r}")
        check_positive_int(self.inner_steps, "inner_steps")
        if self.step_size is not None:
            check_positive(self.step_size, "step_size")
        if self.toe_buffer_cap is not None:
            check_positive_int(self.toe_buffer_cap, "toe_buffer_cap")


def train_mixture(family, params, w0, radius, inner_steps=100, step_size=None):
    """Gradient descent on the uniform mixture of the stacked losses ``params``.

    The default step is ``0.5 / beta`` with ``beta`` the mixture's certified
    smoothness on the ball of ``radius``.
    """
    fam = get_family(family)
    if step_size is None:
        step_size = 0.5 / fam.constants(params, radius).beta
    w = np.array(w0, dtype=float)
    for _ in range(inner_steps):
        w = w - step_size * fam.grad(params, w).mean(axis=0)
    return w


class _RetrainingBaseline(BaseEstimator):
    def _init_w(self, task):
        if self.w_init is None:
            return np.zeros(task.n_params)
        return check_vector(self.w_init, "w_init", dim=task.n_params)

    def _mixture(self, task):
        raise NotImplementedError

    def _after_round(self, task):
        pass

    def _reset(self):
        self.test_losses_ = []
        self.solutions_ = []

    def partial_fit(self, task):
        if not hasattr(self, "test_losses_"):
            self._reset()
        check_positive_int(self.inner_steps, "inner_steps")
        if self.step_size is not None:
            check_positive(self.step_size, "step_size")
        fam = get_family(task.family)
        w = train_mixture(fam, self._mixture(task), self._init_w(task), task.domain_radius,
                          self.inner_steps, self.step_size)
        self.solutions_.append(w)
        self.test_losses_.append(float(fam.loss(task.test_params, w)))
        self._after_round(task)
        return self

    def fit(self, stream):
        self._reset()
        for task in stream:
            self.partial_fit(task)
        return self

    def transform(self, tasks):
        """Trained point for each task, without updating the baseline's history."""
        check_is_fitted(self, "test_losses_")
        return np.stack([
            train_mixture(task.family, self._mixture(task), self._init_w(task),
                          task.domain_radius, self.inner_steps, self.step_size)
            for task in tasks
        ])


class TrainFromScratch(_RetrainingBaseline):
    """Fresh model per round, trained on the current task's train loss only."""

    kind = "TFS"

    def __init__(self, inner_steps=100, step_size=None, w_init=None):
        self.inner_steps = inner_steps
        self.step_size = step_size
        self.w_init = w_init

    def _mixture(self, task):
        return task.train_params[None, :]


class TrainOnEverything(_RetrainingBaseline):
    """Fresh model per round, trained on every earlier task's train and test
    losses together with the current train loss.

    ``buffer_cap`` keeps only the most recent tasks when set.
    """

    kind = "TOE"

    def __init__(self, inner_steps=100, step_size=None, buffer_cap=None, w_init=None):
        self.inner_steps = inner_steps
        self.step_size = step_size
        self.buffer_cap = buffer_cap
        self.w_init = w_init

    def _reset(self):
        super()._reset()
        cap = None if self.buffer_cap is None else check_positive_int(self.buffer_cap, "buffer_cap")
        self.history_ = deque(maxlen=cap)

    def _mixture(self, task):
        rows = [p for past in self.history_ for p in (past.train_params, past.test_params)]
        rows.append(task.train_params)
        return np.stack(rows)

    def _after_round(self, task):
        self.history_.append(task)


def make_baseline(cfg):
    if cfg.kind == "TFS":
        return TrainFromScratch(cfg.inner_steps, cfg.step_size)
    return TrainOnEverything(cfg.inner_steps, cfg.step_size, cfg.toe_buffer_cap)


def run_baseline(stream, cfg):
    """Per-round test losses of the baseline described by ``cfg``."""
    return np.array(make_baseline(cfg).fit(stream).test_losses_)
