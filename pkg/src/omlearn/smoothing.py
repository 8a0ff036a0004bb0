"""Sliding window over the last ``m`` tasks and the window-averaged meta-loss.

The window average at round ``t`` is ``(1/m) * sum_{i=0}^{m-1} l_{t-i}(w)``
where losses of rounds ``<= 0`` are zero. The divisor is always ``m``, so
during the first ``m - 1`` rounds the average is scaled down rather than
renormalised over the tasks seen so far.
"""

from collections import deque

import numpy as np

from ._validation import check_positive_int, check_vector
from .adapter import AdapterConfig, MetaGradientOracle, meta_grads, meta_losses
from .exceptions import ParameterError, StateError


class WindowBuffer:
    """The last ``m`` (task, oracle) pairs, newest last.

    Past tasks stay queryable so their losses can be re-evaluated at the
    current iterate, and each oracle is asked for a fresh draw every round.
    """

    def __init__(self, m, cfg=None):
        self.m = check_positive_int(m, "m")
        self.cfg = AdapterConfig() if cfg is None else cfg
        self.entries = deque(maxlen=self.m)
        self.t = 0
        self._train = self._test = None

    def __len__(self):
        return len(self.entries)

    @property
    def tasks(self):
        return [task for task, _ in self.entries]

    @property
    def indices(self):
        """Round indices of the tasks currently held."""
        return list(range(self.t - len(self.entries) + 1, self.t + 1))

    def push(self, task, oracle=None):
        if self.entries:
            first = self.entries[0][0]
            if task.family != first.family or task.n_params != first.n_params:
                raise ParameterError("all tasks in a window must share family and dimension")
        if oracle is None:
            oracle = MetaGradientOracle(task, self.cfg)
        self.entries.append((task, oracle))
        self.t += 1
        self._train = np.stack([t.train_params for t, _ in self.entries])
        self._test = np.stack([t.test_params for t, _ in self.entries])
        return self

    def _check(self, w):
        if not self.entries:
            raise StateError("window is empty; push a task first")
        return check_vector(w, dim=self.entries[0][0].n_params)

    def _family(self):
        return self.entries[0][0].family

    def task_values(self, w):
        """Exact meta-loss of each held task at ``w``; shape ``(len(self),)``."""
        w = self._check(w)
        return meta_losses(self._family(), self._train, self._test, w, self.cfg.alpha)

    def task_grads(self, w):
        """Exact meta-gradient of each held task at ``w``; shape ``(len(self), p)``."""
        w = self._check(w)
        return meta_grads(self._family(), self._train, self._test, w, self.cfg.alpha)

    def value(self, w):
        return float(np.sum(self.task_values(w))) / self.m

    def true_grad(self, w):
        return np.sum(self.task_grads(w), axis=0) / self.m

    def stoch_grad(self, w, task_grads=None):
        """One fresh draw from every held oracle at ``w``, averaged with divisor ``m``.

        ``task_grads`` may carry the exact per-task meta-gradients at ``w`` to
        avoid recomputing them; each oracle still adds its own fresh noise.
        """
        w = self._check(w)
        if task_grads is None:
            task_grads = self.task_grads(w)
        draws = np.stack([oracle.grad(w, exact=exact)
                          for (_, oracle), exact in zip(self.entries, task_grads)])
        return np.sum(draws, axis=0) / self.m


def push(buffer, task, oracle=None):
    return buffer.push(task, oracle)


def window_value(buffer, w):
    return buffer.value(w)


def window_true_grad(buffer, w):
    return buffer.true_grad(w)


def window_stoch_grad(buffer, w):
    return buffer.stoch_grad(w)
