"""AdaGrad-Norm: gradient descent with one scalar, norm-accumulating step size."""

import math

import numpy as np

from ._validation import check_positive, check_vector
from .exceptions import NumericError


class AdaGradNorm:
    """Scalar-accumulator adaptive step.

    Each step first grows the accumulator, ``b^2 <- b^2 + ||G||^2``, and then
    moves ``w <- w - (eta / b) * G`` with the updated ``b``. The accumulator is
    stored squared.
    """

    def __init__(self, w, eta=1.0, b1=1.0):
        self.eta = check_positive(eta, "eta")
        self.b1 = check_positive(b1, "b1")
        self.w = check_vector(w).copy()
        self.b_sq = self.b1**2
        self.n_steps = 0

    def step(self, G):
        G = check_vector(G, "G", dim=self.w.shape[0])
        self.b_sq += float(G @ G)
        self.w = self.w - (self.eta / math.sqrt(self.b_sq)) * G
        if not np.all(np.isfinite(self.w)):
            raise NumericError("iterate became non-finite")
        self.n_steps += 1
        return self.w

    @property
    def b(self):
        return math.sqrt(self.b_sq)

    def effective_step(self):
        return self.eta / math.sqrt(self.b_sq)


def step(state, G):
    state.step(G)
    return state


def effective_step(state):
    return state.effective_step()
