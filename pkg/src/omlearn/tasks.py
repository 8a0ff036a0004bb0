"""Synthetic task families with closed-form losses, gradients and Hessian-vector products.

Every family is evaluated in a vectorised way: parameters are stacked as an
``(n, p)`` array, one row per task, and the point ``w`` may be a single ``(p,)``
vector or an ``(n, p)`` array of per-task points. The single-task helpers
(:func:`true_loss`, :func:`true_grad`, :func:`true_hvp`) sit on top of that.
"""

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._validation import (
    check_positive,
    check_positive_int,
    check_random_state,
    check_vector,
)
from .exceptions import DomainWarning, InputError, ParameterError

SIDES = ("train", "test")


@dataclass(frozen=True)
class LossConstants:
    """Lipschitz, smoothness, Hessian-Lipschitz and boundedness constants."""

    L: float
    beta: float
    H: float
    M: float

    def __post_init__(self):
        for name in ("L", "beta", "H", "M"):
            value = getattr(self, name)
            if not value >= 0:
                raise ParameterError(f"{name} must be >= 0, got {value!r}")

    def __or__(self, other):
        # elementwise max: constants valid for both operands
        return LossConstants(
            max(self.L, other.L),
            max(self.beta, other.beta),
            max(self.H, other.H),
            max(self.M, other.M),
        )

    def as_dict(self):
        return {"L": self.L, "beta": self.beta, "H": self.H, "M": self.M}


class QuadraticBowl:
    """Loss ``0.5 * ||w - c||^2`` with centre ``c`` (one centre per side)."""

    name = "QuadraticBowl"
    # std of the sampled data points around the centre in sampled-batch mode
    sample_std = 1.0

    def n_params(self, dim):
        return dim

    def loss(self, params, w):
        return 0.5 * np.sum((w - params) ** 2, axis=-1)

    def grad(self, params, w):
        return np.broadcast_to(w, np.broadcast_shapes(np.shape(w), params.shape)) - params

    def hvp(self, params, w, v):
        return np.broadcast_to(v, np.broadcast_shapes(np.shape(v), params.shape)).copy()

    def constants(self, params, radius):
        c = float(np.max(np.linalg.norm(np.atleast_2d(params), axis=-1)))
        r = radius + c
        return LossConstants(L=r, beta=1.0, H=0.0, M=0.5 * r * r)

    def generate(self, rng, dim, radius, center_mean=0.0, center_spread=1.0,
                 task_noise=0.0, layout="cluster"):
        if layout not in ("cluster", "antipodal"):
            raise ParameterError(f"unknown bowl layout {layout!r}")
        mean = np.asarray(center_mean, dtype=float)
        if mean.ndim == 0:
            mean = float(mean) * np.ones(dim) / math.sqrt(dim)
        if mean.shape != (dim,):
            raise ParameterError(f"center_mean must be a scalar or length-{dim} vector")
        if layout == "antipodal" and rng.random() < 0.5:
            mean = -mean
        center = mean + center_spread * rng.standard_normal(dim)
        train = _clip_to_ball(center + task_noise * rng.standard_normal(dim), radius)
        test = _clip_to_ball(center + task_noise * rng.standard_normal(dim), radius)
        return train, test

    def sample(self, params, k, rng):
        dim = params.shape[-1]
        return params + (self.sample_std / math.sqrt(dim)) * rng.standard_normal((k, dim))

    def batch_loss(self, params, samples, w):
        return float(np.mean(0.5 * np.sum((w - samples) ** 2, axis=-1))) - 0.5 * self.sample_std**2

    def batch_grad(self, params, samples, w):
        return w - samples.mean(axis=0)

    def batch_hvp(self, params, samples, w, v):
        return np.array(v, dtype=float)


class SineRegression:
    """Sum of ``K`` sinusoids ``sum_k A_k sin(k x + phi_k)`` fit by squared error.

    Parameters are laid out as ``(A_1, phi_1, ..., A_K, phi_K)``. With
    ``x ~ Uniform[-pi, pi]`` orthogonality gives the expected squared error
    ``0.5 * sum_k (A_k^2 + a_k^2 - 2 A_k a_k cos(phi_k - p_k))`` against a
    target with amplitudes ``a_k`` and phases ``p_k``.
    """

    name = "SineRegression"

    def n_params(self, dim):
        return 2 * dim

    @staticmethod
    def _split(arr):
        return arr[..., 0::2], arr[..., 1::2]

    def loss(self, params, w):
        amp, phase = self._split(w)
        a, p = self._split(params)
        return 0.5 * np.sum(amp**2 + a**2 - 2.0 * amp * a * np.cos(phase - p), axis=-1)

    def grad(self, params, w):
        amp, phase = self._split(w)
        a, p = self._split(params)
        delta = phase - p
        out = np.empty(np.broadcast_shapes(np.shape(w), params.shape))
        out[..., 0::2] = amp - a * np.cos(delta)
        out[..., 1::2] = amp * a * np.sin(delta)
        return out

    def hvp(self, params, w, v):
        amp, phase = self._split(w)
        a, p = self._split(params)
        va, vp = self._split(np.asarray(v, dtype=float))
        delta = phase - p
        cross = a * np.sin(delta)
        out = np.empty(np.broadcast_shapes(np.shape(w), params.shape, np.shape(v)))
        out[..., 0::2] = va + cross * vp
        out[..., 1::2] = cross * va + amp * a * np.cos(delta) * vp
        return out

    def hessian(self, params, w):
        """Dense Hessian of a single task; used only by tests and certificates."""
        n = w.shape[-1]
        eye = np.eye(n)
        return np.stack([self.hvp(params, w, eye[i]) for i in range(n)], axis=-1)

    def constants(self, params, radius):
        a, _ = self._split(np.atleast_2d(params))
        a = np.abs(a)
        a_norm = float(np.max(np.linalg.norm(a, axis=-1)))
        a_max = float(np.max(a))
        return LossConstants(
            L=math.hypot(radius + a_norm, a_max * radius),
            beta=a_max + max(1.0, radius * a_max),
            H=a_max * math.sqrt(3.0 + radius * radius),
            M=0.5 * (radius + a_norm) ** 2,
        )

    def generate(self, rng, dim, radius, amplitude_range=(0.1, 5.0),
                 phase_range=(0.0, math.pi), task_noise=0.0):
        lo_a, hi_a = amplitude_range
        lo_p, hi_p = phase_range
        if not (0 <= lo_a <= hi_a and lo_p <= hi_p):
            raise ParameterError("amplitude_range and phase_range must be ordered intervals")
        train = np.empty(2 * dim)
        train[0::2] = rng.uniform(lo_a, hi_a, size=dim)
        train[1::2] = rng.uniform(lo_p, hi_p, size=dim)
        test = train.copy()
        if task_noise > 0:
            test[0::2] = np.clip(train[0::2] + task_noise * rng.standard_normal(dim), lo_a, hi_a)
            test[1::2] = train[1::2] + task_noise * rng.standard_normal(dim)
        return train, test

    def sample(self, params, k, rng):
        return rng.uniform(-math.pi, math.pi, size=k)

    def _features(self, params, x, w):
        freq = np.arange(1, params.shape[-1] // 2 + 1)
        a, p = self._split(params)
        amp, phase = self._split(w)
        arg_w = np.outer(x, freq) + phase
        y = np.sin(np.outer(x, freq) + p) @ a
        return amp, np.sin(arg_w), np.cos(arg_w), np.sin(arg_w) @ amp - y

    def batch_loss(self, params, samples, w):
        *_, resid = self._features(params, samples, w)
        return float(np.mean(resid**2))

    def batch_grad(self, params, samples, w):
        amp, s, c, resid = self._features(params, samples, w)
        out = np.empty_like(w, dtype=float)
        out[0::2] = 2.0 * np.mean(resid[:, None] * s, axis=0)
        out[1::2] = 2.0 * np.mean(resid[:, None] * amp * c, axis=0)
        return out

    def batch_hvp(self, params, samples, w, v):
        amp, s, c, resid = self._features(params, samples, w)
        va, vp = self._split(np.asarray(v, dtype=float))
        jv = s @ va + (amp * c) @ vp
        out = np.empty_like(w, dtype=float)
        out[0::2] = 2.0 * np.mean(jv[:, None] * s + resid[:, None] * c * vp, axis=0)
        out[1::2] = 2.0 * np.mean(
            jv[:, None] * amp * c + resid[:, None] * (c * va - amp * s * vp), axis=0
        )
        return out


FAMILIES = {cls.name: cls() for cls in (QuadraticBowl, SineRegression)}


def get_family(family):
    if not isinstance(family, str):
        return family
    for name, obj in FAMILIES.items():
        if family.lower() == name.lower():
            return obj
    raise ParameterError(f"unknown task family {family!r}; choose from {sorted(FAMILIES)}")


def _clip_to_ball(x, radius):
    norm = float(np.linalg.norm(x))
    return x * (radius / norm) if norm > radius else x


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TaskSpec:
    """One task: train and test parameter vectors of a family, plus its domain radius."""

    family: str
    dim: int
    train_params: np.ndarray
    test_params: np.ndarray
    domain_radius: float
    seed: int | None = None
    generator: dict = field(default_factory=dict)

    def __post_init__(self):
        fam = get_family(self.family)
        object.__setattr__(self, "family", fam.name)
        check_positive_int(self.dim, "dim")
        check_positive(self.domain_radius, "domain_radius")
        p = fam.n_params(self.dim)
        for side in SIDES:
            arr = _frozen(getattr(self, f"{side}_params"))
            if arr.shape != (p,):
                raise ParameterError(
                    f"{side}_params of a {fam.name} task with dim={self.dim} "
                    f"must have shape ({p},), got {arr.shape}"
                )
            object.__setattr__(self, f"{side}_params", arr)

    @property
    def n_params(self):
        return get_family(self.family).n_params(self.dim)

    def params(self, side):
        if side not in SIDES:
            raise ParameterError(f"side must be one of {SIDES}, got {side!r}")
        return self.train_params if side == "train" else self.test_params

    def to_record(self):
        return {
            "family": self.family,
            "dim": self.dim,
            "train_params": self.train_params.tolist(),
            "test_params": self.test_params.tolist(),
            "radius": self.domain_radius,
            "seed": self.seed,
        }

    @classmethod
    def from_record(cls, record):
        try:
            return cls(
                family=record["family"],
                dim=int(record["dim"]),
                train_params=record["train_params"],
                test_params=record["test_params"],
                domain_radius=float(record["radius"]),
                seed=record.get("seed"),
            )
        except KeyError as exc:
            raise InputError(f"task record missing field {exc}") from None


def make_task(family, dim, rng=None, domain_radius=1.0, **generator):
    """Draw a task of ``family`` from its generator distribution.

    ``rng`` may be an int seed (recorded on the task), a ``Generator`` or None.
    Generator keyword arguments are family specific; see the ``generate``
    method of :class:`QuadraticBowl` and :class:`SineRegression`.
    """
    fam = get_family(family)
    dim = check_positive_int(dim, "dim")
    domain_radius = check_positive(domain_radius, "domain_radius")
    seed = int(rng) if isinstance(rng, (int, np.integer)) else None
    train, test = fam.generate(check_random_state(rng), dim, domain_radius, **generator)
    return TaskSpec(fam.name, dim, train, test, domain_radius, seed=seed, generator=dict(generator))


def make_stream(family, dim, n_tasks, seed=None, domain_radius=1.0, **generator):
    """A reproducible list of ``n_tasks`` independent tasks."""
    n_tasks = check_positive_int(n_tasks, "n_tasks")
    task_seeds = np.random.default_rng(seed).integers(0, 2**32, size=n_tasks)
    return [make_task(family, dim, int(s), domain_radius, **generator) for s in task_seeds]


def write_stream(tasks, path):
    with open(path, "w") as fh:
        for task in tasks:
            fh.write(json.dumps(task.to_record()) + "\n")


def read_stream(path):
    tasks = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                tasks.append(TaskSpec.from_record(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
    if not tasks:
        raise InputError(f"{path}: stream file holds no tasks")
    return tasks


def in_domain(task, w):
    return float(np.linalg.norm(w)) <= task.domain_radius * (1 + 1e-12)


def _checked_point(task, w):
    w = check_vector(w, dim=task.n_params)
    if not in_domain(task, w):
        warnings.warn(
            f"||w|| = {np.linalg.norm(w):.4g} exceeds the certified radius "
            f"{task.domain_radius:.4g}; loss constants no longer hold",
            DomainWarning,
            stacklevel=3,
        )
    return w


def true_loss(task, side, w):
    w = _checked_point(task, w)
    return float(get_family(task.family).loss(task.params(side), w))


def true_grad(task, side, w):
    w = _checked_point(task, w)
    return get_family(task.family).grad(task.params(side), w)


def true_hvp(task, side, w, v):
    w = _checked_point(task, w)
    v = check_vector(v, "v", dim=task.n_params)
    return get_family(task.family).hvp(task.params(side), w, v)


def constants_of(task, radius=None):
    """Constants valid for both sides of ``task`` on the ball of ``radius``.

    ``radius`` defaults to the task's own domain radius.
    """
    radius = task.domain_radius if radius is None else check_positive(radius, "radius")
    fam = get_family(task.family)
    return fam.constants(task.train_params, radius) | fam.constants(task.test_params, radius)


def stream_constants(tasks, radius=None):
    """Elementwise max of :func:`constants_of` over a stream."""
    out = None
    for task in tasks:
        c = constants_of(task, radius)
        out = c if out is None else out | c
    if out is None:
        raise ParameterError("stream_constants needs at least one task")
    return out


class GradientOracle:
    """Stochastic gradient of one side of a task: exact gradient plus Gaussian noise.

    The noise is isotropic with per-coordinate variance ``sigma**2 / p`` so that
    its expected squared norm is exactly ``sigma**2``. Each call draws fresh
    noise from the oracle's own generator.
    """

    def __init__(self, task, side="test", sigma=0.0, rng=None):
        if side not in SIDES:
            raise ParameterError(f"side must be one of {SIDES}, got {side!r}")
        self.task = task
        self.side = side
        self.sigma = check_positive(sigma, "sigma", strict=False)
        self.rng = check_random_state(rng)

    def noise(self):
        p = self.task.n_params
        if self.sigma == 0:
            return np.zeros(p)
        return (self.sigma / math.sqrt(p)) * self.rng.standard_normal(p)

    def grad(self, w):
        return true_grad(self.task, self.side, w) + self.noise()


def oracle_grad(oracle, w):
    return oracle.grad(w)


def sample_batch(task, side, k, rng):
    """Draw ``k`` data samples from one side of ``task`` for sampled-batch evaluation."""
    k = check_positive_int(k, "k")
    return get_family(task.family).sample(task.params(side), k, check_random_state(rng))
