"""Local-regret bookkeeping, the high-probability regret bound and lemma checkers."""

import math
from dataclasses import asdict, dataclass

import numpy as np

from ._validation import check_positive, check_positive_int, check_unit_interval, check_vector
from .exceptions import InputError, ParameterError, StateError
from .adapter import meta_constants
from .smoothing import WindowBuffer
from .tasks import constants_of, stream_constants

TRACE_COLUMNS = (
    "t",
    "F_t_at_wt",
    "F_t_at_wt1",
    "grad_norm_sq",
    "running_regret",
    "b_next",
    "eff_step",
    "domain_flag",
    "test_loss",
)


class RegretLedger:
    """Per-round record of the window gradient norm and related diagnostics.

    ``running_regret`` is the sum of ``||grad F_{t,m}(w_t)||^2`` over recorded
    rounds, i.e. the local regret so far.
    """

    def __init__(self):
        self.rows = []
        self.running_regret = 0.0

    def __len__(self):
        return len(self.rows)

    def record_round(self, t, grad_norm_sq, *, F_t_at_wt=math.nan, F_t_at_wt1=math.nan,
                     b_next=math.nan, eff_step=math.nan, domain_flag=False,
                     test_loss=math.nan):
        if t != len(self.rows) + 1:
            raise StateError(f"expected round {len(self.rows) + 1}, got {t}")
        grad_norm_sq = float(grad_norm_sq)
        if not (math.isfinite(grad_norm_sq) and grad_norm_sq >= 0):
            raise ParameterError(f"grad_norm_sq must be finite and >= 0, got {grad_norm_sq}")
        self.running_regret += grad_norm_sq
        self.rows.append({
            "t": int(t),
            "F_t_at_wt": float(F_t_at_wt),
            "F_t_at_wt1": float(F_t_at_wt1),
            "grad_norm_sq": grad_norm_sq,
            "running_regret": self.running_regret,
            "b_next": float(b_next),
            "eff_step": float(eff_step),
            "domain_flag": bool(domain_flag),
            "test_loss": float(test_loss),
        })
        return self

    def column(self, name):
        return np.array([row[name] for row in self.rows], dtype=float)

    def regret_curve(self):
        """``R_m(t)`` for ``t = 1..T``."""
        return self.column("running_regret")


def record_round(ledger, t, true_grad_norm_sq, **fields):
    return ledger.record_round(t, true_grad_norm_sq, **fields)


@dataclass(frozen=True)
class BoundInputs:
    T: int
    m: int
    eta: float
    b1: float
    delta: float
    sigma: float
    M: float
    L_prime: float
    beta_prime: float

    def __post_init__(self):
        check_positive_int(self.T, "T")
        check_positive_int(self.m, "m")
        if self.m > self.T:
            raise ParameterError(f"window m={self.m} must not exceed T={self.T}")
        check_positive(self.eta, "eta")
        check_positive(self.b1, "b1")
        check_unit_interval(self.delta, "delta")
        for name in ("sigma", "M", "L_prime", "beta_prime"):
            check_positive(getattr(self, name), name, strict=False)

    def as_dict(self):
        return asdict(self)


def meta_certificate(tasks, alpha):
    """Constants of the meta-losses of a stream: ``(base, radius, (M, L', beta'))``.

    Base constants are certified on a ball containing every ``w`` of norm at
    most the domain radius together with its adapted point ``U(w)``. For bowls
    with ``alpha <= 1`` the adapted point is a convex combination of ``w`` and
    the train centre, so the domain ball itself suffices; otherwise the ball is
    widened by ``alpha`` times the largest Lipschitz constant.
    """
    tasks = list(tasks)
    radius = max(task.domain_radius for task in tasks)
    if not (alpha <= 1 and all(task.family == "QuadraticBowl" for task in tasks)):
        radius += alpha * max(constants_of(task).L for task in tasks)
    base = stream_constants(tasks, radius)
    return base, radius, meta_constants(base, alpha)


def bound_inputs_for(tasks, m, eta, b1, delta, sigma, alpha):
    _, _, (M, L_prime, beta_prime) = meta_certificate(tasks, alpha)
    return BoundInputs(T=len(tasks), m=m, eta=eta, b1=b1, delta=delta, sigma=sigma,
                       M=M, L_prime=L_prime, beta_prime=beta_prime)


def theorem1_C(inputs):
    T, m, eta, b1, s = inputs.T, inputs.m, inputs.eta, inputs.b1, inputs.sigma
    drift = 4.0 * inputs.M * T / (eta * m)
    curvature = (eta * inputs.beta_prime + 4.0 * s / math.sqrt(m)) / 2.0
    growth = math.log1p(2.0 * (s * s / m + inputs.L_prime**2) * T / (b1 * b1))
    return drift + curvature * growth


def theorem1_bound(inputs):
    """High-probability upper bound on ``R_m(T)``, holding with probability ``1 - delta``."""
    C = theorem1_C(inputs)
    d = inputs.delta
    return (
        48.0 * C * C / (d * d)
        + 8.0 * inputs.b1 * C / d
        + 8.0 * inputs.sigma * C * math.sqrt(inputs.T) / (d**1.5 * math.sqrt(inputs.m))
    )


def recompute_regret(tasks, iterates, m, cfg=None):
    """Rebuild the per-round squared window-gradient norms from a stream and its iterates.

    ``iterates[t-1]`` must be the point ``w_t`` at which round ``t`` was played.
    """
    if len(iterates) < len(tasks):
        raise InputError("need one iterate per task")
    buffer = WindowBuffer(m, cfg)
    out = np.empty(len(tasks))
    for i, task in enumerate(tasks):
        buffer.push(task)
        g = buffer.true_grad(iterates[i])
        out[i] = g @ g
    return out


@dataclass
class Lemma2Report:
    m: int
    n_present: int
    n_draws: int
    sigma: float
    mean_error_max: float
    mean_tolerance: float
    second_moment: float
    variance_bound: float
    unbiased: bool
    variance_ok: bool

    @property
    def passed(self):
        return self.unbiased and self.variance_ok

    def as_dict(self):
        return {**asdict(self), "passed": self.passed}


def check_lemma2(buffer, w, n_draws=10_000, slack=1.1):
    """Monte-Carlo check that the window estimate is unbiased with variance ``<= sigma^2/m``.

    Every draw queries each held oracle once with fresh noise. The mean check
    allows ``4 (sigma/sqrt(m)) / sqrt(n_draws)`` per coordinate, the variance
    check ``slack * sigma^2 / m`` with ``sigma`` the largest oracle noise scale.
    """
    n_draws = check_positive_int(n_draws, "n_draws")
    exact = buffer.task_grads(w)
    target = exact.sum(axis=0) / buffer.m
    draws = np.stack([buffer.stoch_grad(w, task_grads=exact) for _ in range(n_draws)])
    err = draws - target
    sigma = max(oracle.sigma for _, oracle in buffer.entries)
    bound = sigma**2 / buffer.m
    tol = 4.0 * (sigma / math.sqrt(buffer.m)) / math.sqrt(n_draws)
    mean_err = float(np.max(np.abs(err.mean(axis=0))))
    second = float(np.mean(np.sum(err**2, axis=1)))
    return Lemma2Report(
        m=buffer.m,
        n_present=len(buffer),
        n_draws=n_draws,
        sigma=sigma,
        mean_error_max=mean_err,
        mean_tolerance=tol,
        second_moment=second,
        variance_bound=bound,
        unbiased=mean_err <= tol,
        variance_ok=second <= slack * bound,
    )


@dataclass
class Lemma3Report:
    T: int
    m: int
    M: float
    sums: list
    mean: float
    stderr: float
    bound: float

    @property
    def exceeded(self):
        return self.mean > self.bound

    def as_dict(self):
        return {**asdict(self), "exceeded": self.exceeded}


def _columns(trace, *names):
    if isinstance(trace, RegretLedger):
        trace = trace.rows
    if isinstance(trace, dict):
        cols = trace
    else:
        rows = list(trace)
        cols = {n: [row[n] for row in rows] for n in names if rows and n in rows[0]}
    missing = [n for n in names if n not in cols]
    if missing:
        raise InputError(f"trace is missing column(s) {missing}")
    out = [np.asarray(cols[n], dtype=float) for n in names]
    if any(np.isnan(col).any() for col in out):
        raise InputError(f"trace has empty entries in {names}")
    return out


def check_lemma3(traces, M, m):
    """Seed-averaged telescoped sum ``sum_t F_t(w_t) - F_t(w_{t+1})`` against ``4MT/m``.

    ``traces`` is a list of completed runs, each a :class:`RegretLedger`, a list
    of row dicts or a dict of columns holding ``F_t_at_wt`` and ``F_t_at_wt1``.
    """
    if isinstance(traces, (RegretLedger, dict)):
        traces = [traces]
    sums, lengths = [], set()
    for trace in traces:
        f_now, f_next = _columns(trace, "F_t_at_wt", "F_t_at_wt1")
        lengths.add(len(f_now))
        sums.append(float(np.sum(f_now - f_next)))
    if not sums:
        raise InputError("check_lemma3 needs at least one trace")
    if len(lengths) != 1:
        raise InputError(f"traces have different lengths {sorted(lengths)}")
    T = lengths.pop()
    m = check_positive_int(m, "m")
    arr = np.array(sums)
    stderr = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
    return Lemma3Report(
        T=T, m=m, M=float(M), sums=sums, mean=float(arr.mean()), stderr=stderr,
        bound=4.0 * M * T / m,
    )


def _h_and_integral(h):
    if h == "inverse":
        return (lambda x: 1.0 / x), (lambda lo, hi: math.log(hi / lo) if hi > lo else 0.0), True
    if h == "inverse_sqrt":
        return (lambda x: 1.0 / math.sqrt(x)), (lambda lo, hi: 2.0 * (math.sqrt(hi) - math.sqrt(lo))), True
    if callable(h):
        from scipy.integrate import quad

        return h, (lambda lo, hi: quad(h, lo, hi, limit=200)[0] if hi > lo else 0.0), False
    raise ParameterError(f"h must be 'inverse', 'inverse_sqrt' or a callable, got {h!r}")


def check_lemma4(h, a_values):
    """Both sides of ``sum_t a_t h(a_0 + ... + a_t) <= int_{a_0}^{a_0+...+a_T} h(x) dx``.

    ``a_values`` is ``[a_0, a_1, ..., a_T]``. Returns ``(lhs, rhs)``.
    """
    a = check_vector(a_values, "a_values")
    if np.any(a < 0):
        raise ParameterError("a_values must be nonnegative")
    fn, integral, needs_positive = _h_and_integral(h)
    if needs_positive and a[0] <= 0:
        raise ParameterError(f"a_0 must be > 0 for h={h!r}")
    partial = np.cumsum(a)
    lhs = math.fsum(a[t] * fn(partial[t]) for t in range(1, len(a)) if a[t] > 0)
    return lhs, integral(float(a[0]), float(partial[-1]))
