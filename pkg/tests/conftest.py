import numpy as np
import pytest

from omlearn.tasks import TaskSpec, make_task


def central_diff_grad(f, x, h=1e-5):
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        out[i] = (f(x + e) - f(x - e)) / (2 * h)
    return out


def central_diff_hvp(grad, x, v, h=1e-5):
    return (grad(x + h * v) - grad(x - h * v)) / (2 * h)


def random_ball_point(rng, dim, radius):
    """Uniform point in the ball of ``radius``."""
    x = rng.standard_normal(dim)
    x /= np.linalg.norm(x)
    return x * radius * rng.random() ** (1.0 / dim)


def bowl(train, test=None, radius=10.0):
    train = np.asarray(train, dtype=float)
    test = train if test is None else np.asarray(test, dtype=float)
    return TaskSpec("QuadraticBowl", train.size, train, test, radius)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def sine_task():
    return make_task("SineRegression", 2, 3, domain_radius=6.0)


@pytest.fixture
def bowl_task():
    return make_task("QuadraticBowl", 4, 3, domain_radius=10.0, center_mean=2.0, task_noise=0.5)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
