import numpy as np
import pytest
from sklearn.base import clone

from omlearn.adapter import AdapterConfig, meta_loss
from omlearn.exceptions import ParameterError
from omlearn.learner import OnlineMetaLearner, default_window
from omlearn.smoothing import WindowBuffer
from omlearn.tasks import make_stream

from conftest import bowl


@pytest.fixture(scope="module")
def stream():
    return make_stream("QuadraticBowl", 3, 30, seed=5, domain_radius=10.0, center_mean=3.0, task_noise=0.5)


def test_default_window():
    assert [default_window(n) for n in (1, 4, 5, 200)] == [1, 1, 2, 50]


def test_fit_shapes(stream):
    learner = OnlineMetaLearner(sigma=0.5, random_state=0).fit(stream)
    assert learner.window_ == 8
    assert len(learner.iterates_) == 31
    assert len(learner.ledger_) == 30
    np.testing.assert_array_equal(learner.coef_, learner.iterates_[-1])


def test_round_matches_manual_loop(stream):
    learner = OnlineMetaLearner(window=5, sigma=0.0).fit(stream)
    buf = WindowBuffer(5, AdapterConfig(0.1))
    w, b_sq = np.zeros(3), 1.0
    for t, task in enumerate(stream):
        buf.push(task)
        G = buf.true_grad(w)
        row = learner.ledger_.rows[t]
        assert row["test_loss"] == pytest.approx(meta_loss(w, task, AdapterConfig(0.1)), rel=1e-12)
        assert row["grad_norm_sq"] == pytest.approx(G @ G, rel=1e-12)
        b_sq += G @ G
        w = w - G / np.sqrt(b_sq)
        assert row["F_t_at_wt1"] == pytest.approx(buf.value(w), rel=1e-12)
        assert row["b_next"] == pytest.approx(np.sqrt(b_sq), rel=1e-12)
    np.testing.assert_allclose(learner.coef_, w, rtol=1e-12)


def test_partial_fit_equals_fit(stream):
    a = OnlineMetaLearner(window=6, sigma=0.5, random_state=3).fit(stream)
    b = OnlineMetaLearner(window=6, sigma=0.5, random_state=3)
    for task in stream:
        b.partial_fit(task)
    np.testing.assert_array_equal(a.coef_, b.coef_)
    assert a.regret_ == b.regret_


def test_partial_fit_needs_window(stream):
    with pytest.raises(ParameterError):
        OnlineMetaLearner().partial_fit(stream[0])


def test_seeded_runs_repeat(stream):
    a = OnlineMetaLearner(sigma=1.0, random_state=11).fit(stream)
    b = OnlineMetaLearner(sigma=1.0, random_state=11).fit(stream)
    c = OnlineMetaLearner(sigma=1.0, random_state=12).fit(stream)
    assert a.coef_.tobytes() == b.coef_.tobytes()
    assert not np.array_equal(a.coef_, c.coef_)


def test_stationary_start_has_zero_regret():
    c = np.array([2.0, -1.0, 0.5])
    learner = OnlineMetaLearner(window=4, sigma=0.0, w_init=c).fit([bowl(c)] * 12)
    assert learner.regret_ == 0.0
    np.testing.assert_array_equal(learner.coef_, c)


def test_transform_and_score(stream):
    learner = OnlineMetaLearner(window=5).fit(stream)
    adapted = learner.transform(stream[:3])
    assert adapted.shape == (3, 3)
    expected = -np.mean([meta_loss(learner.coef_, t, learner.adapter_) for t in stream[:3]])
    assert learner.score(stream[:3]) == pytest.approx(expected, rel=1e-14)


def test_domain_flag_recorded():
    task = bowl([40.0, 0.0], radius=1.0)
    learner = OnlineMetaLearner(window=1, eta=10.0, w_init=[5.0, 0.0]).fit([task, task])
    assert learner.ledger_.rows[0]["domain_flag"] is True


def test_sampled_inner_mode_runs(stream):
    learner = OnlineMetaLearner(window=4, inner_mode="sampled", batch_size=5, random_state=0).fit(stream[:8])
    assert np.all(np.isfinite(learner.coef_))


def test_sklearn_params():
    learner = OnlineMetaLearner(alpha=0.2, window=3)
    params = learner.get_params()
    assert params["alpha"] == 0.2 and params["window"] == 3 and params["eta"] == 1.0
    other = clone(learner).set_params(eta=0.5)
    assert other.eta == 0.5 and learner.eta == 1.0
