import numpy as np
import pytest
from sklearn.base import clone

from omlearn.baselines import (
    BaselineConfig,
    TrainFromScratch,
    TrainOnEverything,
    make_baseline,
    run_baseline,
    train_mixture,
)
from omlearn.exceptions import ParameterError
from omlearn.tasks import make_stream

from conftest import bowl


def test_tfs_recovers_train_centre():
    task = bowl([1.0, -2.0], [1.5, -2.0])
    model = TrainFromScratch(inner_steps=200).fit([task])
    np.testing.assert_allclose(model.solutions_[0], [1.0, -2.0], atol=1e-12)
    assert model.test_losses_[0] == pytest.approx(0.5 * 0.25, rel=1e-9)


def test_tfs_exact_when_train_equals_test():
    losses = run_baseline([bowl([2.0, 1.0]), bowl([-1.0, 0.5])], BaselineConfig("TFS", inner_steps=200))
    np.testing.assert_allclose(losses, 0.0, atol=1e-20)


def test_toe_matches_tfs_on_identical_tasks():
    stream = [bowl([1.0, 2.0, -1.0])] * 10
    tfs = run_baseline(stream, BaselineConfig("TFS", inner_steps=300))
    toe = run_baseline(stream, BaselineConfig("TOE", inner_steps=300))
    np.testing.assert_allclose(toe, tfs, atol=1e-12)


def test_toe_negative_transfer_on_antipodal_centres():
    c = np.array([3.0, 4.0])
    stream = [bowl(c if t % 2 == 0 else -c) for t in range(40)]
    toe = TrainOnEverything(inner_steps=300).fit(stream)
    tfs = run_baseline(stream, BaselineConfig("TFS", inner_steps=300))
    # mixture minimiser of ±c pooled is the origin up to an O(1/t) imbalance
    late = np.array(toe.solutions_[10:])
    assert np.max(np.linalg.norm(late, axis=1)) <= 5.0 / 10
    assert np.mean(toe.test_losses_[10:]) == pytest.approx(0.5 * 25.0, rel=0.1)
    assert np.mean(toe.test_losses_) >= np.mean(tfs)


def test_toe_buffer_cap():
    stream = [bowl([float(t), 0.0]) for t in range(6)]
    model = TrainOnEverything(buffer_cap=2).fit(stream)
    assert [t.train_params[0] for t in model.history_] == [4.0, 5.0]


def test_train_mixture_converges_to_mean():
    params = np.array([[1.0, 0.0], [3.0, 2.0]])
    w = train_mixture("QuadraticBowl", params, np.zeros(2), radius=10.0, inner_steps=200)
    np.testing.assert_allclose(w, [2.0, 1.0], atol=1e-12)


def test_transform_does_not_grow_history():
    stream = make_stream("QuadraticBowl", 2, 5, seed=0, domain_radius=5.0)
    model = TrainOnEverything().fit(stream)
    out = model.transform(stream[:2])
    assert out.shape == (2, 2) and len(model.history_) == 5


def test_sklearn_params_roundtrip():
    model = TrainOnEverything(inner_steps=7, buffer_cap=3)
    assert model.get_params() == {"inner_steps": 7, "step_size": None, "buffer_cap": 3, "w_init": None}
    assert clone(model).set_params(inner_steps=9).inner_steps == 9


@pytest.mark.parametrize("kw", [{"kind": "XYZ"}, {"inner_steps": 0}, {"step_size": -1.0},
                                {"toe_buffer_cap": 0}])
def test_config_errors(kw):
    with pytest.raises(ParameterError):
        BaselineConfig(**kw)


def test_make_baseline_kinds():
    assert isinstance(make_baseline(BaselineConfig("TFS")), TrainFromScratch)
    toe = make_baseline(BaselineConfig("TOE", toe_buffer_cap=4))
    assert isinstance(toe, TrainOnEverything) and toe.buffer_cap == 4
