import json
import math
import warnings

import numpy as np
import pytest

from conftest import constant_trajectory
from scldmd.data import Dataset, SampledTrajectory
from scldmd.decomposition import PinvFactors
from scldmd.errors import DivergenceError, FormatError
from scldmd.gram import assemble
from scldmd.kernels import KernelConfig
from scldmd.model import (
    IdentifiedModel,
    identify,
    load_model,
    model_from_dict,
    model_to_dict,
    occupation_kernel,
    predict,
    save_model,
)
from scldmd.signals import parse_expression

CFG = KernelConfig(11.0, (10.0, 10.0))

# 201-point scipy Simpson of the re-simulated trajectory from (0, 0), seed 0, at x = (1, 1)
DENSE_BETA_112 = np.array([0.9196248731606752, -0.18840974284145326])


def _model(ds, d_matrix, n_modes=None, cfg=CFG):
    M = len(ds)
    factors = PinvFactors(np.eye(M), np.ones(M), np.eye(M), M)
    return IdentifiedModel(cfg, np.asarray(d_matrix, dtype=float), factors, ds, n_modes)


def test_occupation_kernel_constant():
    x0, c, T = np.array([0.5, 1.0]), 0.8, 2.0
    x = np.array([-1.0, 0.3])
    out = occupation_kernel(x, constant_trajectory(x0, c, T), CFG)
    np.testing.assert_allclose(out, T * np.exp(x0 @ x / 10.0) * np.array([1.0, c]), rtol=1e-13)


def test_occupation_kernel_zero_control():
    t = np.array([0.0, 0.5, 1.0])
    s = np.array([[0.0, 1.0], [1.0, 1.0], [2.0, 0.0]])
    tr = SampledTrajectory(t, s, np.zeros((3, 1)))
    x = np.array([1.0, 2.0])
    expected = 0.5 / 3 * (np.exp(0.2) + 4 * np.exp(0.3) + np.exp(0.2))
    np.testing.assert_allclose(occupation_kernel(x, tr, CFG), [expected, 0.0], rtol=1e-14)


def test_occupation_kernel_higher_order():
    x0, c, T = np.array([0.5, 1.0]), 0.8, 2.0
    tr = constant_trajectory(x0, c, T)
    x = np.array([0.2, 0.2])
    k = np.exp(x0 @ x / 10.0)
    np.testing.assert_allclose(occupation_kernel(x, tr, CFG, order=2), T**2 / 2 * k * np.array([1, c]), rtol=1e-13)
    np.testing.assert_allclose(occupation_kernel(x, tr, CFG, order=3), T**3 / 6 * k * np.array([1, c]), rtol=1e-13)
    with pytest.raises(ValueError):
        occupation_kernel(x, tr, CFG, order=0)


def test_occupation_kernel_dense_oracle(duffing_run):
    tr = duffing_run.dataset[112]
    np.testing.assert_allclose(occupation_kernel([1.0, 1.0], tr, CFG), DENSE_BETA_112, rtol=1e-4)


def test_beta_paths_agree(small_dataset):
    model = _model(small_dataset, np.zeros((2, 9)))
    x = np.array([0.3, -0.4])
    beta = model.beta(x)
    for i in range(len(small_dataset)):
        np.testing.assert_allclose(model.beta_row(x, i), beta[i], rtol=1e-13)


def test_zero_endpoint_matrix_gives_zero_field(small_dataset):
    model = _model(small_dataset, np.zeros((2, 9)))
    assert np.array_equal(model.vector_field([0.5, 0.5]), np.zeros((2, 2)))


def test_rank_zero_gives_zero_field(small_dataset):
    model = _model(small_dataset, np.ones((2, 9)), n_modes=0)
    assert model.effective_rank == 0
    assert np.array_equal(model.vector_field([0.5, 0.5]), np.zeros((2, 2)))


def test_field_accessors(duffing_run):
    model = duffing_run.model
    x = np.array([0.3, -0.2])
    Y = model.vector_field(x)
    assert Y.shape == (2, 2)
    np.testing.assert_array_equal(model.drift(x), Y[:, 0])
    np.testing.assert_array_equal(model.control_matrix(x), Y[:, 1:])
    np.testing.assert_allclose(model.rhs(x, 0.7), Y[:, 0] + 0.7 * Y[:, 1], rtol=1e-14)
    assert model.modes.shape == (2, 225)


def test_duffing_origin(duffing_run):
    model = duffing_run.model
    assert np.linalg.norm(model.drift([0.0, 0.0])) <= 1e-2
    assert np.linalg.norm(model.control_matrix([0.0, 0.0])[:, 0] - [0.0, 2.0]) <= 1e-2


def test_zero_model_prediction_constant(small_dataset):
    model = _model(small_dataset, np.zeros((2, 9)))
    out = predict(model, [0.4, -0.1], lambda t: math.sin(t), 2.0, 0.1)
    assert np.all(out.states == [0.4, -0.1])
    assert len(out) == 21 and out.controls[5, 0] == pytest.approx(math.sin(0.5))


class _LinearField(IdentifiedModel):
    def vector_field(self, x):
        return np.array([[float(np.ravel(x)[0]), 0.0]])


def test_predict_exponential():
    t = np.linspace(0, 1, 3)
    ds = Dataset((SampledTrajectory(t, t[:, None], np.zeros((3, 1))),))
    model = _LinearField(KernelConfig(1.0, (1.0, 1.0)), np.zeros((1, 1)), PinvFactors(np.eye(1), np.ones(1), np.eye(1), 1), ds)
    out = predict(model, [1.0], None, 1.0, 0.01)
    assert out.states[-1, 0] == pytest.approx(math.e, abs=1e-6)


def test_predict_validates(small_dataset):
    model = _model(small_dataset, np.zeros((2, 9)))
    with pytest.raises(ValueError):
        predict(model, [1.0], None, 1.0, 0.1)


def test_divergence_reports_time(small_dataset):
    model = _model(small_dataset, np.full((2, 9), 50.0))
    with pytest.raises(DivergenceError, match="t = ") as info:
        predict(model, [1.0, 1.0], 1.0, 100.0, 0.5)
    assert info.value.time is not None


def test_round_trip_exact(duffing_run, tmp_path):
    model = duffing_run.model
    save_model(model, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    rng = np.random.default_rng(7)
    for x in rng.uniform(-2, 2, size=(10, 2)):
        assert np.array_equal(model.vector_field(x), back.vector_field(x))
    assert back.rank == model.rank and back.training.ids == model.training.ids


def test_reloaded_model_reproduces_prediction(duffing_run, tmp_path):
    save_model(duffing_run.model, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    cfg = duffing_run.config
    again = predict(back, cfg.x0, parse_expression(cfg.prediction_input), cfg.horizon, cfg.prediction_dt)
    assert np.array_equal(again.states, duffing_run.prediction.states)


def test_bad_magic(small_dataset, tmp_path):
    doc = model_to_dict(_model(small_dataset, np.zeros((2, 9))))
    doc["magic"] = "SCLDMD0"
    (tmp_path / "m.json").write_text(json.dumps(doc))
    with pytest.raises(FormatError, match="magic"):
        load_model(tmp_path / "m.json")


def test_bad_version_and_corruption(small_dataset):
    doc = model_to_dict(_model(small_dataset, np.zeros((2, 9))))
    with pytest.raises(FormatError):
        model_from_dict({**doc, "format_version": 99})
    with pytest.raises(FormatError):
        model_from_dict({**doc, "w": [[1.0]]})
    with pytest.raises(FormatError):
        model_from_dict({k: v for k, v in doc.items() if k != "d_matrix"})


def test_unreadable_model(tmp_path):
    with pytest.raises(FormatError):
        load_model(tmp_path / "absent.json")
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(FormatError):
        load_model(tmp_path / "bad.json")


def test_identify_warns_on_lossy_truncation(duffing_run):
    gram = assemble(duffing_run.dataset, CFG)
    with pytest.warns(RuntimeWarning, match="G P G"):
        identify(duffing_run.dataset, CFG, 1e-10, gram=gram)
    with warnings.catch_warnings():
        warnings.simplefilter("error", RuntimeWarning)
        identify(duffing_run.dataset.subset(range(9)), CFG, 1e-6)


def test_n_modes_truncates(duffing_run):
    gram = assemble(duffing_run.dataset, CFG)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        model = identify(duffing_run.dataset, CFG, 1e-14, n_modes=10, gram=gram)
    assert model.effective_rank == 10 and model.rank == duffing_run.model.rank


def test_model_validation(small_dataset):
    with pytest.raises(ValueError):
        _model(small_dataset, np.zeros((2, 8)))
    with pytest.raises(ValueError):
        _model(small_dataset, np.zeros((2, 9)), cfg=KernelConfig(1.0, (1.0,)))
    with pytest.raises(ValueError):
        _model(small_dataset, np.zeros((2, 9)), n_modes=-1)
