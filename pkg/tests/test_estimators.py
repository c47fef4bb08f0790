import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import FunctionTransformer

from shapemap.estimators import CollapseEstimator, ShapeTraceTransformer


def test_transformer_lemniscate(lemniscate):
    X = np.array([[1.0, 0.2, 1.5], [2.0, -0.3, 0.8]])
    tr = ShapeTraceTransformer(lemniscate, direction="t").fit(X)
    out = tr.transform(X)
    assert out.shape == (2, 3)
    assert np.allclose(out[:, 0], 1 / np.tan(X[:, 0]), atol=1e-12)
    assert np.allclose(out[:, 1], out[:, 0], atol=1e-12)
    assert np.allclose(out[:, 2], 0, atol=1e-12)
    assert list(tr.get_feature_names_out()) == ["trace", "traceform_t", "traceform_theta"]


def test_transformer_by_path_and_clone():
    tr = ShapeTraceTransformer("exp2.cfg")
    params = tr.get_params()
    assert params == {"config": "exp2.cfg", "direction": None}
    other = clone(tr).set_params(direction="x1")
    out = other.fit_transform(np.zeros((3, 3)))
    assert np.allclose(out, [[1.0, 1.0, 2.0]] * 3)
    assert tr.get_params()["direction"] is None


def test_transformer_in_pipeline():
    pipe = make_pipeline(FunctionTransformer(), ShapeTraceTransformer("exp2.cfg"))
    assert np.allclose(pipe.fit_transform(np.ones((2, 3))), [[2.0, 1.0, 2.0]] * 2)


def test_not_fitted_and_bad_shape(exp2):
    with pytest.raises(NotFittedError):
        ShapeTraceTransformer(exp2).transform(np.zeros((1, 3)))
    with pytest.raises(NotFittedError):
        CollapseEstimator(exp2).predict(np.zeros((1, 3)))
    tr = ShapeTraceTransformer(exp2).fit()
    with pytest.raises(ValueError):
        tr.transform(np.zeros((2, 4)))
    with pytest.raises(ValueError):
        ShapeTraceTransformer(None).fit()


def test_collapse_estimator(lemniscate):
    est = CollapseEstimator(lemniscate, direction="theta", h=1e-2).fit()
    pred = est.predict([[1.0, 0.0, 1.0], [1.0, 0.3, 1.0]])
    assert pred[0] == pytest.approx(math.pi / 4, abs=1e-3)
    assert pred[1] == pytest.approx(math.pi / 4 - 0.3, abs=1e-3)
    rep = est.scan([1.0, 0.0, 1.0])
    assert rep.detected


def test_collapse_estimator_no_collapse(exp2):
    est = CollapseEstimator(exp2, span=2.0).fit()
    assert est.options_.h == exp2.run["h"]
    assert np.isnan(est.predict([[0.0, 0.0, 1.0]])[0])
