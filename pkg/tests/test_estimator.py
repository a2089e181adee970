import doctest

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

import mfg_route.estimator
from mfg_route import MeanFieldRouting, equilibrium
from mfg_route.exceptions import BadAlpha, BadDistribution


def test_docstring_example():
    assert doctest.testmod(mfg_route.estimator).failed == 0


def test_params_and_clone():
    est = MeanFieldRouting(alpha=0.5)
    assert est.get_params() == {"alpha": 0.5}
    assert clone(est).alpha == 0.5
    assert est.set_params(alpha=2.0).alpha == 2.0


def test_fit_attributes(two_node):
    est = MeanFieldRouting().fit(two_node)
    logphi, Q, P = equilibrium(two_node)
    np.testing.assert_array_equal(est.log_phi_, logphi)
    np.testing.assert_array_equal(est.policy_, Q)
    np.testing.assert_array_equal(est.distribution_, P)
    assert est.value_ == pytest.approx(0.3798854930417224, abs=1e-15)
    assert est.n_features_in_ == 2


def test_alpha_override(two_node):
    est = MeanFieldRouting(alpha=2.0).fit(two_node)
    assert est.game_.alpha == 2.0
    with pytest.raises(BadAlpha):
        MeanFieldRouting(alpha=-1.0).fit(two_node)


def test_predict_and_transform(two_node):
    est = MeanFieldRouting().fit(two_node)
    X = np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
    v = est.predict(X)
    assert v[0] == pytest.approx(est.value_, abs=1e-15)
    assert v[1] == 0.0
    assert v[2] == pytest.approx(0.5 * v[0], abs=1e-15)
    H = est.transform(X)
    np.testing.assert_allclose(H[0], est.distribution_[-1], atol=1e-15)
    np.testing.assert_array_equal(H[1], [0.0, 1.0])


def test_rejects_bad_rows(two_node):
    est = MeanFieldRouting().fit(two_node)
    with pytest.raises(BadDistribution):
        est.predict([[1.0, 0.0, 0.0]])
    with pytest.raises(BadDistribution):
        est.predict([[0.7, 0.7]])


def test_not_fitted():
    with pytest.raises(NotFittedError):
        MeanFieldRouting().predict([[1.0]])


def test_simulate_and_epsilon(two_node):
    est = MeanFieldRouting().fit(two_node)
    s = est.simulate(100, seed=1)
    assert s.node_counts[0].tolist() == [100, 0]
    assert est.epsilon(10).epsilon_gap > est.epsilon(1000).epsilon_gap > 0
