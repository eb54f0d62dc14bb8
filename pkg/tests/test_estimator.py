import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from tirgp import TIRRegressor
from tirgp.expressions import deserialize, eval_tir


def ratio_data(n=200, seed=0):
    r = np.random.default_rng(seed)
    X = r.uniform(0.5, 2.0, size=(n, 2))
    return X, X[:, 0] / (1.0 + X[:, 1])


SMALL = dict(pop_size=60, generations=10, random_state=0)


class TestSklearnProtocol:
    def test_get_set_params_round_trip(self):
        reg = TIRRegressor(**SMALL)
        params = reg.get_params()
        assert params["pop_size"] == 60
        reg2 = TIRRegressor().set_params(**params)
        assert reg2.get_params() == params

    def test_clone(self):
        reg = TIRRegressor(**SMALL)
        assert clone(reg).get_params() == reg.get_params()

    def test_predict_before_fit_raises(self):
        with pytest.raises(NotFittedError):
            TIRRegressor().predict(np.ones((2, 2)))

    def test_fit_empty_raises(self):
        with pytest.raises(ValueError):
            TIRRegressor(**SMALL).fit(np.empty((0, 2)), np.empty(0))

    def test_feature_count_mismatch(self):
        X, y = ratio_data(80)
        reg = TIRRegressor(**SMALL).fit(X, y)
        with pytest.raises(ValueError, match="features"):
            reg.predict(np.ones((3, 5)))


class TestFitPredict:
    def test_recovery_score(self):
        X, y = ratio_data(200, seed=3)
        reg = TIRRegressor(pop_size=150, generations=30, random_state=1)
        reg.fit(X, y)
        Xt, yt = ratio_data(80, seed=7)
        assert reg.score(Xt, yt) > 0.999

    def test_predict_matches_model_document(self):
        X, y = ratio_data(100, seed=2)
        reg = TIRRegressor(**SMALL).fit(X, y)
        model = deserialize(reg.model_document_)
        assert np.array_equal(reg.predict(X), eval_tir(model, X))

    def test_refit_replaces_model(self):
        X, y = ratio_data(100, seed=2)
        reg = TIRRegressor(**SMALL)
        first = reg.fit(X, y).model_document_
        X2, y2 = ratio_data(100, seed=5)
        second = reg.fit(X2, np.exp(y2)).model_document_
        assert reg.n_features_in_ == 2
        assert first != second or reg.predict(X2).shape == (100,)

    def test_deterministic_for_seed(self):
        X, y = ratio_data(120, seed=4)
        a = TIRRegressor(**SMALL).fit(X, y)
        b = TIRRegressor(**SMALL).fit(X, y)
        assert a.model_document_ == b.model_document_
        assert a.expression_ == b.expression_

    def test_exposes_expression_and_size(self):
        X, y = ratio_data(90, seed=6)
        reg = TIRRegressor(**SMALL).fit(X, y)
        assert isinstance(reg.expression_, str) and reg.expression_
        assert reg.size_ >= 1
        assert reg.evolve_seconds_ > 0

    def test_domains_length_checked(self):
        X, y = ratio_data(60)
        reg = TIRRegressor(**SMALL, domains=[(0.5, 2.0)])
        with pytest.raises(ValueError, match="domains"):
            reg.fit(X, y)

    def test_grid_search_path(self):
        X, y = ratio_data(80, seed=8)
        reg = TIRRegressor(
            pop_size=30, generations=4, grid_search=True, folds=3,
            cv_pop_size=15, cv_generations=2, random_state=0,
        )
        reg.fit(X, y)
        assert tuple(reg.exp_range_) in ((-5, 5), (0, 5), (-2, 2), (0, 2), (-1, 1), (0, 1))
