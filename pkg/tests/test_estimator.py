import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from dcpruner import JointScheme, PruningPlanner


@pytest.fixture(scope="module")
def fitted():
    return PruningPlanner(seed=11).fit()


class TestEstimatorProtocol:
    def test_get_params_round_trip(self):
        est = PruningPlanner(seed=3, population_size=10)
        params = est.get_params()
        assert params["seed"] == 3 and params["population_size"] == 10
        rebuilt = PruningPlanner(**params)
        assert rebuilt.get_params() == params

    def test_set_params_chains(self):
        est = PruningPlanner().set_params(seed=9, iterations=2)
        assert est.seed == 9 and est.iterations == 2

    def test_clone(self):
        est = PruningPlanner(seed=4)
        assert clone(est).get_params() == est.get_params()

    def test_predict_before_fit_raises(self):
        with pytest.raises(NotFittedError):
            PruningPlanner().predict(0.5)


class TestFit:
    def test_fitted_attributes(self, fitted):
        assert fitted.partition_.num_subnets == 3
        assert set(fitted.fronts_) == {0, 1, 2}
        assert all(fitted.fronts_[i] for i in range(3))
        assert fitted.n_evaluations_ == 3 * (8 + 4 * 3)

    def test_baselines_anchor_unpruned_coding(self, fitted):
        for i, (params, error) in fitted.baselines_.items():
            # the unpruned coding retains at least as many params as any
            # front member
            assert params >= max(s.params for s in fitted.fronts_[i])
            assert 0.0 < error < 1.0

    def test_fit_is_deterministic(self):
        a = PruningPlanner(seed=11).fit()
        b = PruningPlanner(seed=11).fit()
        assert a.fronts_ == b.fronts_ and a.ranking_ == b.ranking_

    def test_seed_changes_search(self):
        a = PruningPlanner(seed=0).fit()
        b = PruningPlanner(seed=1).fit()
        assert a.fronts_ != b.fronts_

    def test_custom_evaluator(self):
        est = PruningPlanner(seed=2)
        est.fit(evaluator=lambda subnet, genes: 0.1 + 0.8 / (1 + sum(genes)))
        assert est.ranking_


class TestPredict:
    def test_scalar_target(self, fitted):
        scheme = fitted.predict(0.3)
        assert isinstance(scheme, JointScheme)
        assert scheme.reached and scheme.pr_params >= 0.3

    def test_sequence_of_targets(self, fitted):
        schemes = fitted.predict([0.2, 0.4])
        assert len(schemes) == 2
        assert schemes[0].pr_params <= schemes[1].pr_params or all(
            s.reached for s in schemes)

    def test_unreachable_flagged(self, fitted):
        scheme = fitted.predict(0.999)
        assert not scheme.reached

    def test_plan_alias(self, fitted):
        assert fitted.plan(0.3) == fitted.predict(0.3)

    def test_selections_come_from_fronts(self, fitted):
        scheme = fitted.predict(0.4)
        for subnet, genes in scheme.selections.items():
            if genes is not None:
                assert any(s.genes == genes for s in fitted.fronts_[subnet])
