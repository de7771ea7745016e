import numpy as np
import pytest
from sklearn.mixture import GaussianMixture

from gmmb import (
    BoundsSpec,
    Dataset,
    FitConfig,
    FitFailure,
    FitResult,
    Responsibilities,
    TransformParams,
    VariableBounds,
    adjusted_rand,
    cm_step_lambda,
    e_step,
    fit,
    initialize,
    log_density_original,
    try_fit,
)
from gmmb.ecm import profiled_q
from gmmb.errors import BoundaryViolationError, InitializationError
from gmmb.mixture import ModelCode
from gmmb.simulate import mixture_from_covariances, simulate_dataset
from gmmb.transform import log_jacobian_rows, transform_data


def lower_bounded_sample(seed, n=500):
    bounds = BoundsSpec.of([VariableBounds.lower_bounded(0.0)])
    tparams = TransformParams(lam=[0.5], fixed=[False], bounds=bounds)
    params = mixture_from_covariances([0.4, 0.6], [[2.0], [8.0]], [0.5, 0.8], model="V")
    data, labels = simulate_dataset(params, tparams, n, seed=seed)
    return data, bounds, labels


class TestResponsibilities:
    def test_rows_must_sum_to_one(self):
        with pytest.raises(ValueError):
            Responsibilities(z=[[0.6, 0.6]])

    def test_read_only(self):
        z = Responsibilities.one_hot([0, 1, 1], 2)
        assert z.z.tolist() == [[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]
        with pytest.raises(ValueError):
            z.z[0, 0] = 0.5


class TestEStep:
    def setup_method(self):
        self.bounds = BoundsSpec.of([VariableBounds.unbounded()])
        self.tparams = TransformParams.initial(self.bounds)

    def test_scalar_posterior(self):
        params = mixture_from_covariances([0.5, 0.5], [[-1.0], [1.0]], [1.0, 1.0], model="V")
        z, _ = e_step(np.array([[0.0], [1.0]]), params, self.tparams)
        np.testing.assert_allclose(z.z[0], [0.5, 0.5], atol=1e-12)
        assert z.z[1, 1] == pytest.approx(0.8808, abs=1e-4)

    def test_identical_components_split_evenly(self, rng):
        params = mixture_from_covariances([0.5, 0.5], [[0.3], [0.3]], [2.0, 2.0], model="V")
        z, _ = e_step(rng.normal(size=(25, 1)), params, self.tparams)
        np.testing.assert_allclose(z.z, 0.5)

    def test_rows_are_probability_vectors(self, two_cluster_bivariate):
        data, bounds, _ = two_cluster_bivariate
        params = mixture_from_covariances([0.2, 0.3, 0.5], [[0.0, 0.0], [1.0, 1.0], [-2.0, 3.0]], [np.eye(2)] * 3)
        z, _ = e_step(data, params, TransformParams.initial(bounds))
        np.testing.assert_allclose(z.z.sum(axis=1), 1.0, atol=1e-10)

    def test_loglik_includes_jacobian(self, two_cluster_lower_bounded):
        data, bounds, _ = two_cluster_lower_bounded
        tparams = TransformParams(lam=[0.3], fixed=[False], bounds=bounds)
        params = mixture_from_covariances([0.5, 0.5], [[1.0], [4.0]], [0.5, 1.0], model="V")
        _, loglik = e_step(data, params, tparams)
        assert loglik == pytest.approx(log_density_original(data.values, params, tparams).sum(), rel=1e-12)


class TestCmStepLambda:
    def test_no_free_powers_is_a_no_op(self, two_cluster_lower_bounded):
        data, bounds, labels = two_cluster_lower_bounded
        tparams = TransformParams(lam=[0.7], fixed=[True], bounds=bounds)
        z = Responsibilities.one_hot(labels - 1, 2)
        assert cm_step_lambda(data, z, None, tparams, model="V") is tparams

    def test_profiled_q_does_not_decrease(self, two_cluster_lower_bounded):
        data, bounds, labels = two_cluster_lower_bounded
        X = data.values
        z = Responsibilities.one_hot(labels - 1, 2)
        start = TransformParams(lam=[1.0], fixed=[False], bounds=bounds)
        updated = cm_step_lambda(data, z, None, start, model="V")

        def q(tp):
            return profiled_q(transform_data(X, tp), log_jacobian_rows(X, tp).sum(), z.z, "V")

        assert q(updated) >= q(start)
        assert abs(updated.lam[0] - 0.5) <= 0.15

    def test_stays_in_box(self, two_cluster_lower_bounded):
        data, bounds, labels = two_cluster_lower_bounded
        z = Responsibilities.one_hot(labels - 1, 2)
        start = TransformParams(lam=[0.0], fixed=[False], bounds=bounds, box=(-0.2, 0.2))
        updated = cm_step_lambda(data, z, None, start, model="V")
        assert -0.2 <= updated.lam[0] <= 0.2


class TestInitialize:
    def test_kmeans_recovers_separated_clusters(self, rng):
        labels = np.repeat([0, 1], 100)
        centers = np.array([[-5.0, -5.0], [5.0, 5.0]])
        X = centers[labels] + rng.normal(size=(200, 2))
        bounds = BoundsSpec.of([VariableBounds.unbounded()] * 2)
        _, z = initialize(Dataset.from_array(X), bounds, 2, FitConfig(G=2, model="VVV"))
        assert adjusted_rand(z.z.argmax(axis=1), labels) >= 0.99

    def test_identical_rows_cannot_be_split(self, dataset_from):
        data = dataset_from(np.ones((10, 2)))
        bounds = BoundsSpec.of([VariableBounds.unbounded()] * 2)
        with pytest.raises(InitializationError):
            initialize(data, bounds, 2, FitConfig(G=2, model="VVV"))

    def test_too_few_rows(self, dataset_from):
        bounds = BoundsSpec.of([VariableBounds.unbounded()])
        with pytest.raises(InitializationError):
            initialize(dataset_from([1.0, 2.0]), bounds, 3, FitConfig(G=3, model="V"))

    def test_single_component_takes_everything(self, two_cluster_lower_bounded):
        data, bounds, _ = two_cluster_lower_bounded
        tparams, z = initialize(data, bounds, 1, FitConfig(G=1, model="V"))
        assert z.z.shape == (500, 1)
        assert tparams.box[0] <= tparams.lam[0] <= tparams.box[1]


class TestFit:
    def test_trace_is_monotone(self):
        for seed in range(50):
            data, bounds, _ = lower_bounded_sample(seed, n=120)
            result = fit(data, bounds, FitConfig(G=2, model="V", max_iter=60, rng_seed=seed))
            trace = np.array(result.loglik_trace)
            assert np.all(np.diff(trace) >= -1e-8 * (1.0 + np.abs(trace[:-1])))

    def test_loglik_is_sum_of_original_scale_densities(self, two_cluster_lower_bounded):
        data, bounds, _ = two_cluster_lower_bounded
        result = fit(data, bounds, FitConfig(G=2, model="V"))
        expected = log_density_original(data.values, result.params, result.tparams).sum()
        assert result.loglik == pytest.approx(expected, rel=1e-10)
        assert result.loglik == result.loglik_trace[-1]

    def test_unbounded_matches_plain_gaussian_mixture(self, two_cluster_bivariate):
        data, bounds, _ = two_cluster_bivariate
        result = fit(data, bounds, FitConfig(G=2, model="VVV"))
        reference = GaussianMixture(
            n_components=2, covariance_type="full", reg_covar=0.0, tol=1e-10, max_iter=1000, n_init=5, random_state=0
        ).fit(data.values)
        assert result.converged
        assert result.df == 11
        assert result.loglik == pytest.approx(reference.score(data.values) * data.n, abs=1e-6)

    def test_is_deterministic(self, two_cluster_bivariate):
        data, bounds, _ = two_cluster_bivariate
        config = FitConfig(G=2, model="VVE", rng_seed=3)
        first, second = fit(data, bounds, config), fit(data, bounds, config)
        assert first.loglik == second.loglik
        np.testing.assert_array_equal(first.params.means, second.params.means)
        np.testing.assert_array_equal(first.classification, second.classification)

    def test_estimated_power_is_deterministic(self, two_cluster_lower_bounded):
        data, bounds, _ = two_cluster_lower_bounded
        config = FitConfig(G=2, model="V", rng_seed=5)
        first, second = fit(data, bounds, config), fit(data, bounds, config)
        assert first.tparams.n_free == 1
        np.testing.assert_allclose(first.tparams.lam, second.tparams.lam, rtol=0, atol=1e-12)
        assert first.loglik == second.loglik

    def test_accepts_model_member(self, two_cluster_lower_bounded):
        data, bounds, _ = two_cluster_lower_bounded
        by_member = fit(data, bounds, FitConfig(G=2, model=ModelCode.V))
        by_text = fit(data, bounds, FitConfig(G=2, model="V"))
        assert by_member.model is ModelCode.V
        assert by_member.df == 6
        assert by_member.loglik == by_text.loglik

    def test_fixed_power_is_held(self, two_cluster_lower_bounded):
        data, bounds, _ = two_cluster_lower_bounded
        result = fit(data, bounds, FitConfig(G=2, model="V", fixed_lambda={0: 0.5}))
        assert result.tparams.lam[0] == 0.5
        assert result.df == 5

    def test_free_power_counts_in_df(self, two_cluster_lower_bounded):
        data, bounds, _ = two_cluster_lower_bounded
        result = fit(data, bounds, FitConfig(G=2, model="V"))
        assert result.df == 6
        assert result.bic == pytest.approx(2 * result.loglik - 6 * np.log(500))
        assert set(np.unique(result.classification)) == {1, 2}

    def test_max_iter_stops_early(self, two_cluster_lower_bounded):
        data, bounds, _ = two_cluster_lower_bounded
        result = fit(data, bounds, FitConfig(G=2, model="V", max_iter=2, tol=1e-14))
        assert not result.converged
        assert result.n_iter == 2
        assert len(result.loglik_trace) == 3

    def test_synthetic_recovery(self):
        lam_errors, agreement = [], []
        for seed in range(10):
            data, bounds, labels = lower_bounded_sample(100 + seed)
            result = fit(data, bounds, FitConfig(G=2, model="V", rng_seed=seed))
            lam_errors.append(abs(result.tparams.lam[0] - 0.5))
            agreement.append(adjusted_rand(result.classification, labels))
        assert np.mean(lam_errors) <= 0.1
        assert np.mean(agreement) >= 0.95

    def test_boundary_values_are_rejected(self, dataset_from, lower_bounds_1d):
        with pytest.raises(BoundaryViolationError):
            fit(dataset_from([0.0, 1.0, 2.0]), lower_bounds_1d, FitConfig(G=1, model="V"))


class TestTryFit:
    def test_failure_is_recorded(self, dataset_from):
        bounds = BoundsSpec.of([VariableBounds.unbounded()])
        outcome = try_fit(dataset_from([1.0, 2.0]), bounds, FitConfig(G=3, model="E"))
        assert isinstance(outcome, FitFailure)
        assert outcome.error_type == "InitializationError"
        assert outcome.G == 3

    def test_success_passes_through(self, two_cluster_lower_bounded):
        data, bounds, _ = two_cluster_lower_bounded
        assert isinstance(try_fit(data, bounds, FitConfig(G=1, model="V")), FitResult)
