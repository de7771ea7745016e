import os
import sys

import numpy as np
import pytest

# Add repository root to Python path to allow imports from the shared package
ROOT_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.append(ROOT_DIR)

from gmmb import BoundsSpec, Dataset, TransformParams, VariableBounds  # noqa: E402
from gmmb.simulate import mixture_from_covariances, simulate_dataset  # noqa: E402


def data_file(task: str, name: str) -> str:
    return os.path.join(ROOT_DIR, task, "data", name)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def lower_bounds_1d():
    return BoundsSpec.of([VariableBounds.lower_bounded(0.0)])


@pytest.fixture
def two_cluster_lower_bounded():
    """500 draws of a well-separated 2-component mixture, lambda = 0.5 and lower bound 0."""
    bounds = BoundsSpec.of([VariableBounds.lower_bounded(0.0)])
    tparams = TransformParams(lam=[0.5], fixed=[False], bounds=bounds)
    params = mixture_from_covariances([0.4, 0.6], [[2.0], [8.0]], [0.5, 0.8], model="V")
    data, labels = simulate_dataset(params, tparams, 500, seed=7)
    return data, bounds, labels


@pytest.fixture
def two_cluster_bivariate():
    """Unbounded 2-d data with two well-separated elliptical clusters."""
    bounds = BoundsSpec.of([VariableBounds.unbounded(), VariableBounds.unbounded()])
    tparams = TransformParams.initial(bounds)
    params = mixture_from_covariances(
        [0.5, 0.5],
        [[-3.0, 0.0], [3.0, 1.0]],
        [[[1.0, 0.3], [0.3, 0.5]], [[0.6, -0.2], [-0.2, 1.2]]],
        model="VVV",
    )
    data, labels = simulate_dataset(params, tparams, 300, seed=11)
    return data, bounds, labels


@pytest.fixture
def dataset_from():
    def build(values, names=None):
        return Dataset.from_array(np.asarray(values, dtype=float), names)

    return build
