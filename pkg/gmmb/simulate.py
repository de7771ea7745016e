"""
Sampling from a fitted (or hand-built) mixture on the original bounded scale.
"""
from typing import Optional, Sequence, Tuple

import numpy as np

from .data import BoundKind, Dataset
from .mixture import CovarianceFactors, MixtureParams, ModelCode
from .transform import LAMBDA_ZERO_TOL, TransformParams, inverse_data

MAX_REDRAWS = 1000


def mixture_from_covariances(weights, means, covariances, model=ModelCode.VVV) -> MixtureParams:
    weights = np.asarray(weights, dtype=float)
    means = np.atleast_2d(np.asarray(means, dtype=float))
    covariances = np.asarray(covariances, dtype=float)
    if covariances.ndim == 1:
        covariances = covariances.reshape(-1, 1, 1)
    return MixtureParams(
        weights=weights,
        means=means,
        factors=CovarianceFactors.from_covariances(covariances),
        model=model,
    )


def _in_image(Y: np.ndarray, tparams: TransformParams) -> np.ndarray:
    """Rows whose transformed values can be mapped back (lam * y > -1 wherever lam != 0)."""
    ok = np.ones(Y.shape[0], dtype=bool)
    for j, kind in enumerate(tparams.bounds.kinds()):
        lam = tparams.lam[j]
        if kind != BoundKind.UNBOUNDED and abs(lam) >= LAMBDA_ZERO_TOL:
            ok &= lam * Y[:, j] > -1.0
    return ok


def simulate(
    params: MixtureParams,
    tparams: TransformParams,
    n: int,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, np.ndarray]:
    """Draw n observations and their 1-based component labels."""
    if params.d != tparams.d:
        raise ValueError(f"mixture has d={params.d} but transform has d={tparams.d}")
    labels = rng.choice(params.G, size=n, p=params.weights)
    covariances = params.factors.covariances()
    Y = np.empty((n, params.d))

    pending = np.arange(n)
    for _ in range(MAX_REDRAWS):
        for k in range(params.G):
            rows = pending[labels[pending] == k]
            if rows.size:
                Y[rows] = rng.multivariate_normal(params.means[k], covariances[k], size=rows.size)
        pending = pending[~_in_image(Y[pending], tparams)]
        if pending.size == 0:
            break
    else:
        raise ValueError(f"{pending.size} draw(s) stayed outside the transform image after {MAX_REDRAWS} attempts")

    return inverse_data(Y, tparams), labels + 1


def simulate_dataset(
    params: MixtureParams,
    tparams: TransformParams,
    n: int,
    seed: int,
    column_names: Optional[Sequence[str]] = None,
) -> Tuple[Dataset, np.ndarray]:
    X, labels = simulate(params, tparams, n, np.random.default_rng(seed))
    return Dataset.from_array(X, column_names), labels
