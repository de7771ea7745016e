"""
Maximum-likelihood covariance updates for each model code.

Given responsibilities z and transformed data Y, the component scatter
matrices W_k = sum_i z_ik (y_i - mu_k)(y_i - mu_k)^T determine the
covariance factors in closed form, except for VEI (alternating shape and
volume updates) and VVE (shared orientation, majorize-minimize iterations).
Both iterative models warm-start from the previous factors when given.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import eigvalsh, svd

from .errors import EmptyComponentError, VarianceFloorError
from .mixture import CovarianceFactors, MixtureParams, ModelCode, decompose_covariance

EMPTY_COMPONENT_FACTOR = 1e-10
VARIANCE_FLOOR_FACTOR = 1e-10
INNER_MAX_ITER = 100
INNER_TOL = 1e-8


@dataclass(frozen=True)
class WeightedMoments:
    nk: np.ndarray
    means: np.ndarray
    scatter: np.ndarray

    @property
    def n(self) -> float:
        return float(self.nk.sum())

    @property
    def G(self) -> int:
        return self.nk.shape[0]

    @property
    def d(self) -> int:
        return self.means.shape[1]


def weighted_moments(Y: np.ndarray, z: np.ndarray) -> WeightedMoments:
    n = Y.shape[0]
    nk = z.sum(axis=0)
    if np.any(nk < EMPTY_COMPONENT_FACTOR * n):
        empty = np.flatnonzero(nk < EMPTY_COMPONENT_FACTOR * n) + 1
        raise EmptyComponentError(f"component(s) {empty.tolist()} received no observations")
    means = (z.T @ Y) / nk[:, None]
    scatter = np.empty((nk.shape[0], Y.shape[1], Y.shape[1]))
    for k in range(nk.shape[0]):
        diff = Y - means[k]
        scatter[k] = (diff * z[:, k, None]).T @ diff
    return WeightedMoments(nk=nk, means=means, scatter=scatter)


def _repeat(G: int, volume: float, shape: np.ndarray, orientation: np.ndarray) -> CovarianceFactors:
    return CovarianceFactors(
        volume=np.full(G, volume),
        shape=np.tile(shape, (G, 1)),
        orientation=np.tile(orientation, (G, 1, 1)),
    )


def _from_diagonals(diagonals: np.ndarray) -> CovarianceFactors:
    if not np.all(diagonals > 0):
        raise VarianceFloorError("a component variance collapsed to zero")
    log_diag = np.log(diagonals)
    log_volume = log_diag.mean(axis=1)
    G, d = diagonals.shape
    return CovarianceFactors(
        volume=np.exp(log_volume),
        shape=np.exp(log_diag - log_volume[:, None]),
        orientation=np.tile(np.eye(d), (G, 1, 1)),
    )


def _spherical(m: WeightedMoments, equal: bool) -> CovarianceFactors:
    traces = np.trace(m.scatter, axis1=1, axis2=2)
    if equal:
        volume = np.full(m.G, traces.sum() / (m.n * m.d))
    else:
        volume = traces / (m.nk * m.d)
    if not np.all(volume > 0):
        raise VarianceFloorError("a component variance collapsed to zero")
    return CovarianceFactors(
        volume=volume,
        shape=np.ones((m.G, m.d)),
        orientation=np.tile(np.eye(m.d), (m.G, 1, 1)),
    )


def _eei(m: WeightedMoments) -> CovarianceFactors:
    pooled = np.diagonal(m.scatter.sum(axis=0)) / m.n
    return _from_diagonals(np.tile(pooled, (m.G, 1)))


def _vei(m: WeightedMoments, previous: Optional[CovarianceFactors]) -> CovarianceFactors:
    diagonals = np.diagonal(m.scatter, axis1=1, axis2=2)
    if previous is not None and previous.G == m.G:
        volume = np.array(previous.volume)
    else:
        volume = diagonals.sum(axis=1) / (m.d * m.nk)

    last = None
    for _ in range(INNER_MAX_ITER):
        shape = (diagonals / volume[:, None]).sum(axis=0)
        shape = shape / np.exp(np.log(shape).mean())
        volume = (diagonals / shape).sum(axis=1) / (m.d * m.nk)
        objective = np.sum(m.nk * m.d * np.log(volume)) + np.sum((diagonals / shape).sum(axis=1) / volume)
        if last is not None and abs(last - objective) <= INNER_TOL * abs(objective):
            break
        last = objective

    return CovarianceFactors(
        volume=volume,
        shape=np.tile(shape, (m.G, 1)),
        orientation=np.tile(np.eye(m.d), (m.G, 1, 1)),
    )


def _evi(m: WeightedMoments) -> CovarianceFactors:
    diagonals = np.diagonal(m.scatter, axis1=1, axis2=2)
    factors = _from_diagonals(diagonals)
    determinants = np.exp(np.log(diagonals).mean(axis=1))
    return CovarianceFactors(
        volume=np.full(m.G, determinants.sum() / m.n),
        shape=factors.shape,
        orientation=factors.orientation,
    )


def _vvi(m: WeightedMoments) -> CovarianceFactors:
    return _from_diagonals(np.diagonal(m.scatter, axis1=1, axis2=2) / m.nk[:, None])


def _eee(m: WeightedMoments) -> CovarianceFactors:
    volume, shape, orientation = decompose_covariance(m.scatter.sum(axis=0) / m.n)
    return _repeat(m.G, volume, shape, orientation)


def _vvv(m: WeightedMoments) -> CovarianceFactors:
    return CovarianceFactors.from_covariances(m.scatter / m.nk[:, None, None])


def _vve_diagonals(m: WeightedMoments, D: np.ndarray) -> np.ndarray:
    # diag(D^T W_k D) / n_k: optimal volume * shape for a fixed orientation
    return np.einsum("ji,kjl,li->ki", D, m.scatter, D) / m.nk[:, None]


def vve_factors_given_orientation(m: WeightedMoments, D: np.ndarray) -> CovarianceFactors:
    C = _vve_diagonals(m, D)
    factors = _from_diagonals(C)
    return CovarianceFactors(
        volume=factors.volume,
        shape=factors.shape,
        orientation=np.tile(D, (m.G, 1, 1)),
    )


def _vve(m: WeightedMoments, previous: Optional[CovarianceFactors]) -> CovarianceFactors:
    if previous is not None and previous.G == m.G and previous.d == m.d:
        D = np.array(previous.orientation[0])
    else:
        _, _, D = decompose_covariance(m.scatter.sum(axis=0) / m.n)
    largest = np.array([eigvalsh(W)[-1] for W in m.scatter])

    last = None
    for _ in range(INNER_MAX_ITER):
        C = _vve_diagonals(m, D)
        objective = np.sum(m.nk * np.log(C).sum(axis=1))
        if last is not None and abs(last - objective) <= INNER_TOL * abs(objective):
            break
        last = objective
        # Majorizer of sum_k tr(W_k D C_k^-1 D^T) over orthogonal D,
        # minimized by the polar factor of F.
        inv_C = 1.0 / C
        F = np.zeros_like(D)
        for k in range(m.G):
            F += largest[k] * inv_C[k].max() * D - m.scatter[k] @ D * inv_C[k]
        P, _, Qt = svd(F)
        D = P @ Qt

    C = _vve_diagonals(m, D)
    order = np.argsort(-(m.nk[:, None] * C).sum(axis=0), kind="stable")
    return vve_factors_given_orientation(m, D[:, order])


def estimate_factors(
    m: WeightedMoments,
    model: ModelCode,
    previous: Optional[CovarianceFactors] = None,
) -> CovarianceFactors:
    model = ModelCode(model)
    if model in (ModelCode.E, ModelCode.EII):
        return _spherical(m, equal=True)
    if model in (ModelCode.V, ModelCode.VII):
        return _spherical(m, equal=False)
    if model == ModelCode.EEI:
        return _eei(m)
    if model == ModelCode.VEI:
        return _vei(m, previous)
    if model == ModelCode.EVI:
        return _evi(m)
    if model == ModelCode.VVI:
        return _vvi(m)
    if model == ModelCode.EEE:
        return _eee(m)
    if model == ModelCode.VVE:
        return _vve(m, previous)
    return _vvv(m)


def variance_floor(Y: np.ndarray) -> float:
    return VARIANCE_FLOOR_FACTOR * float(np.mean(np.var(Y, axis=0)))


def check_floor(factors: CovarianceFactors, floor: float) -> None:
    smallest = float(factors.eigenvalues().min())
    if smallest < floor:
        raise VarianceFloorError(
            f"component variance {smallest:.3g} fell below the floor {floor:.3g}"
        )


def estimate_mixture(
    Y: np.ndarray,
    z: np.ndarray,
    model: ModelCode,
    previous: Optional[MixtureParams] = None,
    fixed_orientation: Optional[np.ndarray] = None,
) -> MixtureParams:
    """Closed-form (pi, mu, Sigma) update from responsibilities.

    ``fixed_orientation`` holds the shared VVE orientation at the given
    matrix and only profiles volumes and shapes.
    """
    m = weighted_moments(Y, z)
    model = ModelCode(model)
    if model == ModelCode.VVE and fixed_orientation is not None:
        factors = vve_factors_given_orientation(m, fixed_orientation)
    else:
        factors = estimate_factors(m, model, previous.factors if previous is not None else None)
    check_floor(factors, variance_floor(Y))
    return MixtureParams(weights=m.nk / m.n, means=m.means, factors=factors, model=model)
