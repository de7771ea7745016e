"""
Gaussian mixtures on the transformed scale.

Component covariances follow the eigen-decomposition
Sigma_k = volume_k * U_k diag(shape_k) U_k^T, and a three-letter model code
says which of volume, shape and orientation are Equal across components,
Varying, or fixed to the Identity. E and V are the univariate codes.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import cholesky, eigh, eigvalsh, solve_triangular
from scipy.special import logsumexp

from .errors import ConfigError, SingularCovarianceError
from .transform import TransformParams, log_jacobian_rows, transform_data

CONDITION_LIMIT = 1e12
LOG_2PI = np.log(2.0 * np.pi)


class ModelCode(str, Enum):
    E = "E"
    V = "V"
    EII = "EII"
    VII = "VII"
    EEI = "EEI"
    VEI = "VEI"
    EVI = "EVI"
    VVI = "VVI"
    EEE = "EEE"
    VVE = "VVE"
    VVV = "VVV"

    @property
    def univariate(self) -> bool:
        return len(self.value) == 1

    @property
    def volume(self) -> str:
        return self.value[0]

    @property
    def shape(self) -> str:
        return "I" if self.univariate else self.value[1]

    @property
    def orientation(self) -> str:
        return "I" if self.univariate else self.value[2]

    def valid_for(self, d: int) -> bool:
        return self.univariate == (d == 1)

    @classmethod
    def parse(cls, text, d: Optional[int] = None) -> "ModelCode":
        try:
            code = text if isinstance(text, cls) else cls(str(text).strip().upper())
        except ValueError:
            raise ConfigError(f"unknown model code '{text}'; choose from {[c.value for c in cls]}")
        if d is not None and not code.valid_for(d):
            raise ConfigError(f"model code {code.value} cannot be used with d={d}")
        return code


def decompose_covariance(sigma) -> Tuple[float, np.ndarray, np.ndarray]:
    """Split a covariance into volume |Sigma|^(1/d), unit-determinant shape (decreasing) and orientation."""
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    eigvals, eigvecs = eigh((sigma + sigma.T) / 2.0)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    if eigvals[-1] <= 0:
        raise SingularCovarianceError(f"covariance is not positive definite (smallest eigenvalue {eigvals[-1]:.3g})")
    log_eig = np.log(eigvals)
    log_volume = log_eig.mean()
    return float(np.exp(log_volume)), np.exp(log_eig - log_volume), eigvecs


@dataclass(frozen=True)
class CovarianceFactors:
    """Per-component volume, unit-determinant shape and orientation.

    Shape is decreasing when the orientation is estimated per component
    (EEE, VVV). Diagonal and spherical models keep the axis order, and
    VVE orders its shared axes by the pooled eigenvalue mass.
    """

    volume: np.ndarray
    shape: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        volume = np.asarray(self.volume, dtype=float).reshape(-1)
        shape = np.atleast_2d(np.asarray(self.shape, dtype=float))
        orientation = np.asarray(self.orientation, dtype=float)
        if orientation.ndim == 2:
            orientation = orientation[None, :, :]
        G, d = shape.shape
        if volume.shape != (G,) or orientation.shape != (G, d, d):
            raise ValueError(
                f"inconsistent factor shapes: volume {volume.shape}, shape {shape.shape}, orientation {orientation.shape}"
            )
        if np.any(volume <= 0) or np.any(shape <= 0):
            raise ValueError("volume and shape factors must be positive")
        if np.any(np.abs(np.log(shape).sum(axis=1)) > 1e-8):
            raise ValueError("shape factors must have unit determinant")
        eye = np.eye(d)
        for U in orientation:
            if np.max(np.abs(U.T @ U - eye)) > 1e-8:
                raise ValueError("orientation factors must be orthogonal")
        for array in (volume, shape, orientation):
            array.setflags(write=False)
        object.__setattr__(self, "volume", volume)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "orientation", orientation)

    @classmethod
    def from_covariances(cls, covariances) -> "CovarianceFactors":
        covariances = np.asarray(covariances, dtype=float)
        if covariances.ndim == 2:
            covariances = covariances[None, :, :]
        parts = [decompose_covariance(c) for c in covariances]
        return cls(
            volume=np.array([p[0] for p in parts]),
            shape=np.array([p[1] for p in parts]),
            orientation=np.array([p[2] for p in parts]),
        )

    @property
    def G(self) -> int:
        return self.volume.shape[0]

    @property
    def d(self) -> int:
        return self.shape.shape[1]

    def eigenvalues(self) -> np.ndarray:
        return self.volume[:, None] * self.shape

    def covariance(self, k: int) -> np.ndarray:
        U = self.orientation[k]
        sigma = (U * (self.volume[k] * self.shape[k])) @ U.T
        return (sigma + sigma.T) / 2.0

    def covariances(self) -> np.ndarray:
        return np.array([self.covariance(k) for k in range(self.G)])


@dataclass(frozen=True)
class MixtureParams:
    weights: np.ndarray
    means: np.ndarray
    factors: CovarianceFactors
    model: ModelCode

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        means = np.atleast_2d(np.asarray(self.means, dtype=float))
        if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-10:
            raise ValueError(f"mixing weights must be positive and sum to one, got {weights}")
        if means.shape != (weights.shape[0], self.factors.d) or self.factors.G != weights.shape[0]:
            raise ValueError(f"means {means.shape} do not match {weights.shape[0]} components")
        weights.setflags(write=False)
        means.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "model", ModelCode(self.model))

    @property
    def G(self) -> int:
        return self.weights.shape[0]

    @property
    def d(self) -> int:
        return self.means.shape[1]


def _checked_cholesky(cov: np.ndarray) -> np.ndarray:
    eig = eigvalsh(cov)
    if eig[0] <= 0 or eig[-1] / eig[0] > CONDITION_LIMIT:
        raise SingularCovarianceError(
            f"covariance is numerically singular (eigenvalues {eig[0]:.3g} .. {eig[-1]:.3g})"
        )
    return cholesky(cov, lower=True)


def log_component_density(y, mean, cov):
    """log phi(y; mean, cov) for one row or an n x d block of rows."""
    mean = np.asarray(mean, dtype=float).reshape(-1)
    d = mean.shape[0]
    cov = np.asarray(cov, dtype=float).reshape(d, d)
    y = np.asarray(y, dtype=float)
    single = y.ndim <= 1 and y.size == d
    Y = y.reshape(-1, d)

    L = _checked_cholesky(cov)
    sol = solve_triangular(L, (Y - mean).T, lower=True)
    quad = np.sum(sol ** 2, axis=0)
    log_det = 2.0 * np.sum(np.log(np.diag(L)))
    out = -0.5 * (d * LOG_2PI + log_det + quad)
    return float(out[0]) if single else out


def component_log_densities(Y, params: MixtureParams) -> np.ndarray:
    """n x G matrix of log pi_k + log phi(y_i; mu_k, Sigma_k)."""
    Y = np.asarray(Y, dtype=float).reshape(-1, params.d)
    out = np.empty((Y.shape[0], params.G))
    for k in range(params.G):
        out[:, k] = np.log(params.weights[k]) + log_component_density(
            Y, params.means[k], params.factors.covariance(k)
        )
    return out


def log_mixture_density(Y, params: MixtureParams) -> np.ndarray:
    """Row-wise log mixture density on the transformed scale."""
    return logsumexp(component_log_densities(Y, params), axis=1)


def log_mixture_density_transformed(y, params: MixtureParams):
    y = np.asarray(y, dtype=float)
    single = y.ndim <= 1 and y.size == params.d
    out = log_mixture_density(y, params)
    return float(out[0]) if single else out


def log_density_original(x, params: MixtureParams, tparams: TransformParams):
    """Density on the bounded scale: transformed-scale mixture plus the log-Jacobian."""
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1 and x.size == params.d
    X = x.reshape(-1, params.d)
    out = log_mixture_density_transformed(transform_data(X, tparams), params) + log_jacobian_rows(X, tparams)
    out = np.atleast_1d(out)
    return float(out[0]) if single else out


def covariance_parameter_count(model: ModelCode, d: int, G: int) -> int:
    count = 1 if model.volume == "E" else G
    if model.shape == "E":
        count += d - 1
    elif model.shape == "V":
        count += G * (d - 1)
    rotation = d * (d - 1) // 2
    if model.orientation == "E":
        count += rotation
    elif model.orientation == "V":
        count += G * rotation
    return count


def count_free_parameters(model, d: int, G: int, n_free_lambda: int = 0) -> int:
    model = ModelCode.parse(model, d)
    if G < 1 or n_free_lambda < 0:
        raise ConfigError(f"invalid component count G={G} or free lambda count {n_free_lambda}")
    return (G - 1) + G * d + covariance_parameter_count(model, d, G) + n_free_lambda
