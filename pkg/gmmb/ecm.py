"""
ECM fitting of Gaussian mixtures on range-power transformed data.

Each iteration runs:
1. E-step: posterior probabilities z_ik on the transformed scale
2. CM-step 1: coordinate-wise update of the free transformation powers,
   maximizing the Q-function with (pi, mu, Sigma) profiled out
3. CM-step 2: closed-form (pi, mu, Sigma) update at the new powers

Fitting starts at the M-step from marginal powers and a k-means partition.
"""
import warnings
import zlib
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.linalg import LinAlgError
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning
from sklearn.preprocessing import StandardScaler

from .covariance import estimate_mixture
from .data import BoundsSpec, Dataset, validate
from .diagnostics import CriterionReport, criteria, entropy_measures, map_classify
from .errors import (
    BoundaryViolationError,
    DataError,
    DegenerateFitError,
    FitError,
    InitializationError,
    AscentError,
)
from .mixture import MixtureParams, ModelCode, component_log_densities, count_free_parameters
from .transform import (
    DEFAULT_LAMBDA_BOX,
    LAMBDA_XATOL,
    TransformParams,
    estimate_marginal_lambda,
    log_derivative_column,
    log_derivative_matrix,
    transform_column,
    transform_data,
)

ASCENT_SLACK = 1e-8
ROW_SUM_TOL = 1e-10
SEARCH_PENALTY = 1e12


class FitConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    G: int = Field(ge=1)
    model: ModelCode
    tol: float = Field(default=1e-8, gt=0)
    max_iter: int = Field(default=1000, ge=1)
    n_kmeans_starts: int = Field(default=10, ge=1)
    rng_seed: int = Field(default=0, ge=0)
    lambda_box: Tuple[float, float] = DEFAULT_LAMBDA_BOX
    fixed_lambda: Dict[int, float] = Field(default_factory=dict)
    verbose: bool = False

    @field_validator("lambda_box")
    @classmethod
    def _box_not_empty(cls, box):
        if not box[0] < box[1]:
            raise ValueError(f"lambda box {box} is empty")
        return box

    def kmeans_seed(self) -> int:
        """Per-(seed, G, model) stream so concurrent sweep fits stay reproducible."""
        sequence = np.random.SeedSequence(
            [self.rng_seed, self.G, zlib.crc32(ModelCode(self.model).value.encode())]
        )
        return int(sequence.generate_state(1)[0])


@dataclass(frozen=True)
class Responsibilities:
    z: np.ndarray

    def __post_init__(self):
        z = np.atleast_2d(np.asarray(self.z, dtype=float))
        if np.any(z < 0) or np.any(z > 1) or np.any(np.abs(z.sum(axis=1) - 1.0) > ROW_SUM_TOL):
            raise ValueError("responsibility rows must be probability vectors")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @classmethod
    def one_hot(cls, labels, G: int) -> "Responsibilities":
        labels = np.asarray(labels, dtype=int)
        z = np.zeros((labels.shape[0], G))
        z[np.arange(labels.shape[0]), labels] = 1.0
        return cls(z=z)

    @property
    def n(self) -> int:
        return self.z.shape[0]

    @property
    def G(self) -> int:
        return self.z.shape[1]


@dataclass
class FitResult:
    params: MixtureParams
    tparams: TransformParams
    loglik: float
    df: int
    bic: float
    icl: float
    nec: float
    entropy_total: float
    z: Responsibilities
    classification: np.ndarray
    uncertainty: np.ndarray
    entropy: np.ndarray
    loglik_trace: List[float]
    converged: bool
    n_iter: int  # completed CM updates; loglik_trace holds n_iter + 1 values
    column_names: Tuple[str, ...] = ()

    @property
    def model(self) -> ModelCode:
        return self.params.model

    @property
    def G(self) -> int:
        return self.params.G

    @property
    def n(self) -> int:
        return self.z.n

    @property
    def criteria(self) -> CriterionReport:
        return CriterionReport(
            loglik=self.loglik,
            df=self.df,
            n=self.n,
            bic=self.bic,
            icl=self.icl,
            entropy_total=self.entropy_total,
            nec=self.nec,
        )


@dataclass
class FitFailure:
    G: int
    model: ModelCode
    reason: str
    error_type: str = "FitError"
    details: Dict[str, str] = field(default_factory=dict)


def _posterior(Y: np.ndarray, params: MixtureParams) -> Tuple[np.ndarray, np.ndarray]:
    weighted = component_log_densities(Y, params)
    row_norm = logsumexp(weighted, axis=1)
    if not np.all(np.isfinite(row_norm)):
        bad = int(np.flatnonzero(~np.isfinite(row_norm))[0])
        raise DegenerateFitError(f"observation {bad} has zero density under every component")
    z = np.exp(weighted - row_norm[:, None])
    return z / z.sum(axis=1, keepdims=True), row_norm


def e_step(data, params: MixtureParams, tparams: TransformParams) -> Tuple[Responsibilities, float]:
    """Posterior probabilities and the observed-data log-likelihood (Jacobian included)."""
    X = data.values if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    Y = transform_data(X, tparams)
    z, row_norm = _posterior(Y, params)
    loglik = float(row_norm.sum() + log_derivative_matrix(X, tparams).sum())
    return Responsibilities(z=z), loglik


def _fixed_orientation(params: Optional[MixtureParams]) -> Optional[np.ndarray]:
    if params is None or params.model != ModelCode.VVE:
        return None
    return np.array(params.factors.orientation[0])


def profiled_q(
    Y: np.ndarray,
    log_jacobian_total: float,
    z: np.ndarray,
    model: ModelCode,
    previous: Optional[MixtureParams] = None,
) -> float:
    """Q-function at transformed data Y with (pi, mu, Sigma) re-estimated from z.

    Returns -inf when the trial transformation yields a degenerate mixture.
    """
    if not np.all(np.isfinite(Y)):
        return -np.inf
    try:
        params = estimate_mixture(Y, z, model, previous=previous, fixed_orientation=_fixed_orientation(previous))
        weighted = component_log_densities(Y, params)
    except (DegenerateFitError, LinAlgError, ValueError):
        return -np.inf
    return float(np.sum(z * weighted) + log_jacobian_total)


def cm_step_lambda(
    data,
    z: Responsibilities,
    params: Optional[MixtureParams],
    tparams: TransformParams,
    model: Optional[ModelCode] = None,
) -> TransformParams:
    """One coordinate sweep of bounded Brent searches over the free powers.

    A coordinate moves only when the profiled Q does not decrease; if the
    1-D search fails the previous power is kept and a warning is printed.
    """
    free = tparams.free_indices
    if free.size == 0:
        return tparams
    if model is None:
        model = params.model
    X = data.values if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    zz = z.z
    Y = transform_data(X, tparams)
    log_deriv = log_derivative_matrix(X, tparams)
    current = profiled_q(Y, log_deriv.sum(), zz, model, params)
    lam = np.array(tparams.lam)
    box = tparams.box

    for j in free:
        var = tparams.bounds.variables[j]
        column = X[:, j]
        others = log_deriv.sum() - log_deriv[:, j].sum()
        trial = Y.copy()

        def objective(value: float) -> float:
            trial[:, j] = transform_column(column, var, value, box)
            q = profiled_q(trial, others + log_derivative_column(column, var, value, box).sum(), zz, model, params)
            return -q if np.isfinite(q) else SEARCH_PENALTY

        res = minimize_scalar(objective, bounds=box, method="bounded", options={"xatol": LAMBDA_XATOL})
        if not res.success or res.fun >= SEARCH_PENALTY:
            print(f"⚠️ [!] Power search failed for variable {j + 1}, keeping lambda={lam[j]:.6g}")
            continue
        if -res.fun >= current:
            lam[j] = float(res.x)
            Y[:, j] = transform_column(column, var, lam[j], box)
            log_deriv[:, j] = log_derivative_column(column, var, lam[j], box)
            current = -float(res.fun)

    return tparams.with_lambdas(lam)


def cm_step_theta(
    data,
    z: Responsibilities,
    tparams: TransformParams,
    model: ModelCode,
    previous: Optional[MixtureParams] = None,
) -> MixtureParams:
    X = data.values if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    return estimate_mixture(transform_data(X, tparams), z.z, ModelCode(model), previous=previous)


def initialize(
    data: Dataset,
    bounds: BoundsSpec,
    G: int,
    config: FitConfig,
) -> Tuple[TransformParams, Responsibilities]:
    """Marginal powers by single-Gaussian profile likelihood, then seeded k-means."""
    X = data.values
    tparams = TransformParams.initial(bounds, config.fixed_lambda, config.lambda_box)
    lam = np.array(tparams.lam)
    for j in tparams.free_indices:
        lam[j] = estimate_marginal_lambda(X[:, j], bounds.variables[j], tparams.box)
    tparams = tparams.with_lambdas(lam)

    if G == 1:
        return tparams, Responsibilities(z=np.ones((data.n, 1)))
    if data.n < G:
        raise InitializationError(f"cannot split {data.n} observation(s) into {G} clusters")

    scaled = StandardScaler().fit_transform(transform_data(X, tparams))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        kmeans = KMeans(n_clusters=G, n_init=config.n_kmeans_starts, random_state=config.kmeans_seed())
        labels = kmeans.fit_predict(scaled)

    counts = np.bincount(labels, minlength=G)
    if np.any(counts == 0):
        raise InitializationError(f"k-means left {int((counts == 0).sum())} empty cluster(s) in every start")
    return tparams, Responsibilities.one_hot(labels, G)


def fit(data: Dataset, bounds: BoundsSpec, config: FitConfig) -> FitResult:
    report = validate(data, bounds)
    if not report.passed:
        raise BoundaryViolationError(report)
    model = ModelCode.parse(config.model, data.d)
    X = data.values

    tparams, z = initialize(data, bounds, config.G, config)
    params = cm_step_theta(X, z, tparams, model)

    trace: List[float] = []
    converged = False

    def record(loglik: float) -> bool:
        if trace:
            previous = trace[-1]
            if loglik < previous - ASCENT_SLACK * (1.0 + abs(previous)):
                raise AscentError(
                    f"log-likelihood decreased from {previous:.10g} to {loglik:.10g} at iteration {len(trace) + 1}"
                )
            trace.append(loglik)
            return (loglik - previous) / (1.0 + abs(previous)) < config.tol
        trace.append(loglik)
        return False

    for iteration in range(1, config.max_iter + 1):
        z, loglik = e_step(X, params, tparams)
        if record(loglik):
            converged = True
            break
        if config.verbose:
            print(f"🔄 [*] Iteration {iteration}: loglik={loglik:.6f} lambda={np.round(tparams.lam, 4).tolist()}")
        tparams = cm_step_lambda(X, z, params, tparams, model)
        params = cm_step_theta(X, z, tparams, model, previous=params)
    else:
        z, loglik = e_step(X, params, tparams)
        record(loglik)

    loglik = trace[-1]
    labels, uncertainty = map_classify(z.z)
    entropy, _, _ = entropy_measures(z.z)
    df = count_free_parameters(model, data.d, config.G, tparams.n_free)
    report = criteria(loglik, df, data.n, z.z)

    if config.verbose:
        status = "converged" if converged else "stopped at max_iter"
        print(f"✅ [+] {model.value},{config.G} {status} after {len(trace) - 1} iteration(s): loglik={loglik:.4f}")

    return FitResult(
        params=params,
        tparams=tparams,
        loglik=loglik,
        df=df,
        bic=report.bic,
        icl=report.icl,
        nec=report.nec,
        entropy_total=report.entropy_total,
        z=z,
        classification=labels,
        uncertainty=uncertainty,
        entropy=entropy,
        loglik_trace=trace,
        converged=converged,
        n_iter=len(trace) - 1,
        column_names=data.column_names,
    )


def try_fit(data: Dataset, bounds: BoundsSpec, config: FitConfig) -> Union[FitResult, FitFailure]:
    """Like fit, but degenerate or failed fits come back as a FitFailure record."""
    try:
        return fit(data, bounds, config)
    except (FitError, DataError) as e:
        return FitFailure(
            G=config.G,
            model=ModelCode(config.model),
            reason=str(e),
            error_type=type(e).__name__,
        )
