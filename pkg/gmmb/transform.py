"""
Range-power transformations for bounded variables.

Lower-bounded variables on (l, +inf) are mapped by ((x - l)^lam - 1) / lam,
doubly-bounded variables on (l, u) by (((x - l) / (u - x))^lam - 1) / lam,
with the log limit at lam = 0. Unbounded variables pass through unchanged
with lam fixed at 1.
"""
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import expit

from .data import BoundKind, BoundsSpec, VariableBounds
from .errors import TransformDomainError

LAMBDA_ZERO_TOL = 1e-10
DEFAULT_LAMBDA_BOX = (-3.0, 3.0)
LAMBDA_XATOL = 1e-6
MARGINAL_GRID_POINTS = 61


def _as_output(values: np.ndarray):
    if values.ndim == 0:
        return float(values)
    return values


def _checked(x, kind: BoundKind, lower, upper, lam: float, box) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if kind == BoundKind.UNBOUNDED:
        return x
    if not box[0] <= lam <= box[1]:
        raise TransformDomainError(f"lambda={lam} outside the search box [{box[0]}, {box[1]}]")
    if kind == BoundKind.LOWER:
        inside = x > lower
    else:
        inside = (x > lower) & (x < upper)
    if not np.all(inside):
        bad = x[~inside] if x.ndim else x
        raise TransformDomainError(
            f"value(s) {np.ravel(bad)[:5].tolist()} outside the open support ({lower}, {upper if upper is not None else 'inf'})"
        )
    return x


def _log_ratio(x: np.ndarray, kind: BoundKind, lower, upper) -> np.ndarray:
    if kind == BoundKind.LOWER:
        return np.log(x - lower)
    return np.log(x - lower) - np.log(upper - x)


def _power(r: np.ndarray, lam: float) -> np.ndarray:
    if abs(lam) < LAMBDA_ZERO_TOL:
        return r
    return np.expm1(lam * r) / lam


def forward(x, kind, lower=None, upper=None, lam: float = 1.0, box=DEFAULT_LAMBDA_BOX):
    kind = BoundKind(kind)
    x = _checked(x, kind, lower, upper, lam, box)
    if kind == BoundKind.UNBOUNDED:
        return _as_output(np.array(x, dtype=float))
    return _as_output(_power(_log_ratio(x, kind, lower, upper), lam))


def log_derivative(x, kind, lower=None, upper=None, lam: float = 1.0, box=DEFAULT_LAMBDA_BOX):
    # The doubly-bounded expression also covers lam = 0:
    # (lam - 1) r + log(u - l) - 2 log(u - x) == log(1/(x - l) + 1/(u - x)) there.
    kind = BoundKind(kind)
    x = _checked(x, kind, lower, upper, lam, box)
    if kind == BoundKind.UNBOUNDED:
        return _as_output(np.zeros_like(x))
    if kind == BoundKind.LOWER:
        return _as_output((lam - 1.0) * np.log(x - lower))
    r = _log_ratio(x, kind, lower, upper)
    return _as_output((lam - 1.0) * r + np.log(upper - lower) - 2.0 * np.log(upper - x))


def derivative(x, kind, lower=None, upper=None, lam: float = 1.0, box=DEFAULT_LAMBDA_BOX):
    return _as_output(np.exp(np.asarray(log_derivative(x, kind, lower, upper, lam, box))))


def inverse(y, kind, lower=None, upper=None, lam: float = 1.0):
    kind = BoundKind(kind)
    y = np.asarray(y, dtype=float)
    if kind == BoundKind.UNBOUNDED:
        return _as_output(np.array(y))
    if abs(lam) < LAMBDA_ZERO_TOL:
        r = y
    else:
        arg = lam * y
        if not np.all(arg > -1.0):
            raise TransformDomainError(f"lambda*y + 1 must be positive for lambda={lam}")
        r = np.log1p(arg) / lam
    if kind == BoundKind.LOWER:
        return _as_output(lower + np.exp(r))
    return _as_output(lower + (upper - lower) * expit(r))


@dataclass(frozen=True)
class TransformParams:
    lam: np.ndarray
    fixed: np.ndarray
    bounds: BoundsSpec
    box: Tuple[float, float] = DEFAULT_LAMBDA_BOX

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float).reshape(-1)
        fixed = np.array(self.fixed, dtype=bool).reshape(-1)
        if lam.shape != (self.bounds.d,) or fixed.shape != (self.bounds.d,):
            raise TransformDomainError(
                f"expected {self.bounds.d} transform parameters, got {lam.shape[0]}"
            )
        if not self.box[0] < self.box[1]:
            raise TransformDomainError(f"empty lambda box {self.box}")
        for j, kind in enumerate(self.bounds.kinds()):
            if kind == BoundKind.UNBOUNDED:
                lam[j] = 1.0
                fixed[j] = True
            elif not self.box[0] <= lam[j] <= self.box[1]:
                raise TransformDomainError(f"lambda[{j}]={lam[j]} outside the box {self.box}")
        lam.setflags(write=False)
        fixed.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "fixed", fixed)
        object.__setattr__(self, "box", (float(self.box[0]), float(self.box[1])))

    @classmethod
    def initial(
        cls,
        bounds: BoundsSpec,
        fixed_values: Optional[Dict[int, float]] = None,
        box: Tuple[float, float] = DEFAULT_LAMBDA_BOX,
    ) -> "TransformParams":
        """Start with lam = 1 everywhere; ``fixed_values`` pins selected columns."""
        lam = np.ones(bounds.d)
        fixed = np.zeros(bounds.d, dtype=bool)
        for j, value in (fixed_values or {}).items():
            lam[j] = value
            fixed[j] = True
        return cls(lam=lam, fixed=fixed, bounds=bounds, box=box)

    @property
    def d(self) -> int:
        return self.lam.shape[0]

    @property
    def free_indices(self) -> np.ndarray:
        return np.flatnonzero(~self.fixed)

    @property
    def n_free(self) -> int:
        return int((~self.fixed).sum())

    def with_lambda(self, j: int, value: float) -> "TransformParams":
        lam = np.array(self.lam)
        lam[j] = value
        return TransformParams(lam=lam, fixed=self.fixed, bounds=self.bounds, box=self.box)

    def with_lambdas(self, values) -> "TransformParams":
        return TransformParams(lam=values, fixed=self.fixed, bounds=self.bounds, box=self.box)


def transform_column(column, var: VariableBounds, lam: float, box=DEFAULT_LAMBDA_BOX) -> np.ndarray:
    return np.asarray(forward(column, var.kind, var.lower, var.upper, lam, box), dtype=float)


def log_derivative_column(column, var: VariableBounds, lam: float, box=DEFAULT_LAMBDA_BOX) -> np.ndarray:
    return np.asarray(log_derivative(column, var.kind, var.lower, var.upper, lam, box), dtype=float)


def transform_data(X, tparams: TransformParams) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    Y = np.empty_like(X)
    for j, var in enumerate(tparams.bounds.variables):
        Y[:, j] = transform_column(X[:, j], var, tparams.lam[j], tparams.box)
    return Y


def log_derivative_matrix(X, tparams: TransformParams) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    out = np.empty_like(X)
    for j, var in enumerate(tparams.bounds.variables):
        out[:, j] = log_derivative_column(X[:, j], var, tparams.lam[j], tparams.box)
    return out


def log_jacobian_rows(X, tparams: TransformParams) -> np.ndarray:
    return log_derivative_matrix(X, tparams).sum(axis=1)


def log_jacobian(x_row, tparams: TransformParams) -> float:
    x_row = np.asarray(x_row, dtype=float).reshape(-1)
    if x_row.shape[0] != tparams.d:
        raise TransformDomainError(f"row has {x_row.shape[0]} coordinates, expected {tparams.d}")
    return float(log_jacobian_rows(x_row[None, :], tparams)[0])


def inverse_data(Y, tparams: TransformParams) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[None, :]
    X = np.empty_like(Y)
    for j, var in enumerate(tparams.bounds.variables):
        X[:, j] = inverse(Y[:, j], var.kind, var.lower, var.upper, tparams.lam[j])
    return X


def marginal_profile_loglik(column, var: VariableBounds, lam: float, box=DEFAULT_LAMBDA_BOX) -> float:
    """Single-Gaussian log-likelihood of one variable with mean and variance profiled out."""
    y = transform_column(column, var, lam, box)
    n = y.shape[0]
    var_hat = np.var(y)
    if not var_hat > 0:
        return -np.inf
    return float(
        -0.5 * n * (np.log(2.0 * np.pi * var_hat) + 1.0)
        + log_derivative_column(column, var, lam, box).sum()
    )


def estimate_marginal_lambda(column, var: VariableBounds, box=DEFAULT_LAMBDA_BOX) -> float:
    """Maximize the marginal profile log-likelihood over the box.

    A coarse grid locates the best bracket, then a bounded Brent search
    refines it to LAMBDA_XATOL.
    """
    column = np.asarray(column, dtype=float)
    if var.kind == BoundKind.UNBOUNDED:
        return 1.0
    if np.ptp(column) == 0:
        return float(np.clip(1.0, box[0], box[1]))

    def objective(lam):
        value = marginal_profile_loglik(column, var, lam, box)
        return -value if np.isfinite(value) else 1e300

    grid = np.linspace(box[0], box[1], MARGINAL_GRID_POINTS)
    scores = np.array([objective(g) for g in grid])
    best = int(np.argmin(scores))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid.shape[0] - 1)]
    res = minimize_scalar(objective, bounds=(lo, hi), method="bounded", options={"xatol": LAMBDA_XATOL})
    if res.success and res.fun <= scores[best]:
        return float(res.x)
    return float(grid[best])
