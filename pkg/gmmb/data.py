"""
Datasets and per-variable support declarations.

Observations must lie strictly inside their declared support: the range-power
transform and its derivative diverge at the bounds. Bounds are always declared
by the user, never inferred from the data.
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator

from .errors import (
    BoundaryViolationError,
    ConfigError,
    DimensionMismatchError,
    ParseError,
)

NUDGE_FACTOR = 1e-8


class BoundKind(str, Enum):
    UNBOUNDED = "none"
    LOWER = "lower"
    DOUBLE = "both"


class VariableBounds(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: BoundKind = BoundKind.UNBOUNDED
    lower: Optional[float] = None
    upper: Optional[float] = None

    @model_validator(mode="after")
    def _check_bounds(self):
        if self.kind == BoundKind.UNBOUNDED:
            if self.lower is not None or self.upper is not None:
                raise ValueError("unbounded variables take no bound values")
            return self
        if self.lower is None or not math.isfinite(self.lower):
            raise ValueError("a finite lower bound is required")
        if self.kind == BoundKind.LOWER:
            if self.upper is not None:
                raise ValueError("lower-bounded variables take no upper bound")
            return self
        if self.upper is None or not math.isfinite(self.upper):
            raise ValueError("a finite upper bound is required")
        if not self.lower < self.upper:
            raise ValueError(f"lower bound {self.lower} must be below upper bound {self.upper}")
        return self

    @classmethod
    def unbounded(cls) -> "VariableBounds":
        return cls(kind=BoundKind.UNBOUNDED)

    @classmethod
    def lower_bounded(cls, lower: float) -> "VariableBounds":
        return cls(kind=BoundKind.LOWER, lower=lower)

    @classmethod
    def doubly_bounded(cls, lower: float, upper: float) -> "VariableBounds":
        return cls(kind=BoundKind.DOUBLE, lower=lower, upper=upper)

    def describe(self) -> str:
        if self.kind == BoundKind.UNBOUNDED:
            return "none"
        if self.kind == BoundKind.LOWER:
            return f"lower={self.lower!r}"
        return f"lower={self.lower!r},upper={self.upper!r}"


class BoundsSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    variables: Tuple[VariableBounds, ...]

    @classmethod
    def of(cls, variables: Sequence[VariableBounds]) -> "BoundsSpec":
        return cls(variables=tuple(variables))

    @property
    def d(self) -> int:
        return len(self.variables)

    def kinds(self) -> List[BoundKind]:
        return [v.kind for v in self.variables]

    def lowers(self) -> np.ndarray:
        return np.array([np.nan if v.lower is None else v.lower for v in self.variables])

    def uppers(self) -> np.ndarray:
        return np.array([np.nan if v.upper is None else v.upper for v in self.variables])


def parse_bounds_spec(text: str) -> Tuple[str, VariableBounds]:
    """Parse "col:lower=0", "col:lower=0,upper=1" or "col:none"."""
    if ":" not in text:
        raise ConfigError(f"bounds spec '{text}' must look like 'column:lower=0[,upper=1]' or 'column:none'")
    column, _, body = text.rpartition(":")
    column = column.strip()
    body = body.strip().lower()
    if not column:
        raise ConfigError(f"bounds spec '{text}' names no column")
    if body in ("none", "unbounded", ""):
        return column, VariableBounds.unbounded()

    values: Dict[str, float] = {}
    for part in body.split(","):
        key, sep, raw = part.partition("=")
        key = key.strip()
        if not sep or key not in ("lower", "upper"):
            raise ConfigError(f"bounds spec '{text}': unknown entry '{part}'")
        try:
            values[key] = float(raw)
        except ValueError:
            raise ConfigError(f"bounds spec '{text}': '{raw}' is not a number")

    try:
        if "upper" in values:
            if "lower" not in values:
                raise ConfigError(f"bounds spec '{text}': an upper bound needs a lower bound")
            return column, VariableBounds.doubly_bounded(values["lower"], values["upper"])
        return column, VariableBounds.lower_bounded(values["lower"])
    except ValueError as e:
        raise ConfigError(f"bounds spec '{text}': {e}")


@dataclass(frozen=True)
class Dataset:
    values: np.ndarray
    column_names: Tuple[str, ...]
    categorical: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ParseError(f"dataset must be a non-empty n x d matrix, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            row, col = np.argwhere(~np.isfinite(values))[0]
            raise ParseError("non-finite value", row=int(row), column=int(col))
        if len(self.column_names) != values.shape[1]:
            raise DimensionMismatchError(
                f"{len(self.column_names)} column names for {values.shape[1]} columns"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "column_names", tuple(self.column_names))

    @classmethod
    def from_array(cls, values, column_names: Optional[Sequence[str]] = None) -> "Dataset":
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if column_names is None:
            column_names = [f"V{j + 1}" for j in range(values.shape[1])]
        return cls(values=values, column_names=tuple(column_names))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass
class ValidationReport:
    # (row, column) with rows 1-based, matching load_csv parse errors
    violations: List[Tuple[int, str]]

    @property
    def passed(self) -> bool:
        return not self.violations


def _outside_mask(values: np.ndarray, bounds: BoundsSpec) -> np.ndarray:
    mask = np.zeros(values.shape, dtype=bool)
    for j, var in enumerate(bounds.variables):
        column = values[:, j]
        if var.kind == BoundKind.LOWER:
            mask[:, j] = ~(column > var.lower)
        elif var.kind == BoundKind.DOUBLE:
            mask[:, j] = ~((column > var.lower) & (column < var.upper))
    return mask


def validate(data: Dataset, bounds: BoundsSpec) -> ValidationReport:
    if data.d != bounds.d:
        raise DimensionMismatchError(f"data has {data.d} columns but bounds declare {bounds.d}")
    mask = _outside_mask(data.values, bounds)
    violations = [(int(i) + 1, data.column_names[j]) for i, j in np.argwhere(mask)]
    return ValidationReport(violations=violations)


def nudge_boundary(data: Dataset, bounds: BoundsSpec) -> Tuple[Dataset, int]:
    """Move cells lying exactly on a bound inward by 1e-8 times the range (or 1e-8 when half-open)."""
    if data.d != bounds.d:
        raise DimensionMismatchError(f"data has {data.d} columns but bounds declare {bounds.d}")
    values = np.array(data.values)
    moved = 0
    for j, var in enumerate(bounds.variables):
        if var.kind == BoundKind.UNBOUNDED:
            continue
        if var.kind == BoundKind.LOWER:
            eps = NUDGE_FACTOR
        else:
            eps = NUDGE_FACTOR * (var.upper - var.lower)
            on_upper = values[:, j] == var.upper
            values[on_upper, j] = var.upper - eps
            moved += int(on_upper.sum())
        on_lower = values[:, j] == var.lower
        values[on_lower, j] = var.lower + eps
        moved += int(on_lower.sum())

    if moved:
        print(f"⚠️ [!] Moved {moved} boundary value(s) inside their support")
    nudged = Dataset(values=values, column_names=data.column_names, categorical=data.categorical)
    return nudged, moved


def _to_float(raw, row: int, column: str) -> float:
    text = str(raw).strip()
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"cannot parse '{text}' as a number", row=row, column=column)
    if not math.isfinite(value):
        raise ParseError(f"missing or non-finite value '{text}'", row=row, column=column)
    return value


def load_csv(
    path,
    bounds: BoundsSpec,
    has_header: bool = True,
    columns: Optional[Sequence[str]] = None,
    categorical: Optional[Sequence[str]] = None,
    nudge: bool = False,
) -> Dataset:
    """Read a comma-separated file into a validated Dataset.

    Rows are reported 1-based in parse errors (counting data rows only).
    Columns listed in ``categorical`` are kept as string vectors in
    ``Dataset.categorical`` for external evaluation.
    """
    try:
        frame = pd.read_csv(
            path,
            header=0 if has_header else None,
            dtype=str,
            keep_default_na=False,
            encoding="utf-8",
            skipinitialspace=True,
        )
    except pd.errors.EmptyDataError:
        raise ParseError(f"{path}: file is empty")
    except pd.errors.ParserError as e:
        raise ParseError(f"{path}: {e}")

    if not has_header:
        frame.columns = [f"V{j + 1}" for j in range(frame.shape[1])]
    frame.columns = [str(c).strip() for c in frame.columns]
    if frame.shape[0] == 0:
        raise ParseError(f"{path}: no data rows")

    categorical = list(categorical or [])
    if columns is None:
        columns = [c for c in frame.columns if c not in categorical]
    missing = [c for c in list(columns) + categorical if c not in frame.columns]
    if missing:
        raise ParseError(f"{path}: unknown column(s) {missing}; available {list(frame.columns)}")
    if len(columns) != bounds.d:
        raise DimensionMismatchError(f"{len(columns)} selected column(s) but bounds declare {bounds.d}")

    values = np.empty((frame.shape[0], len(columns)))
    for j, name in enumerate(columns):
        for i, raw in enumerate(frame[name].tolist()):
            values[i, j] = _to_float(raw, row=i + 1, column=name)

    labels = {name: np.array([str(v).strip() for v in frame[name]]) for name in categorical}
    data = Dataset(values=values, column_names=tuple(columns), categorical=labels)

    if nudge:
        data, _ = nudge_boundary(data, bounds)
    report = validate(data, bounds)
    if not report.passed:
        raise BoundaryViolationError(report)
    return data


def write_csv(path, data: Dataset) -> None:
    """Write the numeric columns with 17 significant digits (exact float round trip)."""
    frame = pd.DataFrame(data.values, columns=list(data.column_names))
    frame.to_csv(path, index=False, float_format="%.17g")
