"""
Run configuration: a JSON file validated by pydantic, overridden by CLI flags,
with environment defaults loaded through python-dotenv.
"""
import json
import os
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .data import BoundsSpec, Dataset, load_csv, parse_bounds_spec
from .ecm import FitConfig
from .errors import ConfigError, ParseError
from .mixture import ModelCode
from .transform import DEFAULT_LAMBDA_BOX

DEFAULT_BOUND_KEY = "*"


def env_defaults() -> Dict[str, object]:
    """Defaults taken from the environment (and a .env file, if present)."""
    load_dotenv()
    try:
        return {
            "out": os.getenv("GMMB_OUT_DIR", "results"),
            "seed": int(os.getenv("GMMB_SEED", "0")),
            "workers": int(os.getenv("GMMB_WORKERS", "1")),
        }
    except ValueError as e:
        raise ConfigError(f"invalid GMMB_* environment value: {e}")


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    data: Optional[str] = None
    has_header: bool = True
    columns: Optional[List[str]] = None
    categorical: List[str] = Field(default_factory=list)
    bounds: Dict[str, str] = Field(default_factory=dict)
    fixed_lambda: Dict[str, float] = Field(default_factory=dict)
    G: Union[int, str, List[int]] = 1
    models: Optional[List[str]] = None
    tol: float = Field(default=1e-8, gt=0)
    max_iter: int = Field(default=1000, ge=1)
    n_kmeans_starts: int = Field(default=10, ge=1)
    lambda_box: Tuple[float, float] = DEFAULT_LAMBDA_BOX
    seed: int = Field(default=0, ge=0)
    nudge_boundary: bool = False
    out: Optional[str] = None
    workers: int = Field(default=1, ge=1)
    grid: Optional[str] = None

    @field_validator("lambda_box")
    @classmethod
    def _box_not_empty(cls, box):
        if not box[0] < box[1]:
            raise ValueError(f"lambda box {box} is empty")
        return box

    @field_validator("models", mode="before")
    @classmethod
    def _split_models(cls, value):
        if isinstance(value, str):
            return [m.strip() for m in value.split(",") if m.strip()]
        return value

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        """Load a JSON run configuration; a relative data path is resolved against the file's directory."""
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"configuration file {path} does not exist")
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path} is not valid JSON: {e}")
        if not isinstance(raw, dict):
            raise ConfigError(f"{path} must contain a JSON object")
        if raw.get("data") and not Path(raw["data"]).is_absolute():
            raw["data"] = str(path.parent / raw["data"])
        return cls.build(**raw)

    @classmethod
    def build(cls, **values) -> "RunConfig":
        try:
            return cls(**values)
        except ValidationError as e:
            raise ConfigError(_describe_validation_error(e))

    def with_overrides(self, **overrides) -> "RunConfig":
        """Return a copy with every non-None override applied and re-validated."""
        merged = self.model_dump()
        merged.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig.build(**merged)

    def G_values(self) -> List[int]:
        return parse_G_range(self.G)

    def model_codes(self, d: int) -> List[ModelCode]:
        if not self.models:
            return [ModelCode.V if d == 1 else ModelCode.VVV]
        return [ModelCode.parse(m, d) for m in self.models]

    def fit_config(self, G: int, model, fixed_lambda: Optional[Dict[int, float]] = None, verbose: bool = False) -> FitConfig:
        try:
            return FitConfig(
                G=G,
                model=ModelCode(model),
                tol=self.tol,
                max_iter=self.max_iter,
                n_kmeans_starts=self.n_kmeans_starts,
                rng_seed=self.seed,
                lambda_box=self.lambda_box,
                fixed_lambda=fixed_lambda or {},
                verbose=verbose,
            )
        except ValidationError as e:
            raise ConfigError(_describe_validation_error(e))


def _describe_validation_error(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        where = ".".join(str(p) for p in item["loc"]) or "config"
        parts.append(f"{where}: {item['msg']}")
    return "invalid configuration: " + "; ".join(parts)


def parse_G_range(value) -> List[int]:
    """Accepts 3, [1, 2, 3], "2", "1..5" or "1,3,4"."""
    if isinstance(value, bool):
        raise ConfigError(f"invalid component range {value!r}")
    if isinstance(value, int):
        values = [value]
    elif isinstance(value, (list, tuple)):
        values = [int(v) for v in value]
    else:
        text = str(value).strip()
        try:
            if ".." in text:
                lo, _, hi = text.partition("..")
                values = list(range(int(lo), int(hi) + 1))
            else:
                values = [int(part) for part in text.split(",") if part.strip()]
        except ValueError:
            raise ConfigError(f"invalid component range '{text}'; use e.g. 2, 1..5 or 1,3,4")
    if not values or min(values) < 1:
        raise ConfigError(f"component range {value!r} must name counts of at least 1")
    return sorted(set(values))


def parse_grid(text: str) -> np.ndarray:
    """Density grid: "start:stop:num" (evenly spaced, inclusive) or a comma list."""
    text = str(text).strip()
    try:
        if ":" in text:
            start, stop, num = text.split(":")
            grid = np.linspace(float(start), float(stop), int(num))
        else:
            grid = np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError:
        raise ConfigError(f"invalid grid '{text}'; use start:stop:num or a comma-separated list")
    if grid.size == 0:
        raise ConfigError("density grid is empty")
    return grid


def merge_bound_flags(bounds: Dict[str, str], flags: Optional[Sequence[str]]) -> Dict[str, str]:
    """Fold repeated --bounds "col:spec" flags into the column -> spec mapping."""
    merged = dict(bounds)
    for flag in flags or []:
        column, var = parse_bounds_spec(flag)
        merged[column] = var.describe()
    return merged


def available_columns(path, has_header: bool) -> List[str]:
    try:
        if has_header:
            return [str(c).strip() for c in pd.read_csv(path, nrows=0, skipinitialspace=True).columns]
        first = pd.read_csv(path, header=None, nrows=1)
        return [f"V{j + 1}" for j in range(first.shape[1])]
    except FileNotFoundError:
        raise
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise ParseError(f"{path}: {e}")


def selected_columns(config: RunConfig) -> List[str]:
    if config.columns:
        return list(config.columns)
    if not config.data:
        raise ConfigError("no data file given (--data or \"data\" in the config file)")
    return [c for c in available_columns(config.data, config.has_header) if c not in config.categorical]


def resolve_bounds(config: RunConfig, columns: Sequence[str]) -> BoundsSpec:
    """Every selected column needs a declaration, explicitly or through the "*" default."""
    unknown = [c for c in config.bounds if c != DEFAULT_BOUND_KEY and c not in columns]
    if unknown:
        raise ConfigError(f"bounds declared for unselected column(s) {unknown}")
    variables = []
    for column in columns:
        spec = config.bounds.get(column, config.bounds.get(DEFAULT_BOUND_KEY))
        if spec is None:
            raise ConfigError(f"column '{column}' has no bounds declaration; bounds are never inferred")
        _, var = parse_bounds_spec(f"{column}:{spec}")
        variables.append(var)
    return BoundsSpec.of(variables)


def resolve_fixed_lambda(config: RunConfig, columns: Sequence[str]) -> Dict[int, float]:
    fixed = {}
    for name, value in config.fixed_lambda.items():
        if name not in columns:
            raise ConfigError(f"fixed lambda declared for unselected column '{name}'")
        fixed[list(columns).index(name)] = float(value)
    return fixed


def load_dataset(config: RunConfig) -> Tuple[Dataset, BoundsSpec]:
    if not config.data:
        raise ConfigError("no data file given (--data or \"data\" in the config file)")
    columns = selected_columns(config)
    bounds = resolve_bounds(config, columns)
    data = load_csv(
        config.data,
        bounds,
        has_header=config.has_header,
        columns=columns,
        categorical=config.categorical,
        nudge=config.nudge_boundary,
    )
    return data, bounds
