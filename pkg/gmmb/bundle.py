"""
Result files: a JSON fit summary plus a per-observation CSV.

JSON floats are written with repr, which round-trips doubles exactly; CSV
columns use 17 significant digits. Every file is written to a temporary
sibling and renamed into place.
"""
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd

from .data import BoundsSpec, VariableBounds
from .ecm import FitResult
from .errors import ConfigError
from .mixture import CovarianceFactors, MixtureParams, ModelCode
from .transform import TransformParams

FLOAT_FORMAT = "%.17g"
SUMMARY_VERSION = 1


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_frame(path, frame: pd.DataFrame) -> Path:
    return atomic_write_text(path, frame.to_csv(index=False, float_format=FLOAT_FORMAT))


def _summary(result: FitResult) -> Dict:
    params, tparams = result.params, result.tparams
    return {
        "version": SUMMARY_VERSION,
        "model": params.model.value,
        "G": params.G,
        "n": result.n,
        "d": params.d,
        "columns": list(result.column_names),
        "loglik": result.loglik,
        "df": result.df,
        "bic": result.bic,
        "icl": result.icl,
        "nec": result.nec,
        "entropy_total": result.entropy_total,
        "converged": result.converged,
        "n_iter": result.n_iter,
        "loglik_trace": [float(v) for v in result.loglik_trace],
        "bounds": [v.model_dump(mode="json") for v in tparams.bounds.variables],
        "lambda": tparams.lam.tolist(),
        "lambda_fixed": tparams.fixed.tolist(),
        "lambda_box": list(tparams.box),
        "weights": params.weights.tolist(),
        "means": params.means.tolist(),
        "volume": params.factors.volume.tolist(),
        "shape": params.factors.shape.tolist(),
        "orientation": params.factors.orientation.tolist(),
        "covariances": params.factors.covariances().tolist(),
    }


def observation_table(z: np.ndarray, labels, uncertainty, entropy) -> pd.DataFrame:
    frame = pd.DataFrame({
        "row": np.arange(1, z.shape[0] + 1),
        "label": np.asarray(labels, dtype=int),
        "uncertainty": uncertainty,
        "entropy": entropy,
    })
    for k in range(z.shape[1]):
        frame[f"z{k + 1}"] = z[:, k]
    return frame


@dataclass
class ResultBundle:
    summary: Dict
    observations: Optional[pd.DataFrame] = None

    @classmethod
    def from_fit(cls, result: FitResult) -> "ResultBundle":
        return cls(
            summary=_summary(result),
            observations=observation_table(result.z.z, result.classification, result.uncertainty, result.entropy),
        )

    @property
    def stem(self) -> str:
        return f"fit_{self.summary['model']}_G{self.summary['G']}"

    def bounds(self) -> BoundsSpec:
        return BoundsSpec.of([VariableBounds(**v) for v in self.summary["bounds"]])

    def tparams(self) -> TransformParams:
        return TransformParams(
            lam=np.array(self.summary["lambda"]),
            fixed=np.array(self.summary["lambda_fixed"]),
            bounds=self.bounds(),
            box=tuple(self.summary["lambda_box"]),
        )

    def params(self) -> MixtureParams:
        return MixtureParams(
            weights=np.array(self.summary["weights"]),
            means=np.array(self.summary["means"]),
            factors=CovarianceFactors(
                volume=np.array(self.summary["volume"]),
                shape=np.array(self.summary["shape"]),
                orientation=np.array(self.summary["orientation"]),
            ),
            model=ModelCode(self.summary["model"]),
        )

    def write(self, out_dir) -> Tuple[Path, Optional[Path]]:
        out_dir = Path(out_dir)
        summary_path = atomic_write_text(out_dir / f"{self.stem}.json", json.dumps(self.summary, indent=2))
        observations_path = None
        if self.observations is not None:
            observations_path = atomic_write_frame(out_dir / f"{self.stem}_observations.csv", self.observations)
        return summary_path, observations_path


def write_fit_bundle(result: FitResult, out_dir) -> Tuple[Path, Optional[Path]]:
    return ResultBundle.from_fit(result).write(out_dir)


def load_fit_bundle(path) -> ResultBundle:
    """Load a summary JSON and, when present next to it, its observation table."""
    path = Path(path)
    try:
        summary = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"fit file {path} does not exist")
    except json.JSONDecodeError as e:
        raise ConfigError(f"fit file {path} is not valid JSON: {e}")
    missing = [k for k in ("model", "G", "bounds", "lambda", "weights", "means", "volume", "shape", "orientation") if k not in summary]
    if missing:
        raise ConfigError(f"fit file {path} lacks {missing}")

    observations = None
    companion = path.with_name(f"{path.stem}_observations.csv")
    if companion.exists():
        observations = pd.read_csv(companion, float_precision="round_trip")
    return ResultBundle(summary=summary, observations=observations)
