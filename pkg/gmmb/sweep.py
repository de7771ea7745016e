"""
Model selection over a (G, model code) grid.

Each grid cell is fitted independently with try_fit; failures are kept as
records. The best entries maximize BIC and ICL among successful fits, ties
going to the earlier cell (G ascending, then models in the order given).
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import pandas as pd

from .data import BoundsSpec, Dataset
from .ecm import FitConfig, FitFailure, FitResult, try_fit
from .errors import ConfigError, FitError
from .mixture import ModelCode

GridEntry = Union[FitResult, FitFailure]


@dataclass
class SweepResult:
    cells: List[Tuple[int, ModelCode]]
    grid: List[GridEntry]
    best_by_bic: FitResult
    best_by_icl: FitResult

    def successes(self) -> List[FitResult]:
        return [entry for entry in self.grid if isinstance(entry, FitResult)]

    def lookup(self, G: int, model) -> GridEntry:
        model = ModelCode(model)
        for cell, entry in zip(self.cells, self.grid):
            if cell == (G, model):
                return entry
        raise KeyError(f"({model.value}, {G}) is not on the grid")

    def table(self) -> pd.DataFrame:
        """One row per grid cell, shaped like a model comparison table."""
        rows = []
        for (G, model), entry in zip(self.cells, self.grid):
            if isinstance(entry, FitResult):
                rows.append({
                    "model": model.value,
                    "G": G,
                    "loglik": entry.loglik,
                    "df": entry.df,
                    "bic": entry.bic,
                    "icl": entry.icl,
                    "nec": entry.nec,
                    "converged": entry.converged,
                    "n_iter": entry.n_iter,
                    "status": "ok",
                    "best_bic": entry is self.best_by_bic,
                    "best_icl": entry is self.best_by_icl,
                })
            else:
                rows.append({
                    "model": model.value,
                    "G": G,
                    "loglik": float("nan"),
                    "df": None,
                    "bic": float("nan"),
                    "icl": float("nan"),
                    "nec": float("nan"),
                    "converged": False,
                    "n_iter": 0,
                    "status": f"failed: {entry.error_type}: {entry.reason}",
                    "best_bic": False,
                    "best_icl": False,
                })
        return pd.DataFrame(rows)


def _best(fits: Sequence[GridEntry], key: str) -> Optional[FitResult]:
    best = None
    for entry in fits:
        if isinstance(entry, FitResult) and (best is None or getattr(entry, key) > getattr(best, key)):
            best = entry
    return best


def sweep(
    data: Dataset,
    bounds: BoundsSpec,
    G_range: Sequence[int],
    model_codes: Sequence,
    config: FitConfig,
    workers: int = 1,
) -> SweepResult:
    """Fit every (G, model) pair; ``config`` supplies everything except G and model."""
    models = [ModelCode.parse(code, data.d) for code in model_codes]
    G_values = sorted(set(int(G) for G in G_range))
    if not models or not G_values:
        raise ConfigError("model sweep needs at least one G value and one model code")
    if G_values[0] < 1:
        raise ConfigError(f"component counts must be at least 1, got {G_values[0]}")

    cells = [(G, model) for G in G_values for model in models]
    configs = [config.model_copy(update={"G": G, "model": model}) for G, model in cells]

    if config.verbose:
        print(f"🔍 [*] Fitting {len(cells)} model(s) with {workers} worker(s)...")

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(try_fit, data, bounds, c) for c in configs]
            grid = [future.result() for future in futures]
    else:
        grid = [try_fit(data, bounds, c) for c in configs]

    for (G, model), entry in zip(cells, grid):
        if isinstance(entry, FitFailure):
            print(f"⚠️ [!] {model.value},{G} failed: {entry.reason}")

    best_bic = _best(grid, "bic")
    best_icl = _best(grid, "icl")
    if best_bic is None:
        raise FitError(f"all {len(cells)} fit(s) in the sweep failed")
    return SweepResult(cells=cells, grid=grid, best_by_bic=best_bic, best_by_icl=best_icl)
