"""
Command-line front end.

Subcommands:
1. fit       - fit one (model, G) and write the summary and observation files
2. sweep     - fit a (G, model) grid and write the comparison table
3. density   - evaluate a saved d=1 fit on a grid of the original scale
4. profiles  - back-transform cluster means of a saved fit
5. transform - marginal powers and transformed columns
6. classify  - apply a saved fit's MAP rule to new rows
7. fetch     - download a dataset used by the reproduction scripts
8. version
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from . import __version__
from .bundle import ResultBundle, atomic_write_frame, load_fit_bundle, observation_table
from .config import (
    RunConfig,
    env_defaults,
    load_dataset,
    merge_bound_flags,
    parse_grid,
    resolve_fixed_lambda,
)
from .data import Dataset, load_csv
from .diagnostics import entropy_measures, map_classify
from .ecm import FitResult, e_step, fit
from .errors import ConfigError, DataError, DownloadError, FitError, GMMBError, TransformDomainError
from .fetch import DATASETS, fetch
from .mixture import component_log_densities, log_density_original
from .sweep import SweepResult, sweep
from .transform import (
    TransformParams,
    estimate_marginal_lambda,
    inverse,
    log_jacobian_rows,
    transform_data,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_FIT = 4
EXIT_IO = 5

EPILOG = """exit status:
  0  success
  2  configuration error (bad flag, config file or bounds declaration)
  3  data error (unparseable file, value outside its declared support)
  4  degenerate or failed fit (empty component, singular covariance, all sweep fits failed)
  5  I/O or download error
"""


def _report_line(result: FitResult) -> str:
    return (
        f"{result.model.value},{result.G}: loglik={result.loglik:.4f} df={result.df} "
        f"BIC={result.bic:.4f} ICL={result.icl:.4f} NEC={result.nec:.4f}"
    )


def cmd_fit(config: RunConfig, verbose: bool = False) -> Tuple[FitResult, Path]:
    data, bounds = load_dataset(config)
    models = config.model_codes(data.d)
    G_values = config.G_values()
    if len(models) != 1 or len(G_values) != 1:
        raise ConfigError("fit takes exactly one model code and one G; use the sweep subcommand for grids")
    fixed = resolve_fixed_lambda(config, data.column_names)

    print(f"🧮 [*] Fitting {models[0].value},{G_values[0]} on {data.n} x {data.d} data...")
    result = fit(data, bounds, config.fit_config(G_values[0], models[0], fixed, verbose))

    bundle = ResultBundle.from_fit(result)
    bundle.summary["data_means"] = data.values.mean(axis=0).tolist()
    summary_path, _ = bundle.write(config.out)
    print(f"✅ [+] {_report_line(result)}")
    print(f"📂 [*] Wrote {summary_path}")
    return result, summary_path


def cmd_sweep(config: RunConfig, verbose: bool = False) -> Tuple[SweepResult, Path]:
    data, bounds = load_dataset(config)
    fixed = resolve_fixed_lambda(config, data.column_names)
    template = config.fit_config(1, config.model_codes(data.d)[0], fixed, verbose)
    result = sweep(
        data,
        bounds,
        config.G_values(),
        config.model_codes(data.d),
        template,
        workers=config.workers,
    )

    table = result.table()
    table_path = atomic_write_frame(Path(config.out) / "sweep.csv", table)
    for best in {id(result.best_by_bic): result.best_by_bic, id(result.best_by_icl): result.best_by_icl}.values():
        bundle = ResultBundle.from_fit(best)
        bundle.summary["data_means"] = data.values.mean(axis=0).tolist()
        bundle.write(config.out)

    print("📊 [*] Model comparison:")
    print(table[["model", "G", "loglik", "df", "bic", "icl", "nec", "status"]].to_string(index=False))
    print(f"✅ [+] Best by BIC: {_report_line(result.best_by_bic)}")
    print(f"✅ [+] Best by ICL: {_report_line(result.best_by_icl)}")
    print(f"📂 [*] Wrote {table_path}")
    return result, table_path


def density_table(bundle: ResultBundle, grid) -> pd.DataFrame:
    """Total and pi-scaled component densities on the original scale of a d=1 fit."""
    params, tparams = bundle.params(), bundle.tparams()
    if params.d != 1:
        raise ConfigError(f"density grids need a univariate fit, this one has d={params.d}")
    x = np.asarray(grid, dtype=float).reshape(-1, 1)
    log_jac = log_jacobian_rows(x, tparams)
    components = np.exp(component_log_densities(transform_data(x, tparams), params) + log_jac[:, None])
    frame = pd.DataFrame({"x": x[:, 0], "density": np.exp(log_density_original(x, params, tparams))})
    for k in range(params.G):
        frame[f"component_{k + 1}"] = components[:, k]
    return frame


def cmd_density(config: RunConfig, fit_file, grid: Optional[str] = None) -> Tuple[pd.DataFrame, Path]:
    spec = grid or config.grid
    if not spec:
        raise ConfigError("density needs a grid (--grid start:stop:num or a comma list)")
    bundle = load_fit_bundle(fit_file)
    frame = density_table(bundle, parse_grid(spec))
    path = atomic_write_frame(Path(config.out) / f"density_{bundle.stem}.csv", frame)
    print(f"✅ [+] Evaluated density at {frame.shape[0]} grid point(s)")
    print(f"📂 [*] Wrote {path}")
    return frame, path


def profile_table(bundle: ResultBundle) -> pd.DataFrame:
    """Cluster means mapped back to the original scale, one row per (variable, cluster)."""
    params, tparams = bundle.params(), bundle.tparams()
    columns = bundle.summary.get("columns") or [f"V{j + 1}" for j in range(params.d)]
    data_means = bundle.summary.get("data_means")
    rows = []
    for j, var in enumerate(tparams.bounds.variables):
        for k in range(params.G):
            y = float(params.means[k, j])
            try:
                value, defined = float(inverse(y, var.kind, var.lower, var.upper, tparams.lam[j])), True
            except TransformDomainError:
                value, defined = float("nan"), False
            rows.append({
                "variable": columns[j],
                "cluster": k + 1,
                "transformed_mean": y,
                "mean": value,
                "defined": defined,
                "data_mean": data_means[j] if data_means else float("nan"),
            })
    return pd.DataFrame(rows)


def cmd_profiles(config: RunConfig, fit_file) -> Tuple[pd.DataFrame, Path]:
    bundle = load_fit_bundle(fit_file)
    frame = profile_table(bundle)
    undefined = frame[~frame["defined"]]
    for _, row in undefined.iterrows():
        print(f"⚠️ [!] Mean of {row['variable']} in cluster {row['cluster']} has no back-transform")
    path = atomic_write_frame(Path(config.out) / f"profiles_{bundle.stem}.csv", frame)
    wide = frame.pivot(index="variable", columns="cluster", values="mean")
    print("📊 [*] Cluster means on the original scale:")
    print(wide.to_string())
    print(f"📂 [*] Wrote {path}")
    return frame, path


def marginal_transform(data: Dataset, tparams: TransformParams) -> Tuple[TransformParams, pd.DataFrame]:
    lam = np.array(tparams.lam)
    for j in tparams.free_indices:
        lam[j] = estimate_marginal_lambda(data.values[:, j], tparams.bounds.variables[j], tparams.box)
    tparams = tparams.with_lambdas(lam)
    frame = pd.DataFrame(transform_data(data.values, tparams), columns=list(data.column_names))
    return tparams, frame


def cmd_transform(config: RunConfig) -> Tuple[TransformParams, pd.DataFrame]:
    data, bounds = load_dataset(config)
    fixed = resolve_fixed_lambda(config, data.column_names)
    tparams, frame = marginal_transform(data, TransformParams.initial(bounds, fixed, config.lambda_box))
    out = Path(config.out)
    atomic_write_frame(out / "transformed.csv", frame)
    lambdas = pd.DataFrame({
        "variable": list(data.column_names),
        "bounds": [v.describe() for v in bounds.variables],
        "lambda": tparams.lam,
        "fixed": tparams.fixed,
    })
    path = atomic_write_frame(out / "lambdas.csv", lambdas)
    print("📊 [*] Marginal transformation powers:")
    print(lambdas.to_string(index=False))
    print(f"📂 [*] Wrote {path}")
    return tparams, frame


def cmd_classify(config: RunConfig, fit_file) -> Tuple[pd.DataFrame, Path]:
    if not config.data:
        raise ConfigError("classify needs the rows to label (--data)")
    bundle = load_fit_bundle(fit_file)
    params, tparams = bundle.params(), bundle.tparams()
    columns = bundle.summary.get("columns") if config.has_header else None
    data = load_csv(
        config.data,
        tparams.bounds,
        has_header=config.has_header,
        columns=columns,
        nudge=config.nudge_boundary,
    )
    z, _ = e_step(data, params, tparams)
    labels, uncertainty = map_classify(z.z)
    entropy, _, _ = entropy_measures(z.z)
    frame = observation_table(z.z, labels, uncertainty, entropy)
    path = atomic_write_frame(Path(config.out) / f"classified_{bundle.stem}.csv", frame)
    counts = np.bincount(labels, minlength=params.G + 1)[1:]
    print(f"✅ [+] Classified {data.n} row(s); cluster sizes {counts.tolist()}")
    print(f"📂 [*] Wrote {path}")
    return frame, path


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--data", help="CSV data file")
    common.add_argument("--columns", help="comma-separated numeric columns to use")
    common.add_argument("--no-header", action="store_true", help="data file has no header row")
    common.add_argument(
        "--bounds",
        action="append",
        metavar="SPEC",
        help='per-column support, e.g. "col:lower=0", "col:lower=0,upper=1", "col:none" or "*:lower=0" (repeatable)',
    )
    common.add_argument("--model", help="model code(s), e.g. V or E,V or VVE")
    common.add_argument("--G", dest="G", help="component count or range, e.g. 2, 1..5, 1,3,4")
    common.add_argument("--seed", type=int, help="k-means seed")
    common.add_argument("--tol", type=float, help="relative log-likelihood tolerance")
    common.add_argument("--max-iter", dest="max_iter", type=int, help="maximum ECM iterations")
    common.add_argument("--nudge-boundary", action="store_true", help="move values lying on a bound inside the support")
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int, help="threads for sweeps")
    common.add_argument("--verbose", action="store_true", help="print the per-iteration trace")

    parser = argparse.ArgumentParser(
        prog="gmmb",
        description="Gaussian mixtures for bounded data via range-power transformations.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("fit", parents=[common], help="fit one model")
    sub.add_parser("sweep", parents=[common], help="fit and compare a (G, model) grid")
    density = sub.add_parser("density", parents=[common], help="density of a saved d=1 fit on a grid")
    density.add_argument("--fit", dest="fit_file", required=True, help="fit summary JSON")
    density.add_argument("--grid", help="start:stop:num or comma list on the original scale")
    profiles = sub.add_parser("profiles", parents=[common], help="back-transformed cluster means of a saved fit")
    profiles.add_argument("--fit", dest="fit_file", required=True, help="fit summary JSON")
    sub.add_parser("transform", parents=[common], help="marginal powers and transformed data")
    classify = sub.add_parser("classify", parents=[common], help="label new rows with a saved fit")
    classify.add_argument("--fit", dest="fit_file", required=True, help="fit summary JSON")
    fetch_parser = sub.add_parser("fetch", help="download a dataset")
    fetch_parser.add_argument("dataset", choices=sorted(DATASETS))
    fetch_parser.add_argument("--dest", help="destination file (default: the task's data directory)")
    sub.add_parser("version", help="print the version")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    defaults = env_defaults()
    config = RunConfig.from_file(args.config) if args.config else RunConfig.build()
    config = config.with_overrides(**{k: v for k, v in defaults.items() if k not in config.model_fields_set})

    return config.with_overrides(
        data=args.data,
        columns=[c.strip() for c in args.columns.split(",")] if args.columns else None,
        has_header=False if args.no_header else None,
        bounds=merge_bound_flags(config.bounds, args.bounds) if args.bounds else None,
        models=args.model,
        G=args.G,
        seed=args.seed,
        tol=args.tol,
        max_iter=args.max_iter,
        nudge_boundary=True if args.nudge_boundary else None,
        out=args.out,
        workers=args.workers,
        grid=getattr(args, "grid", None),
    )


def run(args: argparse.Namespace) -> int:
    if args.command == "version":
        print(f"gmmb {__version__}")
        return EXIT_OK
    if args.command == "fetch":
        fetch(args.dataset, Path(args.dest) if args.dest else None)
        return EXIT_OK

    config = config_from_args(args)
    if args.command == "fit":
        cmd_fit(config, args.verbose)
    elif args.command == "sweep":
        cmd_sweep(config, args.verbose)
    elif args.command == "density":
        cmd_density(config, args.fit_file)
    elif args.command == "profiles":
        cmd_profiles(config, args.fit_file)
    elif args.command == "transform":
        cmd_transform(config)
    elif args.command == "classify":
        cmd_classify(config, args.fit_file)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except ConfigError as e:
        print(f"❌ [-] Configuration error: {e}")
        return EXIT_CONFIG
    except (DataError, TransformDomainError) as e:
        print(f"❌ [-] Data error: {e}")
        return EXIT_DATA
    except FitError as e:
        print(f"❌ [-] Fit failed: {e}")
        return EXIT_FIT
    except (DownloadError, OSError) as e:
        print(f"❌ [-] I/O error: {e}")
        return EXIT_IO
    except GMMBError as e:
        print(f"❌ [-] Error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
