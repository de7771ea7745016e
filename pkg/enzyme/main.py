"""
Enzyme activity: univariate lower-bounded clustering

This script:
1. Loads the enzymatic activity measurements (245 positive values) from data/
2. Fits the two-component unequal-variance mixture on the range-power scale
3. Fits the same mixture on the raw scale (lambda fixed, no bound) as a baseline
4. Sweeps models {E, V} over G = 1..5 and reports the BIC choice
5. Writes fit summaries, the sweep table and the density grid to results/
"""
import os
import sys

import pandas as pd

# Add parent directory to Python path to allow imports from the shared package
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from gmmb import ModelCode, fit, load_csv, sweep
from gmmb.bundle import ResultBundle, atomic_write_frame
from gmmb.cli import density_table
from gmmb.config import RunConfig, load_dataset, parse_grid
from gmmb.data import BoundsSpec, VariableBounds
from gmmb.errors import GMMBError

SCRIPT_DIR = os.path.dirname(os.path.abspath(__file__))
CONFIG_PATH = os.path.join(SCRIPT_DIR, "config.json")
RESULTS_DIR = os.path.join(SCRIPT_DIR, "results")

# Published comparison rows: model, loglik, df, BIC, ICL, NEC
REFERENCE = [
    ("GMM(V,2)", -54.6401, 5, -136.7865, -148.9526, 0.1109),
    ("NIGM(2)", -41.4723, 9, -132.4558, -132.6530, 0.0052),
    ("GMMB(V,2)", -46.1870, 6, -125.3815, -129.6447, 0.0208),
]


def row(label, result):
    return {
        "model": label,
        "loglik": result.loglik,
        "df": result.df,
        "bic": result.bic,
        "icl": result.icl,
        "nec": result.nec,
    }


def main():
    """Main execution function."""
    print("🚀 [*] Starting enzyme analysis...")

    try:
        config = RunConfig.from_file(CONFIG_PATH).with_overrides(out=RESULTS_DIR)
        if not os.path.exists(config.data):
            print(f"❌ [-] Data file not found: {config.data}")
            print("💡 [*] Set ENZYME_DATA_URL and run: python main.py fetch enzyme (see data/README.md)")
            sys.exit(1)

        data, bounds = load_dataset(config)
        print(f"📂 [*] Loaded {data.n} observations")

        # Step 1: bounded fit
        gmmb_fit = fit(data, bounds, config.fit_config(2, ModelCode.V))
        bundle = ResultBundle.from_fit(gmmb_fit)
        bundle.summary["data_means"] = data.values.mean(axis=0).tolist()
        bundle.write(RESULTS_DIR)
        print(f"✅ [+] GMMB(V,2): lambda={gmmb_fit.tparams.lam[0]:.4f}")

        # Step 2: raw-scale baseline
        raw_bounds = BoundsSpec.of([VariableBounds.unbounded()])
        raw = load_csv(config.data, raw_bounds, columns=list(data.column_names))
        gmm_fit = fit(raw, raw_bounds, config.fit_config(2, ModelCode.V))

        # Step 3: model selection
        selection = sweep(data, bounds, range(1, 6), ["E", "V"], config.fit_config(1, ModelCode.E), workers=config.workers)
        best = selection.best_by_bic
        print(f"✅ [+] Best by BIC: ({best.model.value}, {best.G}); best by ICL: "
              f"({selection.best_by_icl.model.value}, {selection.best_by_icl.G})")
        atomic_write_frame(os.path.join(RESULTS_DIR, "sweep.csv"), selection.table())

        # Step 4: density curves behind the fitted-density figure
        density = density_table(bundle, parse_grid(config.grid))
        atomic_write_frame(os.path.join(RESULTS_DIR, "density.csv"), density)

    except GMMBError as e:
        print(f"❌ [-] Enzyme analysis failed: {e}")
        sys.exit(1)

    ours = pd.DataFrame([row("GMM(V,2)", gmm_fit), row("GMMB(V,2)", gmmb_fit)])
    published = pd.DataFrame(REFERENCE, columns=["model", "loglik", "df", "bic", "icl", "nec"])
    print("📊 [*] This run:")
    print(ours.to_string(index=False))
    print("📊 [*] Published:")
    print(published.to_string(index=False))
    print("✅ [+] Enzyme analysis completed successfully!")


if __name__ == "__main__":
    main()
