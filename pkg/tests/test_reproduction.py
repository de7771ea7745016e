"""
Reproduction checks against the published enzyme, HDI and wholesale results.

Each task keeps its dataset under <task>/data/ (see the README there for the
source); `python main.py fetch <name>` downloads it. A test is skipped when its
file is missing.
"""
import os
import time

import numpy as np
import pytest

from conftest import ROOT_DIR, data_file
from gmmb import BoundsSpec, TransformParams, VariableBounds, adjusted_rand, fit, load_csv, sweep
from gmmb.cli import marginal_transform
from gmmb.config import RunConfig, load_dataset
from gmmb.mixture import ModelCode


def task_config(task):
    return RunConfig.from_file(os.path.join(ROOT_DIR, task, "config.json"))


def requires(task, name):
    return pytest.mark.skipif(not os.path.exists(data_file(task, name)), reason=f"{task}/data/{name} not downloaded")


def timed(call, *args):
    start = time.perf_counter()
    result = call(*args)
    return result, time.perf_counter() - start


@requires("enzyme", "enzyme.csv")
class TestEnzyme:
    def setup_method(self):
        self.config = task_config("enzyme")
        self.data, self.bounds = load_dataset(self.config)

    def test_bounded_unequal_variance_fit(self):
        result, seconds = timed(fit, self.data, self.bounds, self.config.fit_config(2, ModelCode.V))
        assert result.df == 6
        assert result.loglik == pytest.approx(-46.187, abs=0.5)
        assert result.bic == pytest.approx(-125.38, abs=1.0)
        assert result.tparams.lam[0] == pytest.approx(0.3666, abs=0.02)
        assert result.nec == pytest.approx(0.0208, abs=0.02)
        assert sorted(np.bincount(result.classification)[1:].tolist()) == pytest.approx([93, 152], abs=5)
        assert seconds < 5

    def test_raw_scale_baseline_is_worse(self):
        raw_bounds = BoundsSpec.of([VariableBounds.unbounded()])
        raw = load_csv(self.config.data, raw_bounds, columns=list(self.data.column_names))
        baseline = fit(raw, raw_bounds, self.config.fit_config(2, ModelCode.V))
        bounded = fit(self.data, self.bounds, self.config.fit_config(2, ModelCode.V))
        assert baseline.df == 5
        assert baseline.bic == pytest.approx(-136.7865, abs=1.0)
        assert bounded.bic > baseline.bic

    def test_sweep_selects_two_unequal_variance_components(self):
        selection, seconds = timed(
            sweep, self.data, self.bounds, range(1, 6), ["E", "V"], self.config.fit_config(1, ModelCode.V)
        )
        best = selection.best_by_bic
        assert (best.model, best.G) == (ModelCode.V, 2)
        assert seconds < 30


@requires("hdi", "hdi_2022.csv")
class TestHdi:
    def setup_method(self):
        self.config = task_config("hdi")
        self.data, self.bounds = load_dataset(self.config)

    def test_three_cluster_equal_variance_fit(self):
        result = fit(self.data, self.bounds, self.config.fit_config(3, ModelCode.E))
        assert result.df == 7
        assert result.tparams.lam[0] == pytest.approx(-0.12, abs=0.03)
        assert result.bic == pytest.approx(160.18, abs=1.5)
        sizes = np.bincount(result.classification, minlength=4)[1:]
        assert np.all(sizes >= 0.1 * self.data.n)

    def test_sweep_selects_three_equal_variance_components(self):
        selection = sweep(self.data, self.bounds, range(1, 6), ["E", "V"], self.config.fit_config(1, ModelCode.E))
        best = selection.best_by_bic
        assert (best.model, best.G) == (ModelCode.E, 3)


@requires("wholesale", "wholesale.csv")
class TestWholesale:
    def setup_method(self):
        self.config = task_config("wholesale")
        self.data, self.bounds = load_dataset(self.config)
        self.truth = self.data.categorical["Channel"]

    def test_marginal_powers(self):
        tparams, _ = marginal_transform(self.data, TransformParams.initial(self.bounds))
        assert np.all((tparams.lam >= 0.0) & (tparams.lam <= 0.35))

    def test_bounded_vve_fit(self):
        result, seconds = timed(fit, self.data, self.bounds, self.config.fit_config(2, ModelCode.VVE))
        assert result.df == 46
        assert result.loglik == pytest.approx(-23909.79, abs=25)
        assert adjusted_rand(result.classification, self.truth) == pytest.approx(0.6585, abs=0.03)
        assert seconds < 120

    def test_raw_scale_vvv_baseline(self):
        raw_bounds = BoundsSpec.of([VariableBounds.unbounded()] * self.data.d)
        raw = load_csv(self.config.data, raw_bounds, columns=list(self.data.column_names))
        baseline = fit(raw, raw_bounds, self.config.fit_config(2, ModelCode.VVV))
        bounded = fit(self.data, self.bounds, self.config.fit_config(2, ModelCode.VVE))
        assert baseline.df == 55
        assert baseline.loglik == pytest.approx(-25069.70, abs=25)
        baseline_ari = adjusted_rand(baseline.classification, self.truth)
        assert baseline_ari == pytest.approx(0.10, abs=0.03)
        assert adjusted_rand(bounded.classification, self.truth) > baseline_ari
