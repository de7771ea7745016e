import json

import numpy as np
import pandas as pd
import pytest

from gmmb import BoundsSpec, FitConfig, VariableBounds, fit, load_fit_bundle, write_csv, write_fit_bundle
from gmmb.bundle import ResultBundle
from gmmb.cli import EXIT_CONFIG, EXIT_DATA, EXIT_FIT, EXIT_OK, density_table, main, profile_table
from gmmb.config import (
    RunConfig,
    load_dataset,
    merge_bound_flags,
    parse_G_range,
    parse_grid,
    resolve_bounds,
    resolve_fixed_lambda,
)
from gmmb import fetch as fetch_module
from gmmb.errors import ConfigError, DownloadError
from gmmb.fetch import dataset_url
from gmmb.mixture import ModelCode


def lognormal_bundle(weights=(1.0,), means=(0.0,), variances=(1.0,), lam=0.0, lower=0.0):
    G = len(weights)
    return ResultBundle(summary={
        "model": "V",
        "G": G,
        "columns": ["x"],
        "bounds": [{"kind": "lower", "lower": lower, "upper": None}],
        "lambda": [lam],
        "lambda_fixed": [False],
        "lambda_box": [-3.0, 3.0],
        "weights": list(weights),
        "means": [[m] for m in means],
        "volume": list(variances),
        "shape": [[1.0]] * G,
        "orientation": [[[1.0]]] * G,
    })


@pytest.fixture
def positive_csv(tmp_path, two_cluster_lower_bounded):
    data, _, _ = two_cluster_lower_bounded
    path = tmp_path / "positive.csv"
    write_csv(path, data)
    return path


class TestRunConfig:
    def test_unknown_keys_are_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig.build(data="x.csv", colour="red")

    def test_models_from_comma_string(self):
        assert RunConfig.build(models="E, V").models == ["E", "V"]

    def test_default_model_by_dimension(self):
        config = RunConfig.build()
        assert config.model_codes(1) == [ModelCode.V]
        assert config.model_codes(4) == [ModelCode.VVV]

    def test_relative_data_path_follows_the_file(self, tmp_path):
        (tmp_path / "task").mkdir()
        path = tmp_path / "task" / "config.json"
        path.write_text(json.dumps({"data": "data/values.csv", "G": "1..3"}))
        config = RunConfig.from_file(path)
        assert config.data == str(tmp_path / "task" / "data" / "values.csv")
        assert config.G_values() == [1, 2, 3]

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            RunConfig.from_file(tmp_path / "absent.json")

    def test_overrides_skip_none(self):
        config = RunConfig.build(seed=4, tol=1e-6).with_overrides(seed=None, tol=1e-9)
        assert (config.seed, config.tol) == (4, 1e-9)

    def test_fit_config_carries_settings(self):
        fc = RunConfig.build(seed=9, max_iter=50).fit_config(2, "V", {0: 0.5})
        assert isinstance(fc, FitConfig)
        assert (fc.G, fc.rng_seed, fc.max_iter, fc.fixed_lambda) == (2, 9, 50, {0: 0.5})


class TestParsing:
    @pytest.mark.parametrize(
        "value, expected",
        [(3, [3]), ([2, 1, 2], [1, 2]), ("2", [2]), ("1..4", [1, 2, 3, 4]), ("1,3,4", [1, 3, 4])],
    )
    def test_G_range(self, value, expected):
        assert parse_G_range(value) == expected

    @pytest.mark.parametrize("value", ["0", "a..b", "", True, "0..2"])
    def test_G_range_rejects(self, value):
        with pytest.raises(ConfigError):
            parse_G_range(value)

    def test_grid(self):
        np.testing.assert_allclose(parse_grid("0:1:5"), [0.0, 0.25, 0.5, 0.75, 1.0])
        np.testing.assert_allclose(parse_grid("0.1, 0.2"), [0.1, 0.2])
        with pytest.raises(ConfigError):
            parse_grid("0:1")

    def test_merge_bound_flags(self):
        merged = merge_bound_flags({"*": "lower=0"}, ["hdi:lower=0,upper=1"])
        assert merged == {"*": "lower=0", "hdi": "lower=0.0,upper=1.0"}


class TestBoundsResolution:
    def test_default_key(self):
        config = RunConfig.build(bounds={"*": "lower=0", "b": "none"})
        spec = resolve_bounds(config, ["a", "b"])
        assert spec.variables == (VariableBounds.lower_bounded(0.0), VariableBounds.unbounded())

    def test_undeclared_column(self):
        with pytest.raises(ConfigError):
            resolve_bounds(RunConfig.build(bounds={"a": "lower=0"}), ["a", "b"])

    def test_unselected_column(self):
        with pytest.raises(ConfigError):
            resolve_bounds(RunConfig.build(bounds={"*": "lower=0", "zz": "none"}), ["a"])

    def test_fixed_lambda_by_name(self):
        config = RunConfig.build(fixed_lambda={"b": 0.25})
        assert resolve_fixed_lambda(config, ["a", "b"]) == {1: 0.25}
        with pytest.raises(ConfigError):
            resolve_fixed_lambda(config, ["a"])

    def test_categorical_columns_are_skipped(self, tmp_path):
        path = tmp_path / "shop.csv"
        path.write_text("Channel,Fresh,Milk\n1,10,20\n2,30,40\n")
        config = RunConfig.build(data=str(path), categorical=["Channel"], bounds={"*": "lower=0"})
        data, bounds = load_dataset(config)
        assert data.column_names == ("Fresh", "Milk")
        assert bounds.d == 2


class TestBundle:
    def test_round_trip_is_exact(self, tmp_path, two_cluster_lower_bounded):
        data, bounds, _ = two_cluster_lower_bounded
        result = fit(data, bounds, FitConfig(G=2, model="V"))
        summary_path, observations_path = write_fit_bundle(result, tmp_path)
        assert summary_path.name == "fit_V_G2.json"
        bundle = load_fit_bundle(summary_path)
        np.testing.assert_array_equal(bundle.params().means, result.params.means)
        np.testing.assert_array_equal(bundle.tparams().lam, result.tparams.lam)
        np.testing.assert_array_equal(bundle.observations["z2"].to_numpy(), result.z.z[:, 1])
        assert bundle.observations["label"].tolist() == result.classification.tolist()
        assert bundle.summary["bic"] == result.bic

    def test_no_temporary_files_left(self, tmp_path):
        lognormal_bundle().write(tmp_path)
        assert sorted(p.name for p in tmp_path.iterdir()) == ["fit_V_G1.json"]

    def test_missing_bundle(self, tmp_path):
        with pytest.raises(ConfigError):
            load_fit_bundle(tmp_path / "nothing.json")

    def test_incomplete_bundle(self, tmp_path):
        path = tmp_path / "fit.json"
        path.write_text(json.dumps({"model": "V"}))
        with pytest.raises(ConfigError):
            load_fit_bundle(path)


class TestDensityAndProfiles:
    def test_lognormal_density(self):
        frame = density_table(lognormal_bundle(), [1.0, np.e])
        assert frame["density"].iloc[0] == pytest.approx(0.39894, abs=1e-5)
        assert np.log(frame["density"].iloc[1]) == pytest.approx(-2.4189385, abs=1e-6)

    def test_components_add_up(self):
        bundle = lognormal_bundle(weights=(0.3, 0.7), means=(-1.0, 1.0), variances=(0.5, 0.8), lam=0.4)
        frame = density_table(bundle, np.linspace(0.05, 6.0, 40))
        np.testing.assert_allclose(frame["component_1"] + frame["component_2"], frame["density"], rtol=1e-12)

    def test_identity_power_profiles_are_affine(self):
        bundle = lognormal_bundle(weights=(0.5, 0.5), means=(2.0, 5.5), variances=(1.0, 1.0), lam=1.0, lower=3.0)
        frame = profile_table(bundle)
        np.testing.assert_allclose(frame["mean"], frame["transformed_mean"] + 4.0)
        assert frame["defined"].all()

    def test_mean_outside_image_is_flagged(self):
        bundle = lognormal_bundle(means=(-3.0,), lam=0.5)
        frame = profile_table(bundle)
        assert not frame["defined"].iloc[0]
        assert np.isnan(frame["mean"].iloc[0])


class TestCommandLine:
    def test_version(self, capsys):
        assert main(["version"]) == EXIT_OK
        assert "gmmb" in capsys.readouterr().out

    def test_fit_density_profiles_classify(self, tmp_path, positive_csv):
        out = str(tmp_path / "out")
        common = ["--data", str(positive_csv), "--bounds", "*:lower=0", "--out", out]
        assert main(["fit", *common, "--model", "V", "--G", "2"]) == EXIT_OK
        summary = tmp_path / "out" / "fit_V_G2.json"
        assert summary.exists()
        assert main(["density", *common, "--fit", str(summary), "--grid", "0.5:20:50"]) == EXIT_OK
        density = pd.read_csv(tmp_path / "out" / "density_fit_V_G2.csv")
        assert density.shape == (50, 4)
        assert main(["profiles", *common, "--fit", str(summary)]) == EXIT_OK
        assert main(["classify", *common, "--fit", str(summary)]) == EXIT_OK
        labels = pd.read_csv(tmp_path / "out" / "classified_fit_V_G2.csv")["label"]
        fitted = pd.read_csv(tmp_path / "out" / "fit_V_G2_observations.csv")["label"]
        assert labels.tolist() == fitted.tolist()

    def test_sweep_writes_table(self, tmp_path, positive_csv):
        out = tmp_path / "out"
        code = main(["sweep", "--data", str(positive_csv), "--bounds", "*:lower=0", "--model", "E,V", "--G", "1..2", "--out", str(out)])
        assert code == EXIT_OK
        table = pd.read_csv(out / "sweep.csv")
        assert table.shape[0] == 4
        assert table["best_bic"].sum() == 1

    def test_transform(self, tmp_path, positive_csv):
        out = tmp_path / "out"
        assert main(["transform", "--data", str(positive_csv), "--bounds", "*:lower=0", "--out", str(out)]) == EXIT_OK
        lambdas = pd.read_csv(out / "lambdas.csv")
        assert lambdas["variable"].tolist() == ["V1"]
        assert -3.0 <= lambdas["lambda"].iloc[0] <= 3.0
        assert pd.read_csv(out / "transformed.csv").shape == (500, 1)

    def test_config_file_with_flag_override(self, tmp_path, positive_csv):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"data": str(positive_csv), "bounds": {"*": "lower=0"}, "G": 3, "models": ["V"]}))
        assert main(["fit", "--config", str(config), "--G", "1", "--out", str(tmp_path)]) == EXIT_OK
        assert (tmp_path / "fit_V_G1.json").exists()

    def test_missing_bounds_is_a_config_error(self, tmp_path, positive_csv):
        assert main(["fit", "--data", str(positive_csv), "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_grid_request_for_fit_is_a_config_error(self, tmp_path, positive_csv):
        args = ["fit", "--data", str(positive_csv), "--bounds", "*:lower=0", "--G", "1..3", "--out", str(tmp_path)]
        assert main(args) == EXIT_CONFIG

    def test_boundary_value_is_a_data_error(self, tmp_path):
        path = tmp_path / "edge.csv"
        path.write_text("x\n0.5\n0.0\n2.0\n")
        assert main(["fit", "--data", str(path), "--bounds", "x:lower=0", "--out", str(tmp_path)]) == EXIT_DATA

    def test_nudge_flag_rescues_boundary_value(self, tmp_path):
        path = tmp_path / "edge.csv"
        path.write_text("x\n0.5\n0.0\n2.0\n1.1\n")
        args = ["fit", "--data", str(path), "--bounds", "x:lower=0", "--nudge-boundary", "--out", str(tmp_path)]
        assert main(args) == EXIT_OK

    def test_unfittable_grid_is_a_fit_error(self, tmp_path):
        path = tmp_path / "tiny.csv"
        path.write_text("x\n0.5\n1.5\n")
        assert main(["fit", "--data", str(path), "--bounds", "x:lower=0", "--G", "4", "--out", str(tmp_path)]) == EXIT_FIT

    def test_density_needs_univariate_fit(self, tmp_path):
        bundle = lognormal_bundle()
        bundle.summary.update({
            "columns": ["a", "b"],
            "bounds": [{"kind": "none", "lower": None, "upper": None}] * 2,
            "model": "VVV",
            "lambda": [1.0, 1.0],
            "lambda_fixed": [True, True],
            "means": [[0.0, 0.0]],
            "shape": [[1.0, 1.0]],
            "orientation": [np.eye(2).tolist()],
        })
        summary_path, _ = bundle.write(tmp_path)
        assert main(["density", "--fit", str(summary_path), "--grid", "0:1:3", "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_bad_subcommand_exits_with_usage(self):
        with pytest.raises(SystemExit) as info:
            main(["frobnicate"])
        assert info.value.code == 2


class FakeResponse:
    text = "Entity,Code,Year,Human Development Index\nNorway,NOR,2022,0.966\n"


class TestFetch:
    def test_hdi_has_a_default_source(self, monkeypatch):
        monkeypatch.delenv("HDI_DATA_URL", raising=False)
        assert dataset_url("hdi").startswith("https://ourworldindata.org/")

    def test_enzyme_needs_a_location(self, monkeypatch):
        monkeypatch.setenv("ENZYME_DATA_URL", "")
        with pytest.raises(DownloadError):
            dataset_url("enzyme")

    def test_download_is_written_to_destination(self, tmp_path, monkeypatch):
        calls = []
        monkeypatch.setenv("HDI_DATA_URL", "https://example.org/hdi.csv")
        monkeypatch.setattr(fetch_module, "make_request", lambda url, **kwargs: calls.append(url) or FakeResponse())
        dest = fetch_module.fetch("hdi", tmp_path / "hdi.csv")
        assert calls == ["https://example.org/hdi.csv"]
        assert dest.read_text() == FakeResponse.text
