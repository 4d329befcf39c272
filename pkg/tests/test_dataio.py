import numpy as np
import pytest

from stareg import CpFactorBundle, FitConfig, FittedModel, build_basis, featurize, fit
from stareg.dataio import DataFormatError, load_dataset, load_model, save_dataset, save_model
from stareg.splines import IdentityBasis


class TestDatasetRoundTrip:
    def test_lossless(self, tmp_path):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((7, 3, 2)) * np.exp(rng.uniform(-20, 20, (7, 3, 2)))
        x[0, 0, 0] = 0.1  # classic shortest-repr case
        x[1, 0, 0] = -1e-300
        y = rng.standard_normal(7)
        path = tmp_path / "data.csv"
        save_dataset(path, x, y)
        x2, y2 = load_dataset(path)
        np.testing.assert_array_equal(x, x2)
        np.testing.assert_array_equal(y, y2)

    def test_header(self, tmp_path):
        path = tmp_path / "data.csv"
        save_dataset(path, np.ones((2, 4, 3, 2)), np.zeros(2))
        first = path.read_text().splitlines()[0]
        assert first == "3,4,3,2"

    def test_three_way_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        x = rng.uniform(0, 1, (5, 2, 3, 2))
        path = tmp_path / "d.csv"
        save_dataset(path, x, rng.standard_normal(5))
        x2, _ = load_dataset(path)
        np.testing.assert_array_equal(x, x2)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("2,3\n1.0,1,1,1\n")
        with pytest.raises(DataFormatError):
            load_dataset(path)

    def test_wrong_width(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("2,2,2\n1.0,1,1,1\n")
        with pytest.raises(DataFormatError):
            load_dataset(path)

    def test_non_numeric(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2\n1.0,x,2.0\n")
        with pytest.raises(DataFormatError):
            load_dataset(path)

    def test_non_finite(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2\n1.0,nan,2.0\n")
        with pytest.raises(DataFormatError):
            load_dataset(path)

    def test_empty(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("")
        with pytest.raises(DataFormatError):
            load_dataset(path)


def small_model(basis):
    rng = np.random.default_rng(2)
    x = rng.uniform(0, 2, (30, 3, 2))
    y = rng.standard_normal(30)
    data = featurize(x, y, basis)
    result = fit(data, FitConfig(rank=2, lam=0.01, seed=0, max_sweeps=3))
    return FittedModel(result.bundle, result.intercept, basis, data.scaler), x


class TestModelRoundTrip:
    @pytest.mark.parametrize("basis_kind", ["bspline", "identity"])
    def test_predictions_preserved(self, tmp_path, basis_kind):
        basis = build_basis() if basis_kind == "bspline" else IdentityBasis()
        model, x = small_model(basis)
        path = tmp_path / "model.json"
        save_model(path, model)
        loaded = load_model(path)
        np.testing.assert_array_equal(model.predict(x), loaded.predict(x))
        for k in range(2):
            np.testing.assert_array_equal(model.bundle.factors[k], loaded.bundle.factors[k])
        np.testing.assert_array_equal(model.scaler.centers, loaded.scaler.centers)
        assert loaded.intercept == model.intercept

    def test_format_tag_checked(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text('{"format": "something-else", "version": 1}')
        with pytest.raises(DataFormatError):
            load_model(path)

    def test_version_checked(self, tmp_path):
        basis = build_basis()
        model, _ = small_model(basis)
        path = tmp_path / "model.json"
        save_model(path, model)
        import json

        doc = json.loads(path.read_text())
        doc["version"] = 99
        path.write_text(json.dumps(doc))
        with pytest.raises(DataFormatError):
            load_model(path)

    def test_not_json(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text("not json at all")
        with pytest.raises(DataFormatError):
            load_model(path)

    def test_malformed_arrays(self, tmp_path):
        basis = build_basis()
        model, _ = small_model(basis)
        path = tmp_path / "model.json"
        save_model(path, model)
        import json

        doc = json.loads(path.read_text())
        doc["factors"][0] = doc["factors"][0][:-1]
        path.write_text(json.dumps(doc))
        with pytest.raises(DataFormatError):
            load_model(path)
