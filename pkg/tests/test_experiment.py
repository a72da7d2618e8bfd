import json

import numpy as np
import pytest

from hae import experiment as ex
from hae import synth
from hae.descriptors import DESCRIPTOR_FIELDS, METRIC_FIELDS
from hae.errors import ConfigurationError, DataError


def small_dataset(n_features=5, seed=0, timestamps=False):
    X, y = synth.generate(synth.SynthConfig(n_features=n_features, n_inliers=300, seed=seed))
    return ex.Dataset(X, y, np.arange(len(X)) if timestamps else None,
                      [f"f{i}" for i in range(n_features)])


def quick_config(**kw):
    base = dict(variant="AE", n_train=200, n_repeats=2, descriptors=False, plots=False,
                train={"epochs": 3}, forest={"n_trees": 20, "contamination": 0.05})
    base.update(kw)
    return ex.config_from_dict(base)


class TestIngest:
    def test_auto_columns(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("timestamp,a,b,label\n0,1.5,2,0\n1,3,4,1\n")
        d = ex.ingest_csv(p)
        assert d.columns == ["a", "b"]
        np.testing.assert_array_equal(d.features, [[1.5, 2], [3, 4]])
        assert d.labels.tolist() == [False, True]
        assert d.timestamps.tolist() == [0, 1]

    def test_unlabelled(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b\n1,2\n3,4\n")
        d = ex.ingest_csv(p)
        assert d.labels is None and d.timestamps is None

    def test_missing_declared_column(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(DataError, match="declared column"):
            ex.ingest_csv(p, label_column="y")

    def test_bad_cell_names_row_and_column(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b\n1,2\n3,oops\n")
        with pytest.raises(DataError, match=r"row 3, column 'b'"):
            ex.ingest_csv(p)

    def test_bad_label(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,label\n1,2\n")
        with pytest.raises(DataError, match="label"):
            ex.ingest_csv(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            ex.ingest_csv(tmp_path / "absent.csv")


class TestConfig:
    def test_defaults(self):
        cfg = ex.ExperimentConfig()
        assert (cfg.train.epochs, cfg.train.batch_size, cfg.train.learning_rate) == (80, 32, 0.001)
        assert cfg.n_repeats == 3 and cfg.circuit_id == 10

    def test_yaml(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("variant: ModifiedAE\ntrain:\n  epochs: 7\nforest:\n  contamination: 0.2\n")
        cfg = ex.load_config(p)
        assert cfg.variant == "ModifiedAE" and cfg.train.epochs == 7
        assert cfg.forest.contamination == 0.2

    def test_unknown_keys(self, tmp_path):
        with pytest.raises(ConfigurationError):
            ex.config_from_dict({"epochs": 3})
        with pytest.raises(ConfigurationError):
            ex.config_from_dict({"train": {"epoch": 3}})

    def test_overrides(self):
        cfg = ex.with_overrides(ex.ExperimentConfig(), {"train.epochs": 2, "circuit_id": 3})
        assert cfg.train.epochs == 2 and cfg.circuit_id == 3

    @pytest.mark.parametrize("bad", [{"variant": "VAE"}, {"circuit_id": 40},
                                     {"n_repeats": 0}, {"window": -2}])
    def test_invalid(self, bad):
        with pytest.raises(ConfigurationError):
            ex.config_from_dict(bad)


class TestProtocol:
    def test_rescale_fit_on_train_only(self):
        d = small_dataset()
        data = ex.prepare_data(quick_config(denoise=False), d)
        assert data.train.min() == 0 and data.train.max() == 1
        np.testing.assert_array_equal(data.rescale.minimum, d.features[:200].min(axis=0))
        assert data.test.shape[0] == d.features.shape[0] - 200

    def test_too_few_rows(self):
        with pytest.raises(DataError):
            ex.prepare_data(quick_config(n_train=5000), small_dataset())

    def test_windowed_evaluation_used_with_timestamps(self):
        pred = np.array([False, True, False, False])
        labels = np.array([True, False, False, False])
        ts = np.array([0, 1, 2, 3])
        assert ex.evaluate_predictions(pred, labels, ts, 1).tp == 1
        assert ex.evaluate_predictions(pred, labels, None, 1).tp == 0

    def test_run_is_deterministic(self, tmp_path):
        d = small_dataset()
        a = ex.run_experiment(quick_config(), d)
        b = ex.run_experiment(quick_config(), d)
        assert a.comparable() == b.comparable()
        assert [r.seed for r in a.repeats] == [0, 1]
        assert set(a.averaged) >= {"precision", "recall", "f1", "test_loss"}

    def test_report_json_round_trip(self):
        rep = ex.run_experiment(quick_config(n_repeats=1), small_dataset())
        again = ex.RunReport.from_json(rep.to_json())
        assert again == rep
        assert json.loads(rep.to_json())["format_version"] == ex.REPORT_FORMAT_VERSION

    def test_hae_report_with_descriptors(self, tmp_path):
        cfg = quick_config(variant="HAE", circuit_id=3, n_repeats=1, descriptors=True,
                           descriptor_samples=100, descriptor_param_samples=1,
                           output_dir=str(tmp_path), plots=True, train={"epochs": 1})
        rep = ex.run_experiment(cfg, small_dataset(timestamps=True))
        assert rep.circuit_id == 3
        assert set(DESCRIPTOR_FIELDS) <= set(rep.descriptors)
        stats = rep.repeats[0].latent_stats
        assert min(stats["min"]) >= -1 and max(stats["max"]) <= 1
        for name in ("report.json", "report.txt", "report_loss.svg", "report_latent.svg",
                     "report_metrics.svg"):
            assert (tmp_path / name).exists()
        assert "circuit 3" in (tmp_path / "report.txt").read_text()


def fake_records(ids, seed=0):
    rng = np.random.default_rng(seed)
    return [{"id": i,
             "descriptors": {f: float(rng.normal()) for f in DESCRIPTOR_FIELDS},
             "metrics": {m: float(rng.uniform()) for m in METRIC_FIELDS}} for i in ids]


class TestCorrelationGroups:
    def test_full_zoo_grouping(self):
        groups = ex.correlation_groups(fake_records(range(1, 33)))
        assert list(groups) == [ex.GROUP_ALL, ex.GROUP_PAULI_X]
        all_ids = groups[ex.GROUP_ALL]["ids"]
        assert not set(all_ids) & {7, 15, 18, 25}
        assert groups[ex.GROUP_ALL]["n"] == 28
        assert groups[ex.GROUP_PAULI_X]["ids"] == [1, 2, 3, 4, 5, 6, 8, 9, 10, 11, 12, 13]
        for block in groups.values():
            assert list(block["table"]) == list(DESCRIPTOR_FIELDS)

    def test_low_n_flag(self):
        groups = ex.correlation_groups(fake_records([1, 2, 3, 14]))
        assert groups[ex.GROUP_PAULI_X]["low_n"]

    def test_single_member_group(self):
        groups = ex.correlation_groups(fake_records([1, 14]))
        assert groups[ex.GROUP_PAULI_X]["n"] == 1
        assert all(v is None for row in groups[ex.GROUP_PAULI_X]["table"].values()
                   for v in row.values())


def test_small_sweep(tmp_path):
    base = quick_config(output_dir=str(tmp_path), n_repeats=1, train={"epochs": 1},
                        descriptor_samples=100, descriptor_param_samples=1)
    result = ex.run_sweep(base, [1, 3, 7], small_dataset())
    assert [r["id"] for r in result["records"]] == [1, 3, 7]
    assert result["correlations"][ex.GROUP_ALL]["ids"] == [1, 3]
    assert (tmp_path / "sweep.json").exists() and (tmp_path / "correlations.txt").exists()
