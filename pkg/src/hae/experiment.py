"""Train-embed-detect protocol, circuit sweeps and run reports.

One experiment: rescale the training split to [0, 1], optionally denoise it
with DBSCAN, train the autoencoder ``n_repeats`` times with seeds
``seed, seed+1, ...``, fit an isolation forest on each model's training
latents, flag test latents and score the flags against the labels.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from hae import autoencoder as ae
from hae import circuits, descriptors, metrics, outlier, preprocess
from hae.errors import ConfigurationError, DataError, UsageError

log = logging.getLogger(__name__)

REPORT_FORMAT_VERSION = 1
GROUP_ALL = "All converged PQCs"
GROUP_PAULI_X = "PQCs that share Pauli-X embedding"
LOW_N = 10


# ---------------------------------------------------------------------------
# data ingestion


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray | None = None  # True = outlier
    timestamps: np.ndarray | None = None
    columns: list[str] = field(default_factory=list)


def ingest_csv(path, label_column: str | None = None, timestamp_column: str | None = None,
               feature_columns: list[str] | None = None) -> Dataset:
    """Read a headered numeric CSV.

    ``label`` and ``timestamp`` columns are picked up automatically when no
    column is declared; a declared column that is missing is an error.
    Labels must be 0 (inlier) or 1 (outlier).
    """
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        rows = [r for r in reader if any(c.strip() for c in r)]

    def resolve(declared, default):
        if declared is not None:
            if declared not in header:
                raise DataError(f"declared column {declared!r} not found in {path}")
            return declared
        return default if default in header else None

    label_col = resolve(label_column, "label")
    time_col = resolve(timestamp_column, "timestamp")
    if feature_columns is None:
        feature_columns = [h for h in header if h not in (label_col, time_col)]
    else:
        missing = [c for c in feature_columns if c not in header]
        if missing:
            raise DataError(f"feature columns {missing} not found in {path}")
    if not feature_columns:
        raise DataError(f"{path} has no feature columns")
    index = {name: i for i, name in enumerate(header)}

    def parse(cells, columns, line):
        out = []
        for name in columns:
            i = index[name]
            try:
                out.append(float(cells[i]))
            except (ValueError, IndexError):
                value = cells[i] if i < len(cells) else "<missing>"
                raise DataError(
                    f"{path}: row {line}, column {name!r}: cannot parse {value!r} as a number"
                ) from None
        return out

    feats, labels, stamps = [], [], []
    for line, cells in enumerate(rows, start=2):
        feats.append(parse(cells, feature_columns, line))
        if label_col is not None:
            value = parse(cells, [label_col], line)[0]
            if value not in (0.0, 1.0):
                raise DataError(f"{path}: row {line}: label must be 0 or 1, got {value}")
            labels.append(value == 1.0)
        if time_col is not None:
            stamps.append(int(parse(cells, [time_col], line)[0]))
    X = np.array(feats, dtype=float).reshape(len(feats), len(feature_columns))
    return Dataset(
        X,
        np.array(labels, dtype=bool) if label_col is not None else None,
        np.array(stamps, dtype=np.int64) if time_col is not None else None,
        list(feature_columns),
    )


# ---------------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    data: str | None = None
    test_data: str | None = None  # separate test file; otherwise split ``data``
    label_column: str | None = None
    timestamp_column: str | None = None
    variant: str = "HAE"
    circuit_id: int | None = 10
    circuit_seed: int = 0
    n_train: int = 320
    n_test: int | None = None  # rows after the training block; None = all remaining
    train_inliers_only: bool = False
    denoise: bool = True
    dbscan_eps: float | None = None
    dbscan_min_samples: int | None = None
    window: int = metrics.DEFAULT_WINDOW
    n_repeats: int = 3
    seed: int = 0
    descriptors: bool = True
    descriptor_samples: int = 1000
    descriptor_param_samples: int = 10
    output_dir: str | None = None
    plots: bool = True
    train: ae.TrainConfig = field(default_factory=ae.TrainConfig)
    forest: outlier.ForestConfig = field(default_factory=outlier.ForestConfig)

    def __post_init__(self):
        if isinstance(self.train, dict):
            self.train = ae.TrainConfig(**self.train)
        if isinstance(self.forest, dict):
            self.forest = outlier.ForestConfig(**self.forest)
        self.validate()

    def validate(self) -> None:
        if self.variant not in ae.VARIANTS:
            raise ConfigurationError(f"unknown variant {self.variant!r}")
        if self.variant == "HAE":
            if self.circuit_id is None:
                raise ConfigurationError("variant HAE needs a circuit_id")
            if self.circuit_id not in circuits.ZOO:
                raise ConfigurationError(f"unknown circuit id {self.circuit_id}")
        if self.n_repeats < 1:
            raise ConfigurationError("n_repeats must be at least 1")
        if self.n_train < 2:
            raise ConfigurationError("n_train must be at least 2")
        if self.window < 0:
            raise ConfigurationError("window must be non-negative")

    def as_dict(self) -> dict:
        return asdict(self)


def config_from_dict(values: dict) -> ExperimentConfig:
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    values = dict(values)
    for key, cls in (("train", ae.TrainConfig), ("forest", outlier.ForestConfig)):
        if key in values and isinstance(values[key], dict):
            sub_known = {f.name for f in dataclasses.fields(cls)}
            bad = set(values[key]) - sub_known
            if bad:
                raise ConfigurationError(f"unknown {key} keys: {sorted(bad)}")
            values[key] = cls(**values[key])
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    """Read a YAML config; nested ``train:`` and ``forest:`` mappings are allowed."""
    try:
        with open(path) as fh:
            values = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(values, dict):
        raise ConfigurationError("config file must hold a mapping")
    return config_from_dict(values)


def with_overrides(config: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    """Copy of ``config`` with dotted keys (``train.epochs``) replaced."""
    values = config.as_dict()
    for key, value in overrides.items():
        head, _, tail = key.partition(".")
        if tail:
            values[head][tail] = value
        else:
            values[key] = value
    return config_from_dict(values)


# ---------------------------------------------------------------------------
# reports


@dataclass
class RepeatResult:
    seed: int
    final_train_loss: float
    test_loss: float
    loss_history: list[float]
    latent_stats: dict
    metrics: dict | None = None
    n_flagged: int = 0
    score_threshold: float = 0.0


@dataclass
class RunReport:
    config: dict
    variant: str
    circuit_id: int | None
    n_train: int
    n_test: int
    n_removed_by_denoise: int
    labels_available: bool
    repeats: list[RepeatResult]
    averaged: dict
    descriptors: dict | None = None
    wall_clock_seconds: float = 0.0
    format_version: int = REPORT_FORMAT_VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        data = dict(data)
        data["repeats"] = [RepeatResult(**r) for r in data["repeats"]]
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(json.loads(text))

    def comparable(self) -> dict:
        """Report content without the wall-clock time."""
        d = self.to_dict()
        d.pop("wall_clock_seconds")
        return d


def latent_stats(latent: np.ndarray) -> dict:
    return {
        "width": int(latent.shape[1]),
        "min": latent.min(axis=0).tolist(),
        "max": latent.max(axis=0).tolist(),
        "mean": latent.mean(axis=0).tolist(),
        "std": latent.std(axis=0).tolist(),
    }


def average_repeats(repeats: list[RepeatResult]) -> dict:
    out = {
        "final_train_loss": float(np.mean([r.final_train_loss for r in repeats])),
        "test_loss": float(np.mean([r.test_loss for r in repeats])),
    }
    if all(r.metrics is not None for r in repeats):
        for key in ("precision", "recall", "f1"):
            out[key] = float(np.mean([r.metrics[key] for r in repeats]))
    return out


def format_report(report: RunReport) -> str:
    name = report.variant
    if report.circuit_id is not None and report.variant == "HAE":
        name += f" (circuit {report.circuit_id})"
    lines = [
        f"model: {name}",
        f"train rows: {report.n_train} ({report.n_removed_by_denoise} removed by denoising)"
        f", test rows: {report.n_test}",
        "",
        f"{'run':>8s} {'seed':>6s} {'precision':>10s} {'recall':>10s} {'f1':>10s}"
        f" {'train loss':>12s} {'test loss':>12s}",
    ]

    def row(label, seed, m, train_loss, test_loss):
        cells = [f"{label:>8s}", f"{seed:>6s}"]
        for key in ("precision", "recall", "f1"):
            cells.append(f"{m[key]:10.4f}" if m and key in m else f"{'-':>10s}")
        cells += [f"{train_loss:12.6f}", f"{test_loss:12.6f}"]
        return " ".join(cells)

    for i, r in enumerate(report.repeats):
        lines.append(row(str(i), str(r.seed), r.metrics, r.final_train_loss, r.test_loss))
    a = report.averaged
    lines.append(row("mean", "", a, a["final_train_loss"], a["test_loss"]))
    if report.descriptors:
        lines.append("")
        lines.append("descriptors: " + ", ".join(
            f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
            for k, v in report.descriptors.items()
        ))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# protocol


@dataclass
class PreparedData:
    train: np.ndarray
    test: np.ndarray
    test_labels: np.ndarray | None
    test_timestamps: np.ndarray | None
    rescale: preprocess.RescaleParams
    n_removed: int


def prepare_data(config: ExperimentConfig, dataset: Dataset | None = None,
                 test_dataset: Dataset | None = None) -> PreparedData:
    if dataset is None:
        if config.data is None:
            raise ConfigurationError("no dataset given")
        dataset = ingest_csv(config.data, config.label_column, config.timestamp_column)
    if test_dataset is None and config.test_data is not None:
        test_dataset = ingest_csv(config.test_data, config.label_column,
                                  config.timestamp_column, dataset.columns or None)

    X, y = dataset.features, dataset.labels
    if test_dataset is None:
        train_idx = np.arange(X.shape[0])
        if config.train_inliers_only and y is not None:
            train_idx = train_idx[~y]
        train_idx = train_idx[: config.n_train]
        if len(train_idx) < config.n_train:
            raise DataError(
                f"need {config.n_train} training rows, dataset provides {len(train_idx)}"
            )
        rest = np.setdiff1d(np.arange(X.shape[0]), train_idx)
        rest = rest[rest > train_idx[-1]] if not config.train_inliers_only else rest
        if config.n_test is not None:
            rest = rest[: config.n_test]
        test_X = X[rest]
        test_y = None if y is None else y[rest]
        test_t = None if dataset.timestamps is None else dataset.timestamps[rest]
        train_X = X[train_idx]
    else:
        train_X = X if not (config.train_inliers_only and y is not None) else X[~y]
        train_X = train_X[: config.n_train]
        test_X, test_y, test_t = test_dataset.features, test_dataset.labels, test_dataset.timestamps
        if config.n_test is not None:
            test_X = test_X[: config.n_test]
            test_y = None if test_y is None else test_y[: config.n_test]
            test_t = None if test_t is None else test_t[: config.n_test]
    if test_X.shape[0] == 0:
        raise DataError("the test split is empty")

    params, train_scaled = preprocess.rescale_fit_transform(train_X)
    test_scaled = params.transform(test_X)
    n_before = train_scaled.shape[0]
    if config.denoise:
        train_scaled = _denoise(train_scaled, config)
    return PreparedData(train_scaled, test_scaled, test_y, test_t, params,
                        n_before - train_scaled.shape[0])


def _denoise(X, config):
    if config.dbscan_eps is None and config.dbscan_min_samples is None:
        return preprocess.denoise(X)
    eps = config.dbscan_eps if config.dbscan_eps is not None else preprocess.elbow_eps(X)
    min_samples = config.dbscan_min_samples or max(2, math.ceil(0.02 * X.shape[0]))
    keep = preprocess.dbscan(X, preprocess.DbscanConfig(eps, min_samples)) != preprocess.NOISE
    if not keep.any():
        raise DataError("every training row was labelled noise; choose a larger eps")
    return X[keep]


def evaluate_predictions(pred, labels, timestamps, window) -> metrics.EvalResult:
    if timestamps is not None:
        order = np.argsort(timestamps, kind="stable")
        ts, pred, labels = timestamps[order], pred[order], labels[order]
        return metrics.windowed_prf(ts[pred], ts[labels], window)
    return metrics.prf(pred, labels)


def run_repeat(config: ExperimentConfig, data: PreparedData, seed: int):
    """Train one model and evaluate it.

    Returns ``(result, model, forest, test_latent, test_predictions)``.
    """
    model = ae.init_model(config.variant, data.train.shape[1], seed=seed,
                          circuit_id=config.circuit_id or 10,
                          circuit_seed=config.circuit_seed)
    train_cfg = dataclasses.replace(config.train, seed=seed)
    batch = min(train_cfg.batch_size, data.train.shape[0])
    train_cfg = dataclasses.replace(train_cfg, batch_size=batch)
    model, history = ae.train(model, data.train, train_cfg)
    latent_train = ae.encode_latent(model, data.train)
    forest = outlier.fit(latent_train, config.forest, seed=seed)
    latent_test = ae.encode_latent(model, data.test)
    pred = outlier.predict(forest, latent_test)
    result = RepeatResult(
        seed=seed,
        final_train_loss=float(history[-1]) if history else
        ae.reconstruction_loss(model, data.train, train_cfg.loss),
        test_loss=ae.reconstruction_loss(model, data.test, train_cfg.loss),
        loss_history=[float(v) for v in history],
        latent_stats=latent_stats(latent_test),
        n_flagged=int(pred.sum()),
        score_threshold=forest.score_threshold,
    )
    if data.test_labels is not None:
        result.metrics = evaluate_predictions(
            pred, data.test_labels, data.test_timestamps, config.window
        ).as_dict()
    return result, model, forest, latent_test, pred


def circuit_descriptors(config: ExperimentConfig) -> dict | None:
    if config.variant != "HAE" or not config.descriptors:
        return None
    spec = circuits.build_circuit(config.circuit_id, config.circuit_seed)
    return descriptors.describe(
        spec,
        n_samples=config.descriptor_samples,
        n_param_samples=config.descriptor_param_samples,
        seed=config.seed,
    ).as_dict()


def run_experiment(config: ExperimentConfig, dataset: Dataset | None = None,
                   test_dataset: Dataset | None = None, write: bool = True) -> RunReport:
    start = time.perf_counter()
    data = prepare_data(config, dataset, test_dataset)
    repeats, artifacts = [], []
    for r in range(config.n_repeats):
        seed = config.seed + r
        log.info("repeat %d/%d (seed %d)", r + 1, config.n_repeats, seed)
        result, model, forest, latent, pred = run_repeat(config, data, seed)
        repeats.append(result)
        artifacts.append((latent, pred))
    report = RunReport(
        config=config.as_dict(),
        variant=config.variant,
        circuit_id=config.circuit_id if config.variant == "HAE" else None,
        n_train=int(data.train.shape[0]),
        n_test=int(data.test.shape[0]),
        n_removed_by_denoise=int(data.n_removed),
        labels_available=data.test_labels is not None,
        repeats=repeats,
        averaged=average_repeats(repeats),
        descriptors=circuit_descriptors(config),
    )
    report.wall_clock_seconds = time.perf_counter() - start
    if write and config.output_dir:
        write_report(report, config.output_dir, artifacts[0], data.test_labels,
                     plots=config.plots)
    return report


def write_report(report: RunReport, output_dir, first_run=None, labels=None,
                 plots: bool = True, stem: str = "report") -> None:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{stem}.json").write_text(report.to_json())
    (out / f"{stem}.txt").write_text(format_report(report) + "\n")
    if plots:
        from hae import plots as plotting

        plotting.loss_curves(report, out / f"{stem}_loss.svg")
        if report.labels_available:
            plotting.metric_bars({report.variant: report.averaged}, out / f"{stem}_metrics.svg")
        if first_run is not None:
            latent, pred = first_run
            plotting.latent_scatter(latent, labels if labels is not None else pred,
                                    out / f"{stem}_latent.svg")


# ---------------------------------------------------------------------------
# sweeps


def correlation_groups(records: list[dict], method: str = "pearson") -> dict:
    """Descriptor/metric correlations for both circuit groupings.

    ``records`` hold ``id``, ``descriptors`` (a DescriptorReport dict) and
    ``metrics`` (``precision``, ``recall``, ``f1``, ``loss``). Non-convergent
    circuits are excluded from both groups.
    """
    groups = {}
    selectors = {
        GROUP_ALL: lambda spec: True,
        GROUP_PAULI_X: lambda spec: spec.embedding_kind is circuits.EmbeddingKind.PAULI_X,
    }
    for name, keep in selectors.items():
        chosen = [
            r for r in records
            if r["id"] not in circuits.NON_CONVERGENT and keep(circuits.build_circuit(r["id"]))
        ]
        block = {"ids": [r["id"] for r in chosen], "n": len(chosen), "low_n": len(chosen) < LOW_N}
        if len(chosen) >= 2:
            block["table"] = descriptors.correlation_table(
                [r["descriptors"] for r in chosen], [r["metrics"] for r in chosen], method
            )
        else:
            block["table"] = {d: {m: None for m in descriptors.METRIC_FIELDS}
                              for d in descriptors.DESCRIPTOR_FIELDS}
        groups[name] = block
    return groups


def run_sweep(base: ExperimentConfig, ids, dataset: Dataset | None = None,
              test_dataset: Dataset | None = None, method: str = "pearson") -> dict:
    ids = list(ids)
    if not ids:
        raise UsageError("the sweep needs at least one circuit id")
    bad = [i for i in ids if i not in circuits.ZOO]
    if bad:
        raise UsageError(f"unknown circuit ids {bad}")
    if dataset is None and base.data is not None:
        dataset = ingest_csv(base.data, base.label_column, base.timestamp_column)
    records, reports = [], {}
    for cid in ids:
        cfg = dataclasses.replace(base, variant="HAE", circuit_id=cid, descriptors=True,
                                  output_dir=None)
        report = run_experiment(cfg, dataset, test_dataset, write=False)
        reports[cid] = report
        m = report.averaged
        records.append({
            "id": cid,
            "convergent": cid not in circuits.NON_CONVERGENT,
            "descriptors": report.descriptors,
            "metrics": {
                "precision": m.get("precision", float("nan")),
                "recall": m.get("recall", float("nan")),
                "f1": m.get("f1", float("nan")),
                "loss": m["test_loss"],
            },
        })
    result = {
        "ids": ids,
        "records": records,
        "reports": {str(k): v.to_dict() for k, v in reports.items()},
        "correlations": correlation_groups(records, method),
        "method": method,
    }
    if base.output_dir:
        out = Path(base.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep.json").write_text(json.dumps(result, indent=2, sort_keys=True))
        (out / "correlations.txt").write_text(
            descriptors.format_correlation_table(result["correlations"]) + "\n"
        )
        if base.plots:
            from hae import plots as plotting

            plotting.metric_bars({f"{r['id']}": r["metrics"] for r in records},
                                 out / "sweep_metrics.svg")
    return result
