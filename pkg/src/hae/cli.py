"""Command line interface.

Subcommands: ``synth``, ``train``, ``evaluate``, ``run``, ``descriptors``,
``sweep`` and ``zoo list``. Experiment settings come from an optional YAML
file (``--config``) and every field can be overridden by a flag, e.g.
``--circuit-id 3 --train-epochs 20 --forest-contamination 0.05``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 training divergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import typing
from pathlib import Path

import numpy as np

from hae import autoencoder as ae
from hae import circuits, descriptors, experiment, outlier, preprocess, synth
from hae.errors import (
    ConfigurationError,
    DataError,
    TrainingDivergedError,
    UndefinedCorrelationError,
    UnsupportedGateError,
    UsageError,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _converter(hint):
    args = [a for a in typing.get_args(hint) if a is not type(None)]
    base = args[0] if args else hint
    optional = type(None) in typing.get_args(hint)
    conv = {bool: _bool, int: int, float: float}.get(base, str)
    if not optional:
        return conv

    def parse(text):
        return None if text.lower() in ("none", "null") else conv(text)

    return parse


def _config_fields():
    """(flag, dotted key, converter) for every overridable config field."""
    out = []
    hints = typing.get_type_hints(experiment.ExperimentConfig)
    for f in dataclasses.fields(experiment.ExperimentConfig):
        if f.name in ("train", "forest"):
            sub = ae.TrainConfig if f.name == "train" else outlier.ForestConfig
            sub_hints = typing.get_type_hints(sub)
            for g in dataclasses.fields(sub):
                out.append((f"--{f.name}-{g.name}".replace("_", "-"), f"{f.name}.{g.name}",
                            _converter(sub_hints[g.name])))
        else:
            out.append((f"--{f.name}".replace("_", "-"), f.name, _converter(hints[f.name])))
    return out


def _add_config_flags(p):
    p.add_argument("--config", help="YAML experiment config")
    group = p.add_argument_group("config overrides")
    for flag, key, conv in _config_fields():
        group.add_argument(flag, dest=f"cfg:{key}", type=conv, default=argparse.SUPPRESS,
                           metavar=key.split(".")[-1].upper())


def _config_from_args(args) -> experiment.ExperimentConfig:
    base = experiment.load_config(args.config) if args.config else experiment.ExperimentConfig()
    overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("cfg:")}
    return experiment.with_overrides(base, overrides)


def parse_ids(text: str) -> list[int]:
    ids = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            ids.extend(range(int(lo), int(hi) + 1))
        else:
            ids.append(int(part))
    return ids


def _jsonl(records, fh=None):
    fh = fh or sys.stdout
    for r in records:
        fh.write(json.dumps(r, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# commands


def cmd_synth(args):
    cfg = synth.SynthConfig(
        n_features=args.n_features,
        n_clusters=args.n_clusters,
        n_inliers=args.n_inliers,
        outlier_fraction=args.outlier_fraction,
        outlier_separation_sigma=args.separation,
        seed=args.seed,
    )
    X, y = synth.generate(cfg)
    stamps = np.arange(len(X)) if args.timestamps else None
    synth.write_csv(args.out, X, y, stamps)
    print(f"wrote {len(X)} rows ({int(y.sum())} outliers) to {args.out}")


def cmd_zoo(args):
    _jsonl(circuits.zoo_records(args.seed))


def cmd_train(args):
    config = _config_from_args(args)
    data = experiment.prepare_data(config)
    result, model, forest, _, _ = experiment.run_repeat(config, data, config.seed)
    extras = {"rescale.min": data.rescale.minimum, "rescale.max": data.rescale.maximum}
    extras.update(outlier.forest_arrays(forest))
    meta = {"config": config.as_dict(), "loss_history": result.loss_history}
    ae.save_model(args.model, model, extras, meta)
    print(f"saved {config.variant} model to {args.model} "
          f"(final train loss {result.final_train_loss:.6g})")


def cmd_evaluate(args):
    model, extras, meta = ae.load_model(args.model)
    if "rescale.min" not in extras or "forest.offsets" not in extras:
        raise UsageError(f"{args.model} holds no rescaling/forest; create it with `hae train`")
    rescale = preprocess.RescaleParams(extras["rescale.min"], extras["rescale.max"])
    forest = outlier.forest_from_arrays(extras)
    data = experiment.ingest_csv(args.data, args.label_column, args.timestamp_column)
    X = rescale.transform(data.features)
    latent = ae.encode_latent(model, X)
    scores = outlier.anomaly_scores(forest, latent)
    pred = scores > forest.score_threshold
    out = {
        "model": str(args.model),
        "variant": model.variant,
        "n_rows": int(len(X)),
        "n_flagged": int(pred.sum()),
        "score_threshold": forest.score_threshold,
        "reconstruction_loss": ae.reconstruction_loss(model, X),
    }
    if data.labels is not None:
        window = args.window if args.window is not None else meta.get("config", {}).get("window", 3)
        out["metrics"] = experiment.evaluate_predictions(
            pred, data.labels, data.timestamps, window).as_dict()
    text = json.dumps(out, indent=2, sort_keys=True)
    if args.report:
        Path(args.report).write_text(text + "\n")
    if args.scores:
        np.savetxt(args.scores, np.column_stack([scores, pred]), delimiter=",",
                   header="score,outlier", comments="")
    print(text)


def cmd_run(args):
    config = _config_from_args(args)
    report = experiment.run_experiment(config)
    print(experiment.format_report(report))


def cmd_descriptors(args):
    ids = parse_ids(args.ids)
    records = []
    for cid in ids:
        spec = circuits.build_circuit(cid, args.circuit_seed)
        rep = descriptors.describe(spec, args.samples, args.bins, args.param_samples, args.seed)
        records.append(rep.as_dict())
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        _jsonl(records, out)
        if args.metrics:
            metric_rows = _load_metrics(args.metrics)
            joined = [
                {"id": r["circuit_id"], "descriptors": r, "metrics": metric_rows[r["circuit_id"]]}
                for r in records if r["circuit_id"] in metric_rows
            ]
            groups = experiment.correlation_groups(joined, args.method)
            out.write("\n" + descriptors.format_correlation_table(groups) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()


def _load_metrics(path) -> dict:
    """Per-circuit metrics from a sweep JSON or a JSON-lines file."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
        rows = doc["records"] if isinstance(doc, dict) else doc
        rows = [{"id": r["id"], **r.get("metrics", r)} for r in rows]
    except json.JSONDecodeError:
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
    try:
        return {int(r["id"]): {k: float(r[k]) for k in descriptors.METRIC_FIELDS} for r in rows}
    except KeyError as exc:
        raise DataError(f"metrics file lacks field {exc}") from None


def cmd_sweep(args):
    config = _config_from_args(args)
    result = experiment.run_sweep(config, parse_ids(args.ids), method=args.method)
    for r in result["records"]:
        print(json.dumps(r, sort_keys=True))
    print()
    print(descriptors.format_correlation_table(result["correlations"]))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hae", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="write a synthetic clustered CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--n-features", type=int, default=20)
    p.add_argument("--n-clusters", type=int, default=3)
    p.add_argument("--n-inliers", type=int, default=1000)
    p.add_argument("--outlier-fraction", type=float, default=0.05)
    p.add_argument("--separation", type=float, default=6.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timestamps", action="store_true", help="add an integer timestamp column")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("zoo", help="circuit registry")
    zsub = p.add_subparsers(dest="zoo_command", required=True, parser_class=_Parser)
    z = zsub.add_parser("list", help="one JSON record per circuit")
    z.add_argument("--seed", type=int, default=0)
    z.set_defaults(func=cmd_zoo)

    p = sub.add_parser("train", help="train one model and save it with its forest")
    _add_config_flags(p)
    p.add_argument("--model", required=True, help="output model file (.npz)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="flag outliers in a CSV with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--label-column")
    p.add_argument("--timestamp-column")
    p.add_argument("--window", type=int)
    p.add_argument("--report", help="write the JSON result here")
    p.add_argument("--scores", help="write per-row scores and flags (CSV) here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="full train-embed-detect protocol with repeats")
    _add_config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("descriptors", help="circuit descriptors (one JSON line per circuit)")
    p.add_argument("--ids", default="1-32")
    p.add_argument("--circuit-seed", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--bins", type=int, default=100)
    p.add_argument("--param-samples", type=int, default=10)
    p.add_argument("--metrics", help="sweep.json or JSON lines with id/precision/recall/f1/loss")
    p.add_argument("--method", choices=("pearson", "spearman"), default="pearson")
    p.add_argument("--out")
    p.set_defaults(func=cmd_descriptors)

    p = sub.add_parser("sweep", help="run the protocol for several circuits and correlate")
    _add_config_flags(p)
    p.add_argument("--ids", default="1-32")
    p.add_argument("--method", choices=("pearson", "spearman"), default="pearson")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (UsageError, ConfigurationError, UnsupportedGateError,
            UndefinedCorrelationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
