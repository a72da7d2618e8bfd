"""Compare AE, ModifiedAE and HAE on one dataset with the full protocol.

    python3 scripts/compare_models.py --out runs/compare
    python3 scripts/compare_models.py --data musk.csv --circuit 10 --out runs/musk
"""

import argparse
import dataclasses
import json
from pathlib import Path

from hae import experiment as ex
from hae import plots, synth


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--data", help="CSV file; a synthetic set is used when omitted")
    parser.add_argument("--circuit", type=int, default=10)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--n-train", type=int, default=320)
    parser.add_argument("--out", default="runs/compare")
    args = parser.parse_args()

    if args.data:
        dataset = ex.ingest_csv(args.data)
    else:
        X, y = synth.generate(synth.SynthConfig(seed=0))
        dataset = ex.Dataset(X, y, None, [f"f{i}" for i in range(X.shape[1])])

    out = Path(args.out)
    base = ex.ExperimentConfig(circuit_id=args.circuit, n_repeats=args.repeats,
                               n_train=args.n_train, descriptors=False, plots=False)
    summary = {}
    for variant in ("AE", "ModifiedAE", "HAE"):
        cfg = dataclasses.replace(base, variant=variant, output_dir=str(out / variant))
        report = ex.run_experiment(cfg, dataset)
        summary[variant] = report.averaged
        print(ex.format_report(report), "\n")
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    if dataset.labels is not None:
        plots.metric_bars(summary, out / "summary.svg")


if __name__ == "__main__":
    main()
