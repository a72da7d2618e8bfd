"""Train an HAE per zoo circuit, then correlate circuit descriptors with the results.

Writes ``sweep.json`` (per-circuit metrics and descriptors) and
``correlations.txt`` (both circuit groupings) to ``--out``.

    python3 scripts/circuit_sweep.py --ids 1-32 --out runs/sweep
"""

import argparse

from hae import experiment as ex
from hae import synth
from hae.cli import parse_ids
from hae.descriptors import format_correlation_table


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--data", help="CSV file; a synthetic set is used when omitted")
    parser.add_argument("--ids", default="1-32")
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--epochs", type=int, default=80)
    parser.add_argument("--method", choices=("pearson", "spearman"), default="pearson")
    parser.add_argument("--out", default="runs/sweep")
    args = parser.parse_args()

    if args.data:
        dataset = ex.ingest_csv(args.data)
    else:
        X, y = synth.generate(synth.SynthConfig(seed=0))
        dataset = ex.Dataset(X, y, None, [f"f{i}" for i in range(X.shape[1])])
    base = ex.config_from_dict({"n_repeats": args.repeats, "output_dir": args.out,
                                "train": {"epochs": args.epochs}})
    result = ex.run_sweep(base, parse_ids(args.ids), dataset, method=args.method)
    for r in result["records"]:
        m = r["metrics"]
        print(f"circuit {r['id']:2d}  F1 {m['f1']:.3f}  loss {m['loss']:.4f}"
              + ("" if r["convergent"] else "  (non-convergent)"))
    print()
    print(format_correlation_table(result["correlations"]))


if __name__ == "__main__":
    main()
