"""Fourier spectra of one-qubit models that re-upload the input ``r`` times.

Prints the amplitude of every frequency for a random draw of the trainable
angles and saves the swept expectation values with their reconstruction.

    python3 scripts/fourier_single_qubit.py --max-r 4 --out runs/fourier.svg
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from hae import circuits as qc  # noqa: E402
from hae import descriptors as ds  # noqa: E402
from hae.circuits import Embedding, GateTemplate, Processing  # noqa: E402


def reuploading(r):
    """Trainable RX-RZ blocks before, between and after ``r`` PauliY embeddings."""
    layers, slot = [], 0
    for _ in range(r + 1):
        layers.append(Processing((GateTemplate("RX", 0, param=slot),
                                  GateTemplate("RZ", 0, param=slot + 1))))
        layers.append(Embedding("PauliY"))
        slot += 2
    return qc.custom_circuit(layers[:-1], 1)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--max-r", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="fourier.svg")
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    fig, axes = plt.subplots(args.max_r, 2, figsize=(8, 2.2 * args.max_r), squeeze=False)
    xs = 2 * np.pi * np.arange(64) / 64
    for i, r in enumerate(range(1, args.max_r + 1)):
        spec = reuploading(r)
        theta = rng.uniform(-np.pi, np.pi, spec.n_params)
        s = ds.fourier_sweep(spec, theta, 0)
        amps = s.amplitudes[: 2 * r + 2]
        print(f"r={r}: " + "  ".join(f"w{w}={a:.4f}" for w, a in enumerate(amps)))
        axes[i, 0].plot(xs, ds.sweep_values(spec, theta)[:, 0], ".", label="<Z>")
        fine = np.linspace(0, 2 * np.pi, 400)
        axes[i, 0].plot(fine, s(fine), "-", lw=1, label="series")
        axes[i, 0].set_ylabel(f"r = {r}")
        axes[i, 1].bar(np.arange(len(amps)), amps)
        axes[i, 1].set_xticks(np.arange(len(amps)))
    axes[0, 0].legend(fontsize=7)
    axes[-1, 0].set_xlabel("x")
    axes[-1, 1].set_xlabel("frequency")
    fig.tight_layout()
    fig.savefig(args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
