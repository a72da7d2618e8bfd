"""Circuit descriptors and their correlation with detection metrics.

* Sim expressivity: KL divergence between the histogram of fidelities of
  pairs of randomly parametrized output states and the Haar fidelity
  density ``(d-1)(1-F)^(d-2)``.
* Meyer-Wallach capacity: ``2 (1 - mean_k Tr[rho_k^2])`` averaged over
  random parameters and inputs.
* Fourier descriptors from a discrete Fourier transform of the univariate
  model obtained by feeding one scalar to every input slot.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from hae import circuits
from hae import statevector as sv
from hae.errors import UndefinedCorrelationError, UsageError


AMPLITUDE_THRESHOLD = 1e-6  # relative to the largest amplitude of a spectrum
PHASE_RESOLUTION = 1e-3  # radians

DESCRIPTOR_FIELDS = (
    "n_params",
    "sim_expressivity",
    "n_entangling_layers",
    "meyer_wallach",
    "n_positive_frequencies",
    "n_phases",
    "amplitude_variance",
)
DESCRIPTOR_LABELS = {
    "n_params": "Amount of parameters",
    "sim_expressivity": "Sim expressivity",
    "n_entangling_layers": "Amount of entangling layers",
    "meyer_wallach": "Meyer-Wallach measure",
    "n_positive_frequencies": "Amount of positive frequencies",
    "n_phases": "Amount of phases",
    "amplitude_variance": "Variance of amplitudes",
}
METRIC_FIELDS = ("precision", "recall", "f1", "loss")


class DegenerateStatisticsWarning(UserWarning):
    pass


@dataclass
class DescriptorReport:
    circuit_id: int | None
    n_params: int
    n_entangling_layers: int
    sim_expressivity: float
    meyer_wallach: float
    n_positive_frequencies: int
    n_phases: int
    amplitude_variance: float

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class FourierSpectrum:
    """Amplitude-phase form ``f(x) = A_0/2 + sum_w A_w cos(w x - phi_w)``.

    ``frequencies`` are integers unless the sweep covered several base
    periods (``period > 1``), in which case they step by ``1/period``.
    """

    frequencies: np.ndarray
    amplitudes: np.ndarray
    phases: np.ndarray
    period: int = 1

    def coefficients(self) -> np.ndarray:
        """Complex ``c_w`` for ``w >= 0`` of ``f(x) = sum_w c_w e^{iwx}``."""
        c = 0.5 * self.amplitudes * np.exp(-1j * self.phases)
        return c

    def __call__(self, x):
        x = np.asarray(x, dtype=float)[..., None]
        w = self.frequencies
        terms = self.amplitudes[1:] * np.cos(w[1:] * x - self.phases[1:])
        return self.amplitudes[0] / 2 + terms.sum(axis=-1)


def _random_inputs(spec, n, rng):
    theta = rng.uniform(-np.pi, np.pi, size=(n, spec.n_params))
    x = rng.uniform(-1.0, 1.0, size=(n, spec.n_qubits))
    return theta, x


# ---------------------------------------------------------------------------
# expressivity


def haar_fidelity_density(F, d: int):
    F = np.asarray(F, dtype=float)
    return (d - 1) * (1 - F) ** (d - 2)


def haar_bin_masses(n_bins: int, d: int) -> np.ndarray:
    """Exact Haar probability of each of ``n_bins`` equal bins on [0, 1]."""
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    cdf_tail = (1.0 - edges) ** (d - 1)
    return cdf_tail[:-1] - cdf_tail[1:]


def kl_to_haar(fidelities, d: int, n_bins: int = 100) -> float:
    """Discrete KL(P_samples || P_Haar); empty sample bins contribute nothing."""
    counts, _ = np.histogram(np.clip(fidelities, 0.0, 1.0), bins=n_bins, range=(0.0, 1.0))
    p = counts / counts.sum()
    q = haar_bin_masses(n_bins, d)
    nz = p > 0
    return float(np.sum(p[nz] * np.log(p[nz] / q[nz])))


def fidelity_samples(spec: circuits.CircuitSpec, n_samples: int = 1000, seed=0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    theta_a, x_a = _random_inputs(spec, n_samples, rng)
    theta_b, x_b = _random_inputs(spec, n_samples, rng)
    a = circuits.states_batch(spec, theta_a, x_a)
    b = circuits.states_batch(spec, theta_b, x_b)
    return np.abs(np.sum(np.conj(a) * b, axis=1)) ** 2


def sim_expressivity(
    spec: circuits.CircuitSpec, n_samples: int = 1000, n_bins: int = 100, seed=0
) -> float:
    """KL divergence of the sampled fidelity histogram from the Haar one (nats)."""
    if n_samples < n_bins:
        warnings.warn(
            f"{n_samples} samples over {n_bins} bins gives degenerate statistics",
            DegenerateStatisticsWarning,
            stacklevel=2,
        )
    fids = fidelity_samples(spec, n_samples, seed)
    return kl_to_haar(fids, 2**spec.n_qubits, n_bins)


def haar_states(n_qubits: int, n: int, rng) -> np.ndarray:
    z = rng.normal(size=(n, 2**n_qubits)) + 1j * rng.normal(size=(n, 2**n_qubits))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# entanglement


def capacity(state) -> float:
    """Meyer-Wallach value of one state (``StateVector`` or amplitude array)."""
    amps = state.amplitudes if isinstance(state, sv.StateVector) else np.asarray(state)
    purities = sv.reduced_purities_batch(amps[None, :])[0]
    return float(2.0 * (1.0 - purities.mean()))


def meyer_wallach(spec: circuits.CircuitSpec, n_samples: int = 1000, seed=0) -> float:
    rng = np.random.default_rng(seed)
    theta, x = _random_inputs(spec, n_samples, rng)
    psi = circuits.states_batch(spec, theta, x)
    values = 2.0 * (1.0 - sv.reduced_purities_batch(psi).mean(axis=1))
    return float(np.clip(values.mean(), 0.0, 1.0))


# ---------------------------------------------------------------------------
# Fourier analysis


def spectrum_from_samples(values, period: int = 1) -> FourierSpectrum:
    """Amplitude-phase spectrum of samples on ``x_j = 2 pi period j / N``.

    With ``F_k`` the DFT, ``A_k = 2|F_k|/N`` and ``phi_k = -arg F_k``; bin
    ``k`` is frequency ``k / period``. Valid below the Nyquist bin.
    """
    f = np.asarray(values, dtype=float)
    N = len(f)
    F = np.fft.fft(f)[: N // 2 + 1]
    amps = 2.0 * np.abs(F) / N
    phases = -np.angle(F)
    phases = np.where(phases <= -np.pi, phases + 2 * np.pi, phases)
    phases[0] = 0.0
    freqs = np.arange(N // 2 + 1)
    if period != 1:
        freqs = freqs / period
    return FourierSpectrum(freqs, amps, phases, period)


def sweep_period(spec: circuits.CircuitSpec) -> int:
    return int(round(1.0 / spec.frequency_unit))


def sweep_values(spec: circuits.CircuitSpec, theta, n_points: int = 64) -> np.ndarray:
    """``<Z_q>`` for every qubit with one scalar fed to all input slots.

    The grid is ``x_j = 2 pi P j / N`` with ``P`` the number of base periods
    needed for the circuit's frequency spacing (1 unless controlled
    embeddings introduce half-integer frequencies).
    """
    xs = 2 * np.pi * sweep_period(spec) * np.arange(n_points) / n_points
    X = np.repeat(xs[:, None], spec.n_qubits, axis=1)
    return circuits.evaluate_batch(spec, theta, X)


def fourier_sweep(
    spec: circuits.CircuitSpec, theta, qubit: int, n_points: int = 64
) -> FourierSpectrum:
    if not 0 <= qubit < spec.n_qubits:
        raise UsageError(f"qubit {qubit} out of range")
    if n_points < 2:
        raise UsageError("n_points must be at least 2")
    values = sweep_values(spec, theta, n_points)[:, qubit]
    return spectrum_from_samples(values, sweep_period(spec))


def fourier_descriptors(
    spec: circuits.CircuitSpec, n_param_samples: int = 10, seed=0, n_points: int = 64
) -> tuple[int, int, float]:
    """(positive frequencies, distinct phases, amplitude variance) over random draws."""
    rng = np.random.default_rng(seed)
    period = sweep_period(spec)
    freqs: set[int] = set()
    phases: set[int] = set()
    amps: list[float] = []
    for _ in range(n_param_samples):
        theta = rng.uniform(-np.pi, np.pi, size=spec.n_params)
        values = sweep_values(spec, theta, n_points)
        for q in range(spec.n_qubits):
            s = spectrum_from_samples(values[:, q], period)
            top = s.amplitudes.max()
            if top <= 0:
                continue
            above = np.nonzero(s.amplitudes > AMPLITUDE_THRESHOLD * top)[0]
            above = above[above >= 1]  # bin indices, positive frequencies only
            freqs.update(int(w) for w in above)
            phases.update(int(np.round(s.phases[w] / PHASE_RESOLUTION)) for w in above)
            amps.extend(float(s.amplitudes[w]) for w in above)
    variance = float(np.var(amps)) if amps else 0.0
    return len(freqs), len(phases), variance


# ---------------------------------------------------------------------------
# reports and correlations


def describe(
    spec: circuits.CircuitSpec,
    n_samples: int = 1000,
    n_bins: int = 100,
    n_param_samples: int = 10,
    seed=0,
) -> DescriptorReport:
    s_expr, s_mw, s_four = np.random.SeedSequence(seed).spawn(3)
    n_freq, n_phase, amp_var = fourier_descriptors(spec, n_param_samples, s_four)
    return DescriptorReport(
        circuit_id=spec.id,
        n_params=spec.n_params,
        n_entangling_layers=spec.n_entangling_layers,
        sim_expressivity=sim_expressivity(spec, n_samples, n_bins, s_expr),
        meyer_wallach=meyer_wallach(spec, n_samples, s_mw),
        n_positive_frequencies=n_freq,
        n_phases=n_phase,
        amplitude_variance=amp_var,
    )


def pearson_correlation(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or len(a) < 2:
        raise UsageError("need two equal-length vectors with at least 2 entries")
    da, db = a - a.mean(), b - b.mean()
    sa, sb = np.sqrt(np.sum(da**2)), np.sqrt(np.sum(db**2))
    if sa == 0 or sb == 0:
        raise UndefinedCorrelationError("correlation is undefined for a constant vector")
    return float(np.clip(np.sum(da * db) / (sa * sb), -1.0, 1.0))


def spearman_correlation(a, b) -> float:
    return pearson_correlation(rankdata(a), rankdata(b))


def correlation_table(descriptors: list[dict], metrics: list[dict], method: str = "pearson"):
    """Correlation of every descriptor with every metric.

    Returns ``{descriptor: {metric: r or None}}``; ``None`` marks an
    undefined correlation (constant column).
    """
    if len(descriptors) != len(metrics):
        raise UsageError("descriptor and metric lists differ in length")
    corr = pearson_correlation if method == "pearson" else spearman_correlation
    table = {}
    for d in DESCRIPTOR_FIELDS:
        row = {}
        for m in METRIC_FIELDS:
            try:
                row[m] = corr([r[d] for r in descriptors], [r[m] for r in metrics])
            except UndefinedCorrelationError:
                row[m] = None
        table[d] = row
    return table


def format_correlation_table(groups: dict) -> str:
    """Aligned text with one block per grouping, rows in descriptor order."""
    header = f"{'Descriptors':32s}" + "".join(f"{m:>12s}" for m in ("Precision", "Recall", "F1 score", "Recon. loss"))
    lines = [header, "-" * len(header)]
    for name, block in groups.items():
        lines.append(f"{name} (n={block['n']})")
        for d in DESCRIPTOR_FIELDS:
            cells = []
            for m in METRIC_FIELDS:
                v = block["table"][d][m]
                cells.append(f"{'n/a':>12s}" if v is None else f"{v:12.3f}")
            lines.append(f"{DESCRIPTOR_LABELS[d]:32s}" + "".join(cells))
    return "\n".join(lines)
