"""Dense statevector simulation for small qubit registers.

Qubit ordering is little-endian: qubit ``q`` is bit ``q`` of the basis index,
so ``|10>`` written as (qubit1, qubit0) is index 1 when qubit 0 is set.

Rotations follow ``R_a(phi) = exp(-i phi sigma_a / 2)``.

The public functions operate on immutable :class:`StateVector` values. The
underscore-free ``*_batch`` kernels operate on raw ``(batch, 2**n)`` complex
arrays with one rotation angle per row and are what the circuit layer uses.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from hae.errors import ConfigurationError, UsageError

MAX_QUBITS = 12

ROTATIONS = ("RX", "RY", "RZ", "RAXIS")
CONTROLLED_ROTATIONS = ("CRX", "CRY", "CRZ")
FIXED_GATES = ("H", "CNOT")
GATE_KINDS = ROTATIONS + CONTROLLED_ROTATIONS + FIXED_GATES

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_PAULI = {
    "X": _X,
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class GateOp:
    """One gate application.

    ``angle`` is required for rotation kinds and ignored otherwise. ``axis`` is
    the unit 3-vector of an ``RAXIS`` rotation.
    """

    kind: str
    target: int
    control: int | None = None
    angle: float | None = None
    axis: tuple[float, float, float] | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise UsageError(f"unknown gate kind {self.kind!r}")
        two_qubit = self.kind in CONTROLLED_ROTATIONS or self.kind == "CNOT"
        if two_qubit and self.control is None:
            raise UsageError(f"{self.kind} needs a control qubit")
        if not two_qubit and self.control is not None:
            raise UsageError(f"{self.kind} takes no control qubit")
        if self.control is not None and self.control == self.target:
            raise UsageError("control and target must differ")
        if self.kind == "RAXIS":
            if self.axis is None or len(self.axis) != 3:
                raise UsageError("RAXIS needs a 3-component axis")
            if abs(np.linalg.norm(self.axis) - 1.0) > 1e-9:
                raise UsageError("RAXIS axis must have unit norm")

    @property
    def is_parametrized(self) -> bool:
        return self.kind in ROTATIONS or self.kind in CONTROLLED_ROTATIONS

    @property
    def qubits(self) -> tuple[int, ...]:
        if self.control is None:
            return (self.target,)
        return (self.control, self.target)


@dataclass(frozen=True, eq=False)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.n_qubits,):
            raise UsageError(
                f"expected {2**self.n_qubits} amplitudes, got shape {amps.shape}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def __eq__(self, other):
        if not isinstance(other, StateVector):
            return NotImplemented
        return self.n_qubits == other.n_qubits and np.array_equal(
            self.amplitudes, other.amplitudes
        )

    __hash__ = None


def _check_n(n_qubits: int) -> None:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(
            f"n_qubits must lie in [1, {MAX_QUBITS}], got {n_qubits}"
        )


def init_zero(n_qubits: int) -> StateVector:
    _check_n(n_qubits)
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def from_amplitudes(amplitudes, normalize: bool = False) -> StateVector:
    amps = np.asarray(amplitudes, dtype=complex)
    n = int(round(np.log2(amps.size)))
    if 2**n != amps.size:
        raise UsageError("amplitude count must be a power of two")
    _check_n(n)
    if normalize:
        amps = amps / np.linalg.norm(amps)
    return StateVector(n, amps)


# ---------------------------------------------------------------------------
# batched kernels


@lru_cache(maxsize=None)
def _pair_indices(n_qubits: int, target: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(2**n_qubits)
    i0 = idx[(idx >> target) & 1 == 0]
    return i0, i0 | (1 << target)


@lru_cache(maxsize=None)
def _controlled_pair_indices(
    n_qubits: int, control: int, target: int
) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(2**n_qubits)
    mask = ((idx >> target) & 1 == 0) & ((idx >> control) & 1 == 1)
    i0 = idx[mask]
    return i0, i0 | (1 << target)


@lru_cache(maxsize=None)
def _bit_signs(n_qubits: int) -> np.ndarray:
    idx = np.arange(2**n_qubits)
    # (2**n, n): +1 where bit k is 0, -1 where it is 1
    return 1.0 - 2.0 * ((idx[:, None] >> np.arange(n_qubits)) & 1)


def rotation_matrices(kind: str, angles, axis=None) -> np.ndarray:
    """Stack of 2x2 rotation unitaries, shape ``(len(angles), 2, 2)``.

    Controlled kinds return the matrix applied to the target when the control
    is set.
    """
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    c = np.cos(angles / 2)[:, None, None]
    s = np.sin(angles / 2)[:, None, None]
    base = kind[1:] if kind in CONTROLLED_ROTATIONS else kind
    if base == "RAXIS":
        nx, ny, nz = axis
        gen = nx * _PAULI["X"] + ny * _PAULI["Y"] + nz * _PAULI["Z"]
    elif base in ("RX", "RY", "RZ"):
        gen = _PAULI[base[1]]
    else:
        raise UsageError(f"{kind} is not a rotation")
    return c * np.eye(2) - 1j * s * gen


def apply_1q_batch(psi: np.ndarray, mats: np.ndarray, target: int) -> np.ndarray:
    """Apply per-row 2x2 matrices ``mats`` (B,2,2) or a shared (2,2) to ``target``."""
    n = int(psi.shape[1]).bit_length() - 1
    i0, i1 = _pair_indices(n, target)
    return _apply_pairs(psi, mats, i0, i1)


def apply_controlled_batch(
    psi: np.ndarray, mats: np.ndarray, control: int, target: int
) -> np.ndarray:
    n = int(psi.shape[1]).bit_length() - 1
    i0, i1 = _controlled_pair_indices(n, control, target)
    return _apply_pairs(psi, mats, i0, i1)


def _apply_pairs(psi, mats, i0, i1):
    a0 = psi[:, i0]
    a1 = psi[:, i1]
    if mats.ndim == 2:
        m00, m01, m10, m11 = mats[0, 0], mats[0, 1], mats[1, 0], mats[1, 1]
    else:
        m00 = mats[:, 0, 0, None]
        m01 = mats[:, 0, 1, None]
        m10 = mats[:, 1, 0, None]
        m11 = mats[:, 1, 1, None]
    out = psi.copy()
    out[:, i0] = m00 * a0 + m01 * a1
    out[:, i1] = m10 * a0 + m11 * a1
    return out


def apply_gate_batch(psi: np.ndarray, gate: GateOp, angles=None) -> np.ndarray:
    """Apply ``gate`` to every row; ``angles`` overrides ``gate.angle`` per row."""
    n = int(psi.shape[1]).bit_length() - 1
    for q in gate.qubits:
        if not 0 <= q < n:
            raise UsageError(f"qubit index {q} out of range for {n} qubits")
    if gate.kind == "H":
        return apply_1q_batch(psi, _H, gate.target)
    if gate.kind == "CNOT":
        return apply_controlled_batch(psi, _X, gate.control, gate.target)
    if angles is None:
        if gate.angle is None:
            raise UsageError(f"{gate.kind} needs an angle")
        mats = rotation_matrices(gate.kind, [gate.angle], gate.axis)[0]
    else:
        mats = rotation_matrices(gate.kind, angles, gate.axis)
    if gate.kind in CONTROLLED_ROTATIONS:
        return apply_controlled_batch(psi, mats, gate.control, gate.target)
    return apply_1q_batch(psi, mats, gate.target)


def z_expectations_batch(psi: np.ndarray) -> np.ndarray:
    n = int(psi.shape[1]).bit_length() - 1
    probs = np.abs(psi) ** 2
    return probs @ _bit_signs(n)


def reduced_purities_batch(psi: np.ndarray) -> np.ndarray:
    """Single-qubit reduced purities, shape ``(B, n)``."""
    n = int(psi.shape[1]).bit_length() - 1
    out = np.empty((psi.shape[0], n))
    for k in range(n):
        i0, i1 = _pair_indices(n, k)
        a0, a1 = psi[:, i0], psi[:, i1]
        p0 = np.sum(np.abs(a0) ** 2, axis=1)
        p1 = np.sum(np.abs(a1) ** 2, axis=1)
        coh = np.sum(a0 * np.conj(a1), axis=1)
        out[:, k] = p0**2 + p1**2 + 2 * np.abs(coh) ** 2
    return out


# ---------------------------------------------------------------------------
# single-state API


def apply_gate(state: StateVector, gate: GateOp) -> StateVector:
    psi = apply_gate_batch(state.amplitudes[None, :], gate)
    return StateVector(state.n_qubits, psi[0])


def apply_gates(state: StateVector, gates) -> StateVector:
    psi = state.amplitudes[None, :]
    for gate in gates:
        psi = apply_gate_batch(psi, gate)
    return StateVector(state.n_qubits, psi[0])


def _assert_normalized(state: StateVector, tol: float = 1e-8) -> None:
    if abs(state.norm - 1.0) > tol:
        raise UsageError(f"state is not normalized (norm {state.norm:.3e})")


def pauli_z_expectations(state: StateVector) -> np.ndarray:
    _assert_normalized(state)
    return z_expectations_batch(state.amplitudes[None, :])[0]


def fidelity(a: StateVector, b: StateVector) -> float:
    """Squared overlap ``|<a|b>|**2``."""
    if a.n_qubits != b.n_qubits:
        raise UsageError(f"dimension mismatch: {a.n_qubits} vs {b.n_qubits} qubits")
    return float(np.abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def reduced_purity(state: StateVector, k: int) -> float:
    """``Tr[rho_k**2]`` for the single-qubit marginal of qubit ``k``."""
    if not 0 <= k < state.n_qubits:
        raise UsageError(f"qubit {k} out of range for {state.n_qubits} qubits")
    _assert_normalized(state)
    return float(reduced_purities_batch(state.amplitudes[None, :])[0, k])
