"""Parametrized quantum circuits: the 32-circuit zoo, evaluation and gradients.

A circuit is an ordered list of layers. :class:`Embedding` layers load the
input vector ``x`` (one angle per qubit) and :class:`Processing` layers hold
gate templates whose angles come from trainable parameter slots.

Gradients use parameter-shift rules: the two-term rule for ordinary rotations
and the four-term rule for controlled rotations. Inputs enter only through
rotation angles, so the same rules give the input Jacobian; an input consumed
by several gates contributes one term per occurrence.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from hae import statevector as sv
from hae.errors import UnsupportedGateError, UsageError

ZOO_SIZE = 32
ZOO_QUBITS = 4

# circuits whose training runs did not converge; excluded from correlation studies
NON_CONVERGENT = frozenset({7, 15, 18, 25})

_HALF_PI = np.pi / 2
_CPLUS = (np.sqrt(2) + 1) / (4 * np.sqrt(2))
_CMINUS = (np.sqrt(2) - 1) / (4 * np.sqrt(2))
# (shift, coefficient) pairs
_TWO_TERM = ((_HALF_PI, 0.5), (-_HALF_PI, -0.5))
_FOUR_TERM = (
    (_HALF_PI, _CPLUS),
    (-_HALF_PI, -_CPLUS),
    (3 * _HALF_PI, -_CMINUS),
    (-3 * _HALF_PI, _CMINUS),
)


class EmbeddingKind(str, enum.Enum):
    PAULI_X = "PauliX"
    PAULI_Y = "PauliY"
    CONTROLLED_PAULI_X = "ControlledPauliX"
    HADAMARD_PAULI_Z = "HadamardPauliZ"


@dataclass(frozen=True)
class GateTemplate:
    """Gate with an optional trainable parameter slot ``param``."""

    kind: str
    target: int
    control: int | None = None
    param: int | None = None
    axis: tuple[float, float, float] | None = None

    def __post_init__(self):
        if self.param is not None and self.kind not in (
            sv.ROTATIONS + sv.CONTROLLED_ROTATIONS
        ):
            raise UnsupportedGateError(
                f"{self.kind} cannot carry a trainable parameter; only rotations can"
            )
        if self.kind in sv.ROTATIONS + sv.CONTROLLED_ROTATIONS and self.param is None:
            raise UsageError(f"{self.kind} template needs a parameter slot")
        # reuse GateOp's structural validation
        sv.GateOp(self.kind, self.target, self.control, 0.0, self.axis)


@dataclass(frozen=True)
class Embedding:
    kind: EmbeddingKind

    def __post_init__(self):
        object.__setattr__(self, "kind", EmbeddingKind(self.kind))


@dataclass(frozen=True)
class Processing:
    gates: tuple[GateTemplate, ...]

    @property
    def is_entangling(self) -> bool:
        return any(g.control is not None for g in self.gates)


@dataclass(frozen=True)
class _Op:
    kind: str
    target: int
    control: int | None
    axis: tuple[float, float, float] | None
    source: str | None  # "x", "theta" or None for fixed gates
    index: int = -1


def embedding_ops(kind: EmbeddingKind, n_qubits: int) -> list[_Op]:
    kind = EmbeddingKind(kind)
    if kind is EmbeddingKind.PAULI_X:
        return [_Op("RX", q, None, None, "x", q) for q in range(n_qubits)]
    if kind is EmbeddingKind.PAULI_Y:
        return [_Op("RY", q, None, None, "x", q) for q in range(n_qubits)]
    if kind is EmbeddingKind.CONTROLLED_PAULI_X:
        ops = [_Op("RX", 0, None, None, "x", 0)]
        ops += [_Op("CRX", q, q - 1, None, "x", q) for q in range(1, n_qubits)]
        return ops
    ops = [_Op("H", q, None, None, None) for q in range(n_qubits)]
    ops += [_Op("RZ", q, None, None, "x", q) for q in range(n_qubits)]
    return ops


@dataclass(frozen=True, eq=False)
class CircuitSpec:
    """Declarative parametrized circuit.

    ``id`` is the zoo identifier (``None`` for ad-hoc circuits). Parameter
    slots must be numbered ``0..n_params-1``.
    """

    n_qubits: int
    layers: tuple
    id: int | None = None
    seed: int | None = None
    convergent: bool = True
    template: str = "custom"
    _ops: tuple = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not 1 <= self.n_qubits <= sv.MAX_QUBITS:
            raise UsageError(f"unsupported qubit count {self.n_qubits}")
        ops = []
        for layer in self.layers:
            if isinstance(layer, Embedding):
                ops.extend(embedding_ops(layer.kind, self.n_qubits))
            elif isinstance(layer, Processing):
                for g in layer.gates:
                    for q in (g.target, g.control):
                        if q is not None and not 0 <= q < self.n_qubits:
                            raise UsageError(f"qubit {q} out of range")
                    src = "theta" if g.param is not None else None
                    ops.append(
                        _Op(g.kind, g.target, g.control, g.axis, src,
                            -1 if g.param is None else g.param)
                    )
            else:
                raise UsageError(f"unknown layer type {type(layer).__name__}")
        slots = sorted({op.index for op in ops if op.source == "theta"})
        if slots != list(range(len(slots))):
            raise UsageError("parameter slots must be numbered 0..n_params-1")
        object.__setattr__(self, "_ops", tuple(ops))

    def __eq__(self, other):
        if not isinstance(other, CircuitSpec):
            return NotImplemented
        return (self.n_qubits, self.layers, self.id) == (
            other.n_qubits, other.layers, other.id
        )

    __hash__ = None

    @cached_property
    def n_params(self) -> int:
        return len({op.index for op in self._ops if op.source == "theta"})

    @property
    def n_embedding_repetitions(self) -> int:
        return sum(isinstance(layer, Embedding) for layer in self.layers)

    @property
    def n_entangling_layers(self) -> int:
        count = 0
        for layer in self.layers:
            if isinstance(layer, Processing) and layer.is_entangling:
                count += 1
            elif (
                isinstance(layer, Embedding)
                and layer.kind is EmbeddingKind.CONTROLLED_PAULI_X
                and self.n_qubits > 1
            ):
                count += 1
        return count

    @property
    def n_embedding_gates(self) -> int:
        """Number of gate occurrences that consume an input angle."""
        return sum(op.source == "x" for op in self._ops)

    @property
    def frequency_unit(self) -> float:
        """Spacing of the univariate frequency spectrum.

        Controlled rotations have generator eigenvalues {0, +-1/2}, so an input
        fed through one yields half-integer frequencies.
        """
        controlled = any(
            op.source == "x" and op.kind in sv.CONTROLLED_ROTATIONS for op in self._ops
        )
        return 0.5 if controlled else 1.0

    @property
    def embedding_kind(self) -> EmbeddingKind | None:
        kinds = {layer.kind for layer in self.layers if isinstance(layer, Embedding)}
        if len(kinds) == 1:
            return kinds.pop()
        return None

    @property
    def ops(self) -> tuple:
        return self._ops

    def record(self) -> dict:
        kind = self.embedding_kind
        return {
            "id": self.id,
            "embedding": None if kind is None else kind.value,
            "repetitions": self.n_embedding_repetitions,
            "template": self.template,
            "n_params": self.n_params,
            "n_entangling_layers": self.n_entangling_layers,
            "convergent": self.convergent,
        }


def custom_circuit(layers, n_qubits: int) -> CircuitSpec:
    return CircuitSpec(n_qubits=n_qubits, layers=tuple(layers))


# ---------------------------------------------------------------------------
# zoo


def _rotation_layer(n, axis, slot):
    return [GateTemplate("R" + axis, q, param=slot + q) for q in range(n)], slot + n


def _processing_layers(template, n, axis, rng, slot):
    """Return (layers, next_slot) for one repetition of ``template``."""
    if template == "rot":
        gates, slot = _rotation_layer(n, axis, slot)
        return [Processing(tuple(gates))], slot
    if template == "rand":
        gates = []
        for q in range(n):
            v = rng.normal(size=3)
            v = tuple(float(c) for c in v / np.linalg.norm(v))
            gates.append(GateTemplate("RAXIS", q, param=slot, axis=v))
            slot += 1
        return [Processing(tuple(gates))], slot
    if template == "rot_cnot_ring":
        gates, slot = _rotation_layer(n, axis, slot)
        gates += [GateTemplate("CNOT", (q + 1) % n, control=q) for q in range(n)]
        return [Processing(tuple(gates))], slot
    if template == "rot_crx_chain":
        gates, slot = _rotation_layer(n, axis, slot)
        for q in range(n - 1):
            gates.append(GateTemplate("CRX", q + 1, control=q, param=slot))
            slot += 1
        return [Processing(tuple(gates))], slot
    if template == "two_rot_cnot_ring":
        gates, slot = _rotation_layer(n, axis, slot)
        more, slot = _rotation_layer(n, "Z", slot)
        gates += more
        gates += [GateTemplate("CNOT", (q + 1) % n, control=q) for q in range(n)]
        return [Processing(tuple(gates))], slot
    raise UsageError(f"unknown processing template {template!r}")


_PX, _PY = EmbeddingKind.PAULI_X, EmbeddingKind.PAULI_Y
_CPX, _HPZ = EmbeddingKind.CONTROLLED_PAULI_X, EmbeddingKind.HADAMARD_PAULI_Z

# id -> (embedding, repetitions, processing template, rotation axis)
ZOO: dict[int, tuple[EmbeddingKind, int, str, str]] = {
    1: (_PX, 1, "rot", "Y"),
    2: (_PX, 1, "rand", "Y"),
    3: (_PX, 1, "rot_cnot_ring", "Y"),
    4: (_PX, 1, "rot_crx_chain", "Y"),
    5: (_PX, 1, "two_rot_cnot_ring", "Y"),
    6: (_PX, 2, "rot", "Y"),
    7: (_PX, 2, "rand", "Y"),
    8: (_PX, 2, "rot_crx_chain", "Y"),
    9: (_PX, 2, "two_rot_cnot_ring", "Y"),
    10: (_PX, 2, "rot_cnot_ring", "Y"),  # circuit 3 twice
    11: (_PX, 3, "rot", "Y"),
    12: (_PX, 3, "rot_crx_chain", "Y"),
    13: (_PX, 3, "rot_cnot_ring", "Y"),  # circuit 3 thrice
    14: (_PY, 1, "rot", "X"),
    15: (_PY, 1, "rand", "X"),
    16: (_PY, 1, "rot_cnot_ring", "X"),
    17: (_PY, 1, "rot_crx_chain", "X"),
    18: (_PY, 2, "two_rot_cnot_ring", "X"),
    19: (_PY, 2, "rot_cnot_ring", "X"),
    20: (_PY, 2, "rand", "X"),
    21: (_PY, 3, "rot_cnot_ring", "X"),
    22: (_CPX, 1, "rot", "Y"),
    23: (_CPX, 1, "rot_cnot_ring", "Y"),
    24: (_CPX, 2, "rot", "Y"),
    25: (_CPX, 2, "rot_crx_chain", "Y"),
    26: (_CPX, 3, "rot_cnot_ring", "Y"),
    27: (_HPZ, 1, "rot", "Y"),
    28: (_HPZ, 1, "rand", "Y"),
    29: (_HPZ, 1, "rot_cnot_ring", "Y"),
    30: (_HPZ, 2, "rot_crx_chain", "Y"),
    31: (_HPZ, 2, "two_rot_cnot_ring", "Y"),
    32: (_HPZ, 3, "rot_cnot_ring", "Y"),
}

# circuits defined as literal repetitions of another circuit's layer list
_REPEATS = {10: (3, 2), 13: (3, 3)}


def build_circuit(id: int, seed: int = 0, n_qubits: int = ZOO_QUBITS) -> CircuitSpec:
    """Deterministic zoo circuit for ``(id, seed)``.

    Random-axis rotations draw their axes from a generator keyed on both the
    seed and the id, so they are frozen into the returned spec.
    """
    if id not in ZOO:
        raise UsageError(f"unknown circuit id {id}; the zoo holds ids 1..{ZOO_SIZE}")
    embedding, reps, template, axis = ZOO[id]
    if id in _REPEATS:
        base_id, times = _REPEATS[id]
        base = build_circuit(base_id, seed, n_qubits)
        layers = []
        for r in range(times):
            layers.extend(_shift_slots(base.layers, r * base.n_params))
    else:
        rng = np.random.default_rng([seed, id])
        layers, slot = [], 0
        for _ in range(reps):
            layers.append(Embedding(embedding))
            procs, slot = _processing_layers(template, n_qubits, axis, rng, slot)
            layers.extend(procs)
    return CircuitSpec(
        n_qubits=n_qubits,
        layers=tuple(layers),
        id=id,
        seed=seed,
        convergent=id not in NON_CONVERGENT,
        template=template,
    )


def _shift_slots(layers, offset):
    out = []
    for layer in layers:
        if isinstance(layer, Processing):
            gates = tuple(
                GateTemplate(g.kind, g.target, g.control,
                             None if g.param is None else g.param + offset, g.axis)
                for g in layer.gates
            )
            out.append(Processing(gates))
        else:
            out.append(layer)
    return out


def zoo(seed: int = 0) -> list[CircuitSpec]:
    return [build_circuit(i, seed) for i in sorted(ZOO)]


# ---------------------------------------------------------------------------
# evaluation


def _check_inputs(spec: CircuitSpec, theta, x):
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    if theta.shape[-1:] != (spec.n_params,) and not (
        spec.n_params == 0 and theta.size == 0
    ):
        raise UsageError(
            f"expected {spec.n_params} parameters, got shape {theta.shape}"
        )
    if x.shape[-1] != spec.n_qubits:
        raise UsageError(f"expected {spec.n_qubits} inputs, got shape {x.shape}")
    return theta, x


def _param_ops(spec):
    return [op for op in spec.ops if op.source is not None]


def _angle_matrix(spec, theta, X):
    """Per-row angle for every parametrized op, shape ``(B, n_param_ops)``."""
    B = X.shape[0]
    theta = np.broadcast_to(theta, (B, spec.n_params)) if spec.n_params else None
    cols = []
    for op in _param_ops(spec):
        cols.append(X[:, op.index] if op.source == "x" else theta[:, op.index])
    if not cols:
        return np.zeros((B, 0))
    return np.stack(cols, axis=1)


def _run(spec, angles):
    """Statevectors for rows of an angle matrix."""
    B = angles.shape[0]
    psi = np.zeros((B, 2**spec.n_qubits), dtype=complex)
    psi[:, 0] = 1.0
    k = 0
    for op in spec.ops:
        gate = sv.GateOp(op.kind, op.target, op.control, 0.0, op.axis)
        if op.source is None:
            psi = sv.apply_gate_batch(psi, gate)
        else:
            psi = sv.apply_gate_batch(psi, gate, angles[:, k])
            k += 1
    return psi


def states_batch(spec: CircuitSpec, theta, X) -> np.ndarray:
    """Output statevectors ``(B, 2**n)``; ``theta`` is shared ``(P,)`` or per-row ``(B, P)``."""
    theta, X = _check_inputs(spec, theta, np.atleast_2d(X))
    return _run(spec, _angle_matrix(spec, theta, X))


def evaluate_batch(spec: CircuitSpec, theta, X) -> np.ndarray:
    return sv.z_expectations_batch(states_batch(spec, theta, X))


def output_state(spec: CircuitSpec, theta, x) -> sv.StateVector:
    theta, x = _check_inputs(spec, theta, x)
    if x.ndim != 1:
        raise UsageError("x must be a vector")
    return sv.StateVector(spec.n_qubits, states_batch(spec, theta, x[None, :])[0])


def evaluate(spec: CircuitSpec, theta, x) -> np.ndarray:
    """Pauli-Z expectation of every qubit after running the circuit on ``x``."""
    theta, x = _check_inputs(spec, theta, x)
    if x.ndim != 1:
        raise UsageError("x must be a vector")
    return evaluate_batch(spec, theta, x[None, :])[0]


def jacobians_batch(spec: CircuitSpec, theta, X):
    """Values and exact Jacobians for a batch of inputs.

    Returns ``(values (B, n), d_theta (B, n, P), d_x (B, n, n))``. Every
    shifted evaluation is stacked into one large batch.
    """
    theta, X = _check_inputs(spec, theta, np.atleast_2d(X))
    B, n = X.shape
    base = _angle_matrix(spec, theta, X)
    ops = _param_ops(spec)
    blocks = [base]
    plan = []  # (op position, coefficient) per block after the base
    for k, op in enumerate(ops):
        if op.kind in sv.CONTROLLED_ROTATIONS:
            rule = _FOUR_TERM
        elif op.kind in sv.ROTATIONS:
            rule = _TWO_TERM
        else:
            raise UnsupportedGateError(f"no shift rule for {op.kind}")
        for shift, coef in rule:
            shifted = base.copy()
            shifted[:, k] += shift
            blocks.append(shifted)
            plan.append((k, coef))
    values = sv.z_expectations_batch(_run(spec, np.concatenate(blocks)))
    values = values.reshape(len(blocks), B, n)
    d_angle = np.zeros((B, n, len(ops)))
    for b, (k, coef) in enumerate(plan, start=1):
        d_angle[:, :, k] += coef * values[b]
    d_theta = np.zeros((B, n, spec.n_params))
    d_x = np.zeros((B, n, n))
    for k, op in enumerate(ops):
        target = d_x if op.source == "x" else d_theta
        target[:, :, op.index] += d_angle[:, :, k]
    return values[0], d_theta, d_x


def gradient_params(spec: CircuitSpec, theta, x) -> np.ndarray:
    """Jacobian ``d<Z_i>/d theta_j`` with shape ``(n_qubits, n_params)``."""
    return jacobians_batch(spec, theta, np.asarray(x, dtype=float)[None, :])[1][0]


def gradient_inputs(spec: CircuitSpec, theta, x) -> np.ndarray:
    """Jacobian ``d<Z_i>/d x_j`` with shape ``(n_qubits, n_qubits)``."""
    return jacobians_batch(spec, theta, np.asarray(x, dtype=float)[None, :])[2][0]


def zoo_records(seed: int = 0) -> list[dict]:
    return [spec.record() for spec in zoo(seed)]
