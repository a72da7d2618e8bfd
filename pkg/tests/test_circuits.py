import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from hae import circuits as qc
from hae.circuits import Embedding, EmbeddingKind, GateTemplate, Processing
from hae.errors import UnsupportedGateError, UsageError


def random_inputs(spec, rng):
    theta = rng.uniform(-np.pi, np.pi, size=spec.n_params)
    x = rng.uniform(-1, 1, size=spec.n_qubits)
    return theta, x


class TestRegistry:
    def test_ids_and_families(self):
        specs = qc.zoo()
        assert [s.id for s in specs] == list(range(1, 33))
        expected = {}
        for i in range(1, 14):
            expected[i] = EmbeddingKind.PAULI_X
        for i in range(14, 22):
            expected[i] = EmbeddingKind.PAULI_Y
        for i in range(22, 27):
            expected[i] = EmbeddingKind.CONTROLLED_PAULI_X
        for i in range(27, 33):
            expected[i] = EmbeddingKind.HADAMARD_PAULI_Z
        assert {s.id: s.embedding_kind for s in specs} == expected

    def test_non_convergent_flags(self):
        flagged = {s.id for s in qc.zoo() if not s.convergent}
        assert flagged == {7, 15, 18, 25}

    def test_circuit_10_is_circuit_3_twice(self):
        c3, c10 = qc.build_circuit(3, seed=4), qc.build_circuit(10, seed=4)
        assert c10.n_params == 2 * c3.n_params
        assert len(c10.layers) == 2 * len(c3.layers)
        # same gate structure in both halves, slots shifted by n_params
        shifted = qc._shift_slots(c3.layers, c3.n_params)
        assert c10.layers == tuple(c3.layers) + tuple(shifted)

    def test_circuit_13_is_circuit_3_thrice(self):
        c3, c13 = qc.build_circuit(3), qc.build_circuit(13)
        assert c13.n_params == 3 * c3.n_params
        assert c13.n_embedding_repetitions == 3

    @pytest.mark.parametrize("bad", [0, 33, -1])
    def test_unknown_id(self, bad):
        with pytest.raises(UsageError):
            qc.build_circuit(bad)

    def test_deterministic(self):
        for cid in (2, 7, 20, 28):
            assert qc.build_circuit(cid, seed=9) == qc.build_circuit(cid, seed=9)
            assert qc.build_circuit(cid, seed=9).layers == qc.build_circuit(cid, seed=9).layers

    def test_random_axes_depend_on_seed(self):
        assert qc.build_circuit(2, seed=0).layers != qc.build_circuit(2, seed=1).layers

    def test_hadamard_family_has_fixed_h(self):
        for cid in range(27, 33):
            kinds = [op.kind for op in qc.build_circuit(cid).ops if op.source is None]
            assert "H" in kinds

    def test_slot_invariants(self):
        for spec in qc.zoo():
            theta_slots = {op.index for op in spec.ops if op.source == "theta"}
            assert theta_slots == set(range(spec.n_params))
            assert all(op.index < spec.n_qubits for op in spec.ops if op.source == "x")

    def test_entangling_layer_count(self):
        assert qc.build_circuit(1).n_entangling_layers == 0
        assert qc.build_circuit(3).n_entangling_layers == 1
        assert qc.build_circuit(10).n_entangling_layers == 2
        # controlled embedding counts once per repetition
        assert qc.build_circuit(22).n_entangling_layers == 1
        assert qc.build_circuit(26).n_entangling_layers == 6

    def test_records_serialise(self):
        recs = qc.zoo_records()
        assert len(recs) == 32
        fields = {"id", "embedding", "repetitions", "n_params", "n_entangling_layers",
                  "convergent"}
        for r in recs:
            assert fields <= set(r)
            json.dumps(r)


class TestTemplates:
    def test_param_on_fixed_gate(self):
        with pytest.raises(UnsupportedGateError):
            GateTemplate("CNOT", 1, control=0, param=0)

    def test_slot_gap_rejected(self):
        with pytest.raises(UsageError):
            qc.custom_circuit([Processing((GateTemplate("RX", 0, param=1),))], 1)

    def test_qubit_out_of_range(self):
        with pytest.raises(UsageError):
            qc.custom_circuit([Processing((GateTemplate("RX", 3, param=0),))], 2)


class TestEvaluate:
    def test_pauli_y_fixtures(self):
        spec = qc.custom_circuit([Embedding("PauliY")], 1)
        np.testing.assert_allclose(qc.evaluate(spec, [], [0.0]), [1.0], atol=1e-15)
        np.testing.assert_allclose(qc.evaluate(spec, [], [np.pi]), [-1.0], atol=1e-15)

    def test_length_mismatch(self):
        spec = qc.build_circuit(3)
        with pytest.raises(UsageError):
            qc.evaluate(spec, np.zeros(spec.n_params + 1), np.zeros(4))
        with pytest.raises(UsageError):
            qc.evaluate(spec, np.zeros(spec.n_params), np.zeros(3))

    def test_circuit_3_matches_dense_oracle(self, rng):
        spec = qc.build_circuit(3)
        for _ in range(5):
            theta, x = random_inputs(spec, rng)
            psi = oracles.circuit_unitary(spec, theta, x)[:, 0]
            expected = oracles.z_expectations(psi, 4)
            assert np.max(np.abs(qc.evaluate(spec, theta, x) - expected)) <= 1e-12

    @pytest.mark.parametrize("cid", range(1, 33))
    def test_every_circuit_matches_dense_oracle(self, cid):
        spec = qc.build_circuit(cid)
        theta, x = random_inputs(spec, np.random.default_rng(cid))
        psi = oracles.circuit_unitary(spec, theta, x)[:, 0]
        np.testing.assert_allclose(qc.output_state(spec, theta, x).amplitudes, psi, atol=1e-12)

    def test_circuit_10_runs_circuit_3_twice(self, rng):
        c3, c10 = qc.build_circuit(3), qc.build_circuit(10)
        theta, x = random_inputs(c10, rng)
        half = c3.n_params
        U = (oracles.circuit_unitary(c3, theta[half:], x)
             @ oracles.circuit_unitary(c3, theta[:half], x))
        expected = oracles.z_expectations(U[:, 0], 4)
        np.testing.assert_allclose(qc.evaluate(c10, theta, x), expected, atol=1e-12)

    def test_batch_agrees_with_single(self, rng):
        spec = qc.build_circuit(26)
        theta = rng.uniform(-np.pi, np.pi, spec.n_params)
        X = rng.uniform(-1, 1, (7, 4))
        batch = qc.evaluate_batch(spec, theta, X)
        for row, out in zip(X, batch):
            np.testing.assert_allclose(qc.evaluate(spec, theta, row), out, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 32), st.integers(0, 2**31))
def test_outputs_bounded(cid, seed):
    spec = qc.build_circuit(cid)
    rng = np.random.default_rng(seed)
    theta = rng.uniform(-10, 10, spec.n_params)
    z = qc.evaluate(spec, theta, rng.uniform(-10, 10, 4))
    assert np.all(np.abs(z) <= 1 + 1e-12)


class TestGradients:
    def test_rx_fixtures(self):
        spec = qc.custom_circuit([Processing((GateTemplate("RX", 0, param=0),))], 1)
        assert qc.gradient_params(spec, [0.0], [0.0])[0, 0] == pytest.approx(0.0, abs=1e-15)
        fd = oracles.central_difference(lambda t: qc.evaluate(spec, t, [0.0]), [np.pi / 2])
        assert fd[0, 0] == pytest.approx(-1.0, abs=1e-9)
        assert qc.gradient_params(spec, [np.pi / 2], [0.0])[0, 0] == pytest.approx(-1.0, abs=1e-12)

    def test_input_fixtures(self):
        once = qc.custom_circuit([Embedding("PauliY")], 1)
        assert qc.gradient_inputs(once, [], [0.0])[0, 0] == pytest.approx(0.0, abs=1e-15)
        twice = qc.custom_circuit([Embedding("PauliY"), Embedding("PauliY")], 1)
        x = [np.pi / 4]
        fd = oracles.central_difference(lambda v: qc.evaluate(twice, [], v), x)
        assert fd[0, 0] == pytest.approx(-2.0, abs=1e-9)
        assert qc.gradient_inputs(twice, [], x)[0, 0] == pytest.approx(-2.0, abs=1e-12)

    def test_controlled_rotation_four_term(self, rng):
        spec = qc.custom_circuit([
            Processing((GateTemplate("RY", 0, param=0),
                        GateTemplate("CRY", 1, control=0, param=1),
                        GateTemplate("CRZ", 0, control=1, param=2),
                        GateTemplate("RX", 1, param=3))),
        ], 2)
        for _ in range(5):
            theta = rng.uniform(-np.pi, np.pi, 4)
            fd = oracles.central_difference(lambda t: qc.evaluate(spec, t, [0.0, 0.0]), theta)
            got = qc.gradient_params(spec, theta, [0.0, 0.0])
            assert np.max(np.abs(got - fd)) <= 1e-6

    @pytest.mark.parametrize("cid", range(1, 33))
    def test_zoo_matches_finite_differences(self, cid):
        spec = qc.build_circuit(cid)
        rng = np.random.default_rng(100 + cid)
        for _ in range(2):
            theta, x = random_inputs(spec, rng)
            fd_t = oracles.central_difference(lambda t: qc.evaluate(spec, t, x), theta)
            fd_x = oracles.central_difference(lambda v: qc.evaluate(spec, theta, v), x)
            assert np.max(np.abs(qc.gradient_params(spec, theta, x) - fd_t)) <= 1e-6
            assert np.max(np.abs(qc.gradient_inputs(spec, theta, x) - fd_x)) <= 1e-6

    def test_batched_jacobian_shapes(self, rng):
        spec = qc.build_circuit(5)
        theta = rng.uniform(-np.pi, np.pi, spec.n_params)
        X = rng.uniform(-1, 1, (3, 4))
        values, dt, dx = qc.jacobians_batch(spec, theta, X)
        assert values.shape == (3, 4)
        assert dt.shape == (3, 4, spec.n_params)
        assert dx.shape == (3, 4, 4)
        np.testing.assert_allclose(dt[1], qc.gradient_params(spec, theta, X[1]), atol=1e-14)
