import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qvote import sim
from qvote.sim import (
    Circuit,
    GateOp,
    SimulationError,
    StateVector,
    apply_gate,
    born_probabilities,
    run_circuit,
    sample_shots,
)


def random_state(n_qubits: int, rng) -> StateVector:
    amps = rng.normal(size=2**n_qubits) + 1j * rng.normal(size=2**n_qubits)
    amps /= np.linalg.norm(amps)
    return StateVector(n_qubits, amps)


class TestApplyGate:
    def test_rz_on_basis_state_leaves_probabilities(self):
        state = StateVector.zero(2)
        out = apply_gate(state, GateOp("RZ", target=0, angle=0.0), None)
        out = apply_gate(out, GateOp("RZ", target=1), angle=1.234)
        np.testing.assert_allclose(
            born_probabilities(out), born_probabilities(state), atol=1e-12
        )

    def test_cnot_truth_table(self):
        # |10> (qubit 1 set) with control=1, target=0 -> |11>
        state = StateVector.basis(2, 0b10)
        out = apply_gate(state, GateOp("CNOT", target=0, control=1))
        np.testing.assert_allclose(out.amplitudes, [0, 0, 0, 1], atol=1e-12)

    def test_rx_pi_flips_qubit(self):
        out = apply_gate(StateVector.zero(1), GateOp("RX", target=0), angle=math.pi)
        assert born_probabilities(out)[1] == pytest.approx(1.0, abs=1e-10)
        # hand calculation: amplitude of |1> is -i
        assert out.amplitudes[1] == pytest.approx(-1j, abs=1e-10)

    def test_angle_required_for_rotation(self):
        with pytest.raises(SimulationError):
            apply_gate(StateVector.zero(1), GateOp("RX", target=0, param_slot=0))

    def test_angle_rejected_for_cnot(self):
        with pytest.raises(SimulationError):
            apply_gate(
                StateVector.zero(2), GateOp("CNOT", target=0, control=1), angle=0.3
            )

    def test_target_out_of_range(self):
        with pytest.raises(SimulationError):
            apply_gate(StateVector.zero(1), GateOp("RY", target=3), angle=0.1)

    def test_purity_input_unchanged(self):
        state = StateVector.zero(1)
        before = state.amplitudes.copy()
        apply_gate(state, GateOp("RY", target=0), angle=0.7)
        np.testing.assert_array_equal(state.amplitudes, before)

    @pytest.mark.parametrize("kind", ["RX", "RY", "RZ"])
    def test_normalization_preserved_100_random_states(self, kind):
        rng = np.random.default_rng(11)
        for _ in range(100):
            state = random_state(3, rng)
            out = apply_gate(
                state, GateOp(kind, target=int(rng.integers(3))),
                angle=float(rng.uniform(-math.pi, math.pi)),
            )
            assert abs(np.sum(np.abs(out.amplitudes) ** 2) - 1.0) < 1e-10

    def test_normalization_preserved_cnot_100_random_states(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            state = random_state(3, rng)
            c, t = rng.choice(3, size=2, replace=False)
            out = apply_gate(state, GateOp("CNOT", target=int(t), control=int(c)))
            assert abs(np.sum(np.abs(out.amplitudes) ** 2) - 1.0) < 1e-10

    @pytest.mark.parametrize("kind", ["RX", "RY", "RZ"])
    def test_unitarity_inverse_rotation(self, kind):
        rng = np.random.default_rng(13)
        for _ in range(100):
            state = random_state(2, rng)
            theta = float(rng.uniform(-math.pi, math.pi))
            t = int(rng.integers(2))
            out = apply_gate(state, GateOp(kind, target=t), angle=theta)
            back = apply_gate(out, GateOp(kind, target=t), angle=-theta)
            np.testing.assert_allclose(back.amplitudes, state.amplitudes, atol=1e-10)

    def test_cnot_self_inverse(self):
        rng = np.random.default_rng(14)
        gate = GateOp("CNOT", target=0, control=1)
        state = random_state(2, rng)
        back = apply_gate(apply_gate(state, gate), gate)
        np.testing.assert_allclose(back.amplitudes, state.amplitudes, atol=1e-12)


class TestRunCircuit:
    def test_empty_circuit_gives_zero_state(self):
        state = run_circuit(Circuit(n_qubits=3, ops=()))
        np.testing.assert_allclose(
            state.amplitudes, StateVector.zero(3).amplitudes, atol=1e-12
        )

    def test_rx_pi_via_param_slot(self):
        circuit = Circuit(1, (GateOp("RX", target=0, param_slot=0),), n_params=1)
        probs = born_probabilities(run_circuit(circuit, params=[math.pi]))
        assert probs[1] == pytest.approx(1.0, abs=1e-10)

    def test_ry_half_pi_equal_superposition(self):
        circuit = Circuit(1, (GateOp("RY", target=0, param_slot=0),), n_params=1)
        probs = born_probabilities(run_circuit(circuit, params=[math.pi / 2]))
        np.testing.assert_allclose(probs, [0.5, 0.5], atol=1e-10)

    def test_param_length_mismatch(self):
        circuit = Circuit(1, (GateOp("RY", target=0, param_slot=0),), n_params=1)
        with pytest.raises(SimulationError):
            run_circuit(circuit, params=[0.1, 0.2])

    def test_feature_length_mismatch(self):
        circuit = Circuit(1, (GateOp("RY", target=0, feature_slot=0),), n_features=1)
        with pytest.raises(SimulationError):
            run_circuit(circuit, features=[])

    def test_unreferenced_slot_rejected(self):
        with pytest.raises(SimulationError):
            Circuit(1, (GateOp("RY", target=0, param_slot=0),), n_params=2)


class TestBornProbabilities:
    def test_basis_state(self):
        probs = born_probabilities(StateVector.basis(2, 0b01))
        np.testing.assert_allclose(probs, [0, 1, 0, 0], atol=1e-12)

    def test_equal_superposition(self):
        state = StateVector(1, np.array([1, 1]) / math.sqrt(2))
        np.testing.assert_allclose(born_probabilities(state), [0.5, 0.5], atol=1e-12)

    def test_ry_third_pi(self):
        circuit = Circuit(1, (GateOp("RY", target=0, angle=math.pi / 3),))
        probs = born_probabilities(run_circuit(circuit))
        assert probs[0] == pytest.approx(math.cos(math.pi / 6) ** 2, abs=1e-10)
        assert probs[0] == pytest.approx(0.75, abs=1e-10)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_sums_to_one_for_random_states(self, seed):
        state = random_state(3, np.random.default_rng(seed))
        assert abs(born_probabilities(state).sum() - 1.0) < 1e-10


class TestSampleShots:
    def test_degenerate_distribution(self):
        hist = sample_shots(np.array([0.0, 1.0]), shots=1024, seed=0)
        assert hist.counts == {"1": 1024}

    def test_fair_coin_within_six_sigma(self):
        hist = sample_shots(np.array([0.5, 0.5]), shots=1024, seed=42)
        # binomial sigma = sqrt(1024 * 0.25) = 16; +-6 sigma around 512
        assert 412 <= hist.counts["0"] <= 612
        assert 412 <= hist.counts["1"] <= 612

    def test_determinism(self):
        dist = np.array([0.3, 0.2, 0.4, 0.1])
        a = sample_shots(dist, shots=500, seed=9)
        b = sample_shots(dist, shots=500, seed=9)
        assert a.counts == b.counts

    def test_total_conserved(self):
        hist = sample_shots(np.array([0.25] * 4), shots=777, seed=1)
        assert sum(hist.counts.values()) == hist.total_shots == 777

    def test_rejects_unnormalized(self):
        with pytest.raises(SimulationError):
            sample_shots(np.array([0.5, 0.4]), shots=10, seed=0)

    def test_rejects_zero_shots(self):
        with pytest.raises(SimulationError):
            sample_shots(np.array([0.5, 0.5]), shots=0, seed=0)

    def test_chi_square_calibration(self):
        # at most 5 of 100 seeded runs may reject at p < 0.01
        from scipy import stats

        rng = np.random.default_rng(2024)
        rejections = 0
        for seed in range(100):
            dist = rng.dirichlet(np.ones(4))
            hist = sample_shots(dist, shots=1024, seed=seed)
            observed = np.array(
                [hist.counts.get(sim.bitstring(i, 2), 0) for i in range(4)]
            )
            _, p = stats.chisquare(observed, 1024 * dist)
            rejections += p < 0.01
        assert rejections <= 5
