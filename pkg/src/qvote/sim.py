"""Exact statevector simulation of small quantum circuits.

Conventions used throughout the package:

* Qubit 0 is the least significant bit of the basis index, so the
  amplitude at index ``i`` belongs to the basis state whose bit ``j``
  (of ``i``) is the value of qubit ``j``.
* Bitstring keys are written most-significant qubit first, i.e.
  ``format(i, "0{n}b")``.
* Rotation gates follow RX(theta) = exp(-i*theta*X/2) and likewise for
  RY/RZ.

All operations are pure: inputs are never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NORM_ATOL = 1e-10

ROTATION_KINDS = ("RX", "RY", "RZ")
GATE_KINDS = ROTATION_KINDS + ("CNOT",)


class SimulationError(ValueError):
    """Raised for invalid gates, states, or sampling inputs."""


@dataclass(frozen=True)
class StateVector:
    """Complex amplitudes of an n-qubit register."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape != (2**self.n_qubits,):
            raise SimulationError(
                f"expected {2**self.n_qubits} amplitudes, got {amps.shape}"
            )
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > 1e-8:
            raise SimulationError(f"state not normalized: |psi|^2 = {norm}")

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        amps = np.zeros(2**n_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(2**n_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(n_qubits, amps)


@dataclass(frozen=True)
class GateOp:
    """One gate: a rotation with a single angle source, or a CNOT.

    Exactly one of ``angle``, ``param_slot``, ``feature_slot`` must be
    set for rotation kinds; none of them for CNOT.
    """

    kind: str
    target: int
    control: int | None = None
    angle: float | None = None
    param_slot: int | None = None
    feature_slot: int | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise SimulationError(f"unknown gate kind {self.kind!r}")
        sources = [
            s for s in (self.angle, self.param_slot, self.feature_slot) if s is not None
        ]
        if self.kind == "CNOT":
            if sources:
                raise SimulationError("CNOT carries no angle source")
            if self.control is None:
                raise SimulationError("CNOT requires a control qubit")
            if self.control == self.target:
                raise SimulationError("CNOT control equals target")
        else:
            if len(sources) > 1:
                raise SimulationError(
                    f"{self.kind} allows a single angle source, got {len(sources)}"
                )
            if self.control is not None:
                raise SimulationError("rotation gates take no control qubit")


@dataclass(frozen=True)
class Circuit:
    """Ordered gate sequence with trainable and encoding angle slots."""

    n_qubits: int
    ops: tuple[GateOp, ...]
    n_params: int = 0
    n_features: int = 0

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        seen_params, seen_features = set(), set()
        for op in self.ops:
            if op.kind != "CNOT" and (
                op.angle is None and op.param_slot is None and op.feature_slot is None
            ):
                raise SimulationError("rotation in a circuit needs an angle source")
            if op.target >= self.n_qubits or op.target < 0:
                raise SimulationError(f"target {op.target} out of range")
            if op.control is not None and (
                op.control >= self.n_qubits or op.control < 0
            ):
                raise SimulationError(f"control {op.control} out of range")
            if op.param_slot is not None:
                if op.param_slot >= self.n_params:
                    raise SimulationError(f"param slot {op.param_slot} out of range")
                seen_params.add(op.param_slot)
            if op.feature_slot is not None:
                if op.feature_slot >= self.n_features:
                    raise SimulationError(f"feature slot {op.feature_slot} out of range")
                seen_features.add(op.feature_slot)
        if seen_params != set(range(self.n_params)):
            raise SimulationError("every parameter slot must be referenced")
        if seen_features != set(range(self.n_features)):
            raise SimulationError("every feature slot must be referenced")

    @property
    def cnot_count(self) -> int:
        return sum(1 for op in self.ops if op.kind == "CNOT")


@dataclass(frozen=True)
class ShotHistogram:
    """Measurement outcome counts keyed by bitstring."""

    n_qubits: int
    counts: dict[str, int]
    total_shots: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.total_shots:
            raise SimulationError("histogram counts do not sum to total_shots")
        for key in self.counts:
            if len(key) != self.n_qubits:
                raise SimulationError(f"bad bitstring key {key!r}")

    def frequencies(self) -> np.ndarray:
        """Outcome frequencies as a dense array over basis indices."""
        freq = np.zeros(2**self.n_qubits)
        for key, count in self.counts.items():
            freq[int(key, 2)] = count / self.total_shots
        return freq


def bitstring(index: int, n_qubits: int) -> str:
    """Render a basis index with qubit n-1 leftmost, qubit 0 rightmost."""
    return format(index, f"0{n_qubits}b")


def rotation_matrix(kind: str, theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    if kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)
    if kind == "RY":
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if kind == "RZ":
        return np.array(
            [[np.exp(-1j * theta / 2.0), 0], [0, np.exp(1j * theta / 2.0)]],
            dtype=np.complex128,
        )
    raise SimulationError(f"not a rotation kind: {kind!r}")


def _apply_single_qubit(amps: np.ndarray, n_qubits: int, target: int,
                        matrix: np.ndarray) -> np.ndarray:
    shaped = amps.reshape(2 ** (n_qubits - target - 1), 2, 2**target)
    return np.einsum("ij,ajb->aib", matrix, shaped).reshape(-1)


def _apply_cnot(amps: np.ndarray, n_qubits: int, control: int,
                target: int) -> np.ndarray:
    idx = np.arange(2**n_qubits)
    out = amps.copy()
    active = (idx >> control) & 1 == 1
    out[idx[active]] = amps[idx[active] ^ (1 << target)]
    return out


def apply_gate(state: StateVector, gate: GateOp,
               angle: float | None = None) -> StateVector:
    """Apply one gate and return the new state.

    ``angle`` must be given iff the gate is a rotation whose angle is
    not already bound on the op itself.
    """
    if gate.target >= state.n_qubits:
        raise SimulationError(f"target {gate.target} out of range")
    if gate.kind == "CNOT":
        if angle is not None:
            raise SimulationError("CNOT takes no angle")
        if gate.control >= state.n_qubits:
            raise SimulationError(f"control {gate.control} out of range")
        amps = _apply_cnot(state.amplitudes, state.n_qubits, gate.control, gate.target)
        return StateVector(state.n_qubits, amps)
    theta = gate.angle if gate.angle is not None else angle
    if theta is None:
        raise SimulationError(f"{gate.kind} needs an angle")
    amps = _apply_single_qubit(
        state.amplitudes, state.n_qubits, gate.target, rotation_matrix(gate.kind, theta)
    )
    return StateVector(state.n_qubits, amps)


def resolve_angle(op: GateOp, params, features) -> float | None:
    if op.kind == "CNOT":
        return None
    if op.angle is not None:
        return op.angle
    if op.param_slot is not None:
        return float(params[op.param_slot])
    return float(features[op.feature_slot])


def run_circuit(circuit: Circuit, params=(), features=()) -> StateVector:
    """Run ``circuit`` on |0...0> with the given slot bindings."""
    params = np.asarray(params, dtype=float)
    features = np.asarray(features, dtype=float)
    if params.shape != (circuit.n_params,):
        raise SimulationError(
            f"expected {circuit.n_params} params, got {params.shape}"
        )
    if features.shape != (circuit.n_features,):
        raise SimulationError(
            f"expected {circuit.n_features} features, got {features.shape}"
        )
    state = StateVector.zero(circuit.n_qubits)
    for op in circuit.ops:
        state = apply_gate(state, op, resolve_angle(op, params, features))
    return state


def born_probabilities(state: StateVector) -> np.ndarray:
    """|amplitude|^2 for every basis index."""
    probs = np.abs(state.amplitudes) ** 2
    total = float(probs.sum())
    if abs(total - 1.0) > NORM_ATOL * 10:
        raise SimulationError(f"state not normalized: sum of probabilities {total}")
    return probs


def sample_shots(dist: np.ndarray, shots: int, seed) -> ShotHistogram:
    """Draw seeded independent samples from a distribution over bitstrings.

    ``seed`` may be anything ``np.random.default_rng`` accepts,
    including a Generator for substream use.
    """
    dist = np.asarray(dist, dtype=float)
    if shots < 1:
        raise SimulationError("shots must be >= 1")
    total = float(dist.sum())
    if abs(total - 1.0) > 1e-9 or np.any(dist < 0):
        raise SimulationError(f"distribution not normalized: sum {total}")
    n_qubits = int(np.log2(len(dist)))
    if 2**n_qubits != len(dist):
        raise SimulationError("distribution length must be a power of two")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    draws = rng.choice(len(dist), size=shots, p=dist / total)
    counts = np.bincount(draws, minlength=len(dist))
    return ShotHistogram(
        n_qubits=n_qubits,
        counts={bitstring(i, n_qubits): int(c) for i, c in enumerate(counts) if c},
        total_shots=shots,
    )
