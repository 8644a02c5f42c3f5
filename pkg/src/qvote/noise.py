"""Parameterized noise channels and per-machine noisy execution.

Noise model: a two-qubit depolarizing channel after every CNOT
(probability = the machine's CNOT error, Pauli drawn uniformly from the
15 non-identity two-qubit Paulis) and independent symmetric bit flips on
every measured bit (probability = the machine's readout error).

Execution is by trajectory sampling: each shot is one stochastic
simulation of the circuit. Shots with no depolarizing event reuse the
ideal statevector, so only the (rare) faulted trajectories are
re-simulated.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .sim import (
    Circuit,
    ShotHistogram,
    StateVector,
    _apply_cnot,
    _apply_single_qubit,
    apply_gate,
    bitstring,
    born_probabilities,
    resolve_angle,
    rotation_matrix,
)


class NoiseConfigError(ValueError):
    """Raised for invalid noise parameters or machine profiles."""


@dataclass(frozen=True)
class MachineProfile:
    """A named machine: error rates plus shot budget.

    ``quantum_volume`` is stored metadata only and never enters the
    simulation.
    """

    name: str
    n_qubits: int
    readout_error: float
    cnot_error: float
    quantum_volume: int
    shots: int

    def __post_init__(self):
        if not 0.0 <= self.readout_error <= 1.0:
            raise NoiseConfigError(f"readout_error out of [0,1]: {self.readout_error}")
        if not 0.0 <= self.cnot_error <= 1.0:
            raise NoiseConfigError(f"cnot_error out of [0,1]: {self.cnot_error}")
        if self.shots < 1:
            raise NoiseConfigError("shots must be >= 1")
        if self.n_qubits < 1:
            raise NoiseConfigError("n_qubits must be >= 1")


@dataclass(frozen=True)
class NoisyExecutionConfig:
    """How to run a circuit on one machine profile."""

    profile: MachineProfile
    trajectories: int | None = None
    seed: int | np.random.SeedSequence = 0

    def resolved_trajectories(self) -> int:
        n = self.profile.shots if self.trajectories is None else self.trajectories
        if n < 1:
            raise NoiseConfigError("trajectories must be >= 1")
        return n


_PROFILE_ROWS = (
    ("ibmq_lima", 5, 2.734e-2, 1.166e-2, 8, 1024),
    ("ibmq_quito", 5, 4.714e-2, 9.675e-3, 16, 1024),
    ("ibmq_belem", 5, 3.080e-2, 6.176e-2, 16, 1024),
    ("ibm_nairobi", 7, 4.599e-2, 1.015e-2, 32, 1024),
    ("ibm_oslo", 7, 2.411e-2, 1.111e-2, 32, 1024),
)


def load_profiles() -> tuple[MachineProfile, ...]:
    """The five built-in machine profiles."""
    return tuple(MachineProfile(*row) for row in _PROFILE_ROWS)


def profile_by_name(name: str,
                    extra: tuple[MachineProfile, ...] = ()) -> MachineProfile:
    for profile in tuple(extra) + load_profiles():
        if profile.name == name:
            return profile
    raise NoiseConfigError(f"unknown machine profile {name!r}")


def load_profiles_file(path: str | Path) -> tuple[MachineProfile, ...]:
    """Read user-defined machine profiles from an INI-style file.

    One section per machine; keys are the MachineProfile field names
    (``name`` defaults to the section title).
    """
    parser = configparser.ConfigParser()
    read = parser.read(str(path))
    if not read:
        raise NoiseConfigError(f"cannot read profile file {path}")
    profiles = []
    for section in parser.sections():
        entries = parser[section]
        profiles.append(
            MachineProfile(
                name=entries.get("name", section),
                n_qubits=entries.getint("n_qubits"),
                readout_error=entries.getfloat("readout_error"),
                cnot_error=entries.getfloat("cnot_error"),
                quantum_volume=entries.getint("quantum_volume", 0),
                shots=entries.getint("shots", 1024),
            )
        )
    return tuple(profiles)


# The 15 non-identity two-qubit Paulis as (pauli_on_control, pauli_on_target),
# enumerated in a fixed order so seeded draws are reproducible.
TWO_QUBIT_PAULIS = tuple(
    (a, b)
    for a in ("I", "X", "Y", "Z")
    for b in ("I", "X", "Y", "Z")
    if (a, b) != ("I", "I")
)


def _apply_pauli(amps: np.ndarray, n_qubits: int, qubit: int,
                 which: str) -> np.ndarray:
    if which == "I":
        return amps
    idx = np.arange(2**n_qubits)
    bit = (idx >> qubit) & 1
    if which == "X":
        return amps[idx ^ (1 << qubit)]
    if which == "Y":
        phase = np.where(bit == 1, 1j, -1j)
        return phase * amps[idx ^ (1 << qubit)]
    if which == "Z":
        return np.where(bit == 1, -amps, amps)
    raise NoiseConfigError(f"unknown Pauli {which!r}")


def apply_pauli_pair(state: StateVector, control: int, target: int,
                     pair: tuple[str, str]) -> StateVector:
    amps = _apply_pauli(state.amplitudes, state.n_qubits, control, pair[0])
    amps = _apply_pauli(amps, state.n_qubits, target, pair[1])
    return StateVector(state.n_qubits, amps)


def apply_cnot_depolarizing(state: StateVector, p: float, control: int,
                            target: int, rng: np.random.Generator) -> StateVector:
    """One trajectory step of the depolarizing channel after an ideal CNOT.

    The ideal CNOT itself is *not* applied here; this adds only the
    stochastic Pauli fault.
    """
    if not 0.0 <= p <= 1.0:
        raise NoiseConfigError(f"probability out of [0,1]: {p}")
    if rng.random() >= p:
        return state
    pair = TWO_QUBIT_PAULIS[rng.integers(len(TWO_QUBIT_PAULIS))]
    return apply_pauli_pair(state, control, target, pair)


def apply_readout_error(bits: str, p_flip: float,
                        rng: np.random.Generator) -> str:
    """Flip each measured bit independently with probability ``p_flip``."""
    if not 0.0 <= p_flip <= 1.0:
        raise NoiseConfigError(f"probability out of [0,1]: {p_flip}")
    flips = rng.random(len(bits)) < p_flip
    return "".join("1" if (b == "0") == f else "0" if f else b
                   for b, f in zip(bits, flips))


def _resimulate_from(prefix_amps: list[np.ndarray], n_qubits: int, ops, angles,
                     first_fault: int, p: float, cnot_uniforms: np.ndarray,
                     rng: np.random.Generator) -> np.ndarray:
    """Replay a trajectory from its first faulted CNOT onward.

    ``first_fault`` indexes into the circuit's CNOTs; ``cnot_uniforms``
    holds this shot's pre-drawn uniforms for every CNOT. Works on raw
    amplitude arrays for speed.
    """
    cnot_positions = [i for i, op in enumerate(ops) if op.kind == "CNOT"]
    op_index = cnot_positions[first_fault]
    amps = prefix_amps[op_index + 1]  # ideal amplitudes just after that CNOT
    pair = TWO_QUBIT_PAULIS[rng.integers(len(TWO_QUBIT_PAULIS))]
    amps = _apply_pauli(amps, n_qubits, ops[op_index].control, pair[0])
    amps = _apply_pauli(amps, n_qubits, ops[op_index].target, pair[1])
    cnot_seen = first_fault + 1
    for j in range(op_index + 1, len(ops)):
        op = ops[j]
        if op.kind == "CNOT":
            amps = _apply_cnot(amps, n_qubits, op.control, op.target)
            if cnot_uniforms[cnot_seen] < p:
                pair = TWO_QUBIT_PAULIS[rng.integers(len(TWO_QUBIT_PAULIS))]
                amps = _apply_pauli(amps, n_qubits, op.control, pair[0])
                amps = _apply_pauli(amps, n_qubits, op.target, pair[1])
            cnot_seen += 1
        else:
            amps = _apply_single_qubit(
                amps, n_qubits, op.target, rotation_matrix(op.kind, angles[j])
            )
    return np.abs(amps) ** 2


def noisy_execute(circuit: Circuit, params, features,
                  config: NoisyExecutionConfig) -> ShotHistogram:
    """Run seeded noisy trajectories of a circuit and histogram the outcomes.

    Deterministic for equal (circuit, params, features, config).
    """
    profile = config.profile
    if circuit.n_qubits > profile.n_qubits:
        raise NoiseConfigError(
            f"circuit needs {circuit.n_qubits} qubits, "
            f"profile {profile.name} has {profile.n_qubits}"
        )
    shots = config.resolved_trajectories()
    rng = (
        np.random.default_rng(config.seed)
        if not isinstance(config.seed, np.random.Generator)
        else config.seed
    )

    params = np.asarray(params, dtype=float)
    features = np.asarray(features, dtype=float)
    angles = [resolve_angle(op, params, features) for op in circuit.ops]

    # Ideal pass, caching amplitudes after every op for trajectory resume.
    amps = np.zeros(2**circuit.n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    prefix_amps = [amps]
    for op, angle in zip(circuit.ops, angles):
        if op.kind == "CNOT":
            amps = _apply_cnot(amps, circuit.n_qubits, op.control, op.target)
        else:
            amps = _apply_single_qubit(
                amps, circuit.n_qubits, op.target, rotation_matrix(op.kind, angle)
            )
        prefix_amps.append(amps)
    ideal_probs = np.abs(amps) ** 2
    ideal_cdf = np.cumsum(ideal_probs)

    n = circuit.n_qubits
    n_cnots = circuit.cnot_count
    p = profile.cnot_error

    # Draw order is fixed: CNOT uniforms, per-fault Pauli picks (in shot
    # order), outcome uniforms, readout flip uniforms.
    cnot_uniforms = rng.random((shots, n_cnots)) if n_cnots else np.empty((shots, 0))
    faulted = np.flatnonzero((cnot_uniforms < p).any(axis=1))
    faulted_probs = {}
    for shot in faulted:
        first = int(np.argmax(cnot_uniforms[shot] < p))
        faulted_probs[shot] = _resimulate_from(
            prefix_amps, circuit.n_qubits, circuit.ops, angles, first, p,
            cnot_uniforms[shot], rng,
        )

    outcome_uniforms = rng.random(shots)
    outcomes = np.searchsorted(ideal_cdf, outcome_uniforms)
    for shot, probs in faulted_probs.items():
        outcomes[shot] = np.searchsorted(np.cumsum(probs), outcome_uniforms[shot])
    outcomes = np.clip(outcomes, 0, 2**n - 1)

    flips = rng.random((shots, n)) < profile.readout_error
    flip_mask = (flips.astype(np.int64) << np.arange(n)).sum(axis=1)
    outcomes = outcomes ^ flip_mask

    counts = np.bincount(outcomes, minlength=2**n)
    return ShotHistogram(
        n_qubits=n,
        counts={bitstring(i, n): int(c) for i, c in enumerate(counts) if c},
        total_shots=shots,
    )


def substream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent reproducible stream for a (machine, copy, sample, ...) key."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=key))


def with_seed(config: NoisyExecutionConfig, rng_or_seed) -> NoisyExecutionConfig:
    return replace(config, seed=rng_or_seed)
