"""A single variational classifier: confidence, loss, gradient, training.

Class readout: with K classes, the first ceil(log2 K) qubits are
measured; class k owns the bitstring whose bit j equals bit j of k,
read on readout qubit j. Mass on codes beyond K-1 is discarded and the
class vector renormalized.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import noise
from .ansatz import Variant, embed_features, variant_circuit, variant_from_dict, variant_to_dict
from .sim import Circuit, born_probabilities, resolve_angle, rotation_matrix, run_circuit

PROB_FLOOR = 1e-12
SHIFT = math.pi / 2.0


class ClassifierError(ValueError):
    """Raised for invalid classifier inputs."""


@dataclass(frozen=True)
class ConfidenceVector:
    """Per-class probabilities for one input."""

    values: np.ndarray
    class_labels: tuple

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "class_labels", tuple(self.class_labels))
        if len(values) != len(self.class_labels) or len(values) < 2:
            raise ClassifierError("need one value per class and >= 2 classes")
        if abs(values.sum() - 1.0) > 1e-9 or values.min() < -1e-12:
            raise ClassifierError(f"confidences must be a distribution: {values}")

    def __getitem__(self, label) -> float:
        return float(self.values[self.class_labels.index(label)])


@dataclass(frozen=True)
class ClassifierModel:
    """A circuit variant with bound trainable parameters."""

    variant: Variant
    params: np.ndarray
    class_labels: tuple
    readout_qubits: tuple[int, ...]

    def __post_init__(self):
        params = np.asarray(self.params, dtype=float)
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "class_labels", tuple(self.class_labels))
        object.__setattr__(self, "readout_qubits", tuple(self.readout_qubits))
        if 2 ** len(self.readout_qubits) < len(self.class_labels):
            raise ClassifierError("too few readout qubits for the class count")
        if params.shape != (self.variant.n_params,):
            raise ClassifierError(
                f"expected {self.variant.n_params} params, got {params.shape}"
            )

    def circuit(self) -> Circuit:
        return variant_circuit(self.variant)


def default_readout(n_classes: int) -> tuple[int, ...]:
    return tuple(range(max(1, math.ceil(math.log2(n_classes)))))


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; executor None means noiseless statevector."""

    epochs: int = 30
    batch_size: int = 100
    learning_rate: float = 0.05
    seed: int = 0
    executor: "noise.NoisyExecutionConfig | None" = None
    spsa_a: float = 0.2
    spsa_c: float = 0.2

    def __post_init__(self):
        if self.batch_size < 1:
            raise ClassifierError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ClassifierError("learning_rate must be positive")


def _marginal_masses(probs: np.ndarray, readout_qubits, n_classes: int) -> np.ndarray:
    """Probability mass of each class code, marginalized onto the readout qubits."""
    indices = np.arange(len(probs))
    codes = np.zeros(len(probs), dtype=np.int64)
    for j, qubit in enumerate(readout_qubits):
        codes |= ((indices >> qubit) & 1) << j
    masses = np.bincount(codes, weights=probs, minlength=2 ** len(readout_qubits))
    return masses[:n_classes]


def _run_batch(circuit: Circuit, params: np.ndarray,
               feature_angles: np.ndarray) -> np.ndarray:
    """Probabilities for a batch of feature-angle rows in one pass.

    Returns an array of shape (batch, 2**n_qubits).
    """
    batch = feature_angles.shape[0]
    n = circuit.n_qubits
    amps = np.zeros((batch, 2**n), dtype=np.complex128)
    amps[:, 0] = 1.0
    idx = np.arange(2**n)
    for op in circuit.ops:
        if op.kind == "CNOT":
            active = (idx >> op.control) & 1 == 1
            flipped = idx ^ (1 << op.target)
            amps[:, idx[active]] = amps[:, flipped[active]]
            continue
        t = op.target
        shaped = amps.reshape(batch, 2 ** (n - t - 1), 2, 2**t)
        if op.feature_slot is not None:
            thetas = feature_angles[:, op.feature_slot]
            mats = np.stack([rotation_matrix(op.kind, th) for th in thetas])
            amps = np.einsum("bij,bajc->baic", mats, shaped).reshape(batch, -1)
        else:
            theta = op.angle if op.angle is not None else params[op.param_slot]
            mat = rotation_matrix(op.kind, theta)
            amps = np.einsum("ij,bajc->baic", mat, shaped).reshape(batch, -1)
    return np.abs(amps) ** 2


def confidence(model: ClassifierModel, features,
               executor: "noise.NoisyExecutionConfig | None" = None) -> ConfidenceVector:
    """Per-class confidence for one input.

    ``executor`` None runs the exact statevector; otherwise trajectories
    on the configured machine profile.
    """
    circuit = model.circuit()
    features = np.asarray(features, dtype=float)
    if features.shape != (circuit.n_features,):
        raise ClassifierError(
            f"expected {circuit.n_features} features, got {features.shape}"
        )
    angles = embed_features(features)
    if executor is None:
        probs = born_probabilities(run_circuit(circuit, model.params, angles))
    else:
        probs = noise.noisy_execute(circuit, model.params, angles, executor).frequencies()
    masses = _marginal_masses(probs, model.readout_qubits, len(model.class_labels))
    total = masses.sum()
    if total <= 0:
        values = np.full(len(masses), 1.0 / len(masses))
    else:
        values = masses / total
    return ConfidenceVector(values=values, class_labels=model.class_labels)


def predict(conf: ConfidenceVector):
    """Label with the highest confidence; ties go to the earliest label."""
    return conf.class_labels[int(np.argmax(conf.values))]


def loss(conf: ConfidenceVector, true_label) -> float:
    """Cross-entropy with a probability floor against log(0)."""
    if true_label not in conf.class_labels:
        raise ClassifierError(f"unknown label {true_label!r}")
    return -math.log(max(conf[true_label], PROB_FLOOR))


def _batch_losses(circuit: Circuit, params, feature_angles, label_indices,
                  readout_qubits, n_classes) -> np.ndarray:
    probs = _run_batch(circuit, params, feature_angles)
    rows = np.arange(len(label_indices))
    masses = np.stack(
        [_marginal_masses(p, readout_qubits, n_classes) for p in probs]
    )
    conf = masses / masses.sum(axis=1, keepdims=True)
    return -np.log(np.maximum(conf[rows, label_indices], PROB_FLOOR))


def parameter_shift_gradient(model: ClassifierModel, batch,
                             executor: "noise.NoisyExecutionConfig | None" = None
                             ) -> np.ndarray:
    """Gradient of the mean batch cross-entropy via the two-point shift rule.

    Raw class masses are differentiated exactly at +-pi/2 shifts; the
    chain rule through renormalization and the log is applied
    analytically.
    """
    batch = list(batch)
    if not batch:
        raise ClassifierError("empty batch")
    circuit = model.circuit()
    n_classes = len(model.class_labels)
    feature_angles = np.stack([embed_features(f) for f, _ in batch])
    label_indices = np.array(
        [model.class_labels.index(label) for _, label in batch]
    )
    rows = np.arange(len(batch))

    def masses_at(params):
        if executor is None:
            probs = _run_batch(circuit, params, feature_angles)
        else:
            probs = np.stack([
                noise.noisy_execute(circuit, params, fa, executor).frequencies()
                for fa in feature_angles
            ])
        return np.stack(
            [_marginal_masses(p, model.readout_qubits, n_classes) for p in probs]
        )

    base = masses_at(model.params)
    base_true = np.maximum(base[rows, label_indices], PROB_FLOOR)
    base_total = base.sum(axis=1)

    grad = np.zeros(model.variant.n_params)
    for j in range(len(grad)):
        shifted = model.params.copy()
        shifted[j] += SHIFT
        plus = masses_at(shifted)
        shifted[j] -= 2 * SHIFT
        minus = masses_at(shifted)
        d_masses = (plus - minus) / 2.0
        d_true = d_masses[rows, label_indices]
        d_total = d_masses.sum(axis=1)
        # d/dtheta of -log(m_true / total)
        per_sample = -(d_true / base_true - d_total / base_total)
        grad[j] = per_sample.mean()
    return grad


def dataset_loss(model: ClassifierModel, samples,
                 executor: "noise.NoisyExecutionConfig | None" = None) -> float:
    """Mean cross-entropy over (features, label) pairs."""
    samples = list(samples)
    return float(
        np.mean([loss(confidence(model, f, executor), y) for f, y in samples])
    )


def accuracy(model: ClassifierModel, samples,
             executor: "noise.NoisyExecutionConfig | None" = None) -> float:
    samples = list(samples)
    hits = sum(
        predict(confidence(model, f, executor)) == y for f, y in samples
    )
    return hits / len(samples)


def init_params(variant: Variant, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(-math.pi, math.pi, size=variant.n_params)


def train(model: ClassifierModel, train_set, config: TrainConfig) -> ClassifierModel:
    """Gradient-descent training; deterministic for equal inputs.

    Noiseless executor uses exact parameter-shift gradients; a noisy
    executor switches to simultaneous-perturbation (SPSA) updates.
    """
    samples = list(train_set)
    if not samples:
        raise ClassifierError("empty training set")
    for _, label in samples:
        if label not in model.class_labels:
            raise ClassifierError(f"label {label!r} not in model classes")
    if config.executor is not None:
        return _train_spsa(model, samples, config)

    rng = np.random.default_rng(config.seed)
    params = model.params.copy()
    for _ in range(config.epochs):
        order = rng.permutation(len(samples))
        for start in range(0, len(samples), config.batch_size):
            batch = [samples[i] for i in order[start:start + config.batch_size]]
            grad = parameter_shift_gradient(replace(model, params=params), batch)
            params = params - config.learning_rate * grad
    return replace(model, params=params)


def _train_spsa(model: ClassifierModel, samples, config: TrainConfig) -> ClassifierModel:
    """SPSA with the standard decaying gain schedules."""
    rng = np.random.default_rng(config.seed)
    params = model.params.copy()
    steps = config.epochs * math.ceil(len(samples) / config.batch_size)
    circuit = model.circuit()
    n_classes = len(model.class_labels)

    def batch_loss(p, batch):
        feats = np.stack([embed_features(f) for f, _ in batch])
        labels = np.array([model.class_labels.index(y) for _, y in batch])
        losses = []
        for fa, li in zip(feats, labels):
            probs = noise.noisy_execute(circuit, p, fa, config.executor).frequencies()
            masses = _marginal_masses(probs, model.readout_qubits, n_classes)
            conf = masses / max(masses.sum(), PROB_FLOOR)
            losses.append(-math.log(max(conf[li], PROB_FLOOR)))
        return float(np.mean(losses))

    for k in range(steps):
        a_k = config.spsa_a / (k + 1) ** 0.602
        c_k = config.spsa_c / (k + 1) ** 0.101
        delta = rng.choice([-1.0, 1.0], size=len(params))
        batch_idx = rng.choice(len(samples), size=min(config.batch_size, len(samples)),
                               replace=False)
        batch = [samples[i] for i in batch_idx]
        l_plus = batch_loss(params + c_k * delta, batch)
        l_minus = batch_loss(params - c_k * delta, batch)
        params = params - a_k * (l_plus - l_minus) / (2 * c_k) * delta
    return replace(model, params=params)


def model_to_dict(model: ClassifierModel) -> dict:
    return {
        "variant": variant_to_dict(model.variant),
        "params": [float(p) for p in model.params],
        "class_labels": list(model.class_labels),
        "readout_qubits": list(model.readout_qubits),
    }


def model_from_dict(data: dict) -> ClassifierModel:
    return ClassifierModel(
        variant=variant_from_dict(data["variant"]),
        params=np.array(data["params"], dtype=float),
        class_labels=tuple(data["class_labels"]),
        readout_qubits=tuple(data["readout_qubits"]),
    )


def save_model(model: ClassifierModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2))


def load_model(path: str | Path) -> ClassifierModel:
    return model_from_dict(json.loads(Path(path).read_text()))
