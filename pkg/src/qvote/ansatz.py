"""Hardware-efficient circuit templates and their CNOT-placement variants.

A template is one layer of encoding rotations (one feature slot per
qubit) followed by one or more entangling blocks. Each block is a CNOT
layer whose graph connects every qubit, followed by per-qubit trainable
rotations. Variants of a template keep everything fixed except the CNOT
placement.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from math import factorial, pi
from pathlib import Path

import numpy as np

from .sim import Circuit, GateOp, ROTATION_KINDS


class AnsatzError(ValueError):
    """Raised for invalid template or variant construction."""


def _is_connected(n_qubits: int, pairs) -> bool:
    if n_qubits == 1:
        return True
    adjacency = {q: set() for q in range(n_qubits)}
    for c, t in pairs:
        adjacency[c].add(t)
        adjacency[t].add(c)
    seen, stack = {0}, [0]
    while stack:
        for nxt in adjacency[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return len(seen) == n_qubits


@dataclass(frozen=True)
class EntangledUnitary:
    """One block: an all-qubit-connecting CNOT layer plus rotations."""

    cnot_pairs: tuple[tuple[int, int], ...]
    rotation_kinds: tuple[tuple[str, ...], ...]  # per qubit, applied in order

    def __post_init__(self):
        object.__setattr__(self, "cnot_pairs", tuple(map(tuple, self.cnot_pairs)))
        object.__setattr__(
            self, "rotation_kinds", tuple(map(tuple, self.rotation_kinds))
        )
        n_qubits = len(self.rotation_kinds)
        for c, t in self.cnot_pairs:
            if c == t or not (0 <= c < n_qubits and 0 <= t < n_qubits):
                raise AnsatzError(f"bad CNOT pair ({c}, {t})")
        for kinds in self.rotation_kinds:
            for kind in kinds:
                if kind not in ROTATION_KINDS:
                    raise AnsatzError(f"unknown rotation kind {kind!r}")
        if not self.cnot_pairs:
            raise AnsatzError("entangling block requires CNOTs")
        if not _is_connected(n_qubits, self.cnot_pairs):
            raise AnsatzError("CNOT layer must connect all qubits")

    @property
    def n_params(self) -> int:
        return sum(len(kinds) for kinds in self.rotation_kinds)


@dataclass(frozen=True)
class AnsatzSpec:
    """Full template: encoding layer plus entangling blocks."""

    n_qubits: int
    encoding_kinds: tuple[str, ...]
    blocks: tuple[EntangledUnitary, ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(self, "encoding_kinds", tuple(self.encoding_kinds))
        if len(self.encoding_kinds) != self.n_qubits:
            raise AnsatzError("one encoding rotation per qubit expected")
        for block in self.blocks:
            if len(block.rotation_kinds) != self.n_qubits:
                raise AnsatzError("block qubit count mismatch")

    @property
    def n_features(self) -> int:
        return len(self.encoding_kinds)

    @property
    def n_params(self) -> int:
        return sum(block.n_params for block in self.blocks)


@dataclass(frozen=True)
class Variant:
    """A template with the CNOT layout of every block overridden."""

    base: AnsatzSpec
    variant_id: int
    cnot_layouts: tuple[tuple[tuple[int, int], ...], ...]  # one per block

    def __post_init__(self):
        layouts = tuple(tuple(map(tuple, layout)) for layout in self.cnot_layouts)
        object.__setattr__(self, "cnot_layouts", layouts)
        if len(layouts) != len(self.base.blocks):
            raise AnsatzError("one CNOT layout per block expected")
        for layout in layouts:
            if not layout:
                raise AnsatzError("variant must keep CNOT gates")
            if not _is_connected(self.base.n_qubits, layout):
                raise AnsatzError("variant CNOT layer must connect all qubits")

    @property
    def n_qubits(self) -> int:
        return self.base.n_qubits

    @property
    def n_params(self) -> int:
        return self.base.n_params

    @property
    def n_features(self) -> int:
        return self.base.n_features


def chain_pairs(order) -> tuple[tuple[int, int], ...]:
    """Linear CNOT chain following a qubit ordering."""
    order = tuple(order)
    return tuple((order[i], order[i + 1]) for i in range(len(order) - 1))


def all_pairs(n_qubits: int) -> tuple[tuple[int, int], ...]:
    """CNOTs over every qubit pair, for the all-connections layout option."""
    return tuple(itertools.combinations(range(n_qubits), 2))


def build_hea(n_qubits: int, n_blocks: int = 1, two_rotations: bool = False,
              layout: str = "chain") -> AnsatzSpec:
    """Default hardware-efficient template.

    ``layout`` is "chain" (linear CNOT chain) or "all" (every pair).
    ``two_rotations`` adds an RZ after each trainable RY.
    """
    if n_qubits < 2:
        raise AnsatzError("need at least 2 qubits to entangle")
    if n_blocks < 1:
        raise AnsatzError("need at least one entangling block")
    if layout == "chain":
        pairs = chain_pairs(range(n_qubits))
    elif layout == "all":
        pairs = all_pairs(n_qubits)
    else:
        raise AnsatzError(f"unknown layout {layout!r}")
    kinds = ("RY", "RZ") if two_rotations else ("RY",)
    block = EntangledUnitary(
        cnot_pairs=pairs, rotation_kinds=tuple(kinds for _ in range(n_qubits))
    )
    return AnsatzSpec(
        n_qubits=n_qubits,
        encoding_kinds=tuple("RY" for _ in range(n_qubits)),
        blocks=tuple(block for _ in range(n_blocks)),
    )


def base_variant(spec: AnsatzSpec) -> Variant:
    return Variant(
        base=spec,
        variant_id=0,
        cnot_layouts=tuple(block.cnot_pairs for block in spec.blocks),
    )


def n_chain_layouts(n_qubits: int) -> int:
    """Distinct chain layouts = orderings of the qubits."""
    return factorial(n_qubits)


def generate_variants(base: AnsatzSpec, k: int, seed: int) -> tuple[Variant, ...]:
    """k distinct variants of a template; variant 0 is the base layout.

    Layouts are CNOT chains over seeded qubit orderings, sampled without
    replacement.
    """
    if k < 1:
        raise AnsatzError("k must be >= 1")
    limit = n_chain_layouts(base.n_qubits)
    if k > limit:
        raise AnsatzError(
            f"only {limit} distinct chain layouts exist for "
            f"{base.n_qubits} qubits, requested {k}"
        )
    rng = np.random.default_rng(seed)
    base_order = tuple(range(base.n_qubits))
    orders = [base_order]
    seen = {base_order}
    while len(orders) < k:
        order = tuple(rng.permutation(base.n_qubits).tolist())
        if order not in seen:
            seen.add(order)
            orders.append(order)
    variants = []
    for vid, order in enumerate(orders):
        pairs = chain_pairs(order)
        variants.append(
            Variant(
                base=base,
                variant_id=vid,
                cnot_layouts=tuple(pairs for _ in base.blocks),
            )
        )
    return tuple(variants)


def embed_features(features) -> np.ndarray:
    """Map features in [0, 1] onto rotation angles in [0, pi]."""
    features = np.asarray(features, dtype=float)
    if features.size and (features.min() < 0.0 or features.max() > 1.0):
        raise AnsatzError("features must lie in [0, 1]")
    return pi * features


def variant_circuit(variant: Variant) -> Circuit:
    """Lower a variant to a flat gate sequence with angle slots."""
    spec = variant.base
    ops = [
        GateOp(kind=kind, target=q, feature_slot=q)
        for q, kind in enumerate(spec.encoding_kinds)
    ]
    slot = 0
    for block, layout in zip(spec.blocks, variant.cnot_layouts):
        for c, t in layout:
            ops.append(GateOp(kind="CNOT", target=t, control=c))
        for q, kinds in enumerate(block.rotation_kinds):
            for kind in kinds:
                ops.append(GateOp(kind=kind, target=q, param_slot=slot))
                slot += 1
    return Circuit(
        n_qubits=spec.n_qubits,
        ops=tuple(ops),
        n_params=slot,
        n_features=spec.n_features,
    )


def spec_to_dict(spec: AnsatzSpec) -> dict:
    return {
        "n_qubits": spec.n_qubits,
        "encoding_kinds": list(spec.encoding_kinds),
        "blocks": [
            {
                "cnot_pairs": [list(p) for p in block.cnot_pairs],
                "rotation_kinds": [list(k) for k in block.rotation_kinds],
            }
            for block in spec.blocks
        ],
    }


def spec_from_dict(data: dict) -> AnsatzSpec:
    return AnsatzSpec(
        n_qubits=data["n_qubits"],
        encoding_kinds=tuple(data["encoding_kinds"]),
        blocks=tuple(
            EntangledUnitary(
                cnot_pairs=tuple(tuple(p) for p in block["cnot_pairs"]),
                rotation_kinds=tuple(tuple(k) for k in block["rotation_kinds"]),
            )
            for block in data["blocks"]
        ),
    )


def variant_to_dict(variant: Variant) -> dict:
    return {
        "base": spec_to_dict(variant.base),
        "variant_id": variant.variant_id,
        "cnot_layouts": [[list(p) for p in layout] for layout in variant.cnot_layouts],
    }


def variant_from_dict(data: dict) -> Variant:
    return Variant(
        base=spec_from_dict(data["base"]),
        variant_id=data["variant_id"],
        cnot_layouts=tuple(
            tuple(tuple(p) for p in layout) for layout in data["cnot_layouts"]
        ),
    )


def save_variant(variant: Variant, path: str | Path) -> None:
    Path(path).write_text(json.dumps(variant_to_dict(variant), indent=2))


def load_variant(path: str | Path) -> Variant:
    return variant_from_dict(json.loads(Path(path).read_text()))
