"""
Post-gate error channels built from elementary error generators.

Each noisy gate ``G`` is followed by ``exp(L)`` with
``L = sum_P h_P H_P + sum_P s_P S_P`` over the non-identity Paulis of the
gate's width.  In trajectory form the channel is realised as: the coherent
unitary ``exp(-i sum_P h_P P)``, then independent Pauli insertions with
probability ``(1 - exp(-2 s_P)) / 2``, then (for CX with crosstalk enabled)
``exp(-i h_ZZ Z Z)`` between each gate qubit and each of its placed grid
neighbours.  RZ is error-free.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import gates
from .circuit import Circuit, GateKind, Instruction
from .simulator import StateVector, apply_diag_2q, apply_matrix_1q, apply_matrix_2q, num_qubits_of
from .topology import GridTopology

NOISY_KINDS = (GateKind.X, GateKind.SX, GateKind.CX)


def pauli_labels(width: int) -> list[str]:
    """All ``4**width - 1`` non-identity labels; character ``k`` acts on the gate's ``k``-th qubit."""
    return ["".join(p) for p in itertools.product("IXYZ", repeat=width) if set(p) != {"I"}]


def flip_probability(rate: float) -> float:
    return (1.0 - math.exp(-2.0 * rate)) / 2.0


@dataclass(frozen=True)
class NoiseSpec:
    sigma_h: float = 5e-4
    s_max: float = 5e-4
    h_zz: float = 1e-2
    crosstalk: bool = False

    def __post_init__(self):
        if min(self.sigma_h, self.s_max, self.h_zz) < 0:
            raise ValueError("noise spec rates must be non-negative")

    def to_dict(self) -> dict:
        return {"sigma_h": self.sigma_h, "s_max": self.s_max, "h_zz": self.h_zz, "crosstalk": self.crosstalk}

    @classmethod
    def from_dict(cls, d: Mapping) -> "NoiseSpec":
        return cls(float(d.get("sigma_h", 5e-4)), float(d.get("s_max", 5e-4)),
                   float(d.get("h_zz", 1e-2)), bool(d.get("crosstalk", False)))


@dataclass(frozen=True)
class ErrorGenerator:
    width: int
    hamiltonian: Mapping[str, float]
    stochastic: Mapping[str, float]

    def __post_init__(self):
        for label in list(self.hamiltonian) + list(self.stochastic):
            if len(label) != self.width or set(label) <= {"I"}:
                raise ValueError(f"bad Pauli label {label!r} for width {self.width}")
        rates = list(self.hamiltonian.values()) + list(self.stochastic.values())
        if not all(math.isfinite(r) for r in rates):
            raise ValueError("error rates must be finite")
        if any(s < 0 for s in self.stochastic.values()):
            raise ValueError("stochastic rates must be non-negative")
        if sum(self.stochastic.values()) >= 0.1:
            raise ValueError("stochastic rates outside the small-rate regime (sum >= 0.1)")

    @classmethod
    def zero(cls, width: int) -> "ErrorGenerator":
        labels = pauli_labels(width)
        return cls(width, {p: 0.0 for p in labels}, {p: 0.0 for p in labels})

    def is_zero(self) -> bool:
        return not any(self.hamiltonian.values()) and not any(self.stochastic.values())

    def to_dict(self) -> dict:
        return {"width": self.width, "hamiltonian": dict(self.hamiltonian), "stochastic": dict(self.stochastic)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "ErrorGenerator":
        return cls(int(d["width"]), dict(d["hamiltonian"]), dict(d["stochastic"]))


def coherent_error_unitary(gen: ErrorGenerator) -> np.ndarray:
    """``exp(-i sum_P h_P P)`` by Hermitian eigendecomposition."""
    dim = 1 << gen.width
    ham = np.zeros((dim, dim), dtype=complex)
    for label, h in gen.hamiltonian.items():
        if h:
            ham += h * gates.pauli_matrix(label)
    if not ham.any():
        return np.eye(dim, dtype=complex)
    evals, evecs = np.linalg.eigh(ham)
    return (evecs * np.exp(-1j * evals)) @ evecs.conj().T


def zz_diagonal(h_zz: float) -> tuple[complex, complex, complex, complex]:
    a, b = complex(math.cos(h_zz), -math.sin(h_zz)), complex(math.cos(h_zz), math.sin(h_zz))
    return (a, b, b, a)


class PostGateChannel:
    """Error channel for one placed instruction, ready for trajectory sampling."""

    def __init__(self, qubits: Sequence[int], gen: ErrorGenerator, crosstalk_pairs=(), h_zz: float = 0.0):
        self.qubits = tuple(qubits)
        self.labels = pauli_labels(gen.width)
        self.flip_probs = np.array([flip_probability(gen.stochastic.get(p, 0.0)) for p in self.labels])
        self.coherent = None if not any(gen.hamiltonian.values()) else coherent_error_unitary(gen)
        self.crosstalk_pairs = list(crosstalk_pairs) if h_zz else []
        self.zz = zz_diagonal(h_zz)

    @property
    def num_draws(self) -> int:
        return len(self.labels)

    def apply_coherent(self, amps: np.ndarray) -> None:
        if self.coherent is None:
            return
        if len(self.qubits) == 1:
            apply_matrix_1q(amps, self.qubits[0], self.coherent)
        else:
            apply_matrix_2q(amps, self.qubits[0], self.qubits[1], self.coherent, num_qubits_of(amps))

    def apply_flips(self, amps: np.ndarray, key: int) -> None:
        """Insert the Paulis whose bit is set in ``key``."""
        j = 0
        while key:
            if key & 1:
                for q, ch in zip(self.qubits, self.labels[j]):
                    if ch != "I":
                        apply_matrix_1q(amps, q, gates.PAULI[ch])
            key >>= 1
            j += 1

    def apply_crosstalk(self, amps: np.ndarray) -> None:
        if not self.crosstalk_pairs:
            return
        n = num_qubits_of(amps)
        for qa, qb in self.crosstalk_pairs:
            apply_diag_2q(amps, qa, qb, self.zz, n)


@dataclass(frozen=True)
class NoiseModel:
    generators: Mapping[GateKind, ErrorGenerator]
    h_zz: float = 0.0
    crosstalk: bool = False
    topology: GridTopology | None = None
    placement: tuple[int, ...] | None = None
    seed: int | None = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if GateKind.RZ in self.generators:
            raise ValueError("RZ carries no error generator")
        if self.h_zz < 0:
            raise ValueError("crosstalk rate must be non-negative")
        if self.crosstalk and self.topology is None:
            raise ValueError("crosstalk needs a topology")

    @classmethod
    def noiseless(cls) -> "NoiseModel":
        return cls({GateKind.X: ErrorGenerator.zero(1), GateKind.SX: ErrorGenerator.zero(1),
                    GateKind.CX: ErrorGenerator.zero(2)})

    def is_trivial(self) -> bool:
        return all(g.is_zero() for g in self.generators.values()) and not (self.crosstalk and self.h_zz)

    def is_noisy(self, inst: Instruction) -> bool:
        return inst.kind in self.generators

    def with_placement(self, placement: Sequence[int]) -> "NoiseModel":
        return NoiseModel(self.generators, self.h_zz, self.crosstalk, self.topology, tuple(placement), self.seed)

    def placement_for(self, circuit: Circuit) -> tuple[int, ...] | None:
        if not self.crosstalk:
            return None
        if self.placement is not None:
            placement = self.placement
        elif "physical_nodes" in circuit.metadata:
            placement = tuple(json.loads(circuit.metadata["physical_nodes"]))
        else:
            placement = tuple(range(circuit.num_qubits))
        if len(placement) < circuit.num_qubits or max(placement, default=0) >= self.topology.num_nodes:
            raise ValueError("circuit qubits are not placed on the topology")
        return placement

    def crosstalk_pairs(self, inst: Instruction, placement: Sequence[int] | None) -> list[tuple[int, int]]:
        if not (self.crosstalk and inst.kind is GateKind.CX):
            return []
        if placement is None:
            raise ValueError("crosstalk needs a placement")
        for q in inst.qubits:
            if q >= len(placement):
                raise ValueError(f"qubit {q} is not placed on the topology")
        node_to_slot = {node: slot for slot, node in enumerate(placement)}
        pairs = []
        for q in inst.qubits:
            for nb in self.topology.neighbors(placement[q]):
                slot = node_to_slot.get(nb)
                if slot is not None and slot not in inst.qubits:
                    pairs.append((q, slot))
        return pairs

    def channel(self, inst: Instruction, placement: Sequence[int] | None = None) -> PostGateChannel:
        key = (inst.kind, inst.qubits, tuple(placement) if placement is not None else None)
        ch = self._cache.get(key)
        if ch is None:
            ch = PostGateChannel(inst.qubits, self.generators[inst.kind],
                                 self.crosstalk_pairs(inst, placement), self.h_zz if self.crosstalk else 0.0)
            self._cache[key] = ch
        return ch

    def to_dict(self) -> dict:
        return {
            "generators": {k.value: g.to_dict() for k, g in self.generators.items()},
            "h_zz": self.h_zz,
            "crosstalk": self.crosstalk,
            "topology": [self.topology.rows, self.topology.cols] if self.topology else None,
            "placement": list(self.placement) if self.placement is not None else None,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "NoiseModel":
        topo = GridTopology(*d["topology"]) if d.get("topology") else None
        return cls(
            {GateKind(k): ErrorGenerator.from_dict(g) for k, g in d["generators"].items()},
            float(d.get("h_zz", 0.0)), bool(d.get("crosstalk", False)), topo,
            tuple(d["placement"]) if d.get("placement") is not None else None, d.get("seed"),
        )


def sample_noise_model(spec: NoiseSpec, topology: GridTopology | None, seed: int) -> NoiseModel:
    """Draw ``h_P ~ N(0, sigma_h^2)`` and ``s_P ~ U[0, s_max]`` once per noisy gate kind."""
    rng = np.random.default_rng(seed)
    generators = {}
    for kind in NOISY_KINDS:
        labels = pauli_labels(kind.arity)
        h = rng.normal(0.0, spec.sigma_h, len(labels)) if spec.sigma_h > 0 else np.zeros(len(labels))
        s = rng.uniform(0.0, spec.s_max, len(labels)) if spec.s_max > 0 else np.zeros(len(labels))
        generators[kind] = ErrorGenerator(kind.arity, dict(zip(labels, map(float, h))), dict(zip(labels, map(float, s))))
    return NoiseModel(generators, spec.h_zz if spec.crosstalk else 0.0, spec.crosstalk,
                      topology if spec.crosstalk or topology is not None else None, None, seed)


def apply_post_gate_error(state: StateVector, gate: Instruction, model: NoiseModel,
                          rng: np.random.Generator, placement: Sequence[int] | None = None) -> StateVector:
    """Apply the error channel that follows ``gate`` (already applied) on one trajectory."""
    if not model.is_noisy(gate):
        return state
    if model.crosstalk and placement is None:
        placement = model.placement if model.placement is not None else tuple(range(state.n))
    ch = model.channel(gate, placement)
    ch.apply_coherent(state.amplitudes)
    flips = rng.random(ch.num_draws) < ch.flip_probs
    key = int(flips @ (1 << np.arange(ch.num_draws)))
    if key:
        ch.apply_flips(state.amplitudes, key)
    ch.apply_crosstalk(state.amplitudes)
    return state
