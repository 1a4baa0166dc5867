"""
Dense statevector execution engine.

Gates are applied in place by pairing amplitudes that differ in one bit
(stride ``2**q``); no full-circuit matrix is ever formed.  Circuits without
mid-circuit operations or noise are evolved once and sampled; everything
else runs as per-shot trajectories that are batched while shots share the
same history (same measurement outcomes and Pauli insertions).
"""
from __future__ import annotations

import math
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

from . import gates
from .circuit import (Circuit, GateKind, Instruction, readout_string, require_valid,
                      terminal_measurements)
from .sampling import sample_indices

if TYPE_CHECKING:
    from .noise import NoiseModel

SHOT_BLOCK = 1024  # shots per independent RNG stream in trajectory mode


@dataclass(frozen=True)
class SimulatorConfig:
    max_qubits: int = 26
    exact_max_qubits: int = 12
    exact_max_mcm: int = 16


DEFAULT_CONFIG = SimulatorConfig()


class CapacityError(RuntimeError):
    """Width or branch budget exceeds the configured cap."""


class CollapseError(RuntimeError):
    """Measurement selected an outcome with (numerically) zero probability."""


# ------------------------------------------------------------------ kernels

def num_qubits_of(amps: np.ndarray) -> int:
    n = amps.shape[-1].bit_length() - 1
    if 1 << n != amps.shape[-1]:
        raise ValueError("amplitude array length must be a power of two")
    return n


def pair_views(amps: np.ndarray, q: int):
    v = amps.reshape(-1, 2, 1 << q)
    return v[:, 0, :], v[:, 1, :]


def quad_view(amps: np.ndarray, qa: int, qb: int, n: int):
    """Return f(ba, bb) giving the view of amplitudes with bit qa=ba and qb=bb."""
    lo, hi = (qa, qb) if qa < qb else (qb, qa)
    v = amps.reshape(1 << (n - hi - 1), 2, 1 << (hi - lo - 1), 2, 1 << lo)

    def sub(ba, bb):
        blo, bhi = (ba, bb) if qa < qb else (bb, ba)
        return v[:, bhi, :, blo, :]

    return sub


def mix(a0: np.ndarray, a1: np.ndarray, u: np.ndarray) -> None:
    """In-place 2x2 update of paired amplitude arrays."""
    n0 = u[0, 0] * a0 + u[0, 1] * a1
    n1 = u[1, 0] * a0 + u[1, 1] * a1
    a0[...] = n0
    a1[...] = n1


def swap_arrays(a: np.ndarray, b: np.ndarray) -> None:
    tmp = a.copy()
    a[...] = b
    b[...] = tmp


def apply_matrix_1q(amps: np.ndarray, q: int, u: np.ndarray) -> None:
    a0, a1 = pair_views(amps, q)
    if u[0, 1] == 0 and u[1, 0] == 0:
        if u[0, 0] != 1:
            a0 *= u[0, 0]
        if u[1, 1] != 1:
            a1 *= u[1, 1]
    elif u[0, 0] == 0 and u[1, 1] == 0 and u[0, 1] == 1 and u[1, 0] == 1:
        swap_arrays(a0, a1)
    else:
        mix(a0, a1, u)


def apply_diag_2q(amps: np.ndarray, qa: int, qb: int, diag: Sequence[complex], n: int) -> None:
    sub = quad_view(amps, qa, qb, n)
    for k, d in enumerate(diag):
        if d != 1:
            sub(k & 1, k >> 1)[...] *= d


def apply_matrix_2q(amps: np.ndarray, qa: int, qb: int, m: np.ndarray, n: int) -> None:
    sub = quad_view(amps, qa, qb, n)
    views = [sub(k & 1, k >> 1) for k in range(4)]
    new = [sum(m[r, k] * views[k] for k in range(4) if m[r, k] != 0) for r in range(4)]
    for r in range(4):
        if isinstance(new[r], int):
            views[r][...] = 0
        else:
            views[r][...] = new[r]


def apply_unitary(amps: np.ndarray, inst: Instruction) -> None:
    """Apply the unitary of ``inst`` (condition NOT checked) to ``amps`` in place."""
    n = num_qubits_of(amps)
    for q in inst.qubits:
        if not 0 <= q < n:
            raise IndexError(f"qubit {q} out of range for {n}-qubit state")
    kind = inst.kind
    if kind.arity == 1:
        if kind is GateKind.X:
            swap_arrays(*pair_views(amps, inst.qubits[0]))
        elif kind is GateKind.RZ:
            a0, a1 = pair_views(amps, inst.qubits[0])
            a0 *= complex(math.cos(inst.angle / 2), -math.sin(inst.angle / 2))
            a1 *= complex(math.cos(inst.angle / 2), math.sin(inst.angle / 2))
        elif kind.unitary:
            mix(*pair_views(amps, inst.qubits[0]), gates.matrix(inst))
        else:
            raise ValueError(f"{kind.value} is not unitary")
        return
    qa, qb = inst.qubits
    sub = quad_view(amps, qa, qb, n)
    if kind is GateKind.CX:
        swap_arrays(sub(1, 0), sub(1, 1))
    elif kind is GateKind.CZ:
        sub(1, 1)[...] *= -1
    elif kind is GateKind.CP:
        sub(1, 1)[...] *= complex(math.cos(inst.angle), math.sin(inst.angle))
    elif kind is GateKind.SWAP:
        swap_arrays(sub(0, 1), sub(1, 0))
    else:
        raise ValueError(f"unsupported two-qubit kind {kind.value}")


def condition_met(inst: Instruction, clbits: Sequence[int]) -> bool:
    if inst.condition is None:
        return True
    bit, value = inst.condition
    return int(clbits[bit]) == value


def prob_one(amps: np.ndarray, q: int) -> float:
    _, a1 = pair_views(amps, q)
    return float(np.vdot(a1, a1).real)


def project(amps: np.ndarray, q: int, bit: int, prob: float) -> None:
    a0, a1 = pair_views(amps, q)
    (a1 if bit == 0 else a0)[...] = 0
    amps *= 1 / math.sqrt(prob)


# -------------------------------------------------------------- state object

class StateVector:
    """Dense amplitude array for ``n`` qubits; single owner, mutated in place."""

    __slots__ = ("n", "amplitudes")

    def __init__(self, n: int, amplitudes: np.ndarray | None = None):
        self.n = n
        if amplitudes is None:
            amplitudes = np.zeros(1 << n, dtype=np.complex128)
            amplitudes[0] = 1
        elif amplitudes.shape != (1 << n,):
            raise ValueError("amplitude length does not match qubit count")
        self.amplitudes = amplitudes

    @classmethod
    def basis(cls, n: int, index: int = 0) -> "StateVector":
        amps = np.zeros(1 << n, dtype=np.complex128)
        amps[index] = 1
        return cls(n, amps)

    def copy(self) -> "StateVector":
        return StateVector(self.n, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def __repr__(self) -> str:
        return f"StateVector(n={self.n})"


def apply_gate(state: StateVector, instruction: Instruction, classical_bits: Sequence[int] = ()) -> StateVector:
    if not instruction.kind.unitary:
        raise ValueError("apply_gate takes unitary instructions only")
    if condition_met(instruction, classical_bits):
        apply_unitary(state.amplitudes, instruction)
    return state


def measure_qubit(state: StateVector, q: int, rng: np.random.Generator) -> tuple[int, StateVector]:
    """Projective Z measurement of qubit ``q``; bit is 1 when ``rng.random() < P(1)``."""
    p1 = prob_one(state.amplitudes, q)
    bit = int(rng.random() < p1)
    p = p1 if bit else state.norm() - p1
    if p < 1e-12:
        raise CollapseError(f"outcome {bit} on qubit {q} has probability {p:.3g}")
    project(state.amplitudes, q, bit, p)
    return bit, state


def evolve(circuit: Circuit, state: StateVector | None = None) -> StateVector:
    """Apply the unitary part of a circuit that has no mid-circuit operations."""
    if circuit.is_dynamic():
        raise ValueError("evolve() needs a circuit without mid-circuit measurement or reset")
    state = state or StateVector(circuit.num_qubits)
    for inst in circuit.instructions:
        if inst.kind.unitary:
            apply_unitary(state.amplitudes, inst)
    return state


# ------------------------------------------------------------------- counts

@dataclass
class Counts:
    counts: dict[str, int]
    shots: int
    seed: int | None = None
    times: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.counts = dict(sorted(self.counts.items()))
        widths = {len(k) for k in self.counts}
        if len(widths) > 1:
            raise ValueError("counts keys must share one width")
        if sum(self.counts.values()) != self.shots:
            raise ValueError("counts do not sum to shots")

    @property
    def width(self) -> int:
        return len(next(iter(self.counts))) if self.counts else 0

    def probabilities(self) -> dict[str, float]:
        return {k: v / self.shots for k, v in self.counts.items()}

    def merge(self, other: "Counts") -> "Counts":
        merged = Counter(self.counts)
        merged.update(other.counts)
        return Counts(dict(merged), self.shots + other.shots, self.seed)

    def to_dict(self) -> dict:
        return {"counts": self.counts, "shots": self.shots, "seed": self.seed, "times": self.times}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Counts":
        return cls(dict(d["counts"]), int(d["shots"]), d.get("seed"), dict(d.get("times", {})))


# ---------------------------------------------------------------- execution

def _check_width(circuit: Circuit, cap: int) -> None:
    if circuit.num_qubits > cap:
        raise CapacityError(f"{circuit.num_qubits} qubits exceeds the {cap}-qubit cap")


def _terminal_map(circuit: Circuit) -> list[tuple[int, int]]:
    term = terminal_measurements(circuit)
    return [(circuit.instructions[i].qubits[0], circuit.instructions[i].clbit) for i in sorted(term)]


def decode_readout(indices: np.ndarray, qc_map: Sequence[tuple[int, int]], base: int = 0) -> np.ndarray:
    out = np.full(indices.shape, base, dtype=np.int64)
    for q, c in qc_map:
        out = (out & ~(1 << c)) | (((indices >> q) & 1) << c)
    return out


def _counts_from_values(values: np.ndarray, width: int) -> dict[str, int]:
    uniq, cnt = np.unique(values, return_counts=True)
    return {readout_string(int(v), width): int(k) for v, k in zip(uniq, cnt)}


def shot_uniforms(seed: int, shots: int, ndraws: int) -> np.ndarray:
    """Per-shot uniform draws; shot block ``b`` uses the spawned child stream ``b`` of ``seed``."""
    out = np.empty((shots, ndraws))
    for b, start in enumerate(range(0, shots, SHOT_BLOCK)):
        stop = min(start + SHOT_BLOCK, shots)
        stream = np.random.SeedSequence(seed, spawn_key=(b,))
        out[start:stop] = np.random.default_rng(stream).random((stop - start, ndraws))
    return out


def run_shots(circuit: Circuit, shots: int, seed: int, noise: "NoiseModel | None" = None, *,
              method: str = "auto", config: SimulatorConfig = DEFAULT_CONFIG) -> Counts:
    """Execute ``shots`` repetitions; returns counts with a ``times`` record.

    ``method`` is ``"statevector"`` (single evolution + sampling), ``"trajectory"``
    or ``"auto"`` (trajectories only when noise or mid-circuit operations require them).
    """
    t_start = time.perf_counter()
    require_valid(circuit)
    _check_width(circuit, config.max_qubits)
    if shots < 0:
        raise ValueError("shots must be non-negative")
    if noise is not None and noise.is_trivial():
        noise = None
    dynamic = circuit.is_dynamic()
    if method == "auto":
        method = "trajectory" if (noise is not None or dynamic) else "statevector"
    t_exec = time.perf_counter()
    if method == "statevector":
        if noise is not None or dynamic:
            raise ValueError("statevector sampling needs a noiseless circuit without mid-circuit operations")
        probs = evolve(circuit).probabilities()
        u = np.random.default_rng(seed).random(shots)
        values = decode_readout(sample_indices(probs, u), _terminal_map(circuit))
    elif method == "trajectory":
        values = _run_trajectories(circuit, shots, seed, noise)
    else:
        raise ValueError(f"unknown method {method!r}")
    t_done = time.perf_counter()
    counts = _counts_from_values(values, circuit.num_clbits)
    return Counts(counts, shots, seed, {
        "execution_time": t_done - t_exec,
        "elapsed_time": time.perf_counter() - t_start,
    })


class _Group:
    __slots__ = ("amps", "clbits", "shots")

    def __init__(self, amps, clbits, shots):
        self.amps = amps
        self.clbits = clbits
        self.shots = shots


def _compile_plan(circuit: Circuit, noise):
    """Flatten the circuit into steps with fixed per-shot draw columns."""
    term = terminal_measurements(circuit)
    placement = noise.placement_for(circuit) if noise is not None else None
    plan = []
    col = 0
    for i, inst in enumerate(circuit.instructions):
        if inst.kind is GateKind.MEASURE:
            if i not in term:
                plan.append(("measure", inst, col, None))
                col += 1
        elif inst.kind is GateKind.RESET:
            plan.append(("reset", inst, col, None))
            col += 1
        else:
            plan.append(("gate", inst, None, None))
            if noise is not None and noise.is_noisy(inst):
                channel = noise.channel(inst, placement)
                plan.append(("noise", inst, col, channel))
                col += channel.num_draws
    final_col = None
    if term:
        final_col = col
        col += 1
    return plan, col, final_col


def _run_trajectories(circuit: Circuit, shots: int, seed: int, noise) -> np.ndarray:
    plan, ndraws, final_col = _compile_plan(circuit, noise)
    draws = shot_uniforms(seed, shots, ndraws)
    amps0 = np.zeros(1 << circuit.num_qubits, dtype=np.complex128)
    amps0[0] = 1
    groups = [_Group(amps0, np.zeros(circuit.num_clbits, dtype=np.int8), np.arange(shots))]
    for step, inst, col, channel in plan:
        if step == "gate":
            for g in groups:
                if condition_met(inst, g.clbits):
                    apply_unitary(g.amps, inst)
        elif step == "noise":
            nxt = []
            for g in groups:
                if not condition_met(inst, g.clbits):
                    nxt.append(g)
                    continue
                channel.apply_coherent(g.amps)
                flips = draws[g.shots, col:col + channel.num_draws] < channel.flip_probs
                if not flips.any():
                    channel.apply_crosstalk(g.amps)
                    nxt.append(g)
                    continue
                keys = flips @ (1 << np.arange(channel.num_draws, dtype=np.int64))
                uniq, inverse = np.unique(keys, return_inverse=True)
                # key 0 (no flip) sorts first; handle it last so copies see the pre-crosstalk state
                for j in range(len(uniq) - 1, -1, -1):
                    key = uniq[j]
                    members = g.shots[inverse == j]
                    amps = g.amps if key == 0 else g.amps.copy()
                    if key:
                        channel.apply_flips(amps, int(key))
                    channel.apply_crosstalk(amps)
                    nxt.append(_Group(amps, g.clbits if key == 0 else g.clbits.copy(), members))
            groups = nxt
        else:  # measure / reset
            q = inst.qubits[0]
            nxt = []
            for g in groups:
                p1 = prob_one(g.amps, q)
                ones = draws[g.shots, col] < p1
                outcomes = [(bit, g.shots[sel]) for bit, sel in ((0, ~ones), (1, ones)) if sel.any()]
                for k, (bit, members) in enumerate(outcomes):
                    p = p1 if bit else 1.0 - p1
                    if p < 1e-12:
                        raise CollapseError(f"outcome {bit} on qubit {q} has probability {p:.3g}")
                    amps = g.amps if k == len(outcomes) - 1 else g.amps.copy()
                    project(amps, q, bit, p)
                    clbits = g.clbits.copy()
                    if step == "measure":
                        clbits[inst.clbit] = bit
                    elif bit:
                        swap_arrays(*pair_views(amps, q))
                    nxt.append(_Group(amps, clbits, members))
            groups = nxt
    term_map = _terminal_map(circuit)
    term_clbits = {c for _, c in term_map}
    values = np.empty(shots, dtype=np.int64)
    for g in groups:
        base = sum(int(b) << c for c, b in enumerate(g.clbits) if c not in term_clbits)
        if final_col is None:
            values[g.shots] = base
            continue
        cdf = np.cumsum(np.abs(g.amps) ** 2)
        u = draws[g.shots, final_col] * cdf[-1]
        idx = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
        values[g.shots] = decode_readout(idx, term_map, base)
    return values


# -------------------------------------------------------- exact distribution

def exact_distribution(circuit: Circuit, config: SimulatorConfig = DEFAULT_CONFIG) -> dict[str, float]:
    """Readout distribution by enumerating every mid-circuit measurement branch."""
    require_valid(circuit)
    _check_width(circuit, config.exact_max_qubits)
    term = terminal_measurements(circuit)
    n_mcm = sum(1 for i, inst in enumerate(circuit.instructions)
                if (inst.kind is GateKind.MEASURE and i not in term) or inst.kind is GateKind.RESET)
    if n_mcm > config.exact_max_mcm:
        raise CapacityError(f"{n_mcm} mid-circuit measurements exceed the branch budget {config.exact_max_mcm}")
    amps0 = np.zeros(1 << circuit.num_qubits, dtype=np.complex128)
    amps0[0] = 1
    branches = [(amps0, np.zeros(circuit.num_clbits, dtype=np.int8), 1.0)]
    for i, inst in enumerate(circuit.instructions):
        if inst.kind.unitary:
            for amps, clbits, _ in branches:
                if condition_met(inst, clbits):
                    apply_unitary(amps, inst)
            continue
        if inst.kind is GateKind.MEASURE and i in term:
            continue
        q = inst.qubits[0]
        nxt = []
        for amps, clbits, w in branches:
            p1 = prob_one(amps, q)
            for bit, p in ((0, 1.0 - p1), (1, p1)):
                if p < 1e-14:
                    continue
                a = amps.copy()
                project(a, q, bit, p)
                cb = clbits.copy()
                if inst.kind is GateKind.MEASURE:
                    cb[inst.clbit] = bit
                elif bit:
                    swap_arrays(*pair_views(a, q))
                nxt.append((a, cb, w * p))
        branches = nxt
    term_map = _terminal_map(circuit)
    term_clbits = {c for _, c in term_map}
    dist: dict[int, float] = {}
    index = np.arange(1 << circuit.num_qubits, dtype=np.int64)
    for amps, clbits, w in branches:
        base = sum(int(b) << c for c, b in enumerate(clbits) if c not in term_clbits)
        probs = np.abs(amps) ** 2 * w
        values = decode_readout(index, term_map, base)
        uniq, inverse = np.unique(values, return_inverse=True)
        sums = np.bincount(inverse, weights=probs)
        for v, p in zip(uniq, sums):
            dist[int(v)] = dist.get(int(v), 0.0) + float(p)
    total = sum(dist.values())
    return {readout_string(v, circuit.num_clbits): p / total for v, p in sorted(dist.items()) if p > 0}


def total_variation(p: Mapping[str, float], q: Mapping[str, float]) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
