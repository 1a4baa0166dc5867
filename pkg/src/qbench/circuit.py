"""
Circuit IR shared by every stage of the pipeline.

Contains:
    - GateKind: the closed gate vocabulary
    - Instruction: one gate / measurement / reset, optionally classically conditioned
    - Circuit: immutable instruction list plus widths and string metadata
    - CircuitBuilder: mutable helper used by the generators
    - validate / algorithmic_depth
    - JSON (de)serialization

Qubit ``q`` is bit ``q`` of a basis-state index (little-endian).  Classical
readout strings put bit ``c_i`` at string position ``i`` counted from the
right, so ``int(bitstring, 2)`` recovers the register value.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Mapping


class GateKind(Enum):
    H = "h"
    X = "x"
    SX = "sx"
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    CX = "cx"
    CZ = "cz"
    CP = "cp"
    SWAP = "swap"
    MEASURE = "measure"
    RESET = "reset"

    @property
    def arity(self) -> int:
        return 2 if self in TWO_QUBIT else 1

    @property
    def parametric(self) -> bool:
        return self in PARAMETRIC

    @property
    def unitary(self) -> bool:
        return self not in (GateKind.MEASURE, GateKind.RESET)


TWO_QUBIT = frozenset({GateKind.CX, GateKind.CZ, GateKind.CP, GateKind.SWAP})
PARAMETRIC = frozenset({GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.CP})
# kinds allowed to carry a classical condition
CONDITIONABLE = frozenset({GateKind.H, GateKind.X, GateKind.SX, GateKind.RX, GateKind.RY, GateKind.RZ})
# diagonal in the computational basis
DIAGONAL = frozenset({GateKind.RZ, GateKind.CZ, GateKind.CP})


@dataclass(frozen=True)
class Instruction:
    kind: GateKind
    qubits: tuple[int, ...]
    angle: float | None = None
    clbit: int | None = None
    condition: tuple[int, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.angle is not None:
            object.__setattr__(self, "angle", float(self.angle))
        if self.condition is not None:
            bit, value = self.condition
            object.__setattr__(self, "condition", (int(bit), int(value)))

    def __str__(self) -> str:
        s = self.kind.value
        if self.angle is not None:
            s += f"({self.angle:.6g})"
        s += " " + ",".join(f"q{q}" for q in self.qubits)
        if self.clbit is not None:
            s += f" -> c{self.clbit}"
        if self.condition is not None:
            s += f" if c{self.condition[0]}=={self.condition[1]}"
        return s


@dataclass(frozen=True)
class Circuit:
    name: str
    num_qubits: int
    num_clbits: int
    instructions: tuple[Instruction, ...]
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        object.__setattr__(self, "metadata", MappingProxyType({str(k): str(v) for k, v in dict(self.metadata).items()}))

    def __len__(self) -> int:
        return len(self.instructions)

    def __iter__(self):
        return iter(self.instructions)

    def count(self, kind: GateKind) -> int:
        return sum(1 for inst in self.instructions if inst.kind is kind)

    def two_qubit_count(self) -> int:
        return sum(1 for inst in self.instructions if len(inst.qubits) == 2)

    def measure_count(self) -> int:
        return self.count(GateKind.MEASURE)

    def with_metadata(self, **extra) -> "Circuit":
        meta = dict(self.metadata)
        meta.update({k: str(v) for k, v in extra.items()})
        return Circuit(self.name, self.num_qubits, self.num_clbits, self.instructions, meta)

    def is_dynamic(self) -> bool:
        """True if the circuit needs trajectory execution (MCM, reset or feed-forward)."""
        return bool(mid_circuit_ops(self))

    def __str__(self) -> str:
        head = f"Circuit {self.name!r}: {self.num_qubits} qubits, {self.num_clbits} clbits"
        return "\n".join([head] + [f"  {i:4d}  {inst}" for i, inst in enumerate(self.instructions)])


class CircuitBuilder:
    """Append-only builder; ``build()`` freezes into a :class:`Circuit`."""

    def __init__(self, num_qubits: int, num_clbits: int = 0, name: str = "circuit", **metadata):
        self.num_qubits = num_qubits
        self.num_clbits = num_clbits
        self.name = name
        self.metadata = {k: str(v) for k, v in metadata.items()}
        self._ops: list[Instruction] = []

    def append(self, kind: GateKind, qubits: Iterable[int], angle: float | None = None,
               clbit: int | None = None, condition: tuple[int, int] | None = None) -> "CircuitBuilder":
        self._ops.append(Instruction(kind, tuple(qubits), angle, clbit, condition))
        return self

    def extend(self, instructions: Iterable[Instruction]) -> "CircuitBuilder":
        self._ops.extend(instructions)
        return self

    def h(self, q, condition=None):
        return self.append(GateKind.H, (q,), condition=condition)

    def x(self, q, condition=None):
        return self.append(GateKind.X, (q,), condition=condition)

    def sx(self, q, condition=None):
        return self.append(GateKind.SX, (q,), condition=condition)

    def rx(self, theta, q, condition=None):
        return self.append(GateKind.RX, (q,), theta, condition=condition)

    def ry(self, theta, q, condition=None):
        return self.append(GateKind.RY, (q,), theta, condition=condition)

    def rz(self, theta, q, condition=None):
        return self.append(GateKind.RZ, (q,), theta, condition=condition)

    def cx(self, control, target):
        return self.append(GateKind.CX, (control, target))

    def cz(self, a, b):
        return self.append(GateKind.CZ, (a, b))

    def cp(self, lam, control, target):
        return self.append(GateKind.CP, (control, target), lam)

    def swap(self, a, b):
        return self.append(GateKind.SWAP, (a, b))

    def measure(self, q, c):
        return self.append(GateKind.MEASURE, (q,), clbit=c)

    def reset(self, q):
        return self.append(GateKind.RESET, (q,))

    def build(self) -> Circuit:
        return Circuit(self.name, self.num_qubits, self.num_clbits, tuple(self._ops), self.metadata)


# ---------------------------------------------------------------- validation

@dataclass(frozen=True)
class Violation:
    index: int
    reason: str
    detail: str = ""


def validate(circuit: Circuit) -> list[Violation]:
    """Return every invariant violation; an empty list means the circuit is valid."""
    out: list[Violation] = []
    measured = [False] * circuit.num_qubits
    written = [False] * circuit.num_clbits
    pending = [False] * circuit.num_clbits  # written but not yet read by a condition
    for i, inst in enumerate(circuit.instructions):
        kind = inst.kind
        if len(inst.qubits) != kind.arity:
            out.append(Violation(i, "bad-arity", f"{kind.value} expects {kind.arity} qubits"))
            continue
        if len(set(inst.qubits)) != len(inst.qubits):
            out.append(Violation(i, "duplicate-qubits", str(inst.qubits)))
        bad = [q for q in inst.qubits if not 0 <= q < circuit.num_qubits]
        if bad:
            out.append(Violation(i, "qubit-out-of-range", str(bad)))
            continue
        if kind.parametric and (inst.angle is None or not math.isfinite(inst.angle)):
            out.append(Violation(i, "bad-angle", repr(inst.angle)))
        if inst.condition is not None:
            bit, value = inst.condition
            if kind not in CONDITIONABLE:
                out.append(Violation(i, "conditioned-multi-qubit", kind.value))
            if value not in (0, 1):
                out.append(Violation(i, "bad-condition-value", str(value)))
            if not 0 <= bit < circuit.num_clbits:
                out.append(Violation(i, "clbit-out-of-range", f"c{bit}"))
            elif not written[bit]:
                out.append(Violation(i, "condition-before-write", f"c{bit}"))
            else:
                pending[bit] = False
        if kind is GateKind.MEASURE:
            c = inst.clbit
            if c is None or not 0 <= c < circuit.num_clbits:
                out.append(Violation(i, "clbit-out-of-range", f"c{c}"))
            else:
                if pending[c]:
                    out.append(Violation(i, "clbit-overwrite-before-use", f"c{c}"))
                written[c] = True
                pending[c] = True
            measured[inst.qubits[0]] = True
        elif kind is GateKind.RESET:
            measured[inst.qubits[0]] = False
        else:
            for q in inst.qubits:
                if measured[q]:
                    out.append(Violation(i, "reuse-without-reset", f"q{q}"))
    return out


def is_valid(circuit: Circuit) -> bool:
    return not validate(circuit)


class InvalidCircuitError(ValueError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        msg = "; ".join(f"#{v.index} {v.reason} {v.detail}".strip() for v in violations[:5])
        super().__init__(f"invalid circuit: {msg}")


def require_valid(circuit: Circuit) -> None:
    violations = validate(circuit)
    if violations:
        raise InvalidCircuitError(violations)


# --------------------------------------------------------------------- depth

def algorithmic_depth(circuit: Circuit) -> int:
    """Longest dependency chain; conditioned gates also wait for their producing MEASURE."""
    require_valid(circuit)
    qlevel = [0] * circuit.num_qubits
    clevel = [0] * circuit.num_clbits
    depth = 0
    for inst in circuit.instructions:
        start = max(qlevel[q] for q in inst.qubits)
        if inst.condition is not None:
            start = max(start, clevel[inst.condition[0]])
        level = start + 1
        for q in inst.qubits:
            qlevel[q] = level
        if inst.kind is GateKind.MEASURE:
            clevel[inst.clbit] = level
        depth = max(depth, level)
    return depth


# ------------------------------------------------------------ classification

def terminal_measurements(circuit: Circuit) -> set[int]:
    """Indices of MEASUREs that can be deferred to the end of the circuit.

    A measurement is terminal when nothing later touches its qubit, reads its
    classical bit in a condition, or overwrites that bit.
    """
    touched_q: set[int] = set()
    read_c: set[int] = set()
    written_c: set[int] = set()
    terminal = set()
    for i in range(len(circuit.instructions) - 1, -1, -1):
        inst = circuit.instructions[i]
        if inst.kind is GateKind.MEASURE:
            q, c = inst.qubits[0], inst.clbit
            if q not in touched_q and c not in read_c and c not in written_c:
                terminal.add(i)
                written_c.add(c)
                # a second terminal measure of the same qubit is still fine
                continue
            written_c.add(c)
            touched_q.add(q)
            continue
        touched_q.update(inst.qubits)
        if inst.condition is not None:
            read_c.add(inst.condition[0])
    return terminal


def mid_circuit_ops(circuit: Circuit) -> list[int]:
    """Indices of non-terminal MEASUREs, RESETs and conditioned gates."""
    terminal = terminal_measurements(circuit)
    out = []
    for i, inst in enumerate(circuit.instructions):
        if inst.kind is GateKind.MEASURE and i not in terminal:
            out.append(i)
        elif inst.kind is GateKind.RESET or inst.condition is not None:
            out.append(i)
    return out


# --------------------------------------------------------------- serialization

SCHEMA = "qbench.circuit/1"


def instruction_to_dict(inst: Instruction) -> dict:
    return {
        "kind": inst.kind.value,
        "qubits": list(inst.qubits),
        "angle": inst.angle,
        "clbit": inst.clbit,
        "condition": list(inst.condition) if inst.condition is not None else None,
    }


def instruction_from_dict(d: Mapping) -> Instruction:
    cond = d.get("condition")
    return Instruction(
        GateKind(d["kind"]),
        tuple(d["qubits"]),
        d.get("angle"),
        d.get("clbit"),
        tuple(cond) if cond is not None else None,
    )


def circuit_to_dict(circuit: Circuit) -> dict:
    return {
        "schema": SCHEMA,
        "name": circuit.name,
        "num_qubits": circuit.num_qubits,
        "num_clbits": circuit.num_clbits,
        "metadata": dict(circuit.metadata),
        "instructions": [instruction_to_dict(i) for i in circuit.instructions],
    }


def circuit_from_dict(d: Mapping) -> Circuit:
    if d.get("schema", SCHEMA) != SCHEMA:
        raise ValueError(f"unsupported circuit schema {d.get('schema')!r}")
    return Circuit(
        d["name"],
        int(d["num_qubits"]),
        int(d["num_clbits"]),
        tuple(instruction_from_dict(i) for i in d["instructions"]),
        d.get("metadata", {}),
    )


def to_json(circuit: Circuit, **kwargs) -> str:
    return json.dumps(circuit_to_dict(circuit), **kwargs)


def from_json(text: str) -> Circuit:
    return circuit_from_dict(json.loads(text))


def readout_string(value: int, width: int) -> str:
    return format(value, f"0{width}b") if width else ""
