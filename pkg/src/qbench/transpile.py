"""
Lowering to the {X, SX, RZ, CX} basis with nearest-neighbour routing.

Decompositions (all exact up to global phase):

    H        -> RZ(pi/2) SX RZ(pi/2)
    U (1q)   -> RZ(lam) SX RZ(theta+pi) SX RZ(phi+pi)      (ZYZ angles of U)
    CZ       -> H(t) CX H(t)
    CP(lam)  -> RZ(lam/2) on c, CX, RZ(-lam/2) on t, CX, RZ(lam/2) on t
    SWAP     -> CX CX CX

Routing walks the first qubit of a non-adjacent pair along a shortest grid
path (preferring occupied nodes), one SWAP per hop.  Grid nodes used by a
route that hold no logical qubit become extra circuit qubits starting in
|0>.  Output qubit ``i`` lives on grid node ``nodes[i]``; the mapping is also
stored in the circuit metadata as ``physical_nodes``.
"""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import gates
from .circuit import Circuit, GateKind, Instruction, algorithmic_depth, require_valid
from .topology import GridTopology, row_major_placement

BASIS = frozenset({GateKind.X, GateKind.SX, GateKind.RZ, GateKind.CX, GateKind.MEASURE, GateKind.RESET})
_EPS = 1e-12


class PlacementError(ValueError):
    """Circuit does not fit on the topology or the placement is inconsistent."""


def _wrap(angle: float) -> float:
    """Map into (-pi, pi]."""
    a = math.remainder(angle, 2 * math.pi)
    return math.pi if a == -math.pi else a


def _rz(theta: float, q: int, cond) -> list[Instruction]:
    theta = _wrap(theta)
    if abs(theta) < _EPS:
        return []
    return [Instruction(GateKind.RZ, (q,), theta, condition=cond)]


def zyz_angles(u: np.ndarray) -> tuple[float, float, float]:
    """(theta, phi, lam) with ``u ~ RZ(phi) RY(theta) RZ(lam)`` up to global phase."""
    u = np.asarray(u, dtype=complex)
    u = u / cmath.sqrt(np.linalg.det(u))
    theta = 2 * math.atan2(abs(u[1, 0]), abs(u[0, 0]))
    if abs(u[0, 0]) > 1e-12 and abs(u[1, 0]) > 1e-12:
        plus = 2 * cmath.phase(u[1, 1])
        minus = 2 * cmath.phase(u[1, 0])
    elif abs(u[1, 0]) <= 1e-12:  # diagonal
        plus, minus = 2 * cmath.phase(u[1, 1]), 0.0
    else:  # anti-diagonal
        plus, minus = 0.0, 2 * cmath.phase(u[1, 0])
    return theta, (plus + minus) / 2, (plus - minus) / 2


def decompose_1q(inst: Instruction) -> list[Instruction]:
    q, cond, kind = inst.qubits[0], inst.condition, inst.kind
    if kind in (GateKind.X, GateKind.SX):
        return [inst]
    if kind is GateKind.RZ:
        return _rz(inst.angle, q, cond)
    if kind is GateKind.H:
        return [Instruction(GateKind.RZ, (q,), math.pi / 2, condition=cond),
                Instruction(GateKind.SX, (q,), condition=cond),
                Instruction(GateKind.RZ, (q,), math.pi / 2, condition=cond)]
    theta, phi, lam = zyz_angles(gates.matrix(inst))
    if abs(_wrap(theta)) < _EPS:
        return _rz(phi + lam, q, cond)
    sx = Instruction(GateKind.SX, (q,), condition=cond)
    return _rz(lam, q, cond) + [sx] + _rz(theta + math.pi, q, cond) + [sx] + _rz(phi + math.pi, q, cond)


def decompose(inst: Instruction) -> list[Instruction]:
    """Basis-gate expansion of one instruction on its own qubits."""
    kind = inst.kind
    if kind in (GateKind.MEASURE, GateKind.RESET, GateKind.CX):
        return [inst]
    if kind.arity == 1:
        return decompose_1q(inst)
    a, b = inst.qubits
    if kind is GateKind.CZ:
        h = Instruction(GateKind.H, (b,))
        return decompose_1q(h) + [Instruction(GateKind.CX, (a, b))] + decompose_1q(h)
    if kind is GateKind.CP:
        lam = inst.angle
        return (_rz(lam / 2, a, None) + [Instruction(GateKind.CX, (a, b))] + _rz(-lam / 2, b, None)
                + [Instruction(GateKind.CX, (a, b))] + _rz(lam / 2, b, None))
    if kind is GateKind.SWAP:
        return [Instruction(GateKind.CX, (a, b)), Instruction(GateKind.CX, (b, a)), Instruction(GateKind.CX, (a, b))]
    raise ValueError(f"cannot decompose {kind.value}")


def _remap(inst: Instruction, slots) -> Instruction:
    return Instruction(inst.kind, tuple(slots[q] for q in inst.qubits), inst.angle, inst.clbit, inst.condition)


@dataclass(frozen=True)
class TranspileResult:
    circuit: Circuit
    nodes: tuple[int, ...]           # output qubit -> grid node
    initial_layout: tuple[int, ...]  # logical qubit -> output qubit at start
    final_layout: tuple[int, ...]    # logical qubit -> output qubit at end
    swaps: int


def transpile(circuit: Circuit, topology: GridTopology | None = None,
              placement: Mapping[int, int] | None = None) -> TranspileResult:
    """Lower to the basis and route on ``topology`` (``None`` = all-to-all)."""
    require_valid(circuit)
    n = circuit.num_qubits
    if topology is None:
        nodes = list(range(n))
    else:
        if n > topology.num_nodes:
            raise PlacementError(f"{n} qubits do not fit on {topology.num_nodes} nodes")
        if placement is None:
            placement = row_major_placement(n, topology)
        nodes = [placement[q] for q in range(n)]
        if len(set(nodes)) != n or not all(0 <= v < topology.num_nodes for v in nodes):
            raise PlacementError("placement must map qubits to distinct grid nodes")
    node_slot = {v: s for s, v in enumerate(nodes)}
    logical_slot = list(range(n))
    slot_logical: dict[int, int | None] = {s: s for s in range(n)}
    out: list[Instruction] = []
    swaps = 0

    def slot_at(node: int) -> int:
        s = node_slot.get(node)
        if s is None:
            s = len(nodes)
            nodes.append(node)
            node_slot[node] = s
            slot_logical[s] = None
        return s

    for inst in circuit.instructions:
        if topology is not None and len(inst.qubits) == 2:
            a, b = inst.qubits
            na, nb = nodes[logical_slot[a]], nodes[logical_slot[b]]
            if not topology.adjacent(na, nb):
                path = topology.shortest_path(na, nb, preferred=[nodes[s] for s in logical_slot])
                for i in range(len(path) - 2):
                    s1, s2 = slot_at(path[i]), slot_at(path[i + 1])
                    out.extend(decompose(Instruction(GateKind.SWAP, (s1, s2))))
                    swaps += 1
                    l1, l2 = slot_logical[s1], slot_logical[s2]
                    slot_logical[s1], slot_logical[s2] = l2, l1
                    if l1 is not None:
                        logical_slot[l1] = s2
                    if l2 is not None:
                        logical_slot[l2] = s1
        out.extend(decompose(_remap(inst, logical_slot)))

    meta = dict(circuit.metadata)
    meta.update(transpiled="true", physical_nodes=json.dumps(nodes), final_layout=json.dumps(logical_slot))
    if topology is not None:
        meta["topology"] = f"{topology.rows}x{topology.cols}"
    result = Circuit(circuit.name, len(nodes), circuit.num_clbits, tuple(out), meta)
    return TranspileResult(result, tuple(nodes), tuple(range(n)), tuple(logical_slot), swaps)


def transpile_to_basis(circuit: Circuit, topology: GridTopology | None,
                       placement: Mapping[int, int] | None = None) -> Circuit:
    return transpile(circuit, topology, placement).circuit


def normalized_depth(circuit: Circuit, topology: GridTopology | None,
                     placement: Mapping[int, int] | None = None) -> int:
    """Algorithmic depth of the basis-lowered, routed circuit."""
    return algorithmic_depth(transpile_to_basis(circuit, topology, placement))


def in_basis(circuit: Circuit) -> bool:
    return all(inst.kind in BASIS for inst in circuit.instructions)
