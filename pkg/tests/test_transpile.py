import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import dense_unitary, embed, equal_up_to_phase, textbook_matrix
from qbench.benchmarks import generate
from qbench.circuit import CircuitBuilder, GateKind, Instruction, algorithmic_depth
from qbench.topology import GridTopology, row_major_placement
from qbench.transpile import (
    BASIS, PlacementError, decompose, decompose_1q, in_basis, normalized_depth, transpile,
    transpile_to_basis,
)
from test_circuit import unitary_circuits


def strip_measurements(c):
    b = CircuitBuilder(c.num_qubits, c.num_clbits)
    b.extend(i for i in c.instructions if i.kind not in (GateKind.MEASURE, GateKind.RESET))
    return b.build()


def logical_columns(result, n):
    """Routed unitary restricted to inputs with ancillas in |0>, read back in logical order."""
    routed = strip_measurements(result.circuit)
    u = dense_unitary(routed)
    width = routed.num_qubits
    cols = []
    for x in range(1 << n):
        src = sum(((x >> l) & 1) << result.initial_layout[l] for l in range(n))
        psi = u[:, src]
        # every slot not holding a logical qubit at the end must be back in |0>
        out = np.zeros(1 << n, dtype=complex)
        for y in range(1 << width):
            if abs(psi[y]) < 1e-13:
                continue
            logical = 0
            rest = y
            for l in range(n):
                bit = (y >> result.final_layout[l]) & 1
                logical |= bit << l
                rest &= ~(1 << result.final_layout[l])
            assert rest == 0, "ancilla left excited"
            out[logical] += psi[y]
        cols.append(out)
    return np.array(cols).T


def test_h_decomposition_matches_matrix():
    seq = decompose(Instruction(GateKind.H, (0,)))
    assert [i.kind for i in seq] == [GateKind.RZ, GateKind.SX, GateKind.RZ]
    assert all(math.isclose(i.angle, math.pi / 2) for i in seq if i.kind is GateKind.RZ)
    u = np.eye(2, dtype=complex)
    for i in seq:
        u = textbook_matrix(i.kind, i.angle) @ u
    assert equal_up_to_phase(u, textbook_matrix(GateKind.H), 1e-12)


def test_adjacent_cx_unchanged():
    c = CircuitBuilder(2, 0).cx(0, 1).build()
    out = transpile_to_basis(c, GridTopology(2, 2))
    assert [(i.kind, i.qubits) for i in out.instructions] == [(GateKind.CX, (0, 1))]


@pytest.mark.parametrize("kind, angle", [
    (GateKind.RX, 0.7), (GateKind.RY, -2.1), (GateKind.RY, math.pi), (GateKind.RX, -math.pi),
    (GateKind.RZ, 1.3), (GateKind.H, None), (GateKind.SX, None), (GateKind.X, None),
])
def test_single_qubit_decompositions(kind, angle):
    seq = decompose_1q(Instruction(kind, (0,), angle))
    assert all(i.kind in BASIS for i in seq)
    u = np.eye(2, dtype=complex)
    for i in seq:
        u = textbook_matrix(i.kind, i.angle) @ u
    assert equal_up_to_phase(u, textbook_matrix(kind, angle), 1e-10)


@given(st.sampled_from([GateKind.RX, GateKind.RY, GateKind.RZ]), st.floats(-10, 10))
def test_rotation_decomposition_property(kind, angle):
    seq = decompose_1q(Instruction(kind, (0,), angle))
    u = np.eye(2, dtype=complex)
    for i in seq:
        u = textbook_matrix(i.kind, i.angle) @ u
    assert equal_up_to_phase(u, textbook_matrix(kind, angle), 1e-9)


@pytest.mark.parametrize("kind, angle", [(GateKind.CZ, None), (GateKind.CP, 0.9), (GateKind.SWAP, None)])
def test_two_qubit_decompositions(kind, angle):
    seq = decompose(Instruction(kind, (0, 1), angle))
    u = np.eye(4, dtype=complex)
    for i in seq:
        u = embed(textbook_matrix(i.kind, i.angle), i.qubits, 2) @ u
    assert equal_up_to_phase(u, textbook_matrix(kind, angle), 1e-10)


def test_cp_at_distance_three_routed():
    topo = GridTopology(4, 4)
    c = CircuitBuilder(4, 0).cp(math.pi / 2, 0, 3).build()
    assert topo.distance(0, 3) == 3
    res = transpile(c, topo)
    assert in_basis(res.circuit)
    for inst in res.circuit.instructions:
        if inst.kind is GateKind.CX:
            assert topo.adjacent(res.nodes[inst.qubits[0]], res.nodes[inst.qubits[1]])
    got = logical_columns(res, 4)
    want = embed(textbook_matrix(GateKind.CP, math.pi / 2), (0, 3), 4)
    assert equal_up_to_phase(got, want, 1e-10)


def test_routing_through_unused_nodes():
    topo = GridTopology(4, 4)
    c = CircuitBuilder(2, 0).h(0).cp(math.pi / 2, 0, 1).build()
    res = transpile(c, topo, placement={0: 0, 1: 3})
    assert res.circuit.num_qubits == 4 and res.swaps == 2
    got = logical_columns(res, 2)
    assert equal_up_to_phase(got, dense_unitary(c), 1e-10)


def test_unplaceable_circuit():
    with pytest.raises(PlacementError):
        transpile(CircuitBuilder(5, 0).h(0).build(), GridTopology(2, 2))


@pytest.mark.parametrize("family", ["qft1", "qft2", "qpe", "qrl-ansatz"])
@pytest.mark.parametrize("width", [2, 3, 4, 5])
@pytest.mark.parametrize("topo", [None, GridTopology(3, 3), GridTopology(1, 5)])
def test_transpiled_equivalent_for_generated(family, width, topo):
    inst = generate(family, width, 1, seed=width)[0]
    c = strip_measurements(inst.circuit)
    res = transpile(c, topo)
    got = logical_columns(res, width)
    assert equal_up_to_phase(got, dense_unitary(c), 1e-9)


@given(unitary_circuits(max_qubits=4, max_len=15))
def test_transpiled_equivalent_random(c):
    c = strip_measurements(c)
    res = transpile(c, GridTopology(2, 3))
    assert equal_up_to_phase(logical_columns(res, c.num_qubits), dense_unitary(c), 1e-9)


def test_normalized_depth_examples():
    assert normalized_depth(CircuitBuilder(1, 0).h(0).build(), GridTopology(1, 1)) == 3
    basis_only = CircuitBuilder(3, 0).cx(0, 1).cx(1, 2).sx(0).build()
    assert normalized_depth(basis_only, GridTopology(1, 3)) == algorithmic_depth(basis_only)


@given(unitary_circuits(max_qubits=5, max_len=20))
def test_depth_monotone_under_routing(c):
    assert normalized_depth(c, GridTopology(2, 3)) >= normalized_depth(c, None)


def test_row_major_placement():
    assert row_major_placement(5, GridTopology(2, 3)) == {0: 0, 1: 1, 2: 2, 3: 3, 4: 4}


def test_conditions_stay_on_basis_gates():
    inst = generate("qft1", 4, 1, seed=0, dynamic=True)[0]
    out = transpile_to_basis(inst.circuit, GridTopology(2, 2))
    for i in out.instructions:
        if i.condition is not None:
            assert i.kind in (GateKind.RZ, GateKind.X, GateKind.SX)
