import json
import math

import pytest
from hypothesis import given, strategies as st

from oracles import longest_path_depth
from qbench.benchmarks import GENERATORS, generate, qft_circuit
from qbench.circuit import (
    SCHEMA, Circuit, CircuitBuilder, GateKind, Instruction, InvalidCircuitError, algorithmic_depth,
    from_json, is_valid, mid_circuit_ops, readout_string, terminal_measurements, to_json, validate,
)

ONE_Q = [GateKind.H, GateKind.X, GateKind.SX, GateKind.RX, GateKind.RY, GateKind.RZ]
TWO_Q = [GateKind.CX, GateKind.CZ, GateKind.CP, GateKind.SWAP]


@st.composite
def unitary_circuits(draw, max_qubits=5, max_len=25):
    n = draw(st.integers(1, max_qubits))
    b = CircuitBuilder(n, n)
    for _ in range(draw(st.integers(0, max_len))):
        kinds = ONE_Q + (TWO_Q if n > 1 else [])
        kind = draw(st.sampled_from(kinds))
        qs = draw(st.permutations(range(n)))[: kind.arity]
        angle = draw(st.floats(-2 * math.pi, 2 * math.pi)) if kind.parametric else None
        b.append(kind, qs, angle)
    for q in range(n):
        b.measure(q, q)
    return b.build()


@st.composite
def dynamic_circuits(draw, max_qubits=4, max_len=20):
    """Random valid circuits mixing gates, mid-circuit measurement, reset and conditions."""
    n = draw(st.integers(1, max_qubits))
    m = draw(st.integers(1, 3))
    b = CircuitBuilder(n, m)
    measured = [False] * n
    written = [False] * m
    pending = [False] * m
    for _ in range(draw(st.integers(0, max_len))):
        op = draw(st.sampled_from(["1q", "2q", "measure", "reset", "cond"]))
        if op == "measure":
            q, c = draw(st.integers(0, n - 1)), draw(st.integers(0, m - 1))
            if pending[c]:
                continue
            if measured[q]:
                b.reset(q)
            b.measure(q, c)
            measured[q] = True
            written[c] = pending[c] = True
        elif op == "reset":
            q = draw(st.integers(0, n - 1))
            b.reset(q)
            measured[q] = False
        else:
            kinds = ONE_Q if (op != "2q" or n < 2) else TWO_Q
            kind = draw(st.sampled_from(kinds))
            qs = draw(st.permutations(range(n)))[: kind.arity]
            for q in qs:
                if measured[q]:
                    b.reset(q)
                    measured[q] = False
            angle = draw(st.floats(-math.pi, math.pi)) if kind.parametric else None
            cond = None
            if op == "cond" and kind.arity == 1 and any(written):
                c = draw(st.sampled_from([i for i in range(m) if written[i]]))
                cond = (c, draw(st.integers(0, 1)))
                pending[c] = False
            b.append(kind, qs, angle, condition=cond)
    return b.build()


# ------------------------------------------------------------------ validate

def test_valid_simple_circuit():
    c = CircuitBuilder(2, 2).h(0).cx(0, 1).measure(0, 0).measure(1, 1).build()
    assert validate(c) == []


@pytest.mark.parametrize("build, reason", [
    (lambda: CircuitBuilder(2, 1).append(GateKind.CX, (0, 0)).build(), "duplicate-qubits"),
    (lambda: CircuitBuilder(2, 1).h(2).build(), "qubit-out-of-range"),
    (lambda: CircuitBuilder(1, 1).rz(float("nan"), 0).build(), "bad-angle"),
    (lambda: CircuitBuilder(1, 1).append(GateKind.RX, (0,)).build(), "bad-angle"),
    (lambda: CircuitBuilder(1, 1).x(0, condition=(0, 1)).build(), "condition-before-write"),
    (lambda: CircuitBuilder(1, 1).measure(0, 0).h(0).build(), "reuse-without-reset"),
    (lambda: CircuitBuilder(1, 1).measure(0, 1).build(), "clbit-out-of-range"),
    (lambda: CircuitBuilder(2, 1).measure(0, 0).measure(1, 0).build(), "clbit-overwrite-before-use"),
    (lambda: CircuitBuilder(2, 1).append(GateKind.H, (0, 1)).build(), "bad-arity"),
])
def test_validate_reasons(build, reason):
    assert reason in {v.reason for v in validate(build())}


def test_conditioned_two_qubit_gate_rejected():
    b = CircuitBuilder(2, 1).measure(0, 0).reset(0)
    b.extend([Instruction(GateKind.CX, (0, 1), condition=(0, 1))])
    assert "conditioned-multi-qubit" in {v.reason for v in validate(b.build())}


def test_reset_allows_reuse():
    c = CircuitBuilder(1, 1).measure(0, 0).reset(0).h(0).build()
    assert is_valid(c)


def test_condition_consumes_pending_write():
    c = CircuitBuilder(2, 1).measure(0, 0).x(1, condition=(0, 1)).measure(1, 0).build()
    assert is_valid(c)


@pytest.mark.parametrize("family", sorted(GENERATORS))
@pytest.mark.parametrize("width", range(2, 13))
@pytest.mark.parametrize("dynamic", [False, True])
def test_generators_produce_valid_circuits(family, width, dynamic):
    for inst in generate(family, width, 2, seed=width, dynamic=dynamic):
        assert validate(inst.circuit) == []


# --------------------------------------------------------------------- depth

def test_depth_examples():
    assert algorithmic_depth(CircuitBuilder(1, 1).h(0).measure(0, 0).build()) == 2
    assert algorithmic_depth(CircuitBuilder(3, 0).build()) == 0
    qft3 = qft_circuit(3)
    assert qft3.count(GateKind.H) == 3 and qft3.count(GateKind.CP) == 3 and qft3.count(GateKind.SWAP) == 1
    assert algorithmic_depth(qft3) == longest_path_depth(qft3)


def test_depth_waits_for_condition_producer():
    # q1 is idle, but its conditioned gate must follow the MEASURE at level 3
    c = CircuitBuilder(2, 1).h(0).h(0).measure(0, 0).x(1, condition=(0, 1)).build()
    assert algorithmic_depth(c) == 4 == longest_path_depth(c)


def test_depth_rejects_invalid():
    with pytest.raises(InvalidCircuitError):
        algorithmic_depth(CircuitBuilder(1, 1).measure(0, 0).h(0).build())


@given(dynamic_circuits())
def test_depth_matches_longest_path_oracle(c):
    assert is_valid(c)
    assert algorithmic_depth(c) == longest_path_depth(c)


@given(unitary_circuits())
def test_depth_bounded_by_length(c):
    assert 0 <= algorithmic_depth(c) <= len(c)


# ------------------------------------------------------------ classification

def test_terminal_measurements():
    static = CircuitBuilder(2, 2).h(0).cx(0, 1).measure(0, 0).measure(1, 1).build()
    assert terminal_measurements(static) == {2, 3}
    assert not static.is_dynamic()
    dyn = CircuitBuilder(2, 2).h(0).measure(0, 0).x(1, condition=(0, 1)).measure(1, 1).build()
    assert terminal_measurements(dyn) == {3}
    assert mid_circuit_ops(dyn) == [1, 2]
    assert dyn.is_dynamic()


def test_generated_dynamic_variants_are_dynamic():
    assert generate("qft1", 4, 1, seed=0, dynamic=True)[0].circuit.is_dynamic()
    assert not generate("qft1", 4, 1, seed=0, dynamic=False)[0].circuit.is_dynamic()


# -------------------------------------------------------------- serialization

def test_readout_string_order():
    assert readout_string(1, 3) == "001"
    assert readout_string(6, 3) == "110"


def test_json_schema_tag():
    doc = json.loads(to_json(qft_circuit(2)))
    assert doc["schema"] == SCHEMA


@given(dynamic_circuits())
def test_json_roundtrip(c):
    back = from_json(to_json(c))
    assert back.instructions == c.instructions
    assert (back.num_qubits, back.num_clbits, back.name) == (c.num_qubits, c.num_clbits, c.name)


def test_circuit_is_immutable():
    c = qft_circuit(2)
    with pytest.raises(Exception):
        c.num_qubits = 5
    assert isinstance(c, Circuit)
