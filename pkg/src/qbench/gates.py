"""Dense gate matrices.

Two-qubit matrices act on the index ``b0 + 2*b1`` where ``b0`` is the bit of
``instruction.qubits[0]`` (little-endian, same as the statevector layout).
"""
from __future__ import annotations

import cmath
import math

import numpy as np

from .circuit import GateKind, Instruction

_S2 = 1 / math.sqrt(2)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[_S2, _S2], [_S2, -_S2]], dtype=complex)
SX = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


def rx(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    return np.array([[cmath.exp(-0.5j * theta), 0], [0, cmath.exp(0.5j * theta)]], dtype=complex)


def cx() -> np.ndarray:
    # control = qubits[0] (low bit), target = qubits[1]
    m = np.eye(4, dtype=complex)
    m[[1, 3]] = m[[3, 1]]
    return m


def cz() -> np.ndarray:
    return np.diag([1, 1, 1, -1]).astype(complex)


def cp(lam: float) -> np.ndarray:
    return np.diag([1, 1, 1, cmath.exp(1j * lam)])


def swap() -> np.ndarray:
    m = np.eye(4, dtype=complex)
    m[[1, 2]] = m[[2, 1]]
    return m


def pauli_matrix(label: str) -> np.ndarray:
    """Matrix of a Pauli label; character ``k`` acts on the gate's ``k``-th qubit."""
    out = np.array([[1]], dtype=complex)
    for ch in label:
        out = np.kron(PAULI[ch], out)
    return out


def matrix(inst: Instruction) -> np.ndarray:
    kind = inst.kind
    if kind is GateKind.H:
        return H
    if kind is GateKind.X:
        return X
    if kind is GateKind.SX:
        return SX
    if kind is GateKind.RX:
        return rx(inst.angle)
    if kind is GateKind.RY:
        return ry(inst.angle)
    if kind is GateKind.RZ:
        return rz(inst.angle)
    if kind is GateKind.CX:
        return cx()
    if kind is GateKind.CZ:
        return cz()
    if kind is GateKind.CP:
        return cp(inst.angle)
    if kind is GateKind.SWAP:
        return swap()
    raise ValueError(f"{kind.value} has no unitary matrix")


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-9) -> bool:
    """True when ``a = e^{i phi} b`` for some phase."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        return False
    k = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[k]) < 1e-12:
        return np.allclose(a, 0, atol=atol)
    phase = a[k] / b[k]
    if abs(abs(phase) - 1) > 1e-6:
        return False
    return np.allclose(a, phase * b, atol=atol)
