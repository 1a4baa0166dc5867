"""
Benchmark problem generators.

Every generator returns a :class:`BenchmarkInstance`: the circuit, the ideal
readout distribution it should produce, and the parameters that define it.
Static and dynamic variants differ only in the inverse-QFT block; the
dynamic block measures each qubit right after its Hadamard and replaces
every controlled phase with a classically conditioned RZ.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .circuit import Circuit, CircuitBuilder, circuit_to_dict, readout_string
from .simulator import DEFAULT_CONFIG, SimulatorConfig, exact_distribution


@dataclass(frozen=True)
class BenchmarkInstance:
    family: str
    circuit: Circuit
    expected: dict[str, float]
    params: dict = field(default_factory=dict)

    @property
    def width(self) -> int:
        return self.circuit.num_qubits

    def to_dict(self) -> dict:
        return {"family": self.family, "params": self.params, "expected": self.expected,
                "circuit": circuit_to_dict(self.circuit)}


# ------------------------------------------------------------- QFT blocks

def append_qft(b: CircuitBuilder, qubits: Sequence[int]) -> None:
    """H + controlled-phase cascade from the most significant qubit down, then bit reversal."""
    n = len(qubits)
    for j in reversed(range(n)):
        b.h(qubits[j])
        for k in reversed(range(j)):
            b.cp(math.pi / 2 ** (j - k), qubits[j], qubits[k])
    for i in range(n // 2):
        b.swap(qubits[i], qubits[n - 1 - i])


def append_iqft(b: CircuitBuilder, qubits: Sequence[int], dynamic: bool = False,
                clbits: Sequence[int] | None = None) -> None:
    """Inverse QFT; when ``clbits`` is given, qubit ``qubits[i]``'s value lands in ``clbits[i]``.

    The dynamic form needs ``clbits``: it absorbs the bit reversal into the
    qubit order and measures each qubit straight after its Hadamard.
    """
    n = len(qubits)
    if dynamic:
        if clbits is None:
            raise ValueError("dynamic IQFT needs classical bits")
        for j in range(n):
            target = qubits[n - 1 - j]
            for k in range(j):
                b.rz(-math.pi / 2 ** (j - k), target, condition=(clbits[k], 1))
            b.h(target)
            b.measure(target, clbits[j])
        return
    for i in range(n // 2):
        b.swap(qubits[i], qubits[n - 1 - i])
    for j in range(n):
        for k in range(j):
            b.cp(-math.pi / 2 ** (j - k), qubits[j], qubits[k])
        b.h(qubits[j])
    if clbits is not None:
        for i, q in enumerate(qubits):
            b.measure(q, clbits[i])


def qft_circuit(n: int) -> Circuit:
    if n < 1:
        raise ValueError("QFT needs at least one qubit")
    b = CircuitBuilder(n, 0, f"qft_{n}")
    append_qft(b, range(n))
    return b.build()


def iqft_circuit(n: int, dynamic: bool = False, measure: bool = False) -> Circuit:
    """Stand-alone inverse QFT; the dynamic form always includes its measurements."""
    if n < 1:
        raise ValueError("IQFT needs at least one qubit")
    measure = measure or dynamic
    b = CircuitBuilder(n, n if measure else 0, f"iqft_{n}{'_dyn' if dynamic else ''}")
    append_iqft(b, range(n), dynamic, list(range(n)) if measure else None)
    return b.build()


def point_mass(value: int, width: int) -> dict[str, float]:
    return {readout_string(value, width): 1.0}


def _check_secret(n: int, s: int) -> None:
    if n < 1:
        raise ValueError("width must be >= 1")
    if not 0 <= s < 2 ** n:
        raise ValueError(f"secret {s} out of range for {n} qubits")


# ---------------------------------------------------------------- QFT 1 / 2

def generate_qft_method1(n: int, s: int, dynamic: bool = False) -> BenchmarkInstance:
    """Prepare |s>, QFT, add-one phase layer, IQFT; ideal readout is (s+1) mod 2^n."""
    _check_secret(n, s)
    b = CircuitBuilder(n, n, f"qft1_n{n}_s{s}{'_dyn' if dynamic else ''}",
                       family="qft1", s=s, dynamic=dynamic)
    for q in range(n):
        if (s >> q) & 1:
            b.x(q)
    append_qft(b, range(n))
    for q in range(n):
        b.rz(math.pi / 2 ** (n - 1 - q), q)
    append_iqft(b, range(n), dynamic, list(range(n)))
    return BenchmarkInstance("qft1", b.build(), point_mass((s + 1) % 2 ** n, n),
                             {"n": n, "s": s, "dynamic": dynamic})


def generate_qft_method2(n: int, s: int, dynamic: bool = False) -> BenchmarkInstance:
    """Uniform superposition, phase-encode s with RZ(s*pi/2^k), IQFT; ideal readout is s."""
    _check_secret(n, s)
    b = CircuitBuilder(n, n, f"qft2_n{n}_s{s}{'_dyn' if dynamic else ''}",
                       family="qft2", s=s, dynamic=dynamic)
    for q in range(n):
        b.h(q)
    for q in range(n):
        angle = math.remainder(s * math.pi / 2 ** (n - 1 - q), 2 * math.pi)
        b.rz(angle, q)
    append_iqft(b, range(n), dynamic, list(range(n)))
    return BenchmarkInstance("qft2", b.build(), point_mass(s, n), {"n": n, "s": s, "dynamic": dynamic})


# -------------------------------------------------------------------- QPE

def qpe_distribution(t: int, theta: float) -> dict[str, float]:
    """Ideal t-bit phase-estimation readout for eigenphase ``theta``."""
    N = 2 ** t
    j = np.arange(N)
    out = {}
    for k in range(N):
        amp = np.exp(2j * np.pi * j * (theta - k / N)).sum() / N
        p = float(abs(amp) ** 2)
        if p > 1e-15:
            out[readout_string(k, t)] = p
    total = sum(out.values())
    return {k: v / total for k, v in out.items()}


def generate_qpe(t: int, theta: float, dynamic: bool = False) -> BenchmarkInstance:
    """t ancillas + one eigenstate qubit in |1>; U is the phase gate of angle 2*pi*theta."""
    if t < 1:
        raise ValueError("QPE needs at least one ancilla")
    if not 0 <= theta < 1:
        raise ValueError("theta must lie in [0, 1)")
    n = t + 1
    b = CircuitBuilder(n, t, f"qpe_t{t}_{theta:.6f}{'_dyn' if dynamic else ''}",
                       family="qpe", theta=repr(theta), dynamic=dynamic)
    b.x(t)
    for q in range(t):
        b.h(q)
    for q in range(t):
        angle = math.remainder(2 * math.pi * theta * 2 ** q, 2 * math.pi)
        b.cp(angle, q, t)
    append_iqft(b, range(t), dynamic, list(range(t)))
    expected = qpe_distribution(t, theta)
    rounded = round(theta * 2 ** t) % 2 ** t
    return BenchmarkInstance("qpe", b.build(), expected,
                             {"t": t, "theta": theta, "dynamic": dynamic,
                              "expected_rounded": readout_string(rounded, t)})


# ------------------------------------------------------------- QRL ansatz

@dataclass(frozen=True)
class AnsatzConfig:
    n_qubits: int
    n_layers: int
    n_measurements: int
    data_reupload: bool = False
    input_state: int = 0
    params: tuple[float, ...] = ()
    entangler: str = "chain"

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.n_qubits < 1 or self.n_layers < 1:
            raise ValueError("ansatz needs at least one qubit and one layer")
        if not 0 <= self.n_measurements <= self.n_qubits:
            raise ValueError("n_measurements must lie in [0, n_qubits]")
        if not 0 <= self.input_state < 2 ** self.n_qubits:
            raise ValueError("input_state does not fit the register")
        if self.entangler not in ("chain", "ring"):
            raise ValueError("entangler must be 'chain' or 'ring'")

    @property
    def num_params(self) -> int:
        return 2 * self.n_layers * self.n_qubits

    def entangling_pairs(self) -> list[tuple[int, int]]:
        pairs = [(i, i + 1) for i in range(self.n_qubits - 1)]
        if self.entangler == "ring" and self.n_qubits > 2:
            pairs.append((self.n_qubits - 1, 0))
        return pairs


def param_index(layer: int, qubit: int, n_qubits: int, which: int) -> int:
    """Flat index of the RY (which=0) or RZ (which=1) angle."""
    return 2 * (layer * n_qubits + qubit) + which


def build_qrl_ansatz(config: AnsatzConfig) -> Circuit:
    """RX(pi) state encoding, then layers of RY/RZ + CZ entanglers, measuring the first qubits."""
    if len(config.params) != config.num_params:
        raise ValueError(f"expected {config.num_params} parameters, got {len(config.params)}")
    n = config.n_qubits
    b = CircuitBuilder(n, config.n_measurements, f"qrl_n{n}_l{config.n_layers}",
                       family="qrl-ansatz", input_state=config.input_state,
                       data_reupload=config.data_reupload)
    ones = [q for q in range(n) if (config.input_state >> q) & 1]

    def encode():
        for q in ones:
            b.rx(math.pi, q)

    encode()
    for layer in range(config.n_layers):
        if config.data_reupload and layer > 0:
            encode()
        for q in range(n):
            b.ry(config.params[param_index(layer, q, n, 0)], q)
            b.rz(config.params[param_index(layer, q, n, 1)], q)
        for a, c in config.entangling_pairs():
            b.cz(a, c)
    for q in range(config.n_measurements):
        b.measure(q, q)
    return b.build()


# --------------------------------------------------------------- registry

def _qft1(width, rng, dynamic, count, **_):
    values = rng.choice(2 ** width, size=min(count, 2 ** width), replace=False)
    return [generate_qft_method1(width, int(s), dynamic) for s in values]


def _qft2(width, rng, dynamic, count, **_):
    values = rng.choice(2 ** width, size=min(count, 2 ** width), replace=False)
    return [generate_qft_method2(width, int(s), dynamic) for s in values]


def _qpe(width, rng, dynamic, count, dyadic_theta: bool = True, **_):
    t = width - 1
    if t < 1:
        raise ValueError("QPE sweeps need width >= 2")
    if dyadic_theta:
        ks = rng.choice(2 ** t, size=min(count, 2 ** t), replace=False)
        thetas = [int(k) / 2 ** t for k in ks]
    else:
        thetas = [float(x) for x in rng.random(count)]
    return [generate_qpe(t, th, dynamic) for th in thetas]


# the ansatz has no mid-circuit branches, so its exact distribution is one evolution
_STATIC_EXACT = SimulatorConfig(exact_max_qubits=DEFAULT_CONFIG.max_qubits)


def _qrl(width, rng, dynamic, count, num_layers: int = 5, init_state: int | None = None,
         n_measurements: int | None = None, data_reupload: bool = False, **_):
    out = []
    for _i in range(count):
        state = int(rng.integers(2 ** width)) if init_state is None else init_state % 2 ** width
        nm = width if n_measurements is None else min(n_measurements, width)
        params = rng.uniform(0, 2 * math.pi, 2 * num_layers * width)
        cfg = AnsatzConfig(width, num_layers, nm, data_reupload, state, tuple(params))
        circ = build_qrl_ansatz(cfg)
        out.append(BenchmarkInstance("qrl-ansatz", circ, exact_distribution(circ, _STATIC_EXACT),
                                     {"n": width, "layers": num_layers, "input_state": state,
                                      "n_measurements": nm, "data_reupload": data_reupload}))
    return out


GENERATORS: dict[str, Callable[..., list[BenchmarkInstance]]] = {
    "qft1": _qft1,
    "qft2": _qft2,
    "qpe": _qpe,
    "qrl-ansatz": _qrl,
}


def instances_per_width(width: int, cap: int = 10) -> int:
    """The ``m = min(2^n, cap)`` rule for secret-integer sweeps."""
    return min(2 ** width, cap)


def generate(family: str, width: int, count: int, seed: int | np.random.Generator,
             dynamic: bool = False, **options) -> list[BenchmarkInstance]:
    """Seeded batch of ``count`` instances (fewer if the family has fewer distinct ones)."""
    try:
        gen = GENERATORS[family]
    except KeyError:
        raise ValueError(f"unknown benchmark family {family!r}; choose from {sorted(GENERATORS)}") from None
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return gen(width, rng, dynamic, count, **options)
