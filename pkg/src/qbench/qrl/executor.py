"""
Batched evaluation of the QRL ansatz.

Rows of a batch are independent circuit evaluations (one parameter vector
and one input state each).  In exact mode the statevectors of all rows are
evolved together as a ``(rows, 2**n)`` array; the construction is the same
gate sequence as :func:`qbench.benchmarks.build_qrl_ansatz`.  Shot mode
samples the measured-qubit marginal; noisy mode builds, lowers and runs
each circuit through the trajectory simulator.
"""
from __future__ import annotations

import math
import time

import numpy as np

from ..benchmarks import AnsatzConfig, build_qrl_ansatz, param_index
from ..noise import NoiseModel
from ..simulator import run_shots
from ..transpile import transpile_to_basis


def _views(psi: np.ndarray, q: int):
    v = psi.reshape(psi.shape[0], -1, 2, 1 << q)
    return v[:, :, 0, :], v[:, :, 1, :]


def z_signs(n: int, m: int) -> np.ndarray:
    """(2**n, m) table of Z eigenvalues of the first ``m`` qubits."""
    idx = np.arange(1 << n)
    return np.stack([1.0 - 2.0 * ((idx >> q) & 1) for q in range(m)], axis=1)


class AnsatzExecutor:
    def __init__(self, n_qubits: int, n_layers: int, n_measurements: int, data_reupload: bool = False,
                 shots: int | None = None, noise: NoiseModel | None = None, seed: int = 0,
                 entangler: str = "chain"):
        self.template = AnsatzConfig(n_qubits, n_layers, n_measurements, data_reupload,
                                     params=(0.0,) * (2 * n_layers * n_qubits), entangler=entangler)
        self.n, self.layers, self.m = n_qubits, n_layers, n_measurements
        self.reupload = data_reupload
        self.shots = shots or None
        self.noise = noise
        self.rng = np.random.default_rng(seed)
        self._shot_seed = int(self.rng.integers(2 ** 31))
        self.evaluations = 0
        self.batches = 0
        self.exec_time = 0.0
        diag = np.ones(1 << n_qubits)
        idx = np.arange(1 << n_qubits)
        for a, b in self.template.entangling_pairs():
            diag *= 1.0 - 2.0 * (((idx >> a) & 1) & ((idx >> b) & 1))
        self._cz = diag
        self._zs = z_signs(n_qubits, n_measurements)

    @property
    def num_params(self) -> int:
        return self.template.num_params

    @property
    def exact(self) -> bool:
        return self.shots is None and self.noise is None

    # -------------------------------------------------------------- exact core
    def _encode(self, psi, states):
        for q in range(self.n):
            rows = np.nonzero((states >> q) & 1)[0]
            if rows.size == 0:
                continue
            a0, a1 = _views(psi, q)
            t0 = a0[rows].copy()
            a0[rows] = -1j * a1[rows]
            a1[rows] = -1j * t0

    def statevectors(self, params: np.ndarray, states: np.ndarray) -> np.ndarray:
        params = np.atleast_2d(np.asarray(params, dtype=float))
        states = np.asarray(states, dtype=np.int64).reshape(-1)
        rows = max(params.shape[0], states.shape[0])
        params = np.broadcast_to(params, (rows, params.shape[1]))
        states = np.broadcast_to(states, (rows,))
        if params.shape[1] != self.num_params:
            raise ValueError(f"expected {self.num_params} parameters, got {params.shape[1]}")
        psi = np.zeros((rows, 1 << self.n), dtype=complex)
        psi[:, 0] = 1.0
        self._encode(psi, states)
        for layer in range(self.layers):
            if self.reupload and layer > 0:
                self._encode(psi, states)
            for q in range(self.n):
                th = params[:, param_index(layer, q, self.n, 0)][:, None, None]
                ph = params[:, param_index(layer, q, self.n, 1)][:, None, None]
                a0, a1 = _views(psi, q)
                c, s = np.cos(th / 2), np.sin(th / 2)
                n0 = c * a0 - s * a1
                a1[...] = s * a0 + c * a1
                a0[...] = n0
                a0 *= np.exp(-0.5j * ph)
                a1 *= np.exp(0.5j * ph)
            psi *= self._cz
        return psi

    def probabilities(self, params, states) -> np.ndarray:
        return np.abs(self.statevectors(params, states)) ** 2

    # ------------------------------------------------------------- public API
    def expectations(self, params, states) -> np.ndarray:
        """``<Z_i>`` for the measured qubits; one row per circuit evaluation."""
        t0 = time.perf_counter()
        params = np.atleast_2d(np.asarray(params, dtype=float))
        states = np.asarray(states, dtype=np.int64).reshape(-1)
        rows = max(params.shape[0], states.shape[0])
        if self.noise is not None:
            out = self._noisy(np.broadcast_to(params, (rows, params.shape[1])), np.broadcast_to(states, (rows,)))
        else:
            probs = self.probabilities(params, states)
            if self.shots is None:
                out = probs @ self._zs
            else:
                marg = probs.reshape(rows, -1, 1 << self.m).sum(axis=1)
                marg /= marg.sum(axis=1, keepdims=True)
                counts = self.rng.multinomial(self.shots, marg)
                out = counts @ self._zs[: 1 << self.m] / self.shots
        self.evaluations += rows
        self.batches += 1
        self.exec_time += time.perf_counter() - t0
        return out

    def _noisy(self, params, states) -> np.ndarray:
        shots = self.shots or 1000
        out = np.empty((params.shape[0], self.m))
        zs = self._zs[: 1 << self.m]
        for i, (p, s) in enumerate(zip(params, states)):
            cfg = AnsatzConfig(self.n, self.layers, self.m, self.reupload, int(s), tuple(p),
                               self.template.entangler)
            circ = transpile_to_basis(build_qrl_ansatz(cfg), None)
            self._shot_seed += 1
            counts = run_shots(circ, shots, self._shot_seed, self.noise)
            vec = np.zeros(1 << self.m)
            for key, c in counts.counts.items():
                vec[int(key, 2)] = c
            out[i] = vec @ zs / shots
        return out

    def circuit(self, params, state: int):
        cfg = AnsatzConfig(self.n, self.layers, self.m, self.reupload, int(state), tuple(params),
                           self.template.entangler)
        return build_qrl_ansatz(cfg)


def random_params(n_params: int, rng: np.random.Generator, scale: float = math.pi) -> np.ndarray:
    return rng.uniform(-scale, scale, n_params)
