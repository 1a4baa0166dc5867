"""
Partitioned statevector execution.

``W = 2**g`` ranks each own one contiguous block of ``2**(n-g)`` amplitudes;
the ``g`` highest-index qubits are *global* and select the block (rank
``r`` holds indices ``r << L .. (r+1) << L`` with ``L = n - g``).  Every rank
runs the same gate loop:

* gates on local qubits update the block in place;
* gates that are diagonal on their global qubits (RZ, CZ, CP, and the
  control side of CX) reduce to a local phase or a local gate chosen by the
  rank's own global bits, with no messages;
* gates that are non-diagonal on a global qubit pair rank ``r`` with
  ``r ^ (1 << p)``; the partners swap half blocks, each updates the half it
  now holds, and the halves go back.  X is a plain whole-block swap.

Sampling reuses the serial sum tree: each rank reduces its block to a local
tree, rank 0 builds the top ``g`` levels from the block masses, routes each
shot's residual uniform to its rank, and the rank finishes the descent.
Because the pairwise sums are computed in the same order as on one
process, the resulting Counts match the serial engine exactly.
"""
from __future__ import annotations

import json
import math
import multiprocessing as mp
import threading
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import gates
from ..circuit import Circuit, GateKind, Instruction, require_valid
from ..sampling import build_sum_tree, descend
from ..simulator import (DEFAULT_CONFIG, Counts, _check_width, _counts_from_values, _terminal_map,
                         apply_unitary, decode_readout, mix, pair_views, run_shots, swap_arrays)
from .transport import Endpoint, InProcessTransport, SocketTransport, TransportError


class PartitionError(RuntimeError):
    """A rank failed; the distributed state is incomplete."""


def _log2_exact(w: int) -> int:
    if w < 1 or w & (w - 1):
        raise ValueError(f"worker count must be a power of two, got {w}")
    return w.bit_length() - 1


@dataclass
class Partition:
    rank: int
    size: int
    n: int
    block: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        self.g = _log2_exact(self.size)
        if self.n < self.g:
            raise ValueError(f"{self.n} qubits cannot be split over {self.size} workers")
        if not 0 <= self.rank < self.size:
            raise ValueError("rank out of range")
        if self.block is None:
            self.block = np.zeros(1 << self.local_qubits, dtype=complex)
            if self.rank == 0:
                self.block[0] = 1.0

    @property
    def local_qubits(self) -> int:
        return self.n - self.g

    def is_global(self, q: int) -> bool:
        return q >= self.local_qubits

    def global_bit(self, q: int) -> int:
        return (self.rank >> (q - self.local_qubits)) & 1

    def partner(self, q: int) -> int:
        return self.rank ^ (1 << (q - self.local_qubits))

    def norm_sq(self) -> float:
        return float(np.vdot(self.block, self.block).real)


# --------------------------------------------------------------- gate rules

def needs_exchange(inst: Instruction, local_qubits: int) -> bool:
    """True when ``inst`` acts non-diagonally on a global qubit."""
    k = inst.kind
    if not k.unitary or all(q < local_qubits for q in inst.qubits):
        return False
    if k in (GateKind.RZ, GateKind.CZ, GateKind.CP):
        return False
    if k is GateKind.CX:
        return inst.qubits[1] >= local_qubits
    return True


def exchange_rounds(circuit: Circuit, workers: int) -> int:
    """Number of gates whose execution moves amplitudes between ranks.

    SWAP between a local and a global qubit runs as three CX of which only
    the middle one targets the global qubit.
    """
    L = circuit.num_qubits - _log2_exact(workers)
    rounds = 0
    for inst in circuit.instructions:
        if inst.kind is GateKind.SWAP:
            a, b = inst.qubits
            if a >= L or b >= L:
                rounds += 1
        elif needs_exchange(inst, L):
            rounds += 1
    return rounds


def apply_local_gate(part: Partition, inst: Instruction) -> Partition:
    if any(part.is_global(q) for q in inst.qubits):
        raise ValueError(f"{inst} touches a global qubit")
    apply_unitary(part.block, inst)
    return part


def _phase(angle: float) -> complex:
    return complex(math.cos(angle), math.sin(angle))


def _exchange_1q(part: Partition, ep: Endpoint, tq: int, u: np.ndarray, tag, ctrl: int | None = None) -> None:
    """Apply ``u`` on global qubit ``tq`` (optionally only where local qubit ``ctrl`` is 1)."""
    peer = part.partner(tq)
    low = part.global_bit(tq) == 0
    L = part.local_qubits
    block = part.block
    if L == 0:
        ep.send(peer, block, tag)
        other = ep.recv(peer, tag)
        a0, a1 = (block, other) if low else (other, block)
        row = 0 if low else 1
        block[...] = u[row, 0] * a0 + u[row, 1] * a1
        return
    half = 1 << (L - 1)
    first, second = block[:half], block[half:]
    if low:
        ep.send(peer, second, tag)
        x0, x1 = first, ep.recv(peer, tag)
    else:
        ep.send(peer, first, tag)
        x0, x1 = ep.recv(peer, tag), second
    h = 0 if low else 1  # value of the top local bit in the half held here
    if ctrl is None:
        mix(x0, x1, u)
    elif ctrl == L - 1:
        if h == 1:
            mix(x0, x1, u)
    else:
        mix(pair_views(x0, ctrl)[1], pair_views(x1, ctrl)[1], u)
    if low:
        ep.send(peer, x1, tag)
        second[...] = ep.recv(peer, tag)
    else:
        ep.send(peer, x0, tag)
        first[...] = ep.recv(peer, tag)


def _block_swap(part: Partition, ep: Endpoint, peer: int, tag) -> None:
    ep.send(peer, part.block, tag)
    part.block[...] = ep.recv(peer, tag)


def apply_global_gate(part: Partition, inst: Instruction, ep: Endpoint, tag=None) -> Partition:
    """This rank's share of a gate touching at least one global qubit."""
    if not any(part.is_global(q) for q in inst.qubits):
        raise ValueError(f"{inst} is local; use apply_local_gate")
    kind, block = inst.kind, part.block
    try:
        if kind.arity == 1:
            q = inst.qubits[0]
            if kind is GateKind.RZ:
                block *= _phase(inst.angle / 2 if part.global_bit(q) else -inst.angle / 2)
            elif kind is GateKind.X:
                _block_swap(part, ep, part.partner(q), tag)
            else:
                _exchange_1q(part, ep, q, gates.matrix(inst), tag)
            return part
        a, b = inst.qubits
        ga, gb = part.is_global(a), part.is_global(b)
        if kind in (GateKind.CZ, GateKind.CP):
            phase = -1.0 if kind is GateKind.CZ else _phase(inst.angle)
            if ga and gb:
                if part.global_bit(a) and part.global_bit(b):
                    block *= phase
            else:
                g, loc = (a, b) if ga else (b, a)
                if part.global_bit(g):
                    pair_views(block, loc)[1][...] *= phase
        elif kind is GateKind.CX:
            if not gb:  # global control, local target
                if part.global_bit(a):
                    swap_arrays(*pair_views(block, b))
            elif ga:  # both global
                if part.global_bit(a):
                    _block_swap(part, ep, part.partner(b), tag)
            else:
                _exchange_1q(part, ep, b, gates.X, tag, ctrl=a)
        elif kind is GateKind.SWAP:
            if ga and gb:
                if part.global_bit(a) != part.global_bit(b):
                    peer = part.rank ^ (1 << (a - part.local_qubits)) ^ (1 << (b - part.local_qubits))
                    _block_swap(part, ep, peer, tag)
            else:
                g, loc = (a, b) if ga else (b, a)
                # outer CXs are controlled by the global qubit: only the middle one moves data
                for j, (c, t) in enumerate(((g, loc), (loc, g), (g, loc))):
                    cx = Instruction(GateKind.CX, (c, t))
                    if part.is_global(c) or part.is_global(t):
                        apply_global_gate(part, cx, ep, (tag, j))
                    else:
                        apply_local_gate(part, cx)
        else:
            raise ValueError(f"unsupported gate {kind.value}")
    except TransportError as exc:
        raise PartitionError(f"rank {part.rank}: exchange failed during {inst}: {exc}") from exc
    return part


# ------------------------------------------------------------- rank program

@dataclass
class PartitionedResult:
    counts: Counts
    state: np.ndarray | None
    workers: int
    exchange_rounds: int
    amplitude_messages: int
    bytes_sent: int
    rank_times: list[dict]
    fallback: bool = False

    def timing_json(self) -> str:
        return json.dumps({"workers": self.workers, "exchange_rounds": self.exchange_rounds,
                           "amplitude_messages": self.amplitude_messages, "bytes_sent": self.bytes_sent,
                           "ranks": self.rank_times}, indent=2, sort_keys=True)


def _rank_main(rank: int, ep: Endpoint, circuit: Circuit, shots: int, seed: int, gather: bool):
    """SPMD body; rank 0 returns the aggregated result tuple, others return None."""
    t0 = time.perf_counter()
    size = ep.size
    part = Partition(rank, size, circuit.num_qubits)
    L = part.local_qubits
    for idx, inst in enumerate(circuit.instructions):
        if not inst.kind.unitary:
            continue  # terminal measurements are sampled at the end
        if any(part.is_global(q) for q in inst.qubits):
            apply_global_gate(part, inst, ep, tag=idx)
        else:
            apply_local_gate(part, inst)
    t_gates = time.perf_counter()

    levels = build_sum_tree(np.abs(part.block) ** 2)
    mass = float(levels[0][0])
    if rank == 0:
        masses = np.empty(size)
        masses[0] = mass
        for r in range(1, size):
            masses[r] = ep.recv(r, "mass")
        top = build_sum_tree(masses)
        u = np.random.default_rng(seed).random(shots) * top[0][0]
        owner, resid = descend(top, u)
        for r in range(1, size):
            ep.send(r, resid[owner == r], "resid")
        indices = np.empty(shots, dtype=np.int64)
        mine = owner == 0
        indices[mine] = descend(levels, resid[mine])[0]
        for r in range(1, size):
            indices[owner == r] = (np.int64(r) << L) | ep.recv(r, "local")
    else:
        ep.send(0, mass, "mass")
        resid = ep.recv(0, "resid")
        ep.send(0, descend(levels, resid)[0], "local")
    t_sample = time.perf_counter()

    state = None
    if gather:
        if rank == 0:
            state = np.empty(1 << circuit.num_qubits, dtype=complex)
            state[: 1 << L] = part.block
            for r in range(1, size):
                state[r << L:(r + 1) << L] = ep.recv(r, "gather")
        else:
            ep.send(0, part.block, "gather")
    t_end = time.perf_counter()
    timing = {"rank": rank, "gate_time": t_gates - t0, "sample_time": t_sample - t_gates,
              "gather_time": t_end - t_sample, "total_time": t_end - t0, **ep.stats.to_dict()}
    rounds = {t for t in ep.stats.tags if not isinstance(t, str)}  # gate exchanges only
    if rank == 0:
        timings = [timing]
        for r in range(1, size):
            other, other_rounds = ep.recv(r, "timing")
            timings.append(other)
            rounds |= other_rounds
        values = decode_readout(indices, _terminal_map(circuit))
        return values, state, timings, rounds
    ep.send(0, (timing, rounds), "timing")
    return None


def _run_threads(circuit, shots, seed, workers, gather):
    hub = InProcessTransport(workers)
    results: dict[int, object] = {}
    errors: dict[int, str] = {}

    def target(r):
        ep = hub.endpoint(r)
        try:
            results[r] = _rank_main(r, ep, circuit, shots, seed, gather)
        except BaseException:
            errors[r] = traceback.format_exc()
            ep.abort()

    threads = [threading.Thread(target=target, args=(r,), name=f"rank{r}") for r in range(1, workers)]
    for t in threads:
        t.start()
    target(0)
    for t in threads:
        t.join()
    if errors:
        first = min(errors)
        raise PartitionError(f"rank {first} failed:\n{errors[first]}")
    return results[0]


def _socket_child(r, net, circuit, shots, seed, gather, pipe):
    ep = net.endpoint(r)
    try:
        out = _rank_main(r, ep, circuit, shots, seed, gather)
        pipe.send(("ok", out))
    except BaseException:
        pipe.send(("error", traceback.format_exc()))
    finally:
        ep.close()
        pipe.close()


def _run_processes(circuit, shots, seed, workers, gather):
    ctx = mp.get_context("fork")
    net = SocketTransport(workers)
    pipes, procs = [], []
    try:
        for r in range(workers):
            parent, child = ctx.Pipe(duplex=False)
            p = ctx.Process(target=_socket_child, args=(r, net, circuit, shots, seed, gather, child), daemon=True)
            p.start()
            child.close()
            pipes.append(parent)
            procs.append(p)
        replies = []
        for r, pipe in enumerate(pipes):
            try:
                replies.append(pipe.recv())
            except EOFError:
                replies.append(("error", f"rank {r} exited without reporting"))
    finally:
        for p in procs:
            p.join(timeout=30)
            if p.is_alive():
                p.terminate()
        net.close()
    for r, (status, payload) in enumerate(replies):
        if status != "ok":
            raise PartitionError(f"rank {r} failed:\n{payload}")
    return replies[0][1]


def partitioned_execute(circuit: Circuit, shots: int, seed: int, workers: int, *,
                        transport: str = "inprocess", gather: bool = False,
                        log_dir: str | Path | None = None, config=DEFAULT_CONFIG) -> PartitionedResult:
    """Run ``circuit`` over ``workers`` ranks; dynamic circuits fall back to the serial engine."""
    t_start = time.perf_counter()
    require_valid(circuit)
    _check_width(circuit, config.max_qubits)
    g = _log2_exact(workers)
    if circuit.num_qubits < g:
        raise ValueError(f"{circuit.num_qubits} qubits cannot be split over {workers} workers")
    if shots < 0:
        raise ValueError("shots must be non-negative")
    if circuit.is_dynamic():
        counts = run_shots(circuit, shots, seed, config=config)
        return PartitionedResult(counts, None, 1, 0, 0, 0, [], fallback=True)
    if transport == "inprocess":
        values, state, timings, rounds = _run_threads(circuit, shots, seed, workers, gather)
    elif transport == "socket":
        values, state, timings, rounds = _run_processes(circuit, shots, seed, workers, gather)
    else:
        raise ValueError(f"unknown transport {transport!r}")
    t_done = time.perf_counter()
    counts = Counts(_counts_from_values(values, circuit.num_clbits), shots, seed, {
        "execution_time": max(t["total_time"] for t in timings),
        "elapsed_time": t_done - t_start,
    })
    result = PartitionedResult(counts, state, workers, len(rounds),
                               sum(t["amplitude_messages"] for t in timings),
                               sum(t["bytes"] for t in timings), timings)
    if log_dir is not None:
        path = Path(log_dir)
        path.mkdir(parents=True, exist_ok=True)
        (path / f"rank_timing_{circuit.name}_w{workers}.json").write_text(result.timing_json())
    return result


def partitioned_run(circuit: Circuit, shots: int, seed: int, workers: int, **kwargs) -> Counts:
    return partitioned_execute(circuit, shots, seed, workers, **kwargs).counts
