"""Rectangular grid coupling maps."""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable


@dataclass(frozen=True)
class GridTopology:
    """``rows x cols`` nearest-neighbour grid; node ``r*cols + c`` sits at (r, c)."""

    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid dimensions must be positive")

    @property
    def num_nodes(self) -> int:
        return self.rows * self.cols

    def coords(self, node: int) -> tuple[int, int]:
        return divmod(node, self.cols)

    def node(self, row: int, col: int) -> int:
        return row * self.cols + col

    def neighbors(self, node: int) -> list[int]:
        r, c = self.coords(node)
        out = []
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            rr, cc = r + dr, c + dc
            if 0 <= rr < self.rows and 0 <= cc < self.cols:
                out.append(self.node(rr, cc))
        return out

    def adjacent(self, a: int, b: int) -> bool:
        (r1, c1), (r2, c2) = self.coords(a), self.coords(b)
        return abs(r1 - r2) + abs(c1 - c2) == 1

    def distance(self, a: int, b: int) -> int:
        (r1, c1), (r2, c2) = self.coords(a), self.coords(b)
        return abs(r1 - r2) + abs(c1 - c2)

    def edges(self) -> list[tuple[int, int]]:
        return [(a, b) for a in range(self.num_nodes) for b in self.neighbors(a) if a < b]

    def shortest_path(self, src: int, dst: int, preferred: Iterable[int] = ()) -> list[int]:
        """Shortest grid path; among equal lengths, the one crossing fewest non-preferred nodes."""
        pref = set(preferred)
        best = {src: (0, 0)}
        prev: dict[int, int] = {}
        heap = [(0, 0, src)]
        while heap:
            length, cost, node = heapq.heappop(heap)
            if node == dst:
                break
            if (length, cost) > best[node]:
                continue
            for nb in self.neighbors(node):
                key = (length + 1, cost + (0 if nb in pref or nb == dst else 1))
                if nb not in best or key < best[nb]:
                    best[nb] = key
                    prev[nb] = node
                    heapq.heappush(heap, (key[0], key[1], nb))
        path = [dst]
        while path[-1] != src:
            path.append(prev[path[-1]])
        return path[::-1]


def row_major_placement(num_qubits: int, topology: GridTopology) -> dict[int, int]:
    if num_qubits > topology.num_nodes:
        raise ValueError(f"{num_qubits} qubits do not fit on a {topology.rows}x{topology.cols} grid")
    return {q: q for q in range(num_qubits)}
