"""
Fidelity measures, bootstrap error bars and per-width aggregation.
"""
from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .simulator import Counts


def _normalize(dist: Mapping[str, float]) -> dict[str, float]:
    total = float(sum(dist.values()))
    if total <= 0:
        raise ValueError("distribution has no mass")
    return {k: v / total for k, v in dist.items()}


def _width(dist: Mapping[str, float]) -> int | None:
    widths = {len(k) for k in dist}
    if len(widths) > 1:
        raise ValueError("bitstrings of mixed width")
    return widths.pop() if widths else None


def hellinger_fidelity(measured: Counts | Mapping[str, float], expected: Mapping[str, float]) -> float:
    """``(sum_i sqrt(p_i q_i))**2`` over the shared support."""
    p = _normalize(measured.counts if isinstance(measured, Counts) else measured)
    q = _normalize(expected)
    wp, wq = _width(p), _width(q)
    if wp is not None and wq is not None and wp != wq:
        raise ValueError(f"readout widths differ: {wp} vs {wq}")
    shared = p.keys() & q.keys()
    if len(shared) == 1:  # point-mass case: skip the sqrt/square round trip
        k = shared.pop()
        return min(1.0, p[k] * q[k])
    overlap = math.fsum(math.sqrt(p[k] * q[k]) for k in shared)
    return min(1.0, overlap ** 2)


def polarization_fidelity(f_h: float, d: int) -> float:
    """Rescale so the uniform distribution scores 0; clamped at 0."""
    if d < 2:
        raise ValueError("dimension must be >= 2")
    return max(0.0, (f_h - 1.0 / d) / (1.0 - 1.0 / d))


def bootstrap_std(values: Sequence[float], resamples: int = 1000, seed: int = 0) -> float:
    """Standard deviation of the means of ``resamples`` bootstrap resamples."""
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        raise ValueError("bootstrap needs at least one value")
    if resamples < 1:
        raise ValueError("resamples must be positive")
    if vals.size == 1 or np.all(vals == vals[0]):
        return 0.0
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, vals.size, size=(resamples, vals.size))
    return float(vals[idx].mean(axis=1).std())


@dataclass(frozen=True)
class FidelityReport:
    hellinger_fidelity: float
    polarization_fidelity: float
    dimension: int

    @classmethod
    def from_counts(cls, measured: Counts | Mapping[str, float], expected: Mapping[str, float]) -> "FidelityReport":
        width = _width(expected) or (measured.width if isinstance(measured, Counts) else _width(measured)) or 1
        d = 2 ** width
        fh = hellinger_fidelity(measured, expected)
        return cls(fh, polarization_fidelity(fh, d), d)


@dataclass(frozen=True)
class InstanceResult:
    """One executed benchmark circuit, ready for aggregation."""
    width: int
    fidelity: FidelityReport
    creation_time: float = 0.0
    elapsed_time: float = 0.0
    execution_time: float = 0.0
    algorithmic_depth: int = 0
    normalized_depth: int = 0


@dataclass(frozen=True)
class SweepRecord:
    width: int
    instances: tuple[FidelityReport, ...]
    mean_hellinger: float
    std_hellinger: float
    mean_polarization: float
    std_polarization: float
    boot_hellinger: float
    boot_polarization: float
    mean_creation_time: float
    mean_elapsed_time: float
    mean_execution_time: float
    mean_algorithmic_depth: float
    mean_normalized_depth: float
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def num_instances(self) -> int:
        return len(self.instances)

    def row(self) -> dict:
        return {
            "width": self.width, "num_circuits": self.num_instances,
            "mean_hellinger": self.mean_hellinger, "std_hellinger": self.std_hellinger,
            "boot_hellinger": self.boot_hellinger, "mean_polarization": self.mean_polarization,
            "std_polarization": self.std_polarization, "boot_polarization": self.boot_polarization,
            "mean_algorithmic_depth": self.mean_algorithmic_depth,
            "mean_normalized_depth": self.mean_normalized_depth,
        }

    def timing_row(self) -> dict:
        return {"width": self.width, "mean_creation_time": self.mean_creation_time,
                "mean_elapsed_time": self.mean_elapsed_time, "mean_execution_time": self.mean_execution_time}


def _std(xs) -> float:
    return statistics.pstdev(xs) if len(xs) > 1 else 0.0


def aggregate_sweep(results: Sequence[InstanceResult], resamples: int = 1000, seed: int = 0) -> SweepRecord:
    if not results:
        raise ValueError("nothing to aggregate")
    widths = {r.width for r in results}
    if len(widths) != 1:
        raise ValueError(f"mixed widths in one sweep record: {sorted(widths)}")
    fh = [r.fidelity.hellinger_fidelity for r in results]
    fp = [r.fidelity.polarization_fidelity for r in results]
    mean = lambda xs: math.fsum(xs) / len(xs)  # noqa: E731
    return SweepRecord(
        width=widths.pop(),
        instances=tuple(r.fidelity for r in results),
        mean_hellinger=mean(fh), std_hellinger=_std(fh),
        mean_polarization=mean(fp), std_polarization=_std(fp),
        boot_hellinger=bootstrap_std(fh, resamples, seed),
        boot_polarization=bootstrap_std(fp, resamples, seed),
        mean_creation_time=mean([r.creation_time for r in results]),
        mean_elapsed_time=mean([r.elapsed_time for r in results]),
        mean_execution_time=mean([r.execution_time for r in results]),
        mean_algorithmic_depth=mean([r.algorithmic_depth for r in results]),
        mean_normalized_depth=mean([r.normalized_depth for r in results]),
    )


def volumetric_points(records: Sequence[SweepRecord]) -> list[tuple[int, float, float]]:
    """(width, depth, fidelity) triples for volumetric plots."""
    return [(r.width, r.mean_normalized_depth, r.mean_polarization) for r in records]
