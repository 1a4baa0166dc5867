"""
Report emission from a run directory.

Result tables (``sweep.csv``, ``sweep.jsonl``, ``volumetric.csv``) hold only
seed-determined values printed at fixed precision, so reruns with the same
configuration are byte-identical.  Wall-clock numbers go to ``timing.csv``.
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Sequence

from . import plotting
from .metrics import SweepRecord, volumetric_points
from .sweep import RunManifest, load_instance_results, sweep_records

FLOAT_FMT = "{:.6f}"

SWEEP_FIELDS = ["width", "num_circuits", "mean_hellinger", "std_hellinger", "boot_hellinger",
                "mean_polarization", "std_polarization", "boot_polarization",
                "mean_algorithmic_depth", "mean_normalized_depth"]
TIMING_FIELDS = ["width", "mean_creation_time", "mean_elapsed_time", "mean_execution_time"]
VOLUMETRIC_FIELDS = ["width", "normalized_depth", "polarization_fidelity"]


def _fmt(v):
    return FLOAT_FMT.format(v) if isinstance(v, float) else v


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(header), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r[k]) for k in header})


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def series_from_records(records: Sequence[SweepRecord], metric: str = "polarization") -> dict:
    return {
        "width": [r.width for r in records],
        "mean": [getattr(r, f"mean_{metric}") for r in records],
        "err": [getattr(r, f"boot_{metric}") for r in records],
    }


def emit_reports(manifest: RunManifest, figures: bool = True) -> list[Path]:
    """Write tables (and figures) for the run in ``manifest.directory``."""
    out = Path(manifest.directory)
    seed = int(manifest.config.get("seed", 0))
    records = sweep_records(load_instance_results(out), seed=seed)
    written = []
    p = out / "sweep.csv"
    _write_csv(p, SWEEP_FIELDS, [r.row() for r in records])
    written.append(p)
    p = out / "sweep.jsonl"
    with open(p, "w") as fh:
        for r in records:
            fh.write(json.dumps({k: _fmt(v) for k, v in r.row().items()}, sort_keys=True) + "\n")
    written.append(p)
    p = out / "volumetric.csv"
    _write_csv(p, VOLUMETRIC_FIELDS, [dict(zip(VOLUMETRIC_FIELDS, pt)) for pt in volumetric_points(records)])
    written.append(p)
    p = out / "timing.csv"
    _write_csv(p, TIMING_FIELDS, [r.timing_row() for r in records])
    written.append(p)
    if figures:
        label = manifest.config.get("label") or manifest.config.get("benchmark", "")
        written += plotting.fidelity_vs_width({label: series_from_records(records)}, out / "fidelity_vs_width",
                                              title=str(manifest.config.get("benchmark", "")))
        written += plotting.volumetric(volumetric_points(records), out / "volumetric")
    manifest.files.update({q.name: sha256_file(q) for q in written})
    for extra in ("instances.jsonl", "instance_timing.jsonl"):
        if (out / extra).exists():
            manifest.files[extra] = sha256_file(out / extra)
    return written


def write_manifest(manifest: RunManifest) -> Path:
    """Atomic write; the manifest is the run's completion marker."""
    out = Path(manifest.directory)
    target = out / "manifest.json"
    fd, tmp = tempfile.mkstemp(dir=out, prefix=".manifest.", suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, target)
    return target


def verify_manifest(manifest: RunManifest) -> list[str]:
    """Names of listed files that are missing or whose hash changed."""
    out = Path(manifest.directory)
    bad = []
    for name, digest in manifest.files.items():
        p = out / name
        if not p.exists() or sha256_file(p) != digest:
            bad.append(name)
    return bad


def compare_manifests(manifests: Sequence[RunManifest], path: Path, metric: str = "polarization") -> list[Path]:
    """Overlay several runs (e.g. with and without crosstalk) on one fidelity chart."""
    series = {}
    for m in manifests:
        records = sweep_records(load_instance_results(m.directory), seed=int(m.config.get("seed", 0)))
        label = m.config.get("label") or Path(m.directory).name
        series[label] = series_from_records(records, metric)
    return plotting.fidelity_vs_width(series, Path(path), metric=metric)
