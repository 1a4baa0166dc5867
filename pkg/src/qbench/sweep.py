"""
Width sweeps: generate, execute, score and persist benchmark circuits.

Raw per-instance results go to ``instances.jsonl`` (deterministic fields
only) and ``instance_timing.jsonl``; the tables and figures are derived by
:mod:`qbench.report`, and ``manifest.json`` is written last as the
completion marker.
"""
from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .benchmarks import BenchmarkInstance, GENERATORS, generate, instances_per_width
from .circuit import algorithmic_depth, to_json
from .distributed import partitioned_run
from .metrics import FidelityReport, InstanceResult, aggregate_sweep
from .noise import NoiseModel, NoiseSpec, sample_noise_model
from .simulator import Counts, run_shots
from .topology import GridTopology
from .transpile import transpile

log = logging.getLogger(__name__)

ENGINES = ("serial", "partitioned")


@dataclass(frozen=True)
class SweepConfig:
    benchmark: str = "qft1"
    min_qubits: int = 2
    max_qubits: int = 6
    skip_qubits: int = 1
    max_circuits: int | None = 3  # None: m = min(2^n, 10)
    num_shots: int = 1000
    dynamic: bool = False
    nonoise: bool = True
    crosstalk: bool = False
    sigma_h: float = 5e-4
    s_max: float = 5e-4
    h_zz: float = 1e-2
    grid: tuple[int, int] = (12, 12)
    engine: str = "serial"
    workers: int = 1
    transport: str = "inprocess"
    seed: int = 0
    noise_seed: int | None = None
    output_dir: str = "qbench_out"
    jobs: int = 1
    get_circuits: bool = False
    # qrl-ansatz options
    num_layers: int = 5
    init_state: int | None = None
    n_measurements: int | None = None
    data_reupload: bool = False
    label: str = ""

    def __post_init__(self):
        if self.benchmark not in GENERATORS:
            raise ValueError(f"unknown benchmark {self.benchmark!r}; choose from {sorted(GENERATORS)}")
        if not 1 <= self.min_qubits <= self.max_qubits:
            raise ValueError("need 1 <= min_qubits <= max_qubits")
        if self.skip_qubits < 1:
            raise ValueError("skip_qubits must be >= 1")
        if self.max_circuits is not None and self.max_circuits < 1:
            raise ValueError("max_circuits must be >= 1")
        if self.num_shots < 1:
            raise ValueError("num_shots must be >= 1")
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}")
        if self.workers < 1 or self.workers & (self.workers - 1):
            raise ValueError("workers must be a power of two")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        object.__setattr__(self, "grid", tuple(self.grid))
        if len(self.grid) != 2 or min(self.grid) < 1:
            raise ValueError("grid must be (rows, cols)")

    @property
    def widths(self) -> list[int]:
        return list(range(self.min_qubits, self.max_qubits + 1, self.skip_qubits))

    def circuits_for(self, width: int) -> int:
        return self.max_circuits if self.max_circuits is not None else instances_per_width(width)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = list(self.grid)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown sweep options: {sorted(unknown)}")
        return cls(**d)


@dataclass
class RunManifest:
    config: dict
    noise: dict | None
    widths: list[dict] = field(default_factory=list)  # {"width", "status", "error"?}
    files: dict[str, str] = field(default_factory=dict)  # name -> sha256
    versions: dict = field(default_factory=dict)
    started: str = ""
    finished: str = ""
    directory: str = ""

    @property
    def failed_widths(self) -> list[int]:
        return [w["width"] for w in self.widths if w["status"] != "ok"]

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("directory")
        return d

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        path = Path(path)
        if path.is_dir():
            path = path / "manifest.json"
        d = json.loads(path.read_text())
        return cls(directory=str(path.parent), **d)


def _instance_seed(seed: int, width: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, width, index]).generate_state(1)[0])


def _generator_options(cfg: SweepConfig) -> dict:
    if cfg.benchmark != "qrl-ansatz":
        return {}
    return {"num_layers": cfg.num_layers, "init_state": cfg.init_state,
            "n_measurements": cfg.n_measurements, "data_reupload": cfg.data_reupload}


def build_noise(cfg: SweepConfig) -> NoiseModel | None:
    if cfg.nonoise:
        return None
    topo = GridTopology(*cfg.grid)
    spec = NoiseSpec(cfg.sigma_h, cfg.s_max, cfg.h_zz, cfg.crosstalk)
    seed = cfg.noise_seed if cfg.noise_seed is not None else cfg.seed
    return sample_noise_model(spec, topo, seed)


def execute_instance(inst: BenchmarkInstance, cfg: SweepConfig, noise: NoiseModel | None,
                     topology: GridTopology, seed: int) -> tuple[Counts, dict]:
    """Route + lower (for depth and noisy runs), then execute on the chosen engine."""
    routed = transpile(inst.circuit, topology)
    depths = {"algorithmic_depth": algorithmic_depth(inst.circuit),
              "normalized_depth": algorithmic_depth(routed.circuit)}
    if noise is not None:
        counts = run_shots(routed.circuit, cfg.num_shots, seed, noise)
    elif cfg.engine == "partitioned" and cfg.workers > 1 and inst.circuit.num_qubits >= cfg.workers.bit_length() - 1:
        counts = partitioned_run(inst.circuit, cfg.num_shots, seed, cfg.workers, transport=cfg.transport)
    else:
        counts = run_shots(inst.circuit, cfg.num_shots, seed)
    return counts, depths


def _utc() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def run_sweep(cfg: SweepConfig, emit: bool = True) -> RunManifest:
    """Execute every width; a failing width is recorded and the sweep moves on."""
    from . import __version__
    from .report import emit_reports, write_manifest

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    noise = build_noise(cfg)
    topo = GridTopology(*cfg.grid)
    manifest = RunManifest(cfg.to_dict(), noise.to_dict() if noise else None,
                           versions={"qbench": __version__, "numpy": np.__version__},
                           started=_utc(), directory=str(out))
    inst_path, time_path = out / "instances.jsonl", out / "instance_timing.jsonl"
    circ_dir = out / "circuits"
    if cfg.get_circuits:
        circ_dir.mkdir(exist_ok=True)
    with open(inst_path, "w") as fi, open(time_path, "w") as ft:
        for width in cfg.widths:
            try:
                t0 = time.perf_counter()
                batch = generate(cfg.benchmark, width, cfg.circuits_for(width),
                                 np.random.SeedSequence([cfg.seed, width]).generate_state(1)[0],
                                 cfg.dynamic, **_generator_options(cfg))
                creation = (time.perf_counter() - t0) / max(len(batch), 1)

                def job(item):
                    idx, inst = item
                    seed = _instance_seed(cfg.seed, width, idx)
                    return idx, inst, seed, *execute_instance(inst, cfg, noise, topo, seed)

                if cfg.jobs > 1:
                    with ThreadPoolExecutor(cfg.jobs) as pool:
                        done = list(pool.map(job, enumerate(batch)))
                else:
                    done = [job(item) for item in enumerate(batch)]
                lines, tlines = [], []
                for idx, inst, seed, counts, depths in done:
                    fid = FidelityReport.from_counts(counts, inst.expected)
                    lines.append(json.dumps({
                        "width": width, "index": idx, "family": inst.family, "name": inst.circuit.name,
                        "params": inst.params, "seed": seed, "shots": counts.shots,
                        "counts": counts.counts, "expected": inst.expected,
                        "hellinger_fidelity": fid.hellinger_fidelity,
                        "polarization_fidelity": fid.polarization_fidelity, **depths,
                    }, sort_keys=True))
                    tlines.append(json.dumps({"width": width, "index": idx, "creation_time": creation,
                                              **counts.times}, sort_keys=True))
                    if cfg.get_circuits:
                        (circ_dir / f"{inst.circuit.name}.json").write_text(to_json(inst.circuit))
                fi.write("".join(line + "\n" for line in lines))
                ft.write("".join(line + "\n" for line in tlines))
                manifest.widths.append({"width": width, "status": "ok", "instances": len(done)})
                log.info("width %d: %d circuits done", width, len(done))
            except Exception as exc:  # noqa: BLE001 - recorded, sweep continues
                log.exception("width %d failed", width)
                manifest.widths.append({"width": width, "status": "error", "error": f"{type(exc).__name__}: {exc}"})
    if emit:
        emit_reports(manifest)
    manifest.finished = _utc()
    write_manifest(manifest)
    return manifest


def load_instance_results(directory: str | Path) -> list[InstanceResult]:
    """Re-score persisted counts; fidelities are recomputed, not read back."""
    directory = Path(directory)
    timing = {}
    tpath = directory / "instance_timing.jsonl"
    if tpath.exists():
        for line in tpath.read_text().splitlines():
            t = json.loads(line)
            timing[(t["width"], t["index"])] = t
    results = []
    ipath = directory / "instances.jsonl"
    for line in ipath.read_text().splitlines() if ipath.exists() else []:
        rec = json.loads(line)
        fid = FidelityReport.from_counts(Counts(rec["counts"], rec["shots"]), rec["expected"])
        t = timing.get((rec["width"], rec["index"]), {})
        results.append(InstanceResult(rec["width"], fid, t.get("creation_time", 0.0), t.get("elapsed_time", 0.0),
                                      t.get("execution_time", 0.0), rec["algorithmic_depth"],
                                      rec["normalized_depth"]))
    return results


def sweep_records(results: list[InstanceResult], seed: int = 0):
    by_width: dict[int, list[InstanceResult]] = {}
    for r in results:
        by_width.setdefault(r.width, []).append(r)
    return [aggregate_sweep(by_width[w], seed=seed) for w in sorted(by_width)]
