"""Quick invariant checks runnable from the command line."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .benchmarks import generate_qft_method1, generate_qft_method2, generate_qpe
from .distributed import partitioned_run
from .metrics import hellinger_fidelity, polarization_fidelity
from .qrl import AnsatzExecutor, FrozenLakeEnv, TrainConfig, Transition, batch_loss, gradient_parameter_shift
from .simulator import exact_distribution, run_shots, total_variation
from .topology import GridTopology
from .transpile import in_basis, transpile


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def check_deferred_measurement(widths=range(2, 7)) -> str:
    worst = 0.0
    for n in widths:
        for gen, arg in ((generate_qft_method1, 3 % 2 ** n), (generate_qft_method2, 1), (generate_qpe, 0.3)):
            size = n - 1 if gen is generate_qpe else n
            if size < 1:
                continue
            a, b = gen(size, arg, False), gen(size, arg, True)
            worst = max(worst, total_variation(exact_distribution(a.circuit), exact_distribution(b.circuit)))
    assert worst < 1e-9, f"max TV {worst:.3g}"
    return f"max TV {worst:.2e}"


def check_routing(n=5) -> str:
    inst = generate_qft_method1(n, 6)
    routed = transpile(inst.circuit, GridTopology(3, 3))
    assert in_basis(routed.circuit)
    tv = total_variation(exact_distribution(inst.circuit), exact_distribution(routed.circuit))
    assert tv < 1e-9, f"TV {tv:.3g}"
    return f"{routed.swaps} swaps, TV {tv:.2e}"


def check_distributed(n=8) -> str:
    inst = generate_qft_method2(n, 77 % 2 ** n)
    ref = run_shots(inst.circuit, 500, 11).counts
    for w in (2, 4, 8):
        assert partitioned_run(inst.circuit, 500, 11, w).counts == ref, f"W={w} differs"
    return "W=2,4,8 identical counts"


def check_metrics() -> str:
    assert hellinger_fidelity({"01": 5}, {"01": 1.0}) == 1.0
    assert hellinger_fidelity({"01": 5}, {"10": 1.0}) == 0.0
    uniform = {k: 1 for k in ("00", "01", "10", "11")}
    assert math.isclose(hellinger_fidelity(uniform, {"00": 1.0}), 0.25)
    assert polarization_fidelity(0.25, 4) == 0.0
    return "closed-form anchors hold"


def check_environment() -> str:
    env = FrozenLakeEnv("4x4")
    assert env.transition(0, 0) == (0, 0.0, True)
    assert env.transition(14, 2) == (15, 1.0, True)
    return "off-grid and goal rules hold"


def check_parameter_shift(trials=5) -> str:
    rng = np.random.default_rng(3)
    ex = AnsatzExecutor(4, 3, 4, True)
    cfg = TrainConfig()
    worst = 0.0
    for _ in range(trials):
        p = rng.uniform(-math.pi, math.pi, ex.num_params)
        batch = [Transition(int(rng.integers(16)), int(rng.integers(4)), float(rng.integers(2)),
                            int(rng.integers(16)), bool(rng.integers(2))) for _ in range(4)]
        targets = rng.uniform(-1, 1, len(batch))
        g, _ = gradient_parameter_shift(p, batch, ex, cfg, targets=targets)
        h = 1e-5
        fd = np.array([(batch_loss(p + h * e, batch, targets, ex) - batch_loss(p - h * e, batch, targets, ex)) / (2 * h)
                       for e in np.eye(p.size)])
        worst = max(worst, float(np.max(np.abs(g - fd))))
    assert worst < 1e-4, f"max deviation {worst:.3g}"
    return f"max |shift - fd| {worst:.2e}"


CHECKS: dict[str, Callable[[], str]] = {
    "deferred-measurement": check_deferred_measurement,
    "routing": check_routing,
    "distributed": check_distributed,
    "metrics": check_metrics,
    "environment": check_environment,
    "parameter-shift": check_parameter_shift,
}


def run_checks(names=None) -> list[CheckResult]:
    out = []
    for name in names or CHECKS:
        t0 = time.perf_counter()
        try:
            detail, ok = CHECKS[name](), True
        except AssertionError as exc:
            detail, ok = str(exc) or "assertion failed", False
        except Exception as exc:  # noqa: BLE001 - reported as a failed check
            detail, ok = f"{type(exc).__name__}: {exc}", False
        out.append(CheckResult(name, ok, detail, time.perf_counter() - t0))
    return out
