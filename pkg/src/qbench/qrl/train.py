"""
Quantum deep Q-learning on FrozenLake.

The policy network is the RY/RZ/CZ ansatz; Q(s, a) is the raw ``<Z_a>`` of
measured qubit ``a``.  Circuit evaluations are counted per executed circuit:

* exploit step: 1 (the forward Q query);
* ADAM update:  B forward + B target + 2 * |params| * B shifted circuits;
* SPSA update:  B target + 2 * B (two perturbed loss evaluations).

where ``B`` is the batch size.  Exploration steps run no circuits.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from ..noise import NoiseSpec, sample_noise_model
from .buffer import ReplayBuffer
from .env import FrozenLakeEnv, Transition, ansatz_width
from .executor import AnsatzExecutor
from .optim import AdamHyper, AdamState, SPSACoeffs, adam_step, spsa_step

OPTIMIZERS = ("ADAM", "SPSA")
SHIFT = math.pi / 2


@dataclass(frozen=True)
class TrainConfig:
    total_steps: int = 200
    learning_start: int = 100
    params_update: int = 10
    target_update: int = 10
    batch_size: int = 16
    exploration_fraction: float = 0.5
    tau: float = 1.0
    num_layers: int = 3
    n_measurements: int | None = None
    num_shots: int | None = None  # None/0: exact expectation values
    data_reupload: bool = True
    nonoise: bool = True
    optimizer: str = "ADAM"
    gamma: float = 0.99
    seed: int = 0
    map_name: str = "4x4"
    buffer_capacity: int = 10000
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_fixed: float | None = None
    lr: float = 0.05
    spsa_a: float = 0.2
    spsa_c: float = 0.1
    spsa_A: float = 10.0
    init_scale: float = math.pi
    max_episode_steps: int | None = -1
    noise_sigma_h: float = 5e-4
    noise_s_max: float = 5e-4

    def __post_init__(self):
        if self.total_steps < 1 or not 0 <= self.learning_start < self.total_steps:
            raise ValueError("need 0 <= learning_start < total_steps")
        if self.params_update < 1 or self.target_update < 1:
            raise ValueError("update intervals must be positive")
        if not 1 <= self.batch_size <= self.buffer_capacity:
            raise ValueError("batch_size must lie in [1, buffer_capacity]")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if not 0 < self.tau <= 1:
            raise ValueError("tau must lie in (0, 1]")
        if not 0 < self.exploration_fraction <= 1:
            raise ValueError("exploration_fraction must lie in (0, 1]")
        if self.optimizer.upper() not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")
        if self.eps_fixed is not None and not 0 <= self.eps_fixed <= 1:
            raise ValueError("eps_fixed must be a probability")
        object.__setattr__(self, "optimizer", self.optimizer.upper())

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown training options: {sorted(unknown)}")
        return cls(**d)


PRESETS = {
    # fixed-epsilon 200-step schedule used to compare optimizer cost
    "cost": dict(total_steps=200, learning_start=100, params_update=10, target_update=10,
                 batch_size=16, num_layers=3, data_reupload=True, eps_fixed=0.5),
    # learnability run on the 4x4 map in exact mode (tuned once, then frozen)
    "learn": dict(total_steps=2000, learning_start=100, params_update=1, target_update=20, tau=1.0,
                  batch_size=16, num_layers=5, data_reupload=True, exploration_fraction=0.4,
                  lr=0.02, gamma=0.9, optimizer="ADAM", seed=1),
}


def epsilon(step: int, config: TrainConfig) -> float:
    if config.eps_fixed is not None:
        return config.eps_fixed
    window = config.exploration_fraction * config.total_steps
    if step >= window:
        return config.eps_end
    return config.eps_start + (config.eps_end - config.eps_start) * step / window


def q_values(params: np.ndarray, state: int, executor: AnsatzExecutor, config: TrainConfig | None = None) -> np.ndarray:
    return executor.expectations(params[None, :], np.array([state]))[0]


def _batch_arrays(batch: Sequence[Transition]):
    s = np.array([t.state for t in batch])
    a = np.array([t.action for t in batch])
    r = np.array([t.reward for t in batch], dtype=float)
    s2 = np.array([t.next_state for t in batch])
    d = np.array([t.done for t in batch], dtype=float)
    return s, a, r, s2, d


def bellman_targets(target_params, batch, executor: AnsatzExecutor, gamma: float) -> np.ndarray:
    _, _, r, s2, d = _batch_arrays(batch)
    q_next = executor.expectations(target_params[None, :], s2)
    return r + gamma * (1.0 - d) * q_next.max(axis=1)


def batch_loss(params, batch, targets, executor: AnsatzExecutor) -> float:
    s, a, *_ = _batch_arrays(batch)
    q = executor.expectations(params[None, :], s)[np.arange(len(batch)), a]
    return float(np.mean((q - targets) ** 2))


def gradient_parameter_shift(params: np.ndarray, batch: Sequence[Transition], executor: AnsatzExecutor,
                             config: TrainConfig, target_params: np.ndarray | None = None,
                             targets: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    """Gradient of the mean-squared Bellman error; returns ``(grad, loss)``.

    The targets are held fixed (semi-gradient).  Every parameter is shifted by
    +-pi/2, so one gradient runs ``2 * |params|`` batches of ``len(batch)`` circuits.
    """
    if not batch:
        raise ValueError("empty batch")
    if targets is None:
        tp = params if target_params is None else target_params
        targets = bellman_targets(tp, batch, executor, config.gamma)
    s, a, *_ = _batch_arrays(batch)
    B, P = len(batch), params.size
    rows = np.arange(B)
    q = executor.expectations(params[None, :], s)[rows, a]
    resid = q - targets
    shifted = np.repeat(params[None, :], 2 * P, axis=0)
    k = np.arange(P)
    shifted[2 * k, k] += SHIFT
    shifted[2 * k + 1, k] -= SHIFT
    qs = executor.expectations(np.repeat(shifted, B, axis=0), np.tile(s, 2 * P))
    qs = qs[np.arange(2 * P * B), np.tile(a, 2 * P)].reshape(P, 2, B)
    dq = (qs[:, 0, :] - qs[:, 1, :]) / 2
    grad = (2.0 / B) * dq @ resid
    return grad, float(np.mean(resid ** 2))


@dataclass
class StepRecord:
    step: int
    epsilon: float
    explore: bool
    action: int
    reward: float
    done: bool
    circuit_evaluations: int
    cumulative_circuit_evaluations: int
    environment_evaluations: int
    gradient_evaluations: int
    update: bool


@dataclass
class QRLRunStats:
    config: dict
    steps: list[StepRecord] = field(default_factory=list)
    total_steps: int = 0
    explore_steps: int = 0
    exploit_steps: int = 0
    circuit_evaluations: int = 0
    forward_evaluations: int = 0
    update_events: int = 0
    gradient_evaluations: int = 0   # ADAM: 2*|params| shifted batches per event; SPSA: 2 loss evaluations
    loss_evaluations: int = 0
    episodes: int = 0
    successes: int = 0
    episode_returns: list[float] = field(default_factory=list)
    episode_end_steps: list[int] = field(default_factory=list)
    quantum_time: float = 0.0
    environment_time: float = 0.0
    gradient_time: float = 0.0
    total_time: float = 0.0
    final_params: list[float] = field(default_factory=list)

    @property
    def success_rate(self) -> float:
        return self.successes / self.episodes if self.episodes else 0.0

    @property
    def mean_return(self) -> float:
        return float(np.mean(self.episode_returns)) if self.episode_returns else 0.0

    @property
    def run_return(self) -> float:
        return float(sum(self.episode_returns))

    def final_quartile_success(self) -> float:
        """Goal rate over the last quarter of completed episodes."""
        n = len(self.episode_returns)
        if n == 0:
            return 0.0
        tail = self.episode_returns[n - max(1, math.ceil(n / 4)):]
        return sum(r > 0 for r in tail) / len(tail)

    def summary(self) -> dict:
        return {
            "total_steps": self.total_steps, "explore_steps": self.explore_steps,
            "exploit_steps": self.exploit_steps, "circuit_evaluations": self.circuit_evaluations,
            "update_events": self.update_events, "gradient_evaluations": self.gradient_evaluations,
            "loss_evaluations": self.loss_evaluations, "episodes": self.episodes,
            "successes": self.successes, "success_rate": self.success_rate,
            "mean_return_per_episode": self.mean_return, "run_return": self.run_return,
            "quantum_time": self.quantum_time, "environment_time": self.environment_time,
            "gradient_time": self.gradient_time, "total_time": self.total_time,
        }

    def console_summary(self) -> str:
        s = self.summary()
        steps = max(self.total_steps, 1)
        lines = [
            "QRL training summary",
            f"  optimizer              {self.config.get('optimizer')}",
            f"  total steps            {s['total_steps']}",
            f"  exploration steps      {s['explore_steps']}",
            f"  exploitation steps     {s['exploit_steps']}",
            f"  circuit evaluations    {s['circuit_evaluations']}",
            f"  gradient evaluations   {s['gradient_evaluations']}",
            f"  parameter updates      {s['update_events']}",
            f"  episodes completed     {s['episodes']}",
            f"  successes              {s['successes']}",
            f"  success rate           {s['success_rate']:.3f}",
            f"  avg return / episode   {s['mean_return_per_episode']:.3f}",
            f"  return (run)           {s['run_return']:.1f}",
            f"  quantum time           {s['quantum_time']:.3f} s  ({s['quantum_time'] / steps * 1e3:.3f} ms/step)",
            f"  environment time       {s['environment_time']:.3f} s  ({s['environment_time'] / steps * 1e3:.3f} ms/step)",
            f"  gradient time          {s['gradient_time']:.3f} s  ({s['gradient_time'] / steps * 1e3:.3f} ms/step)",
            f"  total time             {s['total_time']:.3f} s",
        ]
        return "\n".join(lines)

    def write_jsonl(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for rec in self.steps:
                fh.write(json.dumps(asdict(rec), sort_keys=True) + "\n")

    def write_summary(self, path: str | Path) -> None:
        out = {"config": self.config, "summary": self.summary(),
               "episode_returns": self.episode_returns, "episode_end_steps": self.episode_end_steps,
               "final_params": self.final_params}
        Path(path).write_text(json.dumps(out, indent=2, sort_keys=True))


def make_executor(config: TrainConfig, env: FrozenLakeEnv, seed: int) -> AnsatzExecutor:
    n = ansatz_width(env)
    m = config.n_measurements or env.num_actions
    if m < env.num_actions:
        raise ValueError(f"need at least {env.num_actions} measured qubits, one per action")
    noise = None
    if not config.nonoise:
        noise = sample_noise_model(NoiseSpec(config.noise_sigma_h, config.noise_s_max), None, seed)
    return AnsatzExecutor(n, config.num_layers, m, config.data_reupload,
                          config.num_shots or None, noise, seed)


def train(config: TrainConfig, initial_params: np.ndarray | None = None, policy=None) -> QRLRunStats:
    """Run the epsilon-greedy Q-learning loop.

    ``policy`` (state -> action) replaces the greedy choice on exploit steps;
    used to inject a hand-made policy.
    """
    t_run = time.perf_counter()
    ss = np.random.SeedSequence(config.seed)
    rng_eps, rng_act, rng_batch, rng_init, rng_opt, rng_exec = (np.random.default_rng(s) for s in ss.spawn(6))
    env = FrozenLakeEnv(config.map_name, config.max_episode_steps)
    ex = make_executor(config, env, int(rng_exec.integers(2 ** 31)))
    P = ex.num_params
    params = (rng_init.uniform(-config.init_scale, config.init_scale, P)
              if initial_params is None else np.array(initial_params, dtype=float))
    if params.shape != (P,):
        raise ValueError(f"expected {P} initial parameters")
    target = params.copy()
    buffer = ReplayBuffer(config.buffer_capacity)
    adam = AdamState.zeros(P)
    hp = AdamHyper(lr=config.lr)
    spsa = SPSACoeffs(config.spsa_a, config.spsa_c, config.spsa_A)
    stats = QRLRunStats(config=asdict(config))
    state = env.reset()
    ep_return = 0.0

    for step in range(config.total_steps):
        eps = epsilon(step, config)
        before = ex.evaluations
        q0 = ex.exec_time
        explore = bool(rng_eps.random() < eps)
        if explore:
            action = int(rng_act.integers(env.num_actions))
            stats.explore_steps += 1
        else:
            stats.exploit_steps += 1
            if policy is not None:
                action = int(policy(state))
            else:
                q = q_values(params, state, ex, config)[: env.num_actions]
                action = int(np.argmax(q))
                stats.forward_evaluations += 1
        t_env = time.perf_counter()
        tr = env.step(action)
        stats.environment_time += time.perf_counter() - t_env
        buffer.append(tr)
        ep_return += tr.reward
        if tr.done or tr.truncated:
            stats.episodes += 1
            stats.successes += int(tr.reward > 0)
            stats.episode_returns.append(ep_return)
            stats.episode_end_steps.append(step)
            ep_return = 0.0
            state = env.reset()
        else:
            state = tr.next_state

        grads = 0
        updated = False
        if step >= config.learning_start and step % config.params_update == 0 and len(buffer) >= config.batch_size:
            t_grad = time.perf_counter()
            batch = buffer.sample(config.batch_size, rng_batch)
            targets = bellman_targets(target, batch, ex, config.gamma)
            if config.optimizer == "ADAM":
                g, _ = gradient_parameter_shift(params, batch, ex, config, targets=targets)
                params, adam = adam_step(params, g, adam, hp)
                grads = 2 * P
            else:
                params = spsa_step(params, lambda th: batch_loss(th, batch, targets, ex),
                                   stats.update_events, spsa, rng_opt)
                grads = 2
                stats.loss_evaluations += 2
            stats.gradient_time += time.perf_counter() - t_grad
            stats.update_events += 1
            stats.gradient_evaluations += grads
            updated = True
        if step >= config.learning_start and step % config.target_update == 0:
            target = config.tau * params + (1 - config.tau) * target

        delta = ex.evaluations - before
        stats.quantum_time += ex.exec_time - q0
        stats.circuit_evaluations += delta
        stats.steps.append(StepRecord(step, eps, explore, action, tr.reward, tr.done or tr.truncated,
                                      delta, stats.circuit_evaluations, step + 1, grads, updated))
        stats.total_steps += 1

    stats.final_params = [float(x) for x in params]
    stats.total_time = time.perf_counter() - t_run
    return stats


def expected_circuit_evaluations(stats: QRLRunStats, num_params: int, batch_size: int, optimizer: str) -> int:
    """Closed-form evaluation count implied by the step/event counters."""
    per_event = (2 * batch_size + 2 * num_params * batch_size if optimizer == "ADAM"
                 else batch_size + 2 * batch_size)
    return stats.forward_evaluations + stats.update_events * per_event


def greedy_policy(params, executor: AnsatzExecutor, num_actions: int = 4):
    def act(state):
        return int(np.argmax(executor.expectations(params[None, :], np.array([state]))[0][:num_actions]))
    return act
