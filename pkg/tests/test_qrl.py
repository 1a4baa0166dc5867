import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import dense_unitary, frozen_lake_4x4_table
from qbench.benchmarks import AnsatzConfig, build_qrl_ansatz
from qbench.circuit import CircuitBuilder, GateKind
from qbench.qrl import (
    PRESETS, Action, AdamHyper, AdamState, AnsatzExecutor, EpisodeOver, FrozenLakeEnv, QRLRunStats,
    ReplayBuffer, SPSACoeffs, TrainConfig, Transition, adam_step, ansatz_width, batch_loss,
    bellman_targets, env_step, epsilon, expected_circuit_evaluations, gradient_parameter_shift,
    make_executor, q_values, spsa_step, train,
)

OPTIMAL_4X4 = {0: Action.DOWN, 4: Action.DOWN, 8: Action.RIGHT, 9: Action.DOWN, 13: Action.RIGHT, 14: Action.RIGHT}


def oracle_expectations(params, state, n, layers, m, reupload):
    """<Z_i> from the dense unitary of the built circuit."""
    cfg = AnsatzConfig(n, layers, 0, reupload, state, tuple(params))
    psi = dense_unitary(build_qrl_ansatz(cfg))[:, 0]
    probs = np.abs(psi) ** 2
    x = np.arange(1 << n)
    return np.array([probs @ (1 - 2 * ((x >> i) & 1)) for i in range(m)])


def random_batch(rng, size, states=16):
    return [Transition(int(rng.integers(states)), int(rng.integers(4)), float(rng.integers(2)),
                       int(rng.integers(states)), bool(rng.integers(2))) for _ in range(size)]


# -------------------------------------------------------------- environment

def test_transition_table_matches_hand_enumeration():
    env = FrozenLakeEnv("4x4")
    for (s, a), want in frozen_lake_4x4_table().items():
        assert env.transition(s, a) == want


def test_env_step_examples():
    env = FrozenLakeEnv("4x4")
    tr = env_step(env, Action.LEFT)
    assert (tr.next_state, tr.reward, tr.done) == (0, 0.0, True)
    with pytest.raises(EpisodeOver):
        env_step(env, Action.RIGHT)
    env.reset()
    env.state = 14
    tr = env_step(env, Action.RIGHT)
    assert tr.reward == 1.0 and tr.done and env.successes == 1


def test_episode_truncation():
    env = FrozenLakeEnv("4x4", max_episode_steps=3)
    env.reset()
    trs = [env_step(env, a) for a in (Action.RIGHT, Action.LEFT, Action.RIGHT)]
    assert trs[-1].truncated and not trs[-1].done
    with pytest.raises(EpisodeOver):
        env_step(env, Action.LEFT)
    assert FrozenLakeEnv("4x4").max_episode_steps == 100
    assert FrozenLakeEnv("8x8").max_episode_steps == 200
    assert FrozenLakeEnv("4x4", max_episode_steps=None).max_episode_steps is None


def test_map_validation():
    with pytest.raises(ValueError):
        FrozenLakeEnv(("SF", "FF"))
    with pytest.raises(ValueError):
        FrozenLakeEnv(("SG", "GF"))
    with pytest.raises(ValueError):
        FrozenLakeEnv("5x5")
    custom = FrozenLakeEnv(("SH", "FG"))
    assert custom.transition(2, Action.RIGHT) == (3, 1.0, True)


def test_width_rule():
    assert ansatz_width(FrozenLakeEnv("4x4")) == 4
    assert ansatz_width(FrozenLakeEnv("8x8")) == 6
    ex = make_executor(TrainConfig(map_name="8x8"), FrozenLakeEnv("8x8"), 0)
    assert (ex.n, ex.m) == (6, 4)


@given(st.lists(st.integers(0, 3), min_size=1, max_size=60))
def test_reward_iff_goal(actions):
    env = FrozenLakeEnv("8x8")
    for a in actions:
        if not env.active:
            env.reset()
        tr = env_step(env, a)
        assert (tr.reward == 1.0) == (env.tile(tr.next_state) == "G" and tr.next_state != tr.state)
        assert 0 <= tr.next_state < env.num_states


# ------------------------------------------------------------------ buffer

@given(st.integers(1, 20), st.integers(0, 60), st.integers(0, 1000))
def test_buffer_bounded_and_sampling_without_replacement(capacity, n_items, seed):
    buf = ReplayBuffer(capacity)
    for i in range(n_items):
        buf.append(Transition(i, 0, 0.0, i, False))
    assert len(buf) == min(capacity, n_items)
    if len(buf):
        batch = buf.sample(len(buf), np.random.default_rng(seed))
        ids = [t.state for t in batch]
        assert len(set(ids)) == len(ids)
        assert min(ids) == n_items - len(buf)  # oldest entries evicted first
    with pytest.raises(ValueError):
        buf.sample(len(buf) + 1, np.random.default_rng(seed))


# ----------------------------------------------------------------- executor

def test_zero_params_give_plus_one():
    ex = AnsatzExecutor(4, 3, 4, True)
    q = q_values(np.zeros(ex.num_params), 0, ex)
    assert np.allclose(q, 1.0, atol=1e-15)


def test_single_ry_pi_flips_qubit_zero():
    ex = AnsatzExecutor(4, 1, 4, False)
    p = np.zeros(ex.num_params)
    p[0] = math.pi
    q = q_values(p, 0, ex)
    assert abs(q[0] + 1) < 1e-12 and np.allclose(q[1:], 1)


@given(st.integers(0, 15), st.booleans(), st.integers(0, 10_000))
def test_executor_matches_dense_oracle(state, reupload, seed):
    rng = np.random.default_rng(seed)
    ex = AnsatzExecutor(4, 2, 4, reupload)
    p = rng.uniform(-math.pi, math.pi, ex.num_params)
    got = ex.expectations(p[None, :], np.array([state]))[0]
    assert np.allclose(got, oracle_expectations(p, state, 4, 2, 4, reupload), atol=1e-12)


def test_shot_mode_converges_to_exact():
    rng = np.random.default_rng(4)
    exact = AnsatzExecutor(4, 3, 4, True)
    shots = AnsatzExecutor(4, 3, 4, True, shots=10 ** 6, seed=1)
    p = rng.uniform(-math.pi, math.pi, exact.num_params)
    assert np.max(np.abs(exact.expectations(p, [5]) - shots.expectations(p, [5]))) < 0.01


def test_evaluation_counter():
    ex = AnsatzExecutor(4, 1, 4)
    ex.expectations(np.zeros((3, ex.num_params)), np.array([0, 1, 2]))
    ex.expectations(np.zeros(ex.num_params), np.array([7]))
    assert ex.evaluations == 4 and ex.batches == 2


def test_noisy_executor_runs_circuits():
    from qbench.noise import NoiseSpec, sample_noise_model
    noise = sample_noise_model(NoiseSpec(), None, seed=0)
    ex = AnsatzExecutor(4, 1, 4, noise=noise, shots=2000, seed=3)
    q = ex.expectations(np.zeros(ex.num_params), [0])[0]
    assert np.all(q > 0.95)


# ---------------------------------------------------------------- schedule

def test_epsilon_schedule():
    cfg = TrainConfig(total_steps=200, exploration_fraction=0.5, eps_start=1.0, eps_end=0.05)
    assert epsilon(0, cfg) == 1.0
    assert epsilon(100, cfg) == 0.05 and epsilon(199, cfg) == 0.05
    assert math.isclose(epsilon(50, cfg), (1.0 + 0.05) / 2)
    assert epsilon(17, TrainConfig(eps_fixed=0.5)) == 0.5


@given(st.integers(1, 500), st.floats(0.05, 1.0))
def test_epsilon_monotone(total, frac):
    cfg = TrainConfig(total_steps=total + 1, learning_start=0, exploration_fraction=frac)
    eps = [epsilon(s, cfg) for s in range(total + 1)]
    assert all(b <= a + 1e-15 for a, b in zip(eps, eps[1:]))
    assert all(0.05 - 1e-15 <= e <= 1.0 for e in eps)


# ---------------------------------------------------------------- gradients

def test_one_qubit_shift_rule_closed_form():
    ex = AnsatzExecutor(1, 1, 1)
    cfg = TrainConfig()
    for theta in (-2.0, -0.4, 0.3, 1.1, 2.9):
        p = np.array([theta, 0.37])
        batch = [Transition(0, 0, 0.0, 0, True)]
        y = np.array([0.2])
        g, loss = gradient_parameter_shift(p, batch, ex, cfg, targets=y)
        q = math.cos(theta)
        assert math.isclose(loss, (q - y[0]) ** 2, abs_tol=1e-14)
        assert abs(g[0] - 2 * (q - y[0]) * -math.sin(theta)) < 1e-12
        assert abs(g[1]) < 1e-12  # RZ after RY on a measured-Z qubit does nothing


def test_stationary_point_has_zero_gradient():
    ex = AnsatzExecutor(4, 3, 4, True)
    cfg = TrainConfig(gamma=1e-9)
    p = np.zeros(ex.num_params)
    batch = [Transition(0, a, 0.0, 0, False) for a in range(4)]
    g, _ = gradient_parameter_shift(p, batch, ex, cfg, target_params=p)
    assert np.max(np.abs(g)) < 1e-12


def test_zero_residual_gives_zero_gradient():
    rng = np.random.default_rng(2)
    ex = AnsatzExecutor(4, 2, 4, True)
    p = rng.uniform(-math.pi, math.pi, ex.num_params)
    batch = random_batch(rng, 5)
    q = ex.expectations(p, [t.state for t in batch])[np.arange(5), [t.action for t in batch]]
    g, loss = gradient_parameter_shift(p, batch, ex, TrainConfig(), targets=q)
    assert loss < 1e-28 and np.max(np.abs(g)) < 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_shift_rule_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    ex = AnsatzExecutor(4, 3, 4, True)
    p = rng.uniform(-math.pi, math.pi, ex.num_params)
    batch = random_batch(rng, 6)
    y = rng.uniform(-1, 1, 6)
    g, _ = gradient_parameter_shift(p, batch, ex, TrainConfig(), targets=y)
    h = 1e-5
    fd = np.array([(batch_loss(p + h * e, batch, y, ex) - batch_loss(p - h * e, batch, y, ex)) / (2 * h)
                   for e in np.eye(p.size)])
    assert np.max(np.abs(g - fd)) < 1e-4


def test_gradient_batch_count():
    ex = AnsatzExecutor(4, 3, 4, True)
    batch = random_batch(np.random.default_rng(0), 8)
    before = ex.evaluations
    gradient_parameter_shift(np.zeros(ex.num_params), batch, ex, TrainConfig(), targets=np.zeros(8))
    # one forward batch for the residuals plus 2|params| shifted batches
    assert ex.evaluations - before == 8 + 2 * ex.num_params * 8
    with pytest.raises(ValueError):
        gradient_parameter_shift(np.zeros(ex.num_params), [], ex, TrainConfig())


def test_bellman_targets():
    ex = AnsatzExecutor(4, 1, 4)
    p = np.zeros(ex.num_params)
    batch = [Transition(0, 0, 1.0, 1, True), Transition(0, 0, 0.0, 1, False)]
    assert np.allclose(bellman_targets(p, batch, ex, 0.9), [1.0, 0.9])


# --------------------------------------------------------------- optimizers

def test_spsa_two_evaluations_any_dimension():
    for dim in (1, 10, 100):
        calls = []
        spsa_step(np.ones(dim), lambda th: calls.append(1) or float(th @ th), 0, SPSACoeffs(),
                  np.random.default_rng(0))
        assert len(calls) == 2


def test_spsa_flat_landscape():
    p = np.array([0.3, -1.0, 2.0])
    out = spsa_step(p.copy(), lambda th: 4.0, 3, SPSACoeffs(), np.random.default_rng(1))
    assert np.array_equal(out, p)


def test_spsa_quadratic_bowl():
    rng = np.random.default_rng(11)
    p = rng.uniform(-1, 1, 10)
    f0 = float(p @ p)
    for k in range(500):
        p = spsa_step(p, lambda th: float(th @ th), k, SPSACoeffs(), rng)
    assert float(p @ p) <= f0 / 100


def test_adam_zero_gradient():
    p = np.array([1.0, -2.0])
    out, st_ = adam_step(p, np.zeros(2), AdamState.zeros(2))
    assert np.array_equal(out, p) and st_.t == 1


def test_adam_plain_step():
    g = np.array([0.5, -3.0, 1e-3])
    hp = AdamHyper(lr=0.1, beta1=0.0, beta2=0.0, eps=1e-8)
    out, _ = adam_step(np.zeros(3), g, AdamState.zeros(3), hp)
    assert np.allclose(out, -0.1 * g / (np.abs(g) + 1e-8), rtol=0, atol=1e-15)
    with pytest.raises(ValueError):
        adam_step(np.zeros(3), np.zeros(2), AdamState.zeros(3))


def test_adam_quadratic_bowl():
    p = np.array([1.0, -0.5, 0.25, 2.0])
    state = AdamState.zeros(4)
    for _ in range(1000):
        p, state = adam_step(p, 2 * p, state)
    assert np.linalg.norm(p) <= 1e-3


# ----------------------------------------------------------------- training

def test_config_invariants():
    with pytest.raises(ValueError):
        TrainConfig(total_steps=100, learning_start=100)
    with pytest.raises(ValueError):
        TrainConfig(gamma=0.0)
    with pytest.raises(ValueError):
        TrainConfig(tau=1.5)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=20, buffer_capacity=10)
    with pytest.raises(ValueError):
        TrainConfig(optimizer="RMSPROP")
    with pytest.raises(ValueError):
        TrainConfig.from_dict({"learning_rate": 0.1})


@pytest.mark.parametrize("optimizer", ["ADAM", "SPSA"])
def test_cost_preset_ledger(optimizer):
    cfg = TrainConfig.from_dict({**PRESETS["cost"], "optimizer": optimizer})
    stats = train(cfg)
    P = 2 * cfg.num_layers * 4
    assert stats.total_steps == 200
    assert stats.update_events == 10
    assert stats.explore_steps + stats.exploit_steps == 200
    assert stats.circuit_evaluations == expected_circuit_evaluations(stats, P, cfg.batch_size, optimizer)
    if optimizer == "ADAM":
        assert stats.gradient_evaluations == 10 * 2 * P and stats.loss_evaluations == 0
    else:
        assert stats.gradient_evaluations == 20 and stats.loss_evaluations == 20
    cum = [s.cumulative_circuit_evaluations for s in stats.steps]
    assert all(b >= a for a, b in zip(cum, cum[1:]))
    assert [s.environment_evaluations for s in stats.steps] == list(range(1, 201))
    assert sum(s.circuit_evaluations for s in stats.steps) == stats.circuit_evaluations
    assert 0.4 <= stats.explore_steps / 200 <= 0.6


def test_training_deterministic():
    cfg = TrainConfig(total_steps=60, learning_start=20, params_update=5, batch_size=4, num_layers=1, seed=3)
    a, b = train(cfg), train(cfg)
    assert a.final_params == b.final_params
    assert [s.action for s in a.steps] == [s.action for s in b.steps]


def test_soft_target_update_changes_training():
    base = dict(total_steps=60, learning_start=10, params_update=2, target_update=4, batch_size=4,
                num_layers=1, seed=5, eps_fixed=1.0)
    hard = train(TrainConfig(**base, tau=1.0))
    soft = train(TrainConfig(**base, tau=0.1))
    assert hard.final_params != soft.final_params


def test_optimal_policy_always_succeeds():
    cfg = TrainConfig(total_steps=60, learning_start=59, eps_fixed=0.0, num_layers=1)
    stats = train(cfg, policy=lambda s: OPTIMAL_4X4[s])
    assert stats.episodes == 10 and stats.success_rate == 1.0
    assert stats.explore_steps == 0 and stats.forward_evaluations == 0


def test_run_stats_outputs(tmp_path):
    stats = train(TrainConfig(total_steps=30, learning_start=10, params_update=5, batch_size=4, num_layers=1))
    stats.write_jsonl(tmp_path / "steps.jsonl")
    stats.write_summary(tmp_path / "summary.json")
    lines = (tmp_path / "steps.jsonl").read_text().splitlines()
    assert len(lines) == 30 and json.loads(lines[0])["step"] == 0
    summary = json.loads((tmp_path / "summary.json").read_text())["summary"]
    assert summary["total_steps"] == 30
    text = stats.console_summary()
    for field in ("total steps", "circuit evaluations", "gradient evaluations", "episodes completed",
                  "successes", "quantum time", "environment time", "gradient time"):
        assert field in text


def test_final_quartile_success():
    s = QRLRunStats(config={}, episode_returns=[0, 0, 0, 0, 0, 1, 0, 1])
    assert s.final_quartile_success() == 0.5
    assert QRLRunStats(config={}).final_quartile_success() == 0.0
