"""Quantum deep Q-learning benchmark on FrozenLake."""
from .buffer import ReplayBuffer
from .env import MAPS, Action, EpisodeOver, FrozenLakeEnv, Transition, ansatz_width, env_step
from .executor import AnsatzExecutor, z_signs
from .optim import AdamHyper, AdamState, SPSACoeffs, adam_step, spsa_step
from .train import (PRESETS, QRLRunStats, StepRecord, TrainConfig, batch_loss, bellman_targets, epsilon,
                    expected_circuit_evaluations, gradient_parameter_shift, greedy_policy, make_executor,
                    q_values, train)

__all__ = [
    "ReplayBuffer", "MAPS", "Action", "EpisodeOver", "FrozenLakeEnv", "Transition", "ansatz_width",
    "env_step", "AnsatzExecutor", "z_signs", "AdamHyper", "AdamState", "SPSACoeffs", "adam_step",
    "spsa_step", "PRESETS", "QRLRunStats", "StepRecord", "TrainConfig", "batch_loss", "bellman_targets",
    "epsilon", "expected_circuit_evaluations", "gradient_parameter_shift", "greedy_policy", "make_executor", "q_values", "train",
]
