"""SPSA and ADAM updates."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class SPSACoeffs:
    a: float = 0.2
    c: float = 0.1
    A: float = 10.0
    alpha: float = 0.602
    gamma: float = 0.101

    def gains(self, k: int) -> tuple[float, float]:
        return self.a / (self.A + k + 1) ** self.alpha, self.c / (k + 1) ** self.gamma


def spsa_step(params: np.ndarray, loss: Callable[[np.ndarray], float], k: int,
              coeffs: SPSACoeffs, rng: np.random.Generator) -> np.ndarray:
    """One simultaneous-perturbation update using exactly two loss evaluations."""
    a_k, c_k = coeffs.gains(k)
    delta = rng.choice((-1.0, 1.0), size=params.shape)
    lp = loss(params + c_k * delta)
    lm = loss(params - c_k * delta)
    ghat = (lp - lm) / (2 * c_k) * delta  # 1/delta_i == delta_i for +-1
    params -= a_k * ghat
    return params


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0)


@dataclass(frozen=True)
class AdamHyper:
    lr: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_step(params: np.ndarray, grad: np.ndarray, state: AdamState,
              hp: AdamHyper | None = None) -> tuple[np.ndarray, AdamState]:
    hp = hp or AdamHyper()
    grad = np.asarray(grad, dtype=float)
    if grad.shape != params.shape:
        raise ValueError("gradient shape does not match parameters")
    t = state.t + 1
    m = hp.beta1 * state.m + (1 - hp.beta1) * grad
    v = hp.beta2 * state.v + (1 - hp.beta2) * grad ** 2
    m_hat = m / (1 - hp.beta1 ** t)
    v_hat = v / (1 - hp.beta2 ** t)
    return params - hp.lr * m_hat / (np.sqrt(v_hat) + hp.eps), AdamState(m, v, t)
