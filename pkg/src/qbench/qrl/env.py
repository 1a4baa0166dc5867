"""Deterministic FrozenLake grid world."""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence

MAPS = {
    "4x4": ("SFFF", "FHFH", "FFFH", "HFFG"),
    "8x8": (
        "SFFFFFFF",
        "FFFFFFFF",
        "FFFHFFFF",
        "FFFFFHFF",
        "FFFHFFFF",
        "FHHFFFHF",
        "FHFFHFHF",
        "FFFHFFFG",
    ),
}

DEFAULT_EPISODE_LIMIT = {"4x4": 100, "8x8": 200}


class Action(IntEnum):
    LEFT = 0
    DOWN = 1
    RIGHT = 2
    UP = 3


_MOVES = {Action.LEFT: (0, -1), Action.DOWN: (1, 0), Action.RIGHT: (0, 1), Action.UP: (-1, 0)}


class EpisodeOver(RuntimeError):
    """step() called on a terminated episode."""


@dataclass(frozen=True)
class Transition:
    state: int
    action: int
    reward: float
    next_state: int
    done: bool             # terminal: hole, goal or off-grid
    truncated: bool = False  # episode step limit reached (not terminal for bootstrapping)


class FrozenLakeEnv:
    """Non-slippery FrozenLake; leaving the grid ends the episode with reward 0.

    ``max_episode_steps`` truncates episodes so that a policy that walks in
    circles still finishes episodes; ``None`` disables the limit.
    """

    def __init__(self, desc: str | Sequence[str] = "4x4", max_episode_steps: int | None = -1):
        if isinstance(desc, str):
            if desc not in MAPS:
                raise ValueError(f"unknown map {desc!r}; choose from {sorted(MAPS)}")
            name, rows = desc, MAPS[desc]
        else:
            name, rows = None, tuple(desc)
        if not rows or len({len(r) for r in rows}) != 1:
            raise ValueError("map rows must be non-empty and equally long")
        tiles = "".join(rows)
        if set(tiles) - set("SFHG"):
            raise ValueError("map tiles must be S, F, H or G")
        if tiles.count("S") != 1 or tiles.count("G") != 1:
            raise ValueError("map needs exactly one start and one goal")
        self.rows = rows
        self.nrow, self.ncol = len(rows), len(rows[0])
        self.start = tiles.index("S")
        if max_episode_steps == -1:
            max_episode_steps = DEFAULT_EPISODE_LIMIT.get(name, 4 * self.nrow * self.ncol)
        self.max_episode_steps = max_episode_steps
        self.state = self.start
        self.episode_steps = 0
        self.active = True
        self.successes = 0

    @property
    def num_states(self) -> int:
        return self.nrow * self.ncol

    num_actions = len(Action)

    def tile(self, state: int) -> str:
        return self.rows[state // self.ncol][state % self.ncol]

    def reset(self) -> int:
        self.state = self.start
        self.episode_steps = 0
        self.active = True
        return self.state

    def transition(self, state: int, action: int) -> tuple[int, float, bool]:
        """Pure transition rule: (next_state, reward, done)."""
        dr, dc = _MOVES[Action(action)]
        r, c = divmod(state, self.ncol)
        r, c = r + dr, c + dc
        if not (0 <= r < self.nrow and 0 <= c < self.ncol):
            return state, 0.0, True
        nxt = r * self.ncol + c
        t = self.tile(nxt)
        if t == "G":
            return nxt, 1.0, True
        return nxt, 0.0, t == "H"

    def step(self, action: int) -> Transition:
        if not self.active:
            raise EpisodeOver("episode has terminated; call reset()")
        nxt, reward, done = self.transition(self.state, action)
        self.episode_steps += 1
        truncated = (not done and self.max_episode_steps is not None
                     and self.episode_steps >= self.max_episode_steps)
        tr = Transition(self.state, int(action), reward, nxt, done, truncated)
        if reward > 0:
            self.successes += 1
        self.state = nxt
        self.active = not (done or truncated)
        return tr


def env_step(env: FrozenLakeEnv, action: int) -> Transition:
    return env.step(action)


def state_qubits(num_states: int) -> int:
    return max(1, (num_states - 1).bit_length())


def ansatz_width(env: FrozenLakeEnv) -> int:
    """max(bits needed for the observation, number of actions)."""
    return max(state_qubits(env.num_states), env.num_actions)
