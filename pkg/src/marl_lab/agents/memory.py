"""Recurrent state containers for one agent within one episode."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class EpisodeMixError(RuntimeError):
    """Raised when a memory from another episode is fed to the nets."""


@dataclass
class RecurrentState:
    hidden: np.ndarray
    cell: np.ndarray

    @classmethod
    def zeros(cls, units):
        return cls(hidden=np.zeros(units), cell=np.zeros(units))

    def copy(self):
        return RecurrentState(self.hidden.copy(), self.cell.copy())


@dataclass
class AgentMemory:
    """v: actor-critic LSTM state; u: MOA LSTM state. Tagged by episode so
    states from different episodes can never be mixed silently."""
    v: RecurrentState
    u: RecurrentState
    episode_tag: int = 0

    @classmethod
    def zeros(cls, units, episode_tag=0):
        return cls(v=RecurrentState.zeros(units), u=RecurrentState.zeros(units),
                   episode_tag=episode_tag)

    def check_tag(self, expected):
        if self.episode_tag != expected:
            raise EpisodeMixError(
                f"memory belongs to episode {self.episode_tag}, expected {expected}")

    def copy(self):
        return AgentMemory(v=self.v.copy(), u=self.u.copy(), episode_tag=self.episode_tag)
