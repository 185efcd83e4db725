"""Environment configuration and validation."""

from __future__ import annotations

from dataclasses import dataclass, field


class ConfigError(ValueError):
    pass


@dataclass
class EnvConfig:
    kind: str = "cleanup"                 # cleanup | harvest
    map: str = "cleanup_mini"             # built-in map name, file path, or inline rows
    num_agents: int = 2
    episode_length: int = 1000
    view_size: int = 15
    seed: int = 0

    # Cleanup dynamics
    cleanup_depletion_threshold: float = 0.4
    cleanup_max_spawn_rate: float = 0.05
    waste_spawn_prob: float = 0.5
    initial_waste_fraction: float = 0.5

    # Harvest dynamics: regrowth probability by nearby-apple count
    harvest_low_rate: float = 0.01
    harvest_mid_rate: float = 0.05
    harvest_high_rate: float = 0.1

    # Beam geometry
    beam_length: int = 5
    beam_width: int = 3

    map_rows: list = field(default=None, repr=False)   # inline layout, overrides `map`

    def __post_init__(self):
        if self.kind not in ("cleanup", "harvest"):
            raise ConfigError(f"unknown environment kind {self.kind!r}")
        if self.num_agents < 1:
            raise ConfigError("num_agents must be positive")
        if self.episode_length < 1:
            raise ConfigError("episode_length must be positive")
        if self.view_size < 3 or self.view_size % 2 == 0:
            raise ConfigError("view_size must be an odd integer >= 3")
        if not (0.0 <= self.initial_waste_fraction <= 1.0):
            raise ConfigError("initial_waste_fraction must lie in [0, 1]")
        if self.beam_length < 1 or self.beam_width < 1 or self.beam_width % 2 == 0:
            raise ConfigError("beam_length must be >= 1 and beam_width odd >= 1")

    @property
    def num_actions(self):
        from .env import CLEANUP_ACTIONS, HARVEST_ACTIONS
        return len(CLEANUP_ACTIONS) if self.kind == "cleanup" else len(HARVEST_ACTIONS)
