"""Training orchestration: collect -> advantage -> update, one metrics row
per update. Collection and updates are fork-join and fully seeded, so a
(config, seed) pair determines every number the trainer ever emits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..agents import AgentNets
from ..envs.env import NUM_CHANNELS
from ..nn import Optimizer, OptimizerConfig
from .advantages import compute_advantages
from .rollout import RolloutWorker, collect_rollouts
from .update import a2c_sync_update, ppo_update


@dataclass
class TrainerConfig:
    algo: str = "ppo"                   # ppo | a2c_sync
    batch_steps: int = 2000
    minibatch_steps: int = 500
    ppo_epochs: int = 4
    clip_ratio: float = 0.2
    gae_lambda: float = 0.95
    discount: float = 0.99
    value_coef: float = 0.5
    entropy_coef: float = 0.01
    moa_coef: float = 1.0
    forward_coef: float = 10.0
    inverse_coef: float = 5.0
    workers: int = 4
    updates: int = 200
    learning_rate: float = 3e-4
    optimizer: str = "adam"
    grad_clip_norm: float | None = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.algo not in ("ppo", "a2c_sync"):
            raise ValueError(f"unknown algo {self.algo!r}")
        if self.minibatch_steps > self.batch_steps:
            raise ValueError("minibatch_steps must not exceed batch_steps")
        if self.batch_steps % self.workers != 0:
            raise ValueError("batch_steps must divide evenly across workers")
        if self.algo == "ppo" and self.batch_steps % self.minibatch_steps != 0:
            raise ValueError("batch_steps must be a multiple of minibatch_steps")
        if self.clip_ratio <= 0:
            raise ValueError("clip_ratio must be positive")
        if not (0.0 <= self.gae_lambda <= 1.0 and 0.0 <= self.discount <= 1.0):
            raise ValueError("gae_lambda and discount must lie in [0, 1]")


class Trainer:
    def __init__(self, env_config, shaping_config, trainer_config, sizes=None):
        self.env_config = env_config
        self.shaping_config = shaping_config
        self.cfg = trainer_config
        n = env_config.num_agents
        self.agents = [AgentNets(env_config.view_size, env_config.num_actions,
                                 n, seed=[trainer_config.seed, k], sizes=sizes)
                       for k in range(n)]
        self.workers = [RolloutWorker(env_config, shaping_config,
                                      trainer_config.seed, w)
                        for w in range(trainer_config.workers)]
        opt_cfg = OptimizerConfig(kind=trainer_config.optimizer,
                                  learning_rate=trainer_config.learning_rate,
                                  grad_clip_norm=trainer_config.grad_clip_norm)
        self.optimizers = [Optimizer(a, opt_cfg) for a in self.agents]
        self._shuffle_rng = np.random.default_rng(
            np.random.SeedSequence([trainer_config.seed, 7919]))
        self.update_idx = 0
        self.env_steps = 0
        self.lstm_units = self.agents[0].sizes.lstm_units

    def one_update(self):
        """Collect one batch, apply one update, return the metrics row."""
        cfg = self.cfg
        buffer = collect_rollouts(self.workers, self.agents, cfg.batch_steps,
                                  self.env_config.view_size, NUM_CHANNELS,
                                  self.lstm_units)
        advantages, targets = compute_advantages(buffer, cfg.discount, cfg.gae_lambda)
        mode = self.shaping_config.mode
        if cfg.algo == "ppo":
            terms = ppo_update(self.agents, buffer, advantages, targets, cfg,
                               mode, self.optimizers, self._shuffle_rng)
        else:
            terms = a2c_sync_update(self.agents, buffer, advantages, targets, cfg,
                                    mode, self.optimizers)

        self.update_idx += 1
        self.env_steps += cfg.batch_steps
        stats = buffer.episode_stats
        collective = (float(np.mean([s.collective_reward for s in stats]))
                      if stats else float("nan"))
        equality = float(np.mean([s.equality for s in stats])) if stats else float("nan")
        impacts = buffer.impact_rows if mode == "emurel" else None
        row = {
            "update": self.update_idx,
            "env_steps": self.env_steps,
            "episodes_completed": len(stats),
            "collective_reward": collective,
            "equality": equality,
            "policy_loss": terms["policy_loss"],
            "value_loss": terms["value_loss"],
            "entropy": terms["entropy"],
            "moa_loss": terms["moa_loss"],
            "forward_loss": terms["forward_loss"],
            "inverse_loss": terms["inverse_loss"],
            "intrinsic_mean": float(buffer.intrinsic.mean()),
            "impact_mean": float(impacts.mean()) if impacts is not None else 0.0,
            "impact_min": float(impacts.min()) if impacts is not None else 0.0,
            "impact_max": float(impacts.max()) if impacts is not None else 0.0,
            "grad_norm": terms["grad_norm"],
        }
        return row, buffer

    def run(self, updates=None, on_update=None):
        """Run the training loop; on_update(row, buffer, trainer) per update."""
        total = updates if updates is not None else self.cfg.updates
        rows = []
        for _ in range(total):
            row, buffer = self.one_update()
            rows.append(row)
            if on_update is not None:
                on_update(row, buffer, self)
        return rows
