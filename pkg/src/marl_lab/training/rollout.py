"""Rollout collection: logical workers stepping independent env instances.

Workers are executed sequentially in index order; each derives every random
stream (env dynamics, per-agent action sampling) from (run_seed, worker,
episode), so a collection is a pure function of seeds and parameters.
"""

from __future__ import annotations

import numpy as np

from ..agents.nets import joint_one_hot
from ..eicm import impact_row
from ..envs import SSDEnv
from ..shaping import RewardShaper, gini_equality
from .buffer import EpisodeStat, RolloutBuffer

_ENV_STREAM = 11
_ACTION_STREAM = 23


class RolloutWorker:
    """Owns one env instance plus per-agent memories and shaping state; state
    persists across collect calls so episodes may span batch boundaries."""

    def __init__(self, env_config, shaping_config, run_seed, worker_idx):
        self.env = SSDEnv(env_config)
        self.shaping_config = shaping_config
        self.run_seed = run_seed
        self.worker_idx = worker_idx
        self.num_agents = env_config.num_agents
        self.episode_idx = -1
        self.memories = None
        self.action_rngs = None
        self.shaper = RewardShaper(shaping_config, self.num_agents)
        self.obs = None
        self.episode_returns = None

    def episode_env_seed(self, episode_idx):
        return [self.run_seed, self.worker_idx, episode_idx, _ENV_STREAM]

    def episode_action_seed(self, episode_idx, agent_idx):
        return [self.run_seed, self.worker_idx, episode_idx, agent_idx, _ACTION_STREAM]

    def _begin_episode(self, agents):
        self.episode_idx += 1
        self.env.reset(seed=self.episode_env_seed(self.episode_idx))
        self.memories = [a.fresh_memory(episode_tag=self.episode_idx) for a in agents]
        self.action_rngs = [np.random.default_rng(
            np.random.SeedSequence(self.episode_action_seed(self.episode_idx, k)))
            for k in range(self.num_agents)]
        self.shaper.reset()
        self.obs = [self.env.observe(k) for k in range(self.num_agents)]
        self.episode_returns = np.zeros(self.num_agents)

    def collect(self, agents, steps, buffer: RolloutBuffer, w):
        """Fill buffer slice [w, :steps]; returns nothing (stats go into the
        buffer). `agents` holds one AgentNets per agent index."""
        emurel = self.shaping_config.mode == "emurel"
        N = self.num_agents
        for t in range(steps):
            fresh = self.episode_idx < 0 or self.env.done
            if fresh:
                self._begin_episode(agents)
            buffer.episode_starts[w, t] = fresh

            obs = self.obs
            for k in range(N):
                self.memories[k].check_tag(self.episode_idx)
                buffer.obs[w, t, k] = obs[k].astype(np.uint8)
                buffer.v_h[w, t, k] = self.memories[k].v.hidden
                buffer.v_c[w, t, k] = self.memories[k].v.cell
                buffer.u_h[w, t, k] = self.memories[k].u.hidden
                buffer.u_c[w, t, k] = self.memories[k].u.cell

            actions = np.zeros(N, dtype=np.int64)
            for k in range(N):
                out, self.memories[k] = agents[k].act(obs[k], self.memories[k],
                                                      self.action_rngs[k])
                actions[k] = out.action
                buffer.behavior_logp[w, t, k] = np.log(out.probs[out.action])
                buffer.values[w, t, k] = out.value
            buffer.actions[w, t] = actions
            joint = joint_one_hot(actions, self.env.num_actions)

            impacts = None
            if emurel:
                impacts = np.zeros((N, N - 1))
                for k in range(N):
                    phi = agents[k].encode(obs[k])
                    impacts[k], _ = impact_row(agents[k], phi,
                                               buffer.u_h[w, t, k], joint, k)
                    buffer.impact_rows[w, t, k] = impacts[k]

            _, outcome = self.env.step(actions)

            if emurel:
                for k in range(N):
                    _, self.memories[k] = agents[k].moa_predict(obs[k], joint,
                                                                self.memories[k])

            e, i, r = self.shaper.step(outcome.extrinsic, impacts)
            buffer.extrinsic[w, t] = e
            buffer.intrinsic[w, t] = i
            buffer.reshaped[w, t] = r
            self.episode_returns += e

            next_obs = [self.env.observe(k) for k in range(N)]
            for k in range(N):
                buffer.next_obs[w, t, k] = next_obs[k].astype(np.uint8)
            self.obs = next_obs

            if self.env.done:
                buffer.dones[w, t] = True
                clamped = np.maximum(self.episode_returns, 0.0)
                buffer.episode_stats.append(EpisodeStat(
                    worker=self.worker_idx, episode=self.episode_idx,
                    collective_reward=float(self.episode_returns.sum()),
                    equality=gini_equality(clamped),
                    per_agent_returns=self.episode_returns.copy()))

        if not self.env.done:
            for k in range(N):
                buffer.bootstrap_values[w, k] = agents[k].value_only(
                    self.obs[k], self.memories[k])


def collect_rollouts(workers, agents, batch_steps, view_size, channels, lstm_units):
    """Run every worker for batch_steps/len(workers) steps into one buffer."""
    W = len(workers)
    if batch_steps % W != 0:
        raise ValueError(f"batch_steps {batch_steps} not divisible by {W} workers")
    steps = batch_steps // W
    num_agents = workers[0].num_agents
    buffer = RolloutBuffer(W, steps, num_agents, view_size, channels, lstm_units)
    for w, worker in enumerate(workers):
        worker.collect(agents, steps, buffer, w)
    buffer.finalize_moa_targets()
    return buffer
