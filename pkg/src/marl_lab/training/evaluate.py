"""Learning-free policy evaluation and scripted reference policies."""

from __future__ import annotations

import numpy as np

from ..agents.memory import AgentMemory
from ..agents.nets import PolicyOutput
from ..envs import SSDEnv
from ..shaping import gini_equality

_EVAL_ENV_STREAM = 31
_EVAL_ACTION_STREAM = 37


class UniformRandomPolicy:
    """Baseline reference: uniform action draws, no learning, no state."""

    def __init__(self, num_actions):
        self.num_actions = num_actions

    def fresh_memory(self, episode_tag=0):
        return AgentMemory.zeros(1, episode_tag)

    def act(self, obs, memory, rng, greedy=False):
        probs = np.full(self.num_actions, 1.0 / self.num_actions)
        action = int(rng.integers(self.num_actions))
        return PolicyOutput(action=action, probs=probs, value=0.0), memory


class ScriptedPolicy:
    """Always plays a fixed action; used by symmetry checks."""

    def __init__(self, action, num_actions):
        self.action = action
        self.num_actions = num_actions

    def fresh_memory(self, episode_tag=0):
        return AgentMemory.zeros(1, episode_tag)

    def act(self, obs, memory, rng, greedy=False):
        probs = np.zeros(self.num_actions)
        probs[self.action] = 1.0
        return PolicyOutput(action=self.action, probs=probs, value=0.0), memory


def run_episode(env, policies, rngs, greedy=False, on_frame=None):
    """One full episode; returns (per-agent extrinsic returns, event counts)."""
    n = env.config.num_agents
    memories = [p.fresh_memory() for p in policies]
    returns = np.zeros(n)
    counts = {"apple_collected": 0, "beam_fired": 0, "agent_hit": 0,
              "waste_cleaned": 0, "clean_beams": 0}
    while not env.done:
        obs = [env.observe(k) for k in range(n)]
        actions = np.zeros(n, dtype=np.int64)
        for k in range(n):
            out, memories[k] = policies[k].act(obs[k], memories[k], rngs[k],
                                               greedy=greedy)
            actions[k] = out.action
        _, outcome = env.step(actions)
        returns += outcome.extrinsic
        for e in outcome.events:
            counts[e["kind"]] += 1
            if e["kind"] == "beam_fired" and e.get("beam") == "clean":
                counts["clean_beams"] += 1
        if on_frame is not None:
            on_frame(env.render_ascii())
    return returns, counts


def evaluate(policies, env_config, episodes, seed, greedy=False):
    """Mean collective extrinsic reward and mean equality over fresh episodes.

    Negative per-agent returns are clamped at zero for the equality metric
    only; collective reward keeps its sign.
    """
    if episodes < 1:
        raise ValueError("evaluate needs at least one episode")
    n = env_config.num_agents
    if len(policies) != n:
        raise ValueError(f"need {n} policies, got {len(policies)}")
    collective, equality = [], []
    for ep in range(episodes):
        env = SSDEnv(env_config)
        env.reset(seed=[seed, ep, _EVAL_ENV_STREAM])
        rngs = [np.random.default_rng(
            np.random.SeedSequence([seed, ep, k, _EVAL_ACTION_STREAM]))
            for k in range(n)]
        returns, _ = run_episode(env, policies, rngs, greedy=greedy)
        collective.append(float(returns.sum()))
        equality.append(gini_equality(np.maximum(returns, 0.0)))
    return float(np.mean(collective)), float(np.mean(equality))
