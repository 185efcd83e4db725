"""Checkpoint replay: deterministic rollouts streamed as ASCII frames."""

from __future__ import annotations

import glob
import os
import re

import numpy as np

from ..agents import AgentNets
from ..envs import SSDEnv
from ..nn import CheckpointError, load_checkpoint, read_manifest
from ..training.evaluate import run_episode
from .experiment import resolve_spec

_CKPT_RE = re.compile(r"agent(\d+)_step(\d+)\.ckpt$")


def find_agent_checkpoints(ckpt_dir):
    """Latest checkpoint file per agent index under ckpt_dir."""
    latest = {}
    for path in glob.glob(os.path.join(ckpt_dir, "agent*_step*.ckpt")):
        m = _CKPT_RE.search(os.path.basename(path))
        if not m:
            continue
        agent, step = int(m.group(1)), int(m.group(2))
        if agent not in latest or step > latest[agent][0]:
            latest[agent] = (step, path)
    if not latest:
        raise CheckpointError(f"no agent checkpoints under {ckpt_dir}")
    return [latest[k][1] for k in sorted(latest)]


def load_agents_for_env(ckpt_dir, env_config, sizes):
    paths = find_agent_checkpoints(ckpt_dir)
    if len(paths) != env_config.num_agents:
        raise CheckpointError(
            f"checkpoint holds {len(paths)} agents but the environment "
            f"expects {env_config.num_agents}")
    agents = []
    for k, path in enumerate(paths):
        meta = read_manifest(path)["meta"]
        if (meta.get("view_size") != env_config.view_size
                or meta.get("num_actions") != env_config.num_actions
                or meta.get("num_agents") != env_config.num_agents):
            raise CheckpointError(
                f"{path}: checkpoint geometry {meta} does not match the "
                f"environment (view {env_config.view_size}, "
                f"{env_config.num_actions} actions, {env_config.num_agents} agents)")
        nets = AgentNets(env_config.view_size, env_config.num_actions,
                         env_config.num_agents, seed=[0, k], sizes=sizes)
        load_checkpoint(path, nets.sections())
        agents.append(nets)
    return agents


def replay(ckpt_dir, env_spec_path, episodes, seed, greedy=False, sink=None):
    """Roll trained agents; frames go to sink(text) per step. Returns
    per-episode (collective reward, per-agent returns, event counts)."""
    spec = resolve_spec(env_spec_path)
    env_config = spec.env
    agents = load_agents_for_env(ckpt_dir, env_config, spec.net)
    results = []
    for ep in range(episodes):
        env = SSDEnv(env_config)
        env.reset(seed=[seed, ep, 41])
        rngs = [np.random.default_rng(np.random.SeedSequence([seed, ep, k, 43]))
                for k in range(env_config.num_agents)]
        returns, counts = run_episode(env, agents, rngs, greedy=greedy,
                                      on_frame=sink)
        results.append({"episode": ep, "collective_reward": float(returns.sum()),
                        "per_agent": returns.tolist(), "events": counts})
    return results
