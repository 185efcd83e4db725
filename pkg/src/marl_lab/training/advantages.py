"""Generalized advantage estimation over reshaped rewards."""

from __future__ import annotations

import numpy as np


def compute_advantages(buffer, gamma, gae_lambda):
    """Backward GAE recursion per (worker, agent) sequence.

    Episode-terminal steps cut the recursion; a worker slice that ends
    mid-episode bootstraps from the stored value of the next observation.
    With gae_lambda=1 and zero values the advantages equal plain discounted
    returns. Returns (advantages, value_targets), each (W, S, N).
    """
    r = buffer.reshaped
    v = buffer.values
    W, S, N = r.shape
    adv = np.zeros_like(r)
    nonterminal = 1.0 - buffer.dones.astype(np.float64)   # (W, S)
    gae = np.zeros((W, N))
    for t in range(S - 1, -1, -1):
        next_value = v[:, t + 1, :] if t + 1 < S else buffer.bootstrap_values
        nt = nonterminal[:, t][:, None]
        delta = r[:, t, :] + gamma * next_value * nt - v[:, t, :]
        gae = delta + gamma * gae_lambda * nt * gae
        adv[:, t, :] = gae
    return adv, adv + v
