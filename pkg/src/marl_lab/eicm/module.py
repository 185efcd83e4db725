"""Forward/inverse feature prediction and agent-elimination impact scores.

The forward model predicts the next encoded observation from the current
features, the MOA hidden state and the joint action; eliminating agent j
means zeroing j's one-hot block at the input (equivalent to zeroing that
block's first-layer weights, and distinct from feeding a NOOP action). The
impact of j is half the squared distance between the two predictions, and a
per-step min-max normalization maps each agent's impact row into [0, 1].
"""

from __future__ import annotations

import numpy as np

from ..nn import tensor as T


def encode(nets, obs):
    """phi(obs): flattened shared-conv features."""
    return nets.encode(obs)


def _forward_input(nets, phi_prev, u_prev, joint_onehot):
    phi_prev = np.asarray(phi_prev, dtype=np.float64)
    u_prev = np.asarray(u_prev, dtype=np.float64)
    joint = np.asarray(joint_onehot, dtype=np.float64)
    want = nets.num_agents * nets.num_actions
    if joint.shape != (want,):
        raise ValueError(f"joint action one-hot must have {want} entries, got {joint.shape}")
    if phi_prev.shape != (nets.q,):
        raise ValueError(f"feature vector must have {nets.q} entries, got {phi_prev.shape}")
    return np.concatenate([phi_prev, u_prev, joint])


def forward_predict(nets, phi_prev, u_prev, joint_onehot):
    """Predicted phi of the next observation."""
    x = _forward_input(nets, phi_prev, u_prev, joint_onehot)
    return nets.fwd_out.apply(nets.fwd_fc1.apply(x[None]))[0]


def forward_predict_without(nets, phi_prev, u_prev, joint_onehot, j):
    """Same prediction with agent j's action block zeroed at the input."""
    if not 0 <= j < nets.num_agents:
        raise ValueError(f"agent index {j} out of range for N={nets.num_agents}")
    joint = np.asarray(joint_onehot, dtype=np.float64).copy()
    a = nets.num_actions
    joint[j * a:(j + 1) * a] = 0.0
    x = _forward_input(nets, phi_prev, u_prev, joint)
    return nets.fwd_out.apply(nets.fwd_fc1.apply(x[None]))[0]


def compute_raw_impact(nets, phi_prev, u_prev, joint_onehot, j):
    """Half squared Euclidean distance between the with- and without-j
    predictions; nonnegative by construction."""
    full = forward_predict(nets, phi_prev, u_prev, joint_onehot)
    without = forward_predict_without(nets, phi_prev, u_prev, joint_onehot, j)
    diff = full - without
    return 0.5 * float(diff @ diff)


def normalize_impacts(raw):
    """Min-max normalize a row of raw impacts into [0, 1].

    Degenerate rows (all entries equal) map to all-ones, which makes the
    impact-scaled comparison collapse to plain inequity aversion.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.size == 0:
        return raw.copy()
    if np.any(raw < 0) or not np.isfinite(raw).all():
        raise ValueError("raw impacts must be finite and nonnegative")
    lo, hi = raw.min(), raw.max()
    if hi == lo:
        return np.ones_like(raw)
    return (raw - lo) / (hi - lo)


def impact_row(nets, phi_prev, u_prev, joint_onehot, k):
    """Normalized impacts of every other agent in view of agent k, ordered by
    ascending fellow index. The full prediction and all eliminations run as
    one batched forward pass."""
    others = [j for j in range(nets.num_agents) if j != k]
    base = _forward_input(nets, phi_prev, u_prev, joint_onehot)
    rows = np.tile(base, (1 + len(others), 1))
    a = nets.num_actions
    off = nets.q + np.asarray(u_prev).shape[-1]
    for pos, j in enumerate(others):
        rows[1 + pos, off + j * a: off + (j + 1) * a] = 0.0
    preds = nets.fwd_out.apply(nets.fwd_fc1.apply(rows))
    diffs = preds[1:] - preds[0]
    raw = 0.5 * np.einsum("ij,ij->i", diffs, diffs)
    return normalize_impacts(raw), raw


def inverse_predict(nets, phi_prev, phi_curr, u_prev):
    """Predicted joint action: (N, |A|) softmax rows."""
    phi_prev = np.asarray(phi_prev, dtype=np.float64)
    phi_curr = np.asarray(phi_curr, dtype=np.float64)
    u_prev = np.asarray(u_prev, dtype=np.float64)
    x = np.concatenate([phi_prev, phi_curr, u_prev])
    logits = nets.inv_out.apply(nets.inv_fc1.apply(x[None]))[0]
    logits = logits.reshape(nets.num_agents, nets.num_actions)
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def forward_loss(predicted, actual):
    """L_F = half squared Euclidean distance between predicted and actual
    feature encodings."""
    predicted = np.asarray(predicted, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if predicted.shape != actual.shape:
        raise ValueError(f"feature shapes disagree: {predicted.shape} vs {actual.shape}")
    diff = predicted - actual
    return 0.5 * float(diff @ diff)


def inverse_loss(predicted, actual):
    """L_I = summed cross-entropy of the true action of every agent, with
    zero probabilities clamped at 1e-10."""
    predicted = np.asarray(predicted, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.int64)
    if predicted.ndim != 2 or actual.shape != (predicted.shape[0],):
        raise ValueError(f"inverse_loss shapes disagree: {predicted.shape} vs {actual.shape}")
    picked = predicted[np.arange(predicted.shape[0]), actual]
    return float(-np.log(np.maximum(picked, 1e-10)).sum())


# -- tape losses (shared with the composite training objective) -------------

def forward_loss_tape(nets, feat_prev, feat_next, u_h, joint_onehot):
    """Mean-per-sample L_F on the tape; gradients reach the forward model and
    the shared encoder through both the input and target features."""
    pred = nets.forward_model_tape(feat_prev, u_h, joint_onehot)
    diff = T.sub(pred, feat_next)
    per_sample = T.tsum(T.mul(diff, diff), axis=-1)
    return T.mul(T.tmean(per_sample), T.constant(0.5))


def inverse_loss_tape(nets, feat_prev, feat_curr, u_h, joint_actions):
    """Mean-per-sample L_I on the tape. joint_actions: (B, N) int indices."""
    logits = nets.inverse_model_tape(feat_prev, feat_curr, u_h)
    B = logits.data.shape[0]
    blocks = T.reshape(logits, (B, nets.num_agents, nets.num_actions))
    logp = T.log_softmax(blocks, axis=-1)
    picked = T.gather_last(logp, np.asarray(joint_actions, dtype=np.int64))
    return T.mul(T.tmean(T.tsum(picked, axis=-1)), T.constant(-1.0))


def moa_loss_tape(nets, feat, joint_onehot, u_h, u_c, targets, mask):
    """Masked mean cross-entropy of the MOA head over other agents' next
    actions. targets: (B, N-1) ints; mask: (B,) 0/1 validity."""
    logits = nets.moa_tape(feat, joint_onehot, u_h, u_c)
    B = logits.data.shape[0]
    blocks = T.reshape(logits, (B, nets.num_agents - 1, nets.num_actions))
    logp = T.log_softmax(blocks, axis=-1)
    picked = T.gather_last(logp, np.asarray(targets, dtype=np.int64))
    per_sample = T.tmean(picked, axis=-1)
    m = np.asarray(mask, dtype=np.float64)
    denom = max(float(m.sum()), 1.0)
    masked = T.mul(per_sample, T.constant(m))
    return T.mul(T.tsum(masked), T.constant(-1.0 / denom))
