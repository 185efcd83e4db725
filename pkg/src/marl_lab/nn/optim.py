"""SGD and Adam parameter updates with optional global-norm gradient clipping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class OptimizerConfig:
    kind: str = "adam"              # sgd | adam
    learning_rate: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    grad_clip_norm: float | None = None

    def __post_init__(self):
        if self.kind not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer kind {self.kind!r}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("adam betas must lie in [0, 1)")
        if self.grad_clip_norm is not None and self.grad_clip_norm <= 0:
            raise ValueError("grad_clip_norm must be positive when set")


def global_norm(grads):
    return float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))


def clip_by_global_norm(grads, max_norm):
    """Scale all gradients by max_norm/norm when the global norm exceeds it."""
    norm = global_norm(grads)
    if norm > max_norm:
        scale = max_norm / norm
        grads = {k: g * scale for k, g in grads.items()}
    return grads, norm


class Optimizer:
    """Applies updates to a ComputationGraph's parameters.

    One instance per graph; Adam moment buffers are keyed by parameter name.
    Non-finite gradients abort the run with a diagnostic, per the training
    contract.
    """

    def __init__(self, graph, config: OptimizerConfig):
        self.graph = graph
        self.config = config
        self.step_count = 0
        self._m = {}
        self._v = {}

    def step(self, grads):
        """Apply one update. Returns the pre-clip global gradient norm."""
        params = dict(self.graph.parameters())
        for name, g in grads.items():
            if not np.isfinite(g).all():
                raise FloatingPointError(
                    f"non-finite gradient for {name} at optimizer step {self.step_count}")
        norm = global_norm(grads)
        if self.config.grad_clip_norm is not None:
            grads, _ = clip_by_global_norm(grads, self.config.grad_clip_norm)
        self.step_count += 1
        cfg = self.config
        if cfg.kind == "sgd":
            for name, g in grads.items():
                params[name].data -= cfg.learning_rate * g
        else:
            t = self.step_count
            bc1 = 1.0 - cfg.beta1 ** t
            bc2 = 1.0 - cfg.beta2 ** t
            for name, g in grads.items():
                m = self._m.get(name)
                v = self._v.get(name)
                if m is None:
                    m = np.zeros_like(g)
                    v = np.zeros_like(g)
                m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
                v = cfg.beta2 * v + (1.0 - cfg.beta2) * (g * g)
                self._m[name] = m
                self._v[name] = v
                mhat = m / bc1
                vhat = v / bc2
                params[name].data -= cfg.learning_rate * mhat / (np.sqrt(vhat) + cfg.epsilon)
        return norm


def optimizer_step(params, grads, config: OptimizerConfig, state=None):
    """Functional single update over {name: array} dicts; returns (params', state').

    state carries (step_count, m, v) for Adam and may be threaded through calls.
    """
    for name, g in grads.items():
        if not np.isfinite(np.asarray(g)).all():
            raise FloatingPointError(f"non-finite gradient for {name}")
        if np.asarray(g).shape != np.asarray(params[name]).shape:
            raise ValueError(f"gradient/parameter shape mismatch for {name}")
    garrs = {k: np.asarray(g, dtype=np.float64) for k, g in grads.items()}
    if config.grad_clip_norm is not None:
        garrs, _ = clip_by_global_norm(garrs, config.grad_clip_norm)
    out = {k: np.asarray(v, dtype=np.float64).copy() for k, v in params.items()}
    if config.kind == "sgd":
        for name, g in garrs.items():
            out[name] -= config.learning_rate * g
        return out, state
    step, m, v = state if state is not None else (0, {}, {})
    step += 1
    bc1 = 1.0 - config.beta1 ** step
    bc2 = 1.0 - config.beta2 ** step
    m = dict(m)
    v = dict(v)
    for name, g in garrs.items():
        m[name] = config.beta1 * m.get(name, np.zeros_like(g)) + (1 - config.beta1) * g
        v[name] = config.beta2 * v.get(name, np.zeros_like(g)) + (1 - config.beta2) * (g * g)
        out[name] -= config.learning_rate * (m[name] / bc1) / (np.sqrt(v[name] / bc2) + config.epsilon)
    return out, (step, m, v)
