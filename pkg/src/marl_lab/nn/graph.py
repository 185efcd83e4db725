"""ComputationGraph: an ordered, named collection of layers.

The graph owns the parameter tensors in declaration order (which is also the
checkpoint serialization order), records the most recent forward tape, and
turns a scalar loss into one gradient array per parameter. A graph instance
is single-writer: one trainer mutates parameters, readers only between
update barriers.
"""

from __future__ import annotations

import numpy as np

from .tensor import GraphStateError, Tensor


class ComputationGraph:
    def __init__(self, name="graph", seed=None):
        self.name = name
        self.seed = seed
        self._layers = []       # (name, layer), declaration order
        self._recorded = None   # last scalar loss Tensor

    def add(self, layer):
        self._layers.append((layer.name, layer))
        return layer

    def layers(self):
        return list(self._layers)

    def parameters(self):
        """Ordered (qualified_name, Tensor) pairs over all layers."""
        out = []
        for _, layer in self._layers:
            out.extend(layer.params())
        return out

    def node_manifest(self):
        """Declarative node list: kind, name and parameter shapes."""
        nodes = []
        for lname, layer in self._layers:
            nodes.append({
                "name": lname,
                "kind": type(layer).__name__,
                "params": [(pname, list(t.data.shape)) for pname, t in layer.params()],
            })
        return nodes

    def record(self, loss):
        """Register the scalar loss of a completed forward pass."""
        if not isinstance(loss, Tensor) or loss.data.size != 1:
            raise GraphStateError("record expects the scalar loss Tensor of a forward pass")
        self._recorded = loss
        return loss

    def backprop(self, loss=None):
        """Reverse-mode gradients for every parameter, as {name: array}.

        Uses the recorded loss when none is passed. Gradients are always
        returned shape-identical to their parameters; parameters the loss
        does not touch get exact zeros.
        """
        if loss is None:
            loss = self._recorded
        if loss is None:
            raise GraphStateError(f"{self.name}: backward requested before any forward pass")
        params = self.parameters()
        for _, p in params:
            p.grad = None
        loss.backward()
        grads = {}
        for name, p in params:
            grads[name] = p.grad if p.grad is not None else np.zeros_like(p.data)
        self._recorded = None
        return grads

    def set_parameters(self, arrays):
        """Load {name: array} into the graph, shape-checked."""
        for name, p in self.parameters():
            if name not in arrays:
                raise KeyError(f"{self.name}: missing parameter {name}")
            arr = np.asarray(arrays[name], dtype=np.float64)
            if arr.shape != p.data.shape:
                raise ValueError(f"{self.name}: shape mismatch for {name}: "
                                 f"{arr.shape} != {p.data.shape}")
            p.data = arr.copy()

    def check_finite(self):
        for name, p in self.parameters():
            if not np.isfinite(p.data).all():
                raise FloatingPointError(f"{self.name}: non-finite values in {name}")
