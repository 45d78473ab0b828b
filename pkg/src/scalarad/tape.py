"""Append-only computation graph for reverse-mode differentiation.

Each node stores its op name, up to two parent indices and the numeric local
partials with respect to those parents, evaluated at record time. The reverse
sweep is therefore a plain multiply-accumulate walk from the output node down
to index 0 and never needs to know what op produced a node.

Storage is a set of parallel, preallocated Python lists. ``reset`` rewinds the
node counter without releasing them, so a tape that has seen one evaluation
of a function can replay the next one without growing.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from .errors import UsageError

_NO_PARENT = -1
_MIN_GROWTH = 64


class TapeNode(NamedTuple):
    op: str
    parents: tuple[int, ...]
    partials: tuple[float, ...]


class Tape:
    """Wengert list with reserved capacity.

    Not thread-safe; one tape belongs to one thread at a time.
    """

    def __init__(self, capacity_hint: int = 0):
        if capacity_hint < 0:
            raise UsageError(f"capacity_hint must be non-negative, got {capacity_hint}")
        cap = int(capacity_hint)
        self._ops: list[str] = [""] * cap
        self._p0: list[int] = [_NO_PARENT] * cap
        self._p1: list[int] = [_NO_PARENT] * cap
        self._d0: list[float] = [0.0] * cap
        self._d1: list[float] = [0.0] * cap
        self._capacity = cap
        self._count = 0
        self.input_nodes: list[int] = []
        self.growth_events = 0
        # bumped on reset so stale scalars can be detected
        self.generation = 0

    def __len__(self) -> int:
        return self._count

    def __repr__(self) -> str:
        return f"Tape(nodes={self._count}, capacity={self._capacity})"

    @property
    def node_count(self) -> int:
        return self._count

    @property
    def capacity(self) -> int:
        return self._capacity

    def reserve(self, capacity: int) -> None:
        """Make room for at least ``capacity`` nodes."""
        if capacity <= self._capacity:
            return
        extra = capacity - self._capacity
        self._ops.extend([""] * extra)
        self._p0.extend([_NO_PARENT] * extra)
        self._p1.extend([_NO_PARENT] * extra)
        self._d0.extend([0.0] * extra)
        self._d1.extend([0.0] * extra)
        self._capacity = capacity
        self.growth_events += 1

    def _grow(self) -> None:
        self.reserve(max(2 * self._capacity, _MIN_GROWTH))

    # Unchecked appends used by ReverseScalar; parents come from live scalars.
    def _push0(self, op: str) -> int:
        i = self._count
        if i == self._capacity:
            self._grow()
        self._ops[i] = op
        self._p0[i] = _NO_PARENT
        self._p1[i] = _NO_PARENT
        self._count = i + 1
        return i

    def _push1(self, op: str, p0: int, d0: float) -> int:
        i = self._count
        if i == self._capacity:
            self._grow()
        self._ops[i] = op
        self._p0[i] = p0
        self._p1[i] = _NO_PARENT
        self._d0[i] = d0
        self._count = i + 1
        return i

    def _push2(self, op: str, p0: int, p1: int, d0: float, d1: float) -> int:
        i = self._count
        if i == self._capacity:
            self._grow()
        self._ops[i] = op
        self._p0[i] = p0
        self._p1[i] = p1
        self._d0[i] = d0
        self._d1[i] = d1
        self._count = i + 1
        return i

    def record(self, op: str, parents: Sequence[int] = (), partials: Sequence[float] = ()) -> int:
        """Append a node and return its index."""
        if len(parents) > 2:
            raise UsageError(f"a node has at most 2 parents, got {len(parents)}")
        if len(parents) != len(partials):
            raise UsageError("parents and partials must have the same length")
        for p in parents:
            if not 0 <= p < self._count:
                raise UsageError(f"parent index {p} out of range for tape with {self._count} nodes")
        if not parents:
            return self._push0(op)
        if len(parents) == 1:
            return self._push1(op, int(parents[0]), float(partials[0]))
        return self._push2(op, int(parents[0]), int(parents[1]), float(partials[0]), float(partials[1]))

    def mark_input(self, node: int) -> None:
        self._check_node(node)
        self.input_nodes.append(node)

    def node(self, index: int) -> TapeNode:
        self._check_node(index)
        p0, p1 = self._p0[index], self._p1[index]
        if p0 == _NO_PARENT:
            return TapeNode(self._ops[index], (), ())
        if p1 == _NO_PARENT:
            return TapeNode(self._ops[index], (p0,), (self._d0[index],))
        return TapeNode(self._ops[index], (p0, p1), (self._d0[index], self._d1[index]))

    def _check_node(self, index: int) -> None:
        if not 0 <= index < self._count:
            raise UsageError(f"node {index} out of range for tape with {self._count} nodes")

    def sweep(self, adjoints: list[float], output_node: int, seed: float = 1.0) -> None:
        """Accumulate adjoints in place, starting from ``output_node``.

        ``adjoints`` must hold at least ``output_node + 1`` entries. Entries
        below the output are added to, so callers clear between sweeps.
        """
        adjoints[output_node] += seed
        self._propagate(adjoints, output_node)

    def _propagate(self, adj: list[float], top: int) -> None:
        p0, p1, d0, d1 = self._p0, self._p1, self._d0, self._d1
        for i in range(top, -1, -1):
            a = adj[i]
            if a == 0.0:
                continue
            j = p0[i]
            if j < 0:
                continue
            adj[j] += a * d0[i]
            j = p1[i]
            if j >= 0:
                adj[j] += a * d1[i]

    def backward(self, output_node: int, seed: float = 1.0) -> np.ndarray:
        """Reverse sweep seeded at ``output_node``; returns one adjoint per node."""
        self._check_node(output_node)
        if not math.isfinite(seed):
            raise UsageError("seed must be finite")
        adj = [0.0] * self._count
        self.sweep(adj, output_node, float(seed))
        return np.array(adj)

    def backward_multi(self, output_nodes: Sequence[int], seeds: Sequence[float]) -> np.ndarray:
        """One sweep with several seeded outputs (a general VJP)."""
        if len(output_nodes) != len(seeds):
            raise UsageError("output_nodes and seeds must have the same length")
        adj = [0.0] * self._count
        top = -1
        for node, s in zip(output_nodes, seeds):
            self._check_node(node)
            adj[node] += float(s)
            top = max(top, node)
        if top >= 0:
            self._propagate(adj, top)
        return np.array(adj)

    def reset(self) -> None:
        """Forget every node but keep the reserved storage."""
        self._count = 0
        self.input_nodes.clear()
        self.generation += 1


def new_tape(capacity_hint: int = 0) -> Tape:
    return Tape(capacity_hint)
