"""
Graph nodes for reverse-mode differentiation.

A Tensor wraps a numpy array. Operations in `functional` record their
inputs and a backward rule on the output node while recording is enabled
and any input requires a gradient. `backward()` walks the recorded graph
in reverse topological order and accumulates gradients into `.grad`.
"""

import logging
from contextlib import contextmanager
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ctnet.error_handling import GraphCycle, ShapeMismatch, UnsupportedOp

logger = logging.getLogger(__name__)

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_recording = True


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording inside the block."""
    global _recording
    previous = _recording
    _recording = False
    try:
        yield
    finally:
        _recording = previous


def is_recording() -> bool:
    return _recording


class Tensor:
    """An array plus the bookkeeping reverse-mode differentiation needs."""

    __slots__ = ("data", "grad", "requires_grad", "parents", "backward_fn", "op", "name")

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        parents: Tuple["Tensor", ...] = (),
        backward_fn: Optional[BackwardFn] = None,
        op: str = "leaf",
        name: Optional[str] = None,
    ):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.parents = parents
        self.backward_fn = backward_fn
        self.op = op
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def is_leaf(self) -> bool:
        return not self.parents

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self.op}, requires_grad={self.requires_grad})"

    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        """Accumulate d(self)/d(leaf) into every reachable leaf's `.grad`."""
        if grad is None:
            if self.data.size != 1:
                raise ShapeMismatch(
                    f"backward() without a seed gradient needs a scalar, got {self.shape}"
                )
            grad = np.ones_like(self.data)
        if grad.shape != self.shape:
            raise ShapeMismatch(f"Seed gradient {grad.shape} does not match {self.shape}")

        order = topological_order(self)
        grads: Dict[int, np.ndarray] = {id(self): grad}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node.is_leaf:
                if node.requires_grad:
                    node.grad = g if node.grad is None else node.grad + g
                continue
            if node.backward_fn is None:
                raise UnsupportedOp(
                    f"No backward rule recorded for op '{node.op}'", {"op": node.op}
                )
            parent_grads = node.backward_fn(g)
            for parent, pg in zip(node.parents, parent_grads):
                if pg is None or not parent.requires_grad:
                    continue
                if pg.shape != parent.shape:
                    raise ShapeMismatch(
                        f"Backward of '{node.op}' produced {pg.shape} for input {parent.shape}"
                    )
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg


def topological_order(root: Tensor) -> List[Tensor]:
    """Nodes reachable from root, parents before children."""
    order: List[Tensor] = []
    done = set()
    active = set()
    stack: List[Tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        key = id(node)
        if expanded:
            active.discard(key)
            done.add(key)
            order.append(node)
            continue
        if key in done:
            continue
        if key in active:
            raise GraphCycle(f"Cycle through op '{node.op}'", {"op": node.op})
        active.add(key)
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) in active:
                raise GraphCycle(f"Cycle through op '{parent.op}'", {"op": parent.op})
            if id(parent) not in done:
                stack.append((parent, False))
    return order


def make_node(
    data: np.ndarray, parents: Sequence[Tensor], backward_fn: BackwardFn, op: str
) -> Tensor:
    """Output node of an op; records the graph only when some input needs gradients."""
    needs = _recording and any(p.requires_grad for p in parents)
    if not needs:
        return Tensor(data, op=op)
    return Tensor(data, requires_grad=True, parents=tuple(parents), backward_fn=backward_fn, op=op)


def lift(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)
