"""
Tests for the reverse-mode graph: recording, accumulation and failures.
"""

import numpy as np
import pytest

from ctnet.core.autograd import functional as F
from ctnet.core.autograd.tensor import Tensor, is_recording, make_node, no_grad, topological_order
from ctnet.error_handling import GraphCycle, ShapeMismatch, UnsupportedOp


@pytest.mark.unit
class TestGraph:
    """Graph construction and backward traversal."""

    def test_constants_are_not_recorded(self):
        out = F.relu(Tensor(np.ones(3)))
        assert out.is_leaf
        assert not out.requires_grad

    def test_no_grad_disables_recording(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with no_grad():
            assert not is_recording()
            out = F.scale(x, 2.0)
        assert is_recording()
        assert out.is_leaf

    def test_shared_input_accumulates(self):
        x = Tensor(np.array([1.0, -2.0]), requires_grad=True)
        y = F.total(F.add(F.scale(x, 3.0), x))
        y.backward()
        np.testing.assert_allclose(x.grad, [4.0, 4.0])

    def test_repeated_backward_accumulates_into_leaf(self):
        x = Tensor(np.ones(2), requires_grad=True)
        F.total(x).backward()
        F.total(x).backward()
        np.testing.assert_allclose(x.grad, [2.0, 2.0])
        x.zero_grad()
        assert x.grad is None

    def test_backward_needs_scalar_or_seed(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with pytest.raises(ShapeMismatch):
            F.scale(x, 2.0).backward()
        with pytest.raises(ShapeMismatch):
            F.scale(x, 2.0).backward(np.ones(2))

    def test_missing_rule(self):
        x = Tensor(np.ones(2), requires_grad=True)
        node = make_node(np.ones(2), (x,), None, "mystery")
        with pytest.raises(UnsupportedOp, match="mystery"):
            node.backward(np.ones(2))

    def test_cycle_detection(self):
        x = Tensor(np.ones(1), requires_grad=True)
        y = make_node(np.ones(1), (x,), lambda g: (g,), "id")
        x.parents = (y,)
        with pytest.raises(GraphCycle):
            topological_order(y)

    def test_topological_order_parents_first(self):
        x = Tensor(np.ones(2), requires_grad=True)
        a = F.scale(x, 2.0)
        b = F.relu(a)
        order = topological_order(F.total(b))
        assert order.index(x) < order.index(a) < order.index(b)

    def test_item_and_repr(self):
        t = Tensor(np.array(2.5))
        assert t.item() == 2.5
        assert "op=leaf" in repr(t)
