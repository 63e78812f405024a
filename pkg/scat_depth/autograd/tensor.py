"""Reverse-mode automatic differentiation over dense numpy arrays.

Tensors are immutable. Operations applied while a :class:`Tape` is active are
recorded on it; ``Tape.backward`` replays the recorded graph in reverse
topological order and leaves one gradient per reachable node in the grad
store.
"""

import logging
import threading
from abc import ABC, abstractmethod
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, float, int, Sequence]

_local = threading.local()


def get_default_dtype() -> type:
    return getattr(_local, "dtype", np.float32)


def set_default_dtype(dtype: type) -> None:
    if dtype not in (np.float32, np.float64):
        raise ValueError(f"Unsupported precision: {dtype}. Use np.float32 or np.float64")
    _local.dtype = dtype


@contextmanager
def precision(dtype: type) -> Iterator[None]:
    """Temporarily switch the dtype new tensors are created with."""
    previous = get_default_dtype()
    set_default_dtype(dtype)
    try:
        yield
    finally:
        set_default_dtype(previous)


def _tape_stack() -> List["Tape"]:
    if not hasattr(_local, "tapes"):
        _local.tapes = []
    return _local.tapes


def current_tape() -> Optional["Tape"]:
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tensor:
    """Immutable n-dimensional array that can take part in a tape."""

    def __init__(self, data: ArrayLike, requires_grad: bool = False):
        array = np.array(data, dtype=get_default_dtype())
        array.setflags(write=False)
        self.data = array
        self.requires_grad = requires_grad
        self.node_id: Optional[int] = None

    @classmethod
    def _wrap(cls, array: np.ndarray, requires_grad: bool) -> "Tensor":
        out = cls.__new__(cls)
        array = np.asarray(array, dtype=get_default_dtype())
        if array.flags.writeable and not array.flags.owndata:
            array = array.copy()
        array.setflags(write=False)
        out.data = array
        out.requires_grad = requires_grad
        out.node_id = None
        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor._wrap(self.data, requires_grad=False)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    # Operator sugar; implementations live in autograd.ops.
    def __add__(self, other: Any) -> "Tensor":
        from scat_depth.autograd import ops
        return ops.add(self, other)

    def __radd__(self, other: Any) -> "Tensor":
        from scat_depth.autograd import ops
        return ops.add(other, self)

    def __sub__(self, other: Any) -> "Tensor":
        from scat_depth.autograd import ops
        return ops.sub(self, other)

    def __rsub__(self, other: Any) -> "Tensor":
        from scat_depth.autograd import ops
        return ops.sub(other, self)

    def __mul__(self, other: Any) -> "Tensor":
        from scat_depth.autograd import ops
        return ops.mul(self, other)

    def __rmul__(self, other: Any) -> "Tensor":
        from scat_depth.autograd import ops
        return ops.mul(other, self)

    def __truediv__(self, other: Any) -> "Tensor":
        from scat_depth.autograd import ops
        return ops.div(self, other)

    def __rtruediv__(self, other: Any) -> "Tensor":
        from scat_depth.autograd import ops
        return ops.div(other, self)

    def __neg__(self) -> "Tensor":
        from scat_depth.autograd import ops
        return ops.scalar_mul(self, -1.0)

    def __getitem__(self, index: Any) -> "Tensor":
        from scat_depth.autograd import ops
        return ops.getitem(self, index)

    def sum(self, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> "Tensor":
        from scat_depth.autograd import ops
        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> "Tensor":
        from scat_depth.autograd import ops
        return ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape: int) -> "Tensor":
        from scat_depth.autograd import ops
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def transpose(self, *axes: int) -> "Tensor":
        from scat_depth.autograd import ops
        return ops.transpose(self, axes)


class Function(ABC):
    """A differentiable operation.

    ``forward`` receives the raw arrays of its input tensors; ``backward``
    receives dL/d(output) and returns one dL/d(input) per input, or None for
    inputs that do not need a gradient.
    """

    needs_grad: Tuple[bool, ...] = ()

    @abstractmethod
    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError

    @abstractmethod
    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError

    @classmethod
    def apply(cls, *tensors: Tensor, **kwargs: Any) -> Tensor:
        fn = cls()
        fn.needs_grad = tuple(t.requires_grad for t in tensors)
        out_data = fn.forward(*(t.data for t in tensors), **kwargs)
        requires_grad = any(fn.needs_grad)
        out = Tensor._wrap(out_data, requires_grad=requires_grad)

        tape = current_tape()
        if tape is not None and requires_grad:
            tape.record(fn, tensors, out)
        return out


@dataclass
class _Node:
    node_id: int
    function: Optional[Function]
    parents: Tuple[Optional[int], ...]
    tensor: Tensor


class Tape:
    """Records operations of one differentiation pass.

    Node ids are handed out in recording order, so ascending id is a valid
    topological order. The dependency structure is mirrored in a networkx
    DiGraph (edges parent -> child) used to find what a loss depends on.
    """

    def __init__(self) -> None:
        self.nodes: List[_Node] = []
        self.graph: nx.DiGraph = nx.DiGraph()
        self.grads: Dict[int, np.ndarray] = {}
        self._ids: Dict[int, int] = {}

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc: Any) -> None:
        stack = _tape_stack()
        if stack and stack[-1] is self:
            stack.pop()

    def _add_node(self, tensor: Tensor, function: Optional[Function], parents: Tuple[Optional[int], ...]) -> int:
        node_id = len(self.nodes)
        self.nodes.append(_Node(node_id, function, parents, tensor))
        self._ids[id(tensor)] = node_id
        tensor.node_id = node_id
        self.graph.add_node(node_id)
        for parent in parents:
            if parent is not None:
                self.graph.add_edge(parent, node_id)
        return node_id

    def node_of(self, tensor: Tensor) -> Optional[int]:
        return self._ids.get(id(tensor))

    def _watch(self, tensor: Tensor) -> Optional[int]:
        if not tensor.requires_grad:
            return None
        node_id = self._ids.get(id(tensor))
        if node_id is None:
            node_id = self._add_node(tensor, None, ())
        return node_id

    def record(self, function: Function, inputs: Sequence[Tensor], output: Tensor) -> None:
        parents = tuple(self._watch(t) for t in inputs)
        self._add_node(output, function, parents)

    def backward(self, loss: Tensor) -> Dict[int, np.ndarray]:
        """Accumulate d(loss)/d(node) for every node the loss depends on."""
        if loss.ndim != 0:
            raise ValueError(f"backward() needs a scalar loss, got shape {loss.shape}")
        loss_id = self.node_of(loss)
        if loss_id is None:
            raise RuntimeError("Loss was not recorded on this tape (no operand requires grad?)")

        reachable = nx.ancestors(self.graph, loss_id)
        reachable.add(loss_id)

        grads: Dict[int, np.ndarray] = {loss_id: np.ones_like(loss.data)}
        for node_id in sorted(reachable, reverse=True):
            node = self.nodes[node_id]
            grad = grads.get(node_id)
            if grad is None or node.function is None:
                continue
            parent_grads = node.function.backward(grad)
            for parent_id, parent_grad in zip(node.parents, parent_grads):
                if parent_id is None or parent_grad is None:
                    continue
                parent_shape = self.nodes[parent_id].tensor.shape
                if parent_grad.shape != parent_shape:
                    raise RuntimeError(
                        f"{type(node.function).__name__}.backward produced shape "
                        f"{parent_grad.shape} for an input of shape {parent_shape}"
                    )
                if parent_id in grads:
                    grads[parent_id] = grads[parent_id] + parent_grad
                else:
                    grads[parent_id] = parent_grad

        self.grads = grads
        logger.debug(f"Backward over {len(reachable)} of {len(self.nodes)} recorded nodes")
        return grads

    def gradient(self, tensor: Tensor) -> Optional[np.ndarray]:
        node_id = self.node_of(tensor)
        if node_id is None:
            return None
        return self.grads.get(node_id)

    def gradients(self, named: Mapping[str, Tensor]) -> Dict[str, np.ndarray]:
        """Gradients for named leaves; leaves the loss never touched get zeros."""
        result: Dict[str, np.ndarray] = {}
        for name, tensor in named.items():
            grad = self.gradient(tensor)
            result[name] = np.zeros_like(tensor.data) if grad is None else grad
        return result
