"""Dense tensor networks and their contraction by bucket elimination.

Counters follow one convention throughout: eliminating an index costs one
complex multiply-add per entry of the joint index space of its bucket (the
clique of the index and its current neighbors), and that joint space is the
"product" whose peak size is reported.
"""
from __future__ import annotations

import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Mapping, Sequence

import numpy as np

from twslice.graph import Graph


class DimensionMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Tensor:
    """Dense complex tensor; axes follow ``indices``, kept in ascending id order."""

    indices: tuple[int, ...]
    data: np.ndarray
    name: str = ""

    def __post_init__(self):
        if len(set(self.indices)) != len(self.indices):
            raise ValueError(f"duplicate indices in tensor {self.name!r}: {self.indices}")
        if list(self.indices) != sorted(self.indices):
            raise ValueError("tensor indices must be ascending; use Tensor.from_axes")
        if self.data.ndim != len(self.indices):
            raise DimensionMismatchError(
                f"tensor {self.name!r} has {self.data.ndim} axes for {len(self.indices)} indices")

    @classmethod
    def from_axes(cls, indices: Sequence[int], data, name: str = "") -> "Tensor":
        """Build from axes in arbitrary order; a repeated index keeps only its diagonal."""
        data = np.asarray(data, dtype=np.complex128)
        indices = [int(i) for i in indices]
        if data.ndim != len(indices):
            raise DimensionMismatchError(
                f"tensor {name!r}: {data.ndim} axes for {len(indices)} indices")
        uniq = sorted(set(indices))
        if len(uniq) != len(indices):
            data = np.einsum(data, indices, uniq)
        else:
            data = np.transpose(data, [indices.index(u) for u in uniq])
        return cls(tuple(uniq), np.array(data, order="C"), name)

    @property
    def size(self) -> int:
        return int(self.data.size)


@dataclass
class TensorNetwork:
    tensors: list[Tensor]
    dims: dict[int, int]
    names: dict[int, str] = field(default_factory=dict)
    open_indices: tuple[int, ...] = ()

    def __post_init__(self):
        for t in self.tensors:
            for ax, u in enumerate(t.indices):
                if u not in self.dims:
                    raise DimensionMismatchError(f"index {u} of tensor {t.name!r} has no dimension")
                if t.data.shape[ax] != self.dims[u]:
                    raise DimensionMismatchError(
                        f"tensor {t.name!r}: axis for index {u} has length {t.data.shape[ax]}, "
                        f"expected {self.dims[u]}")

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(sorted(self.dims))

    def graph(self) -> Graph:
        return Graph.from_cliques((t.indices for t in self.tensors), self.dims, self.names)


@dataclass
class ContractionResult:
    value: complex
    flops: int = 0
    peak_product: int = 0
    peak_intermediate: int = 0


def _prod(xs: Iterable[int]) -> int:
    return reduce(lambda a, b: a * b, xs, 1)


def contract(net: TensorNetwork, order: Sequence[int]) -> ContractionResult:
    """Sum the network to a scalar, eliminating indices in ``order``."""
    if net.open_indices:
        raise ValueError("contraction with open indices is not supported")
    order = [int(u) for u in order]
    if len(order) != len(net.dims) or set(order) != set(net.dims):
        raise ValueError("order must cover exactly the network indices")
    rank = {u: i for i, u in enumerate(order)}
    buckets: dict[int, list[Tensor]] = {u: [] for u in order}
    scalar = 1.0 + 0j

    def place(t: Tensor):
        nonlocal scalar
        if t.indices:
            buckets[min(t.indices, key=rank.__getitem__)].append(t)
        else:
            scalar *= complex(t.data)

    for t in net.tensors:
        place(t)

    res = ContractionResult(0j)
    for u in order:
        bucket = buckets.pop(u)
        joint = sorted(set().union(*(t.indices for t in bucket)) | {u})
        out = [v for v in joint if v != u]
        n_joint = _prod(net.dims[v] for v in joint)
        res.flops += n_joint
        res.peak_product = max(res.peak_product, n_joint)
        res.peak_intermediate = max(res.peak_intermediate, _prod(net.dims[v] for v in out))
        if not bucket:
            scalar *= net.dims[u]
            continue
        label = {v: k for k, v in enumerate(joint)}
        acc = bucket[0]
        for t in bucket[1:-1]:
            idx = sorted(set(acc.indices) | set(t.indices))
            data = np.einsum(acc.data, [label[v] for v in acc.indices],
                             t.data, [label[v] for v in t.indices], [label[v] for v in idx])
            acc = Tensor(tuple(idx), data)
        if len(bucket) == 1:
            data = np.einsum(acc.data, [label[v] for v in acc.indices], [label[v] for v in out])
        else:
            last = bucket[-1]
            data = np.einsum(acc.data, [label[v] for v in acc.indices],
                             last.data, [label[v] for v in last.indices], [label[v] for v in out])
        place(Tensor(tuple(out), np.asarray(data), f"T_{u}"))
    res.value = complex(scalar)
    return res


def slice_network(net: TensorNetwork, assignment: Mapping[int, int]) -> TensorNetwork:
    """Fix the indices in ``assignment`` to the given values (one rank less per fixed index)."""
    for u, val in assignment.items():
        if u not in net.dims:
            raise KeyError(f"index {u} not in network")
        if not 0 <= val < net.dims[u]:
            raise ValueError(f"value {val} out of range for index {u} of dimension {net.dims[u]}")
    if not assignment:
        return net
    tensors = []
    for t in net.tensors:
        fixed = [ax for ax, u in enumerate(t.indices) if u in assignment]
        if not fixed:
            tensors.append(t)
            continue
        sl = tuple(assignment[u] if u in assignment else slice(None) for u in t.indices)
        keep = tuple(u for u in t.indices if u not in assignment)
        tensors.append(Tensor(keep, np.array(t.data[sl], copy=True), t.name))
    dims = {u: d for u, d in net.dims.items() if u not in assignment}
    names = {u: n for u, n in net.names.items() if u not in assignment}
    return TensorNetwork(tensors, dims, names)


def merge_parallel_tensors(net: TensorNetwork) -> TensorNetwork:
    """Multiply every tensor into the first tensor whose indices contain its own.

    Afterwards no tensor's index set is contained in another's; the value and
    the expression graph are unchanged.
    """
    ts = sorted(enumerate(net.tensors), key=lambda p: (-len(p[1].indices), p[0]))
    kept: list[Tensor] = []
    scalar = 1.0 + 0j
    for _, t in ts:
        host = next((k for k, h in enumerate(kept) if set(t.indices) <= set(h.indices)), None)
        if host is None:
            if t.indices:
                kept.append(t)
            else:
                scalar *= complex(t.data)
            continue
        h = kept[host]
        label = {v: k for k, v in enumerate(h.indices)}
        data = np.einsum(h.data, list(range(len(h.indices))),
                         t.data, [label[v] for v in t.indices], list(range(len(h.indices))))
        kept[host] = Tensor(h.indices, data, h.name)
    if scalar != 1 and kept:
        kept[0] = Tensor(kept[0].indices, kept[0].data * scalar, kept[0].name)
    elif scalar != 1:
        kept.append(Tensor((), np.asarray(scalar, dtype=np.complex128), "scalar"))
    return TensorNetwork(kept, dict(net.dims), dict(net.names))


# -- parallel slice-sum ---------------------------------------------------------------

@dataclass
class TaskResult:
    assignment: tuple[int, ...]
    value: complex
    flops: int
    peak_product: int
    peak_intermediate: int


@dataclass
class ParallelResult:
    value: complex
    mu: tuple[int, ...]
    tasks: list[TaskResult]

    @property
    def total_flops(self) -> int:
        return sum(t.flops for t in self.tasks)

    @property
    def peak_product(self) -> int:
        return max(t.peak_product for t in self.tasks)

    @property
    def peak_intermediate(self) -> int:
        return max(t.peak_intermediate for t in self.tasks)


_SHARED: dict = {}


def _init_worker(net, mu, order):
    _SHARED["job"] = (net, mu, order)


def _run_task(values: tuple[int, ...]) -> TaskResult:
    net, mu, order = _SHARED["job"]
    r = contract(slice_network(net, dict(zip(mu, values))), order)
    return TaskResult(values, r.value, r.flops, r.peak_product, r.peak_intermediate)


def assignments(net: TensorNetwork, mu: Sequence[int]) -> list[tuple[int, ...]]:
    """All value tuples for ``mu``, in lexicographic order."""
    return list(itertools.product(*(range(net.dims[u]) for u in mu)))


def default_workers() -> int:
    return os.cpu_count() or 1


def parallel_contract(net: TensorNetwork, plan, workers: int | None = None,
                      chunksize: int | None = None) -> ParallelResult:
    """Contract all slices over ``plan.mu`` with ``plan.reduced_order`` and sum them.

    ``plan`` is anything with ``mu`` and ``reduced_order`` attributes. Partial
    results are always added in lexicographic assignment order, so the sum is
    bit-identical for every worker count.
    """
    mu = tuple(plan.mu)
    order = tuple(plan.reduced_order)
    missing = [u for u in mu if u not in net.dims]
    if missing:
        raise KeyError(f"sliced indices not in network: {missing}")
    if set(order) | set(mu) != set(net.dims) or len(order) + len(mu) != len(net.dims):
        raise ValueError("reduced order and sliced indices must partition the network indices")
    todo = assignments(net, mu)
    workers = default_workers() if workers is None else max(1, int(workers))
    workers = min(workers, len(todo))
    if workers == 1:
        _init_worker(net, mu, order)
        try:
            results = [_run_task(a) for a in todo]
        finally:
            _SHARED.clear()
    else:
        chunk = chunksize or max(1, len(todo) // (4 * workers))
        with ProcessPoolExecutor(workers, initializer=_init_worker,
                                 initargs=(net, mu, order)) as ex:
            results = list(ex.map(_run_task, todo, chunksize=chunk))
    total = 0j
    for r in results:
        total += r.value
    return ParallelResult(total, mu, results)
