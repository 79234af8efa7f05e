"""Independent reference computations used by the tests.

None of these go through the planner or the bucket-elimination engine.
"""
from __future__ import annotations

import itertools
from collections import deque

import numpy as np

from twslice.circuit import GATES
from twslice.engine import Tensor, TensorNetwork
from twslice.graph import Graph

TOY_INDICES = "ijklmn"
TOY_TENSORS = [("A", "i"), ("B", "ijk"), ("C", "jl"), ("D", "kl"),
               ("E", "km"), ("F", "ln"), ("G", "mn")]


def ix(names: str) -> list[int]:
    return [TOY_INDICES.index(c) for c in names]


def toy_graph() -> Graph:
    return Graph.from_cliques([ix(idx) for _, idx in TOY_TENSORS],
                              names=dict(enumerate(TOY_INDICES)))


def toy_network(rng: np.random.Generator | None = None, L: int = 2) -> TensorNetwork:
    """The toy network; all-ones entries when ``rng`` is None, else random complex."""
    tensors = []
    for name, idx in TOY_TENSORS:
        shape = (L,) * len(idx)
        if rng is None:
            data = np.ones(shape)
        else:
            data = rng.normal(size=shape) + 1j * rng.normal(size=shape)
        tensors.append(Tensor.from_axes(ix(idx), data, name))
    return TensorNetwork(tensors, {k: L for k in range(6)}, dict(enumerate(TOY_INDICES)))


def brute_force_sum(net: TensorNetwork) -> complex:
    """Sum of the product of all tensor entries over every index configuration."""
    ids = sorted(net.dims)
    total = 0j
    for values in itertools.product(*(range(net.dims[u]) for u in ids)):
        conf = dict(zip(ids, values))
        term = 1 + 0j
        for t in net.tensors:
            term *= t.data[tuple(conf[u] for u in t.indices)]
        total += term
    return total


def random_network(rng: np.random.Generator, n_indices: int, L: int,
                   n_tensors: int | None = None, max_rank: int = 3) -> TensorNetwork:
    n_tensors = n_tensors or int(rng.integers(n_indices, 2 * n_indices + 1))
    tensors = []
    used = set()
    for k in range(n_tensors):
        rank = int(rng.integers(1, max_rank + 1))
        idx = sorted(rng.choice(n_indices, size=min(rank, n_indices), replace=False).tolist())
        used.update(idx)
        shape = (L,) * len(idx)
        data = rng.normal(size=shape) + 1j * rng.normal(size=shape)
        tensors.append(Tensor(tuple(idx), data, f"t{k}"))
    for u in range(n_indices):
        if u not in used:
            tensors.append(Tensor((u,), rng.normal(size=L) + 1j * rng.normal(size=L), f"v{u}"))
    return TensorNetwork(tensors, {u: L for u in range(n_indices)})


def random_graph(rng: np.random.Generator, n: int, p: float) -> Graph:
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    return Graph.from_edges(n, edges)


def order_width(g: Graph, order) -> int:
    """Elimination width computed with plain edge sets, without the library."""
    edges = {frozenset(e) for e in g.edges()}
    alive = set(g.vertices)
    width = 0
    for u in order:
        nbrs = {v for v in alive if v != u and frozenset((u, v)) in edges}
        width = max(width, len(nbrs))
        for a, b in itertools.combinations(nbrs, 2):
            edges.add(frozenset((a, b)))
        alive.discard(u)
    return width


def exhaustive_treewidth(g: Graph) -> int:
    """Minimum elimination width over all vertex permutations."""
    if not len(g):
        return 0
    return min(order_width(g, p) for p in itertools.permutations(g.vertices))


def betweenness_by_paths(g: Graph) -> dict[int, float]:
    """For every vertex, sum over unordered pairs {s, t} of the fraction of
    shortest s-t paths through it, by explicit path enumeration."""
    def all_shortest(s, t):
        dist = {s: 0}
        q = deque([s])
        while q:
            x = q.popleft()
            for y in g.neighbors(x):
                if y not in dist:
                    dist[y] = dist[x] + 1
                    q.append(y)
        if t not in dist:
            return []
        paths = [[s]]
        for _ in range(dist[t]):
            paths = [p + [y] for p in paths for y in g.neighbors(p[-1])
                     if dist.get(y) == dist[p[-1]] + 1]
        return [p for p in paths if p[-1] == t]

    score = {u: 0.0 for u in g}
    for s, t in itertools.combinations(g.vertices, 2):
        paths = all_shortest(s, t)
        if not paths:
            continue
        for u in g:
            if u in (s, t):
                continue
            score[u] += sum(u in p for p in paths) / len(paths)
    return score


def statevector_amplitude(circuit, initial: str, final: str) -> complex:
    """<final|C|initial> by applying each gate to a dense state vector."""
    n = circuit.n_qubits
    psi = np.zeros((2,) * n, dtype=np.complex128)
    psi[tuple(int(b) for b in initial)] = 1
    for op in circuit.ops:
        gate = GATES[op.kind]
        if len(op.qubits) == 1:
            q = op.qubits[0]
            psi = np.moveaxis(np.tensordot(gate, psi, axes=([1], [q])), 0, q)
        else:
            a, b = op.qubits
            g4 = gate.reshape(2, 2, 2, 2)
            psi = np.moveaxis(np.tensordot(g4, psi, axes=([2, 3], [a, b])), [0, 1], [a, b])
    return complex(psi[tuple(int(b) for b in final)])
