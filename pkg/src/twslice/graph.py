"""Undirected expression graphs over index variables.

Vertices are dense integer ids assigned at construction; they are never
renumbered, so a graph with some vertices removed keeps the original ids.
Tensors appear as cliques.
"""
from __future__ import annotations

from typing import Iterable, Iterator, Mapping


class UnknownVertexError(KeyError):
    pass


class Graph:
    """Immutable simple undirected graph.

    Iteration over vertices and neighbors is in ascending id order, which
    makes every tie-break downstream deterministic.
    """

    __slots__ = ("_adj", "_names")

    def __init__(
        self,
        adjacency: Mapping[int, Iterable[int]] | None = None,
        names: Mapping[int, str] | None = None,
    ):
        adj: dict[int, set[int]] = {}
        for u, nbrs in (adjacency or {}).items():
            adj.setdefault(int(u), set())
            for v in nbrs:
                v = int(v)
                if v == u:
                    continue
                adj[u].add(v)
                adj.setdefault(v, set()).add(u)
        for u in adj:
            if u < 0:
                raise ValueError(f"vertex ids must be non-negative, got {u}")
        self._adj = {u: frozenset(adj[u]) for u in sorted(adj)}
        self._names = {u: str(n) for u, n in (names or {}).items() if u in self._adj}

    @classmethod
    def from_edges(cls, vertices: Iterable[int] | int, edges: Iterable[tuple[int, int]],
                   names: Mapping[int, str] | None = None) -> "Graph":
        """Build from a (multi)edge list; parallel edges and self-loops are dropped."""
        if isinstance(vertices, int):
            vertices = range(vertices)
        adj: dict[int, set[int]] = {int(v): set() for v in vertices}
        for u, v in edges:
            if u not in adj or v not in adj:
                raise UnknownVertexError((u, v))
            if u != v:
                adj[u].add(v)
        return cls(adj, names)

    @classmethod
    def from_cliques(cls, cliques: Iterable[Iterable[int]], vertices: Iterable[int] = (),
                     names: Mapping[int, str] | None = None) -> "Graph":
        """Clique expansion: every clique (tensor) connects all its vertices."""
        adj: dict[int, set[int]] = {int(v): set() for v in vertices}
        for clique in cliques:
            clique = [int(v) for v in clique]
            for v in clique:
                adj.setdefault(v, set()).update(clique)
        return cls(adj, names)

    # -- queries -----------------------------------------------------------

    @property
    def vertices(self) -> tuple[int, ...]:
        return tuple(self._adj)

    def __len__(self) -> int:
        return len(self._adj)

    def __iter__(self) -> Iterator[int]:
        return iter(self._adj)

    def __contains__(self, u) -> bool:
        return u in self._adj

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._adj == other._adj

    def __hash__(self):
        return hash(tuple(self._adj.items()))

    def __repr__(self) -> str:
        return f"Graph(|V|={len(self)}, |E|={self.num_edges})"

    def neighbors(self, u: int) -> frozenset[int]:
        try:
            return self._adj[u]
        except KeyError:
            raise UnknownVertexError(u) from None

    def degree(self, u: int) -> int:
        return len(self.neighbors(u))

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.neighbors(u)

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, nbrs in self._adj.items() for v in sorted(nbrs) if u < v]

    @property
    def num_edges(self) -> int:
        return sum(len(n) for n in self._adj.values()) // 2

    def name(self, u: int) -> str:
        if u not in self._adj:
            raise UnknownVertexError(u)
        return self._names.get(u, str(u))

    @property
    def names(self) -> dict[int, str]:
        return dict(self._names)

    def vertex_by_name(self, name: str) -> int:
        for u in self._adj:
            if self.name(u) == name:
                return u
        raise UnknownVertexError(name)

    def adjacency(self) -> dict[int, set[int]]:
        """Mutable copy of the adjacency, for algorithms that eliminate in place."""
        return {u: set(n) for u, n in self._adj.items()}

    # -- pure transformations ---------------------------------------------

    def eliminate(self, u: int) -> "Graph":
        """Remove ``u`` after connecting all its neighbors into a clique."""
        nbrs = self.neighbors(u)
        adj = self.adjacency()
        for v in nbrs:
            adj[v] |= nbrs
            adj[v].discard(v)
            adj[v].discard(u)
        del adj[u]
        return Graph(adj, self._names)

    def remove_vertex(self, u: int) -> "Graph":
        """Remove ``u`` and its incident edges, without fill-in."""
        return self.remove_vertices([u])

    def remove_vertices(self, us: Iterable[int]) -> "Graph":
        us = set(us)
        for u in us:
            if u not in self._adj:
                raise UnknownVertexError(u)
        adj = {v: n - us for v, n in self._adj.items() if v not in us}
        return Graph(adj, self._names)

    def connected_components(self) -> list[list[int]]:
        seen: set[int] = set()
        comps = []
        for s in self._adj:
            if s in seen:
                continue
            comp = [s]
            seen.add(s)
            stack = [s]
            while stack:
                x = stack.pop()
                for y in self._adj[x]:
                    if y not in seen:
                        seen.add(y)
                        comp.append(y)
                        stack.append(y)
            comps.append(sorted(comp))
        return comps


# -- PACE 2017 .gr format ------------------------------------------------------

def write_gr(g: Graph, stream) -> dict[int, int]:
    """Write ``g`` in PACE .gr format; returns the map PACE id (1-based) -> vertex id."""
    pace_of = {u: i + 1 for i, u in enumerate(g.vertices)}
    edges = g.edges()
    stream.write(f"p tw {len(g)} {len(edges)}\n")
    for u, v in edges:
        stream.write(f"{pace_of[u]} {pace_of[v]}\n")
    return {p: u for u, p in pace_of.items()}


def read_gr(stream) -> Graph:
    """Read a PACE .gr graph; vertex ``k`` in the file becomes id ``k - 1``."""
    n = None
    edges = []
    for lineno, line in enumerate(stream, 1):
        parts = line.split()
        if not parts or parts[0] == "c":
            continue
        if parts[0] == "p":
            if len(parts) != 4 or parts[1] != "tw":
                raise ValueError(f"bad header at line {lineno}: {line.strip()!r}")
            n = int(parts[2])
            continue
        if n is None:
            raise ValueError(f"edge before header at line {lineno}")
        if len(parts) != 2:
            raise ValueError(f"bad edge at line {lineno}: {line.strip()!r}")
        u, v = int(parts[0]) - 1, int(parts[1]) - 1
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"vertex out of range at line {lineno}")
        edges.append((u, v))
    if n is None:
        raise ValueError("missing 'p tw' header")
    return Graph.from_edges(n, edges)
