"""Elimination orders, treewidth and tree decompositions.

An elimination order is a sequence of vertex ids; position ``i`` in the
sequence is the rank of the vertex. The width of an order is the largest
neighborhood met while eliminating along it, which equals the width of the
tree decomposition built from it.
"""
from __future__ import annotations

import heapq
import random
import subprocess
import time
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from twslice.graph import Graph, read_gr, write_gr

Order = tuple[int, ...]

HEURISTICS = ("min-fill", "min-degree", "random")
EXACT_CAP = 16


class OrderMismatchError(ValueError):
    pass


class GraphTooLargeError(ValueError):
    pass


class InvalidTDError(ValueError):
    pass


def check_order(g: Graph, order: Sequence[int]) -> Order:
    order = tuple(order)
    if len(order) != len(g) or set(order) != set(g.vertices):
        missing = sorted(set(g.vertices) - set(order))
        extra = sorted(set(order) - set(g.vertices))
        raise OrderMismatchError(
            f"order does not cover the graph (missing={missing[:5]}, extra={extra[:5]}, "
            f"len={len(order)} vs |V|={len(g)})")
    return order


def _eliminate_inplace(adj: dict[int, set[int]], u: int) -> set[int]:
    nbrs = adj.pop(u)
    for v in nbrs:
        nv = adj[v]
        nv.discard(u)
        nv |= nbrs
        nv.discard(v)
    return nbrs


def elimination_neighborhoods(g: Graph, order: Sequence[int]) -> list[frozenset[int]]:
    """Neighborhood of each vertex at the moment it is eliminated along ``order``."""
    order = check_order(g, order)
    adj = g.adjacency()
    return [frozenset(_eliminate_inplace(adj, u)) for u in order]


def _order_width(adj: dict[int, set[int]], order: Iterable[int], stop_at: int | None = None) -> int:
    # Consumes ``adj``. Returns early once the width reaches ``stop_at``.
    tau = 0
    for u in order:
        tau = max(tau, len(_eliminate_inplace(adj, u)))
        if stop_at is not None and tau >= stop_at:
            break
    return tau


def treewidth_from_order(g: Graph, order: Sequence[int]) -> int:
    """Width of the elimination along ``order``; ``g`` is left untouched.

    Starts from 0 so graphs without edges have width 0.
    """
    order = check_order(g, order)
    return _order_width(g.adjacency(), order)


# -- heuristic order search ------------------------------------------------------

def _fill_in(adj: dict[int, set[int]], v: int) -> int:
    nbrs = list(adj[v])
    missing = 0
    for i, a in enumerate(nbrs):
        na = adj[a]
        for b in nbrs[i + 1:]:
            if b not in na:
                missing += 1
    return missing


def _greedy_order(g: Graph, heuristic: str, priority: dict[int, int]) -> tuple[Order, int]:
    adj = g.adjacency()
    if heuristic == "min-fill":
        cost = _fill_in
    else:
        def cost(a, v):
            return len(a[v])
    current = {v: cost(adj, v) for v in adj}
    heap = [(c, priority[v], v) for v, c in current.items()]
    heapq.heapify(heap)
    order = []
    tau = 0
    while heap:
        c, _, u = heapq.heappop(heap)
        if u not in adj or current[u] != c:
            continue
        nbrs = _eliminate_inplace(adj, u)
        order.append(u)
        tau = max(tau, len(nbrs))
        affected = set(nbrs)
        if heuristic == "min-fill":
            for x in nbrs:
                affected |= adj[x]
        for w in affected:
            c = cost(adj, w)
            if c != current[w]:
                current[w] = c
                heapq.heappush(heap, (c, priority[w], w))
    return tuple(order), tau


def find_order(
    g: Graph,
    heuristic: str = "min-fill",
    seed: int = 0,
    restarts: int = 1,
    time_budget: float | None = None,
) -> tuple[Order, int]:
    """Best order over ``restarts`` runs of a greedy heuristic.

    Run ``r`` uses ``random.Random(seed + r)``; run 0 of min-fill/min-degree
    breaks ties by smallest id, later runs shuffle the tie priorities. The
    winner is the smallest ``(width, order)`` pair. ``time_budget`` (seconds)
    optionally stops the search early, after at least one run.
    """
    if heuristic not in HEURISTICS:
        raise ValueError(f"unknown heuristic {heuristic!r}; expected one of {HEURISTICS}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    start = time.perf_counter()
    best: tuple[int, Order] | None = None
    for r in range(restarts):
        rng = random.Random(seed + r)
        if heuristic == "random":
            order = list(g.vertices)
            rng.shuffle(order)
            order = tuple(order)
            tau = treewidth_from_order(g, order)
        else:
            if r == 0:
                priority = {v: v for v in g.vertices}
            else:
                ranks = list(range(len(g)))
                rng.shuffle(ranks)
                priority = dict(zip(g.vertices, ranks))
            order, tau = _greedy_order(g, heuristic, priority)
        if best is None or (tau, order) < best:
            best = (tau, order)
        if time_budget is not None and time.perf_counter() - start >= time_budget:
            break
    return best[1], best[0]


# -- exact treewidth (small graphs) -----------------------------------------------

def _exact_component(g: Graph, comp: list[int]) -> tuple[Order, int]:
    # Dynamic programming over subsets S of vertices eliminated first:
    # TW(S) = min_{v in S} max(TW(S - v), |Q(S - v, v)|), with Q(S, v) the
    # vertices outside S + v reachable from v through S.
    n = len(comp)
    bit = {v: i for i, v in enumerate(comp)}
    nbr = [0] * n
    for v in comp:
        for w in g.neighbors(v):
            nbr[bit[v]] |= 1 << bit[w]
    full = (1 << n) - 1
    tw = [0] * (1 << n)
    choice = [0] * (1 << n)
    for s in range(1, full + 1):
        best = n
        best_v = -1
        rest = s
        while rest:
            low = rest & -rest
            rest ^= low
            v = low.bit_length() - 1
            sv = s ^ low
            prev = tw[sv]
            if prev >= best:
                continue
            reach = nbr[v]
            front = reach & sv
            seen = front
            while front:
                x = front & -front
                front ^= x
                nx = nbr[x.bit_length() - 1]
                reach |= nx
                new = nx & sv & ~seen
                seen |= new
                front |= new
            q = bin(reach & ~sv & ~low).count("1")
            val = prev if prev > q else q
            if val < best:
                best = val
                best_v = v
        tw[s] = best
        choice[s] = best_v
    order = []
    s = full
    while s:
        v = choice[s]
        order.append(comp[v])
        s ^= 1 << v
    order.reverse()
    return tuple(order), tw[full]


def exact_elimination_order(g: Graph, cap: int = EXACT_CAP) -> tuple[Order, int]:
    """An optimal elimination order and the treewidth of ``g``."""
    if len(g) > cap:
        raise GraphTooLargeError(f"exact treewidth limited to {cap} vertices, got {len(g)}")
    order: list[int] = []
    tau = 0
    for comp in g.connected_components():
        o, t = _exact_component(g, comp)
        order.extend(o)
        tau = max(tau, t)
    return tuple(order), tau


def exact_treewidth(g: Graph, cap: int = EXACT_CAP) -> int:
    return exact_elimination_order(g, cap)[1]


# -- tree decompositions ------------------------------------------------------------

@dataclass(frozen=True)
class TreeDecomposition:
    bags: tuple[frozenset[int], ...]
    edges: tuple[tuple[int, int], ...]
    root: int = 0

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=1) - 1

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in self.bags]
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return [sorted(x) for x in adj]

    def parents(self, root: int | None = None) -> dict[int, int | None]:
        """Parent of every bag when the tree hangs from ``root``."""
        root = self.root if root is None else root
        adj = self.adjacency()
        parent: dict[int, int | None] = {root: None}
        queue = deque([root])
        while queue:
            b = queue.popleft()
            for c in adj[b]:
                if c not in parent:
                    parent[c] = b
                    queue.append(c)
        return parent

    def bags_containing(self, u: int) -> list[int]:
        return [i for i, b in enumerate(self.bags) if u in b]


def build_td_from_order(g: Graph, order: Sequence[int]) -> TreeDecomposition:
    """Clique tree of the elimination along ``order``, keeping maximal cliques only.

    Bag of a vertex ``u`` is ``u`` plus its neighbors when eliminated. The
    bag hangs below the bag of the first of those neighbors to be eliminated.
    A bag contained in one of its children is merged into that child. Every
    vertex is processed (isolated and last vertices close a root bag), and
    roots of separate components are joined to the first root.
    """
    order = check_order(g, order)
    rank = {u: i for i, u in enumerate(order)}
    adj = g.adjacency()
    clique: dict[int, frozenset[int]] = {}
    parent_vertex: dict[int, int | None] = {}
    children: dict[int, list[int]] = {u: [] for u in order}
    for u in order:
        nbrs = _eliminate_inplace(adj, u)
        clique[u] = frozenset(nbrs) | {u}
        if nbrs:
            p = min(nbrs, key=rank.__getitem__)
            parent_vertex[u] = p
            children[p].append(u)
        else:
            parent_vertex[u] = None

    bags: list[frozenset[int]] = []
    node_of: dict[int, int] = {}
    edges: list[tuple[int, int]] = []
    roots: list[int] = []
    for u in order:
        absorbed = None
        for v in children[u]:
            if clique[u] <= clique[v]:
                absorbed = node_of[v]
                break
        if absorbed is None:
            node_of[u] = len(bags)
            bags.append(clique[u])
        else:
            node_of[u] = absorbed
        for v in children[u]:
            if node_of[v] != node_of[u]:
                edges.append((node_of[v], node_of[u]))
        if parent_vertex[u] is None:
            roots.append(node_of[u])
    for r in roots[1:]:
        edges.append((r, roots[0]))
    root = node_of[order[-1]] if order else 0
    return TreeDecomposition(tuple(bags), tuple(edges), root)


@dataclass(frozen=True)
class TDViolation:
    """First failed check of a tree decomposition.

    ``prop`` is 0 for the tree shape, 1 for vertex coverage, 2 for edge
    coverage and 3 for the connectedness of each vertex's bags.
    """
    prop: int
    message: str
    witnesses: tuple = ()


def validate_td(g: Graph, td: TreeDecomposition) -> TDViolation | None:
    """Return ``None`` for a valid decomposition of ``g``, else the first violation."""
    nb = len(td.bags)
    if nb == 0:
        if len(g):
            return TDViolation(1, "no bags", tuple(g.vertices))
        return None
    for a, b in td.edges:
        if not (0 <= a < nb and 0 <= b < nb) or a == b:
            return TDViolation(0, "tree edge refers to a missing bag", ((a, b),))
    if len(set(map(frozenset, td.edges))) != nb - 1 or len(td.edges) != nb - 1:
        return TDViolation(0, f"{len(td.edges)} tree edges for {nb} bags", ())
    if not 0 <= td.root < nb:
        return TDViolation(0, "root is not a bag", (td.root,))
    reached = td.parents(0)
    if len(reached) != nb:
        unreached = tuple(sorted(set(range(nb)) - set(reached)))
        return TDViolation(0, "tree is disconnected", unreached)

    covered = frozenset().union(*td.bags)
    missing = sorted(set(g.vertices) - covered)
    if missing:
        return TDViolation(1, "vertices in no bag", tuple(missing))
    foreign = sorted(covered - set(g.vertices))
    if foreign:
        return TDViolation(1, "bags contain vertices not in the graph", tuple(foreign))

    for u, v in g.edges():
        if not any(u in b and v in b for b in td.bags):
            return TDViolation(2, f"edge ({u}, {v}) is in no bag", ((u, v),))

    tree_adj = td.adjacency()
    for u in g.vertices:
        holding = set(td.bags_containing(u))
        start = min(holding)
        seen = {start}
        stack = [start]
        while stack:
            b = stack.pop()
            for c in tree_adj[b]:
                if c in holding and c not in seen:
                    seen.add(c)
                    stack.append(c)
        if seen != holding:
            return TDViolation(3, f"bags holding vertex {u} are not connected",
                               (u, tuple(sorted(holding))))
    return None


def recover_order(td: TreeDecomposition, root: int | frozenset | None = None,
                  graph: Graph | None = None) -> Order:
    """Elimination order consistent with ``td``.

    Leaves are peeled toward ``root`` (a bag index or the bag itself); each
    peeled bag contributes the vertices it does not share with its parent.
    The root's vertices come last. When ``graph`` is given the decomposition
    is validated against it first.
    """
    if graph is not None:
        bad = validate_td(graph, td)
        if bad is not None:
            raise InvalidTDError(bad.message)
    if not td.bags:
        return ()
    if root is None:
        root = td.root
    elif not isinstance(root, int):
        root = td.bags.index(frozenset(root))
    if len(td.edges) != len(td.bags) - 1:
        raise InvalidTDError("decomposition is not a tree")
    parent = td.parents(root)
    if len(parent) != len(td.bags):
        raise InvalidTDError("decomposition is not connected")
    # Reverse BFS visits every bag after all of its descendants.
    bfs = list(parent)
    order: list[int] = []
    placed: set[int] = set()
    for b in reversed(bfs):
        p = parent[b]
        diff = td.bags[b] - td.bags[p] if p is not None else td.bags[b]
        for u in sorted(diff - placed):
            order.append(u)
            placed.add(u)
    return tuple(order)


# -- PACE 2017 .td format and external solvers ----------------------------------------

def write_td(td: TreeDecomposition, stream, n_vertices: int,
             pace_of: dict[int, int] | None = None) -> None:
    """Write ``td`` in PACE .td format. ``pace_of`` maps vertex id -> 1-based PACE id."""
    pace_of = pace_of or {}
    stream.write(f"s td {len(td.bags)} {td.width + 1} {n_vertices}\n")
    for i, bag in enumerate(td.bags):
        ids = sorted(pace_of.get(u, u + 1) for u in bag)
        stream.write(" ".join(["b", str(i + 1)] + [str(x) for x in ids]) + "\n")
    for a, b in td.edges:
        stream.write(f"{a + 1} {b + 1}\n")


def read_td(stream, vertex_of: dict[int, int] | None = None) -> TreeDecomposition:
    """Read a PACE .td file. ``vertex_of`` maps 1-based PACE id -> vertex id."""
    vertex_of = vertex_of or {}
    n_bags = None
    bags: dict[int, frozenset[int]] = {}
    edges = []
    for lineno, line in enumerate(stream, 1):
        parts = line.split()
        if not parts or parts[0] == "c":
            continue
        if parts[0] == "s":
            if len(parts) != 5 or parts[1] != "td":
                raise ValueError(f"bad solution line at line {lineno}: {line.strip()!r}")
            n_bags = int(parts[2])
        elif parts[0] == "b":
            if n_bags is None:
                raise ValueError(f"bag before solution line at line {lineno}")
            bid = int(parts[1])
            if not 1 <= bid <= n_bags:
                raise ValueError(f"bag id out of range at line {lineno}")
            bags[bid - 1] = frozenset(vertex_of.get(int(x), int(x) - 1) for x in parts[2:])
        else:
            if len(parts) != 2:
                raise ValueError(f"bad tree edge at line {lineno}: {line.strip()!r}")
            edges.append((int(parts[0]) - 1, int(parts[1]) - 1))
    if n_bags is None:
        raise ValueError("missing 's td' line")
    return TreeDecomposition(tuple(bags.get(i, frozenset()) for i in range(n_bags)),
                             tuple(edges), 0)


def solve_external(g: Graph, command: Sequence[str], timeout: float | None = None) -> Order:
    """Order from an external PACE solver reading .gr on stdin and writing .td on stdout."""
    if not len(g):
        return ()
    import io

    buf = io.StringIO()
    vertex_of = write_gr(g, buf)
    proc = subprocess.run(list(command), input=buf.getvalue(), capture_output=True,
                          text=True, timeout=timeout, check=True)
    td = read_td(io.StringIO(proc.stdout), vertex_of)
    bad = validate_td(g, td)
    if bad is not None:
        raise InvalidTDError(f"external solver returned an invalid decomposition: {bad.message}")
    return recover_order(td)


OrderSupplier = Callable[[Graph], Order]


def order_supplier(kind: str = "min-fill", seed: int = 0, restarts: int = 1,
                   command: Sequence[str] | None = None) -> OrderSupplier:
    """Callable producing a fresh order for a graph: a heuristic, "exact" or "external"."""
    if kind == "exact":
        return lambda g: exact_elimination_order(g)[0]
    if kind == "external":
        if not command:
            raise ValueError("external order supplier needs a command")
        return lambda g: solve_external(g, command)
    if kind not in HEURISTICS:
        raise ValueError(f"unknown order supplier {kind!r}")
    return lambda g: find_order(g, kind, seed, restarts)[0]


__all__ = [
    "Order", "HEURISTICS", "OrderMismatchError", "GraphTooLargeError", "InvalidTDError",
    "check_order", "elimination_neighborhoods", "treewidth_from_order", "find_order",
    "exact_treewidth", "exact_elimination_order", "TreeDecomposition", "TDViolation",
    "build_td_from_order", "validate_td", "recover_order", "write_td", "read_td",
    "solve_external", "order_supplier", "read_gr", "write_gr",
]
