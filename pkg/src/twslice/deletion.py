"""Greedy mu-treewidth deletion.

Vertices are removed one at a time, each time the one maximizing a score
function on the current reduced graph and order. Removing a vertex keeps
the relative order of the others; optionally the order is recomputed every
``recalc_every`` removals.
"""
from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Sequence

import networkx as nx

from twslice.graph import Graph
from twslice.ordering import (
    Order,
    OrderSupplier,
    _order_width,
    build_td_from_order,
    check_order,
    order_supplier,
    treewidth_from_order,
)

SCORES = ("degree", "betweenness", "tw-delta", "tree-trim")


class EmptyGraphError(ValueError):
    pass


@dataclass(frozen=True)
class ScoreFunction:
    """Score configuration for :func:`greedy_treewidth_deletion`.

    ``upfront`` scores the input graph once and removes the ``m`` best
    vertices of that ranking instead of rescoring after every removal.
    """
    kind: str = "tree-trim"
    recalc_every: int | None = None
    tie_break: str = "lexicographic"
    seed: int = 0
    upfront: bool = False

    def __post_init__(self):
        if self.kind not in SCORES:
            raise ValueError(f"unknown score {self.kind!r}; expected one of {SCORES}")
        if self.recalc_every is not None and self.recalc_every < 1:
            raise ValueError("recalc_every must be >= 1")
        if self.tie_break not in ("lexicographic", "random"):
            raise ValueError("tie_break must be 'lexicographic' or 'random'")
        if self.upfront and self.kind == "tree-trim":
            raise ValueError("tree-trim is rescored after every removal")

    @property
    def label(self) -> str:
        s = self.kind
        if self.recalc_every:
            s += f"/recalc{self.recalc_every}"
        if self.upfront:
            s += "/upfront"
        return s


@dataclass
class SlicePlan:
    mu: list[int]
    reduced_graph: Graph
    reduced_order: Order
    tau: int
    per_step_tau: list[int] = field(default_factory=list)
    initial_tau: int = 0
    score_seconds: list[float] = field(default_factory=list)
    elapsed_seconds: list[float] = field(default_factory=list)


# -- scores -------------------------------------------------------------------------------

def _pick(scores: dict[int, tuple], rng: random.Random | None) -> int:
    best = max(scores.values())
    tied = sorted(u for u, s in scores.items() if s == best)
    if rng is None or len(tied) == 1:
        return tied[0]
    return rng.choice(tied)


def _require_vertices(g: Graph):
    if not len(g):
        raise EmptyGraphError("cannot score an empty graph")


def degree_scores(g: Graph) -> dict[int, int]:
    return {u: g.degree(u) for u in g}


def betweenness_scores(g: Graph) -> dict[int, float]:
    """Unnormalized betweenness: shortest paths between other pairs through each vertex."""
    h = nx.Graph()
    h.add_nodes_from(g.vertices)
    h.add_edges_from(g.edges())
    return nx.betweenness_centrality(h, normalized=False)


def tw_delta_scores(g: Graph, order: Sequence[int], tau: int | None = None) -> dict[int, int]:
    """Width reduction of ``order`` when each vertex is dropped from graph and order.

    Evaluation of a candidate stops as soon as it reaches the current width,
    since then its reduction is 0.
    """
    order = check_order(g, order)
    if tau is None:
        tau = treewidth_from_order(g, order)
    out = {}
    for u in g:
        adj = g.adjacency()
        for v in adj.pop(u):
            adj[v].discard(u)
        reduced = _order_width(adj, (v for v in order if v != u), stop_at=tau)
        out[u] = tau - reduced
    return out


def score_degree(g: Graph, rng: random.Random | None = None) -> int:
    _require_vertices(g)
    return _pick({u: (d,) for u, d in degree_scores(g).items()}, rng)


def score_betweenness(g: Graph, rng: random.Random | None = None) -> int:
    _require_vertices(g)
    return _pick({u: (b,) for u, b in betweenness_scores(g).items()}, rng)


def score_tw_delta(g: Graph, order: Sequence[int], rng: random.Random | None = None) -> int:
    """Vertex whose removal lowers the width of the reduced order most.

    Falls back to the maximum-degree vertex when no removal helps.
    """
    _require_vertices(g)
    deltas = tw_delta_scores(g, order)
    if max(deltas.values()) <= 0:
        return score_degree(g, rng)
    return _pick({u: (d,) for u, d in deltas.items()}, rng)


def tree_trim_scores(g: Graph, order: Sequence[int]) -> dict[int, tuple[int, int]]:
    """(subtree length, subtree weight) of every vertex in the union of the largest bags.

    The subtree of a vertex is the set of bags holding it; its length is
    the number of those bags and its weight the sum of their sizes.
    """
    td = build_td_from_order(g, order)
    top = max(len(b) for b in td.bags)
    b_max = frozenset().union(*(b for b in td.bags if len(b) == top))
    out = {}
    for u in b_max:
        sizes = [len(b) for b in td.bags if u in b]
        out[u] = (len(sizes), sum(sizes))
    return out


def score_tree_trim(g: Graph, order: Sequence[int], rng: random.Random | None = None) -> int:
    _require_vertices(g)
    return _pick(tree_trim_scores(g, order), rng)


def _score_once(kind: str, g: Graph, order: Order, rng) -> int:
    if kind == "degree":
        return score_degree(g, rng)
    if kind == "betweenness":
        return score_betweenness(g, rng)
    if kind == "tw-delta":
        return score_tw_delta(g, order, rng)
    return score_tree_trim(g, order, rng)


def _ranking(kind: str, g: Graph, order: Order, m: int, rng) -> list[int]:
    if kind == "degree":
        scores = {u: (d,) for u, d in degree_scores(g).items()}
    elif kind == "betweenness":
        scores = {u: (b,) for u, b in betweenness_scores(g).items()}
    else:
        deg = degree_scores(g)
        scores = {u: (d, deg[u]) for u, d in tw_delta_scores(g, order).items()}
    tiebreak = {u: u for u in g}
    if rng is not None:
        perm = list(g.vertices)
        rng.shuffle(perm)
        tiebreak = {u: k for k, u in enumerate(perm)}
    ranked = sorted(g.vertices, key=lambda u: (tuple(-x for x in scores[u]), tiebreak[u]))
    return ranked[:m]


# -- greedy loop ----------------------------------------------------------------------------

def greedy_treewidth_deletion(
    g: Graph,
    order: Sequence[int],
    m: int,
    score: ScoreFunction | str = "tree-trim",
    supplier: OrderSupplier | None = None,
) -> SlicePlan:
    """Remove ``m`` vertices greedily and return the resulting slice plan.

    ``supplier`` produces fresh orders when ``score.recalc_every`` is set
    (min-fill by default).
    """
    if isinstance(score, str):
        score = ScoreFunction(score)
    order = check_order(g, order)
    if m < 0 or m >= max(len(g), 1):
        raise ValueError(f"number of removed vertices must satisfy 0 <= m < |V| = {len(g)}")
    if score.recalc_every and supplier is None:
        supplier = order_supplier("min-fill", seed=score.seed)
    rng = random.Random(score.seed) if score.tie_break == "random" else None

    start = time.perf_counter()
    scoring = 0.0
    initial_tau = treewidth_from_order(g, order)
    plan = SlicePlan([], g, order, initial_tau, initial_tau=initial_tau)

    ranked: list[int] = []
    if score.upfront and m:
        t0 = time.perf_counter()
        ranked = _ranking(score.kind, g, order, m, rng)
        scoring += time.perf_counter() - t0

    reduced, red_order = g, order
    for step in range(m):
        if score.upfront:
            u = ranked[step]
        else:
            t0 = time.perf_counter()
            u = _score_once(score.kind, reduced, red_order, rng)
            scoring += time.perf_counter() - t0
        reduced = reduced.remove_vertex(u)
        red_order = tuple(v for v in red_order if v != u)
        plan.mu.append(u)
        if score.recalc_every and (step + 1) % score.recalc_every == 0:
            red_order = check_order(reduced, supplier(reduced))
        plan.per_step_tau.append(treewidth_from_order(reduced, red_order))
        plan.score_seconds.append(scoring)
        plan.elapsed_seconds.append(time.perf_counter() - start)

    plan.reduced_graph = reduced
    plan.reduced_order = red_order
    plan.tau = plan.per_step_tau[-1] if m else initial_tau
    return plan
