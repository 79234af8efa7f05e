"""Memory and FLOP predictions for sliced contractions.

Units: memory in complex amplitudes, FLOPs in complex multiply-adds. The
leading-order figures are L**tau per intermediate and L**(tau + 1) per
task; the replay figures come from running the elimination on the reduced
graph and use the same per-step convention as the engine's counters.
"""
from __future__ import annotations

from dataclasses import dataclass

from twslice.ordering import check_order, elimination_neighborhoods

INT64_MAX = 2**63 - 1


@dataclass(frozen=True)
class CostEstimate:
    tau: int
    n_removed: int
    L: int
    per_task_memory: int
    per_task_flops: int
    num_tasks: int
    total_flops: int
    replay_flops: int
    replay_peak_product: int
    replay_peak_intermediate: int
    replay_peak_live: int
    saturated: bool = False

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _sat(x: int) -> tuple[int, bool]:
    return (INT64_MAX, True) if x > INT64_MAX else (x, False)


def replay(graph, order, L: int = 2) -> dict[str, int]:
    """Exact step-wise costs of eliminating ``graph`` along ``order``.

    Returns total multiply-adds (sum of L**|clique| over steps), the largest
    clique product, the largest intermediate and the peak total size of the
    intermediates alive at the same time.
    """
    order = check_order(graph, order)
    flops = 0
    peak_product = 0
    peak_inter = 0
    live: dict[int, tuple[frozenset[int], int]] = {}
    live_total = 0
    peak_live = 0
    for k, (u, nbrs) in enumerate(zip(order, elimination_neighborhoods(graph, order))):
        product = L ** (len(nbrs) + 1)
        flops += product
        peak_product = max(peak_product, product)
        for key in [key for key, (idx, _) in live.items() if u in idx]:
            live_total -= live.pop(key)[1]
        inter = L ** len(nbrs)
        peak_inter = max(peak_inter, inter)
        if nbrs:
            live[k] = (nbrs, inter)
            live_total += inter
        peak_live = max(peak_live, live_total)
    return {"flops": flops, "peak_product": peak_product,
            "peak_intermediate": peak_inter, "peak_live": peak_live}


def estimate(plan, L: int = 2) -> CostEstimate:
    """Cost of a slice plan (anything with ``tau``, ``mu``, ``reduced_graph``, ``reduced_order``)."""
    if L < 2:
        raise ValueError("index dimension L must be >= 2")
    tau = int(plan.tau)
    n_removed = len(plan.mu)
    mem, s1 = _sat(L ** tau)
    flops, s2 = _sat(L ** (tau + 1))
    tasks, s3 = _sat(L ** n_removed)
    total, s4 = _sat(L ** (tau + 1) * L ** n_removed)
    rep = replay(plan.reduced_graph, plan.reduced_order, L) if len(plan.reduced_graph) else {
        "flops": 0, "peak_product": 0, "peak_intermediate": 0, "peak_live": 0}
    rep_sat = {k: _sat(v) for k, v in rep.items()}
    return CostEstimate(
        tau=tau, n_removed=n_removed, L=L,
        per_task_memory=mem, per_task_flops=flops, num_tasks=tasks, total_flops=total,
        replay_flops=rep_sat["flops"][0],
        replay_peak_product=rep_sat["peak_product"][0],
        replay_peak_intermediate=rep_sat["peak_intermediate"][0],
        replay_peak_live=rep_sat["peak_live"][0],
        saturated=any((s1, s2, s3, s4, *(s for _, s in rep_sat.values()))),
    )
