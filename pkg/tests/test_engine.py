import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_sum, toy_graph, toy_network, ix, random_network
from twslice.deletion import ScoreFunction, SlicePlan, greedy_treewidth_deletion
from twslice.engine import (
    DimensionMismatchError,
    Tensor,
    TensorNetwork,
    contract,
    merge_parallel_tensors,
    parallel_contract,
    slice_network,
)
from twslice.ordering import find_order, treewidth_from_order

TOY_ORDER = ix("ijklmn")
K = ix("k")[0]


def plan_for(net, mu, order):
    g = net.graph()
    red = g.remove_vertices(mu)
    return SlicePlan(list(mu), red, tuple(order), treewidth_from_order(red, order))


def close(a, b, rel=1e-10):
    return abs(a - b) <= rel * max(abs(b), 1e-300)


def test_all_ones_toy_network():
    net = toy_network()
    assert contract(net, TOY_ORDER).value == 64
    assert brute_force_sum(net) == 64


def test_single_vector():
    net = TensorNetwork([Tensor((0,), np.array([3, 4], dtype=complex))], {0: 2})
    assert contract(net, [0]).value == 7


def test_random_toy_matches_brute_force():
    rng = np.random.default_rng(0)
    for L in (2, 3):
        net = toy_network(rng, L)
        assert close(contract(net, TOY_ORDER).value, brute_force_sum(net))


def test_network_graph_is_the_expression_graph():
    assert toy_network().graph() == toy_graph()


def test_contract_errors():
    net = toy_network()
    with pytest.raises(ValueError):
        contract(net, TOY_ORDER[:-1])
    with pytest.raises(DimensionMismatchError):
        TensorNetwork([Tensor((0,), np.ones(3, dtype=complex))], {0: 2})
    with pytest.raises(DimensionMismatchError):
        TensorNetwork([Tensor((0, 1), np.ones((2, 2), dtype=complex))], {0: 2})
    with pytest.raises(ValueError):
        Tensor((1, 0), np.ones((2, 2)))


def test_from_axes_sorts_and_traces():
    a = np.arange(6).reshape(2, 3)
    t = Tensor.from_axes([5, 1], a)
    assert t.indices == (1, 5) and np.array_equal(t.data, a.T)
    m = np.array([[1, 2], [3, 4]])
    t = Tensor.from_axes([0, 0], m)
    assert t.indices == (0,) and np.array_equal(t.data, [1, 4])


def test_counters_on_toy():
    r = contract(toy_network(), TOY_ORDER)
    # cliques along the order: 3, 3, 3, 3, 2, 1 indices
    assert r.flops == 4 * 8 + 4 + 2
    assert r.peak_product == 8
    assert r.peak_intermediate == 4


def test_index_without_tensors_contributes_its_dimension():
    net = TensorNetwork([Tensor((0,), np.array([1, 2], dtype=complex))], {0: 2, 1: 3})
    r = contract(net, [1, 0])
    assert r.value == 9
    assert r.flops == 3 + 2


# -- slicing --------------------------------------------------------------------------------------

def test_slice_toy_on_k():
    rng = np.random.default_rng(1)
    net = toy_network(rng)
    s = slice_network(net, {K: 0})
    assert K not in s.dims
    by_name = {t.name: t for t in s.tensors}
    b = {t.name: t for t in net.tensors}["B"]
    assert np.array_equal(by_name["B"].data, b.data[:, :, 0])
    assert {n: len(t.indices) for n, t in by_name.items()} == {
        "A": 1, "B": 2, "C": 2, "D": 1, "E": 1, "F": 2, "G": 2}
    assert s.graph() == net.graph().remove_vertex(K)


def test_slice_empty_assignment_is_identity():
    net = toy_network()
    assert slice_network(net, {}) is net


def test_slice_matrix_trace():
    rng = np.random.default_rng(2)
    a, b = rng.normal(size=(2, 3, 3))
    net = TensorNetwork([Tensor.from_axes([0, 1], a), Tensor.from_axes([1, 0], b)], {0: 3, 1: 3})
    s = slice_network(net, {0: 0})
    assert np.isclose(contract(s, [1]).value, sum(a[0, j] * b[j, 0] for j in range(3)))


def test_slice_errors():
    net = toy_network()
    with pytest.raises(ValueError):
        slice_network(net, {K: 2})
    with pytest.raises(KeyError):
        slice_network(net, {42: 0})


# -- parallel slice-sum ----------------------------------------------------------------------------

def test_no_slicing_is_plain_contraction():
    rng = np.random.default_rng(3)
    net = toy_network(rng)
    r = parallel_contract(net, plan_for(net, [], TOY_ORDER), workers=1)
    assert r.value == contract(net, TOY_ORDER).value
    assert len(r.tasks) == 1


def test_slice_on_k_sums_to_full_value():
    rng = np.random.default_rng(4)
    net = toy_network(rng)
    order = ix("ijlmn")
    r = parallel_contract(net, plan_for(net, [K], order), workers=1)
    assert len(r.tasks) == 2
    assert close(r.tasks[0].value + r.tasks[1].value, contract(net, TOY_ORDER).value)


def test_all_ones_slices():
    net = toy_network()
    r = parallel_contract(net, plan_for(net, [K], ix("ijlmn")), workers=1)
    assert [t.value for t in r.tasks] == [32, 32]
    assert r.value == 64


def test_parallel_result_is_bit_identical_across_worker_counts():
    rng = np.random.default_rng(5)
    net = random_network(rng, 10, 2)
    g = net.graph()
    order, _ = find_order(g)
    plan = greedy_treewidth_deletion(g, order, 3, "tree-trim")
    values = [parallel_contract(net, plan, workers=w).value for w in (1, 2, 3, 1)]
    assert len({(v.real, v.imag) for v in values}) == 1
    assert [t.assignment for t in parallel_contract(net, plan, workers=2).tasks] == [
        tuple(int(c) for c in f"{k:03b}") for k in range(8)]


def test_parallel_contract_checks_plan():
    net = toy_network()
    with pytest.raises(ValueError):
        parallel_contract(net, plan_for(net, [K], ix("ijlm")), workers=1)


def test_order_independence():
    rng = np.random.default_rng(6)
    for _ in range(10):
        net = random_network(rng, 8, 2)
        ref = contract(net, sorted(net.dims)).value
        for _ in range(3):
            perm = rng.permutation(8).tolist()
            assert close(contract(net, perm).value, ref)


def test_peak_product_matches_order_width():
    rng = np.random.default_rng(7)
    for _ in range(20):
        net = random_network(rng, 9, 2)
        g = net.graph()
        order, tw = find_order(g)
        r = contract(net, order)
        assert r.peak_product == 2 ** (tw + 1)
        assert r.peak_intermediate == 2 ** tw


def test_merge_parallel_tensors():
    rng = np.random.default_rng(8)
    for _ in range(10):
        net = random_network(rng, 7, 2, n_tensors=14)
        merged = merge_parallel_tensors(net)
        sets = [set(t.indices) for t in merged.tensors]
        assert not any(a <= b for i, a in enumerate(sets) for j, b in enumerate(sets) if i != j)
        assert merged.graph() == net.graph()
        order = sorted(net.dims)
        assert close(contract(merged, order).value, contract(net, order).value)


@given(seed=st.integers(0, 10_000), n=st.integers(2, 10), L=st.integers(2, 3),
       m=st.integers(0, 3), kind=st.sampled_from(["degree", "betweenness", "tw-delta", "tree-trim"]))
@settings(max_examples=60, deadline=None)
def test_slice_sum_exactness(seed, n, L, m, kind):
    rng = np.random.default_rng(seed)
    net = random_network(rng, n, L)
    g = net.graph()
    order, _ = find_order(g)
    m = min(m, n - 1)
    plan = greedy_treewidth_deletion(g, order, m, ScoreFunction(kind))
    full = contract(net, order).value
    assert close(parallel_contract(net, plan, workers=1).value, full)
