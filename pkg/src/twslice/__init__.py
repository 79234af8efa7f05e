"""Tensor-network contraction planning by greedy treewidth deletion, with sliced exact contraction."""
from twslice.circuit import Circuit, GateOp, build_network, parse_circuit, random_circuit
from twslice.costmodel import CostEstimate, estimate
from twslice.deletion import ScoreFunction, SlicePlan, greedy_treewidth_deletion
from twslice.engine import Tensor, TensorNetwork, contract, parallel_contract, slice_network
from twslice.graph import Graph
from twslice.ordering import (
    TreeDecomposition,
    build_td_from_order,
    exact_treewidth,
    find_order,
    recover_order,
    treewidth_from_order,
    validate_td,
)

__version__ = "0.1.0"
