"""Quantum circuits in GRCS text format and their tensor networks.

Each qubit worldline is cut into index variables. Diagonal gates (t, cz)
act on the current variable(s) of their qubits; every other gate opens a
fresh variable. Boundary states are rank-1 tensors on the first and last
variable of each qubit, so the network sums to the amplitude
<final|C|initial>.
"""
from __future__ import annotations

import io
import json
import random
from dataclasses import dataclass, field

import numpy as np

from twslice.engine import Tensor, TensorNetwork
from twslice.graph import Graph

_S = 1 / np.sqrt(2)

GATES: dict[str, np.ndarray] = {
    "h": np.array([[_S, _S], [_S, -_S]], dtype=np.complex128),
    "t": np.diag([1, np.exp(1j * np.pi / 4)]).astype(np.complex128),
    "x_1_2": 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=np.complex128),
    "y_1_2": 0.5 * np.array([[1 + 1j, -1 - 1j], [1 + 1j, 1 + 1j]], dtype=np.complex128),
    "cz": np.diag([1, 1, 1, -1]).astype(np.complex128),
}
ARITY = {"h": 1, "t": 1, "x_1_2": 1, "y_1_2": 1, "cz": 2}
DIAGONAL = frozenset({"t", "cz"})


class CircuitParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"{message} at line {line}")


@dataclass(frozen=True)
class GateOp:
    cycle: int
    kind: str
    qubits: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in GATES:
            raise ValueError(f"unknown gate {self.kind!r}")
        if len(self.qubits) != ARITY[self.kind] or len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"gate {self.kind} needs {ARITY[self.kind]} distinct qubits")


@dataclass
class Circuit:
    n_qubits: int
    ops: list[GateOp] = field(default_factory=list)

    @property
    def depth(self) -> int:
        """Number of cycles (highest cycle index + 1)."""
        return max((op.cycle for op in self.ops), default=-1) + 1

    def to_text(self) -> str:
        lines = [str(self.n_qubits)]
        lines += [" ".join([str(op.cycle), op.kind, *map(str, op.qubits)]) for op in self.ops]
        return "\n".join(lines) + "\n"


def parse_circuit(text) -> Circuit:
    """Parse a GRCS circuit from a string or text stream."""
    stream = io.StringIO(text) if isinstance(text, str) else text
    n_qubits = None
    ops: list[GateOp] = []
    last_cycle = 0
    for lineno, raw in enumerate(stream, 1):
        parts = raw.split()
        if not parts or parts[0].startswith("#"):
            continue
        if n_qubits is None:
            if len(parts) != 1 or not parts[0].isdigit() or int(parts[0]) < 1:
                raise CircuitParseError(f"expected qubit count, got {raw.strip()!r}", lineno)
            n_qubits = int(parts[0])
            continue
        if len(parts) < 3:
            raise CircuitParseError(f"malformed line {raw.strip()!r}", lineno)
        kind = parts[1]
        if kind not in GATES:
            raise CircuitParseError(f"unknown gate '{kind}'", lineno)
        try:
            cycle = int(parts[0])
            qubits = tuple(int(q) for q in parts[2:])
        except ValueError:
            raise CircuitParseError(f"malformed line {raw.strip()!r}", lineno) from None
        if cycle < 0 or cycle < last_cycle:
            raise CircuitParseError(f"cycle {cycle} out of sequence", lineno)
        if len(qubits) != ARITY[kind] or len(set(qubits)) != len(qubits):
            raise CircuitParseError(f"gate '{kind}' needs {ARITY[kind]} distinct qubits", lineno)
        bad = [q for q in qubits if not 0 <= q < n_qubits]
        if bad:
            raise CircuitParseError(f"qubit {bad[0]} out of range", lineno)
        last_cycle = cycle
        ops.append(GateOp(cycle, kind, qubits))
    if n_qubits is None:
        raise CircuitParseError("empty circuit file")
    return Circuit(n_qubits, ops)


def read_circuit(path) -> Circuit:
    with open(path) as f:
        return parse_circuit(f)


def _basis(bit: str) -> np.ndarray:
    v = np.zeros(2, dtype=np.complex128)
    v[int(bit)] = 1
    return v


def build_network(circuit: Circuit, initial: str | None = None,
                  final: str | None = None) -> tuple[TensorNetwork, Graph]:
    """Tensor network of <final|C|initial> and its expression graph."""
    n = circuit.n_qubits
    initial = "0" * n if initial is None else initial
    final = "0" * n if final is None else final
    for label, bits in (("initial", initial), ("final", final)):
        if len(bits) != n or set(bits) - {"0", "1"}:
            raise ValueError(f"{label} state must be a bitstring of length {n}, got {bits!r}")

    names: dict[int, str] = {}
    count = [0] * n
    current = [0] * n

    def fresh(q: int) -> int:
        v = len(names)
        names[v] = f"q{q}_{count[q]}"
        count[q] += 1
        current[q] = v
        return v

    tensors: list[Tensor] = []
    for q in range(n):
        v = fresh(q)
        tensors.append(Tensor.from_axes([v], _basis(initial[q]), f"in{q}"))
    for k, op in enumerate(circuit.ops):
        gate = GATES[op.kind]
        name = f"{op.kind}{k}"
        if op.kind == "cz":
            a, b = (current[q] for q in op.qubits)
            tensors.append(Tensor.from_axes([a, b], np.diag(gate).reshape(2, 2), name))
        elif op.kind in DIAGONAL:
            tensors.append(Tensor.from_axes([current[op.qubits[0]]], np.diag(gate), name))
        else:
            q = op.qubits[0]
            old = current[q]
            new = fresh(q)
            # axes (in, out) hold gate[out, in]
            tensors.append(Tensor.from_axes([old, new], gate.T, name))
    for q in range(n):
        tensors.append(Tensor.from_axes([current[q]], _basis(final[q]), f"out{q}"))

    dims = {v: 2 for v in names}
    net = TensorNetwork(tensors, dims, names)
    return net, net.graph()


# -- random GRCS-style circuits -----------------------------------------------------

def _cz_layer(rows: int, cols: int, i: int) -> list[tuple[int, int]]:
    # Eight staggered coupler patterns, alternating horizontal and vertical.
    offset = (i >> 1) % 4
    dx = i % 2
    dy = 1 - dx
    pairs = []
    for y in range(rows):
        for x in range(cols):
            if (x * (2 - dx) + y * (2 - dy)) % 4 != offset:
                continue
            x2, y2 = x + dx, y + dy
            if x2 < cols and y2 < rows:
                pairs.append((y * cols + x, y2 * cols + x2))
    return pairs


def random_circuit(rows: int, cols: int, depth: int, seed: int = 0) -> Circuit:
    """Random circuit on a ``rows`` x ``cols`` grid in the GRCS gate set.

    Cycle 0 applies h everywhere; cycles 1..depth apply one CZ pattern each
    plus a single-qubit gate on every qubit that left a CZ in the previous
    cycle. The first such gate on a qubit is t; later ones are drawn from
    {x_1_2, y_1_2, t} without repeating the qubit's previous gate.
    """
    rng = random.Random(seed)
    n = rows * cols
    ops = [GateOp(0, "h", (q,)) for q in range(n)]
    last = ["h"] * n
    prev_busy: set[int] = set()
    for c in range(1, depth + 1):
        layer = _cz_layer(rows, cols, c - 1)
        busy = {q for p in layer for q in p}
        for a, b in layer:
            ops.append(GateOp(c, "cz", (a, b)))
        for q in range(n):
            if q in prev_busy and q not in busy:
                if last[q] == "h":
                    kind = "t"
                else:
                    kind = rng.choice([g for g in ("x_1_2", "y_1_2", "t") if g != last[q]])
                last[q] = kind
                ops.append(GateOp(c, kind, (q,)))
        prev_busy = busy
    return Circuit(n, ops)


# -- generic networks in JSON ---------------------------------------------------------

def _decode_data(spec, shape) -> np.ndarray:
    if spec is None:
        return np.ones(shape, dtype=np.complex128)
    if isinstance(spec, dict):
        re = np.asarray(spec.get("re", 0.0), dtype=float)
        im = np.asarray(spec.get("im", 0.0), dtype=float)
        arr = re + 1j * im
    else:
        arr = np.asarray(spec)
        if arr.dtype.kind not in "biufc":
            raise ValueError("tensor data must be numeric")
    return np.asarray(arr, dtype=np.complex128).reshape(shape)


def network_from_json(doc) -> tuple[TensorNetwork, Graph]:
    """Network from ``{"dims": [...], "names": [...], "tensors": [{"indices": [...], "data": ...}]}``.

    Index ``k`` has dimension ``dims[k]``; tensor data is row-major over the
    listed indices, given as numbers or ``{"re": [...], "im": [...]}``, and
    defaults to all ones. A repeated index keeps the tensor's diagonal.
    """
    if isinstance(doc, str):
        doc = json.loads(doc)
    dims_raw = doc["dims"]
    dims = {k: int(d) for k, d in enumerate(dims_raw)}
    names = {k: str(s) for k, s in enumerate(doc.get("names", []))}
    lookup = {s: k for k, s in names.items()}
    tensors = []
    for k, t in enumerate(doc.get("tensors", [])):
        idx = [lookup[i] if isinstance(i, str) else int(i) for i in t["indices"]]
        for i in idx:
            if i not in dims:
                raise ValueError(f"tensor {k} refers to unknown index {i}")
        shape = tuple(dims[i] for i in idx)
        tensors.append(Tensor.from_axes(idx, _decode_data(t.get("data"), shape), t.get("name", f"t{k}")))
    net = TensorNetwork(tensors, dims, names)
    return net, net.graph()


def network_to_json(net: TensorNetwork) -> dict:
    ids = sorted(net.dims)
    pos = {u: k for k, u in enumerate(ids)}
    doc = {"dims": [net.dims[u] for u in ids],
           "names": [net.names.get(u, str(u)) for u in ids],
           "tensors": []}
    for t in net.tensors:
        flat = t.data.reshape(-1)
        doc["tensors"].append({"name": t.name, "indices": [pos[u] for u in t.indices],
                               "data": {"re": flat.real.tolist(), "im": flat.imag.tolist()}})
    return doc
