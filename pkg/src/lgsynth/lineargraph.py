"""Linear-graph models of lumped dynamic systems and their state-space derivation.

A system is described as a directed multigraph: nodes are physical connection
points (node 1 is ground) and each branch is a typed element. Across variables
(voltage, velocity, pressure, ...) are measured from a branch's source node to
its target node; through variables (current, force, flow, ...) are positive in
the source-to-target direction. Element behavior follows the generalized
constitutive laws

    A-type       f = C * dv/dt
    T-type       v = L * df/dt
    D-type       v = R * f
    transformer  v1 = TF * v2,   f1 = -(1/TF) * f2
    gyrator      v1 = GY * f2,   f1 = -(1/GY) * v2

with sources imposing their across or through variable. A normal spanning
tree picks the independent energy-storage variables, and the remaining
algebraic system is reduced numerically to

    dx/dt = A x + B u
    y     = C x + D u + F du/dt
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Sequence

import numpy as np

GROUND_NODE = 1


class ElementKind(IntEnum):
    """Element type codes used by the construction vectors."""

    A_SOURCE = 1
    A_TYPE = 2
    TRANSFORMER = 3
    GYRATOR = 4
    D_TYPE = 5
    T_TYPE = 6
    T_SOURCE = 7


class EnergyDomain(IntEnum):
    """Energy domain codes used by the construction vectors."""

    ELECTRICAL = 1
    MECH_TRANSLATIONAL = 2
    MECH_ROTATIONAL = 3
    HYDRAULIC = 4
    THERMAL = 5


TWO_PORT_KINDS = frozenset({ElementKind.TRANSFORMER, ElementKind.GYRATOR})
SOURCE_KINDS = frozenset({ElementKind.A_SOURCE, ElementKind.T_SOURCE})

# Display letters for across/through variables by domain, used to label
# states, inputs and outputs (e.g. a mass labeled "m" yields state "v_m").
_ACROSS_LETTER = {1: "v", 2: "v", 3: "w", 4: "P", 5: "T"}
_THROUGH_LETTER = {1: "i", 2: "F", 3: "T", 4: "Q", 5: "q"}


class LinearGraphError(Exception):
    """Base class for graph construction and derivation failures."""


class LengthMismatchError(LinearGraphError):
    """Construction vectors have differing lengths."""


class InvalidCodeError(LinearGraphError):
    """A type or domain code is outside the defined tables."""


class InvalidParameterError(LinearGraphError):
    """A passive element or two-port ratio has a non-positive parameter."""


class SelfLoopError(LinearGraphError):
    """An element starts and ends on the same node."""


class UnpairedTwoPortError(LinearGraphError):
    """A transformer or gyrator side lacks its consecutive partner branch."""


class DisconnectedError(LinearGraphError):
    """The graph is not a single component containing ground."""


class SourceLoopError(LinearGraphError):
    """Across-variable sources form a loop; they cannot all be tree branches."""


class SourceCutsetError(LinearGraphError):
    """Through-variable sources form a cutset; one would have to be a branch."""


class DependentStorageError(LinearGraphError):
    """An energy-storage element's variable is algebraically dependent."""


class SingularReductionError(LinearGraphError):
    """Equation reduction hit a structurally singular algebraic subsystem."""


@dataclass(frozen=True)
class Element:
    """One branch of the graph. ``id`` is its 1-based position in the list."""

    id: int
    kind: ElementKind
    domain: EnergyDomain
    source_node: int
    target_node: int
    param_value: float
    param_label: str = ""


@dataclass(frozen=True)
class LinearGraph:
    """System topology: nodes, typed branches and requested output variables.

    ``output_spec`` lists (element id, "across" | "through") pairs naming the
    variables reported by a derived model.
    """

    node_count: int
    elements: tuple[Element, ...]
    output_spec: tuple[tuple[int, str], ...] = ()
    ground_node: int = GROUND_NODE

    def element(self, element_id: int) -> Element:
        return self.elements[element_id - 1]

    def two_port_pairs(self) -> list[tuple[int, int]]:
        """Consecutive (side 1, side 2) element-id pairs of two-ports."""
        pairs = []
        i = 0
        while i < len(self.elements):
            if self.elements[i].kind in TWO_PORT_KINDS:
                pairs.append((self.elements[i].id, self.elements[i].id + 1))
                i += 2
            else:
                i += 1
        return pairs


@dataclass(frozen=True)
class TreePartition:
    """Normal-tree branches and co-tree links, by element id."""

    branch_ids: frozenset[int]
    link_ids: frozenset[int]


@dataclass(eq=False)
class StateSpaceModel:
    """Numeric state-space model with display labels for every variable."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    F: np.ndarray
    state_labels: tuple[str, ...]
    input_labels: tuple[str, ...]
    output_labels: tuple[str, ...]

    @property
    def state_count(self) -> int:
        return self.A.shape[0]

    @property
    def input_count(self) -> int:
        return self.B.shape[1]

    @property
    def output_count(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class Diagnostic:
    """One invariant violation found by validate_graph."""

    code: str
    message: str
    element_id: int | None = None
    node: int | None = None


_DIAGNOSTIC_ERRORS = {
    "NodeRange": DisconnectedError,
    "SelfLoop": SelfLoopError,
    "InvalidParameter": InvalidParameterError,
    "UnpairedTwoPort": UnpairedTwoPortError,
    "Disconnected": DisconnectedError,
    "BadOutput": InvalidCodeError,
}


def build_graph(
    source_nodes: Sequence[int],
    target_nodes: Sequence[int],
    type_codes: Sequence[int],
    domain_codes: Sequence[int],
    params: Sequence[float],
    labels: Sequence[str],
    output_spec: Iterable[tuple[int, str]] = (),
) -> LinearGraph:
    """Build and validate a graph from the vector input convention.

    The k-th entries of the six vectors describe element k: it leaves node
    ``source_nodes[k]``, enters ``target_nodes[k]``, and has the Table-coded
    type/domain, numeric parameter and display label. Raises a
    LinearGraphError subclass on the first violated invariant.
    """
    lengths = {
        "S": len(source_nodes),
        "T": len(target_nodes),
        "type": len(type_codes),
        "domain": len(domain_codes),
        "param": len(params),
        "label": len(labels),
    }
    if len(set(lengths.values())) != 1:
        detail = ", ".join(f"{k}={v}" for k, v in lengths.items())
        raise LengthMismatchError(f"construction vectors differ in length: {detail}")
    if lengths["S"] == 0:
        raise LengthMismatchError("construction vectors are empty")

    elements = []
    for i, (s, t, tc, dc, p, lab) in enumerate(
        zip(source_nodes, target_nodes, type_codes, domain_codes, params, labels)
    ):
        try:
            kind = ElementKind(tc)
        except ValueError:
            raise InvalidCodeError(f"element {i + 1}: unknown type code {tc}") from None
        try:
            domain = EnergyDomain(dc)
        except ValueError:
            raise InvalidCodeError(f"element {i + 1}: unknown domain code {dc}") from None
        elements.append(Element(i + 1, kind, domain, int(s), int(t), float(p), str(lab)))

    node_count = max(max(e.source_node for e in elements), max(e.target_node for e in elements))
    graph = LinearGraph(node_count, tuple(elements), tuple((int(e), str(v)) for e, v in output_spec))

    diagnostics = validate_graph(graph)
    if diagnostics:
        first = diagnostics[0]
        raise _DIAGNOSTIC_ERRORS.get(first.code, LinearGraphError)(first.message)
    return graph


def validate_graph(graph: LinearGraph) -> list[Diagnostic]:
    """Check every LinearGraph invariant; return one diagnostic per violation."""
    diags: list[Diagnostic] = []
    n = graph.node_count

    if n < 1:
        diags.append(Diagnostic("NodeRange", f"node_count {n} must be positive"))
        return diags

    for e in graph.elements:
        if not (1 <= e.source_node <= n) or not (1 <= e.target_node <= n):
            diags.append(
                Diagnostic(
                    "NodeRange",
                    f"element {e.id} endpoints ({e.source_node}, {e.target_node}) "
                    f"outside nodes 1..{n}",
                    element_id=e.id,
                )
            )
        elif e.source_node == e.target_node:
            diags.append(
                Diagnostic(
                    "SelfLoop",
                    f"element {e.id} starts and ends on node {e.source_node}",
                    element_id=e.id,
                    node=e.source_node,
                )
            )
        if e.kind not in SOURCE_KINDS and e.param_value <= 0.0:
            diags.append(
                Diagnostic(
                    "InvalidParameter",
                    f"element {e.id} ({e.kind.name}) parameter {e.param_value} must be positive",
                    element_id=e.id,
                )
            )

    # Two-port sides must come in consecutive same-kind pairs.
    i = 0
    while i < len(graph.elements):
        e = graph.elements[i]
        if e.kind in TWO_PORT_KINDS:
            partner = graph.elements[i + 1] if i + 1 < len(graph.elements) else None
            if partner is None or partner.kind != e.kind:
                diags.append(
                    Diagnostic(
                        "UnpairedTwoPort",
                        f"element {e.id} ({e.kind.name}) has no consecutive partner branch",
                        element_id=e.id,
                    )
                )
                i += 1
            else:
                i += 2
        else:
            i += 1

    # Connectivity: one component containing ground.
    uf = _UnionFind(n)
    for e in graph.elements:
        if 1 <= e.source_node <= n and 1 <= e.target_node <= n:
            uf.union(e.source_node, e.target_node)
    ground_root = uf.find(graph.ground_node)
    for node in range(1, n + 1):
        if uf.find(node) != ground_root:
            diags.append(
                Diagnostic("Disconnected", f"node {node} is not connected to ground", node=node)
            )

    for eid, var in graph.output_spec:
        if not (1 <= eid <= len(graph.elements)):
            diags.append(Diagnostic("BadOutput", f"output references unknown element {eid}"))
        elif var not in ("across", "through"):
            diags.append(Diagnostic("BadOutput", f"output variable kind {var!r} unknown"))

    return diags


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n + 1))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


# Greedy insertion priority; lower joins the tree first.
_TREE_PRIORITY = {
    ElementKind.A_SOURCE: 0,
    ElementKind.A_TYPE: 1,
    ElementKind.D_TYPE: 2,
    ElementKind.TRANSFORMER: 3,
    ElementKind.GYRATOR: 3,
    ElementKind.T_TYPE: 4,
    ElementKind.T_SOURCE: 5,
}


def select_normal_tree(graph: LinearGraph) -> TreePartition:
    """Pick the normal spanning tree by element-priority greedy insertion.

    Priority order: across-sources (mandatory), then A-type, D-type, two-port
    branches, T-type; through-sources are mandatory links. Lower element id
    wins inside a priority class, so the result is deterministic.
    """
    order = sorted(graph.elements, key=lambda e: (_TREE_PRIORITY[e.kind], e.id))
    uf = _UnionFind(graph.node_count)
    branches: set[int] = set()
    for e in order:
        if uf.union(e.source_node, e.target_node):
            if e.kind is ElementKind.T_SOURCE:
                raise SourceCutsetError(
                    f"through-source element {e.id} forms a cutset; it cannot stay a link"
                )
            branches.add(e.id)
        elif e.kind is ElementKind.A_SOURCE:
            raise SourceLoopError(
                f"across-source element {e.id} closes a loop of tree branches"
            )
    if len(branches) != graph.node_count - 1:
        raise DisconnectedError("graph is not connected; no spanning tree exists")
    links = frozenset(e.id for e in graph.elements) - branches
    return TreePartition(frozenset(branches), links)


@dataclass(eq=False)
class _Assembly:
    """Square linear system G w = H x + P u over all node potentials,
    through variables and state derivatives."""

    G: np.ndarray
    H: np.ndarray
    P: np.ndarray
    v_col: dict[int, int]      # node -> column of its potential (ground absent)
    f_col: dict[int, int]      # element id -> column of its through variable
    xdot_col: dict[int, int]   # state index -> column of its derivative
    row_kinds: list[tuple]     # ("kcl", node) | ("elem", element id, eq index) | ("state", i)
    states: list[tuple[int, str]]
    inputs: list[int]          # source element ids in id order


def _state_elements(graph: LinearGraph, partition: TreePartition) -> list[tuple[int, str]]:
    """Independent storage variables: tree A-types then link T-types, id order."""
    states = [
        (e.id, "across")
        for e in graph.elements
        if e.kind is ElementKind.A_TYPE and e.id in partition.branch_ids
    ]
    states += [
        (e.id, "through")
        for e in graph.elements
        if e.kind is ElementKind.T_TYPE and e.id in partition.link_ids
    ]
    return states


def _assemble(graph: LinearGraph, partition: TreePartition) -> _Assembly:
    """Stack continuity, elemental and state-definition equations.

    Unknowns are the non-ground node potentials, every element's through
    variable, and the state derivatives; states and source signals appear on
    the right-hand side. Across variables are expressed through potentials.
    """
    states = _state_elements(graph, partition)
    inputs = [e.id for e in graph.elements if e.kind in SOURCE_KINDS]
    n_nodes = graph.node_count
    n_elem = len(graph.elements)
    n_states = len(states)
    n_unknown = (n_nodes - 1) + n_elem + n_states

    v_col = {node: i for i, node in enumerate(nd for nd in range(1, n_nodes + 1) if nd != graph.ground_node)}
    f_col = {e.id: (n_nodes - 1) + (e.id - 1) for e in graph.elements}
    xdot_col = {i: (n_nodes - 1) + n_elem + i for i in range(n_states)}
    state_index = {eid: i for i, (eid, _) in enumerate(states)}
    input_index = {eid: j for j, eid in enumerate(inputs)}

    G = np.zeros((n_unknown, n_unknown))
    H = np.zeros((n_unknown, n_states))
    P = np.zeros((n_unknown, len(inputs)))
    row_kinds: list[tuple] = []

    def add_across(row: int, eid: int, coeff: float) -> None:
        e = graph.element(eid)
        if e.source_node != graph.ground_node:
            G[row, v_col[e.source_node]] += coeff
        if e.target_node != graph.ground_node:
            G[row, v_col[e.target_node]] -= coeff

    row = 0
    # Continuity: through variables balance at every non-ground node.
    for node in range(1, n_nodes + 1):
        if node == graph.ground_node:
            continue
        for e in graph.elements:
            if e.source_node == node:
                G[row, f_col[e.id]] += 1.0
            if e.target_node == node:
                G[row, f_col[e.id]] -= 1.0
        row_kinds.append(("kcl", node))
        row += 1

    # Elemental equations; a two-port pair contributes its two rows at side 1.
    second_sides = {pair[1] for pair in graph.two_port_pairs()}
    for e in graph.elements:
        if e.id in second_sides:
            continue
        if e.kind is ElementKind.A_SOURCE:
            add_across(row, e.id, 1.0)
            P[row, input_index[e.id]] = 1.0
            row_kinds.append(("elem", e.id, 0))
            row += 1
        elif e.kind is ElementKind.T_SOURCE:
            G[row, f_col[e.id]] = 1.0
            P[row, input_index[e.id]] = 1.0
            row_kinds.append(("elem", e.id, 0))
            row += 1
        elif e.kind is ElementKind.D_TYPE:
            add_across(row, e.id, 1.0)
            G[row, f_col[e.id]] -= e.param_value
            row_kinds.append(("elem", e.id, 0))
            row += 1
        elif e.kind is ElementKind.A_TYPE:
            G[row, f_col[e.id]] = 1.0
            G[row, xdot_col[state_index[e.id]]] -= e.param_value
            row_kinds.append(("elem", e.id, 0))
            row += 1
        elif e.kind is ElementKind.T_TYPE:
            add_across(row, e.id, 1.0)
            G[row, xdot_col[state_index[e.id]]] -= e.param_value
            row_kinds.append(("elem", e.id, 0))
            row += 1
        else:
            side2 = graph.element(e.id + 1)
            ratio = e.param_value
            if e.kind is ElementKind.TRANSFORMER:
                # v1 = TF v2
                add_across(row, e.id, 1.0)
                add_across(row, side2.id, -ratio)
                row_kinds.append(("elem", e.id, 0))
                row += 1
                # f1 = -(1/TF) f2
                G[row, f_col[e.id]] = 1.0
                G[row, f_col[side2.id]] += 1.0 / ratio
                row_kinds.append(("elem", e.id, 1))
                row += 1
            else:
                # v1 = GY f2
                add_across(row, e.id, 1.0)
                G[row, f_col[side2.id]] -= ratio
                row_kinds.append(("elem", e.id, 0))
                row += 1
                # f1 = -(1/GY) v2
                G[row, f_col[e.id]] = 1.0
                add_across(row, side2.id, 1.0 / ratio)
                row_kinds.append(("elem", e.id, 1))
                row += 1

    # State definitions tie storage variables to the state vector.
    for i, (eid, var) in enumerate(states):
        if var == "across":
            add_across(row, eid, 1.0)
        else:
            G[row, f_col[eid]] = 1.0
        H[row, i] = 1.0
        row_kinds.append(("state", i))
        row += 1

    assert row == n_unknown
    return _Assembly(G, H, P, v_col, f_col, xdot_col, row_kinds, states, inputs)


def _variable_label(element: Element, var: str) -> str:
    letters = _ACROSS_LETTER if var == "across" else _THROUGH_LETTER
    letter = letters[int(element.domain)]
    suffix = element.param_label or str(element.id)
    return f"{letter}_{suffix}"


def derive_state_space(graph: LinearGraph, partition: TreePartition) -> StateSpaceModel:
    """Reduce the graph's continuity/compatibility/elemental equations to
    dx/dt = A x + B u, y = C x + D u + F du/dt.

    States are the across variables of tree A-types followed by the through
    variables of link T-types, in element-id order; inputs are the source
    signals in element-id order. Storage elements squeezed out of their
    natural tree position are dependent and rejected.
    """
    dependent = [
        e
        for e in graph.elements
        if (e.kind is ElementKind.A_TYPE and e.id in partition.link_ids)
        or (e.kind is ElementKind.T_TYPE and e.id in partition.branch_ids)
    ]
    if dependent:
        names = ", ".join(f"{e.kind.name} element {e.id}" for e in dependent)
        raise DependentStorageError(f"dependent energy storage: {names}")

    asm = _assemble(graph, partition)
    n = len(asm.states)
    m = len(asm.inputs)
    rhs = np.hstack([asm.H, asm.P])
    try:
        solved = np.linalg.solve(asm.G, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularReductionError(f"equation reduction is singular: {exc}") from None
    if not np.all(np.isfinite(solved)):
        raise SingularReductionError("equation reduction produced non-finite coefficients")

    xdot_rows = np.array([asm.xdot_col[i] for i in range(n)], dtype=int)
    A = solved[xdot_rows, :n] if n else np.zeros((0, 0))
    B = solved[xdot_rows, n:] if n else np.zeros((0, m))

    def variable_row(eid: int, var: str) -> np.ndarray:
        if var == "through":
            return solved[asm.f_col[eid], :]
        e = graph.element(eid)
        row = np.zeros(n + m)
        if e.source_node != graph.ground_node:
            row += solved[asm.v_col[e.source_node], :]
        if e.target_node != graph.ground_node:
            row -= solved[asm.v_col[e.target_node], :]
        return row

    p = len(graph.output_spec)
    C = np.zeros((p, n))
    D = np.zeros((p, m))
    for k, (eid, var) in enumerate(graph.output_spec):
        row = variable_row(eid, var)
        C[k, :] = row[:n]
        D[k, :] = row[n:]
    F = np.zeros((p, m))

    state_labels = tuple(_variable_label(graph.element(eid), var) for eid, var in asm.states)
    input_labels = tuple(
        _variable_label(
            graph.element(eid),
            "across" if graph.element(eid).kind is ElementKind.A_SOURCE else "through",
        )
        for eid in asm.inputs
    )
    output_labels = tuple(_variable_label(graph.element(eid), var) for eid, var in graph.output_spec)

    return StateSpaceModel(
        A=np.ascontiguousarray(A),
        B=np.ascontiguousarray(B),
        C=C,
        D=D,
        F=F,
        state_labels=state_labels,
        input_labels=input_labels,
        output_labels=output_labels,
    )
