"""Compile constructor trees into filter circuits and score them.

The embryo circuit is a voltage source V_S with internal resistance R_S;
evolved elements grow from the node behind R_S. Terminals append one
capacitor, resistor or inductor each and create a fresh node; series chains
both actions, split builds its two sub-chains from the same node and grounds
the first chain's end. After construction the load R_L is attached between
the highest surviving node and ground, and candidates are scored by how
close the load-voltage magnitude comes to a brick-wall target over a
logarithmic frequency grid.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from .dynamics import frequency_response
from .gp import ADD_A, ADD_D, ADD_T, GpTree, SERIES, SPLIT, TerminalSampler
from .lineargraph import (
    Element,
    ElementKind,
    EnergyDomain,
    LinearGraph,
    LinearGraphError,
    derive_state_space,
    select_normal_tree,
    validate_graph,
)

PENALTY = 1e12

# Node behind R_S where construction starts; never merged into ground.
EMBRYO_CURSOR_NODE = 3

LOWPASS = "lowpass"
HIGHPASS = "highpass"
BANDPASS = "bandpass"

_TERMINAL_KIND = {
    ADD_A: ElementKind.A_TYPE,
    ADD_D: ElementKind.D_TYPE,
    ADD_T: ElementKind.T_TYPE,
}
_KIND_PREFIX = {
    ElementKind.A_TYPE: "C",
    ElementKind.D_TYPE: "R",
    ElementKind.T_TYPE: "L",
}


@dataclass(frozen=True)
class EmbryoSpec:
    """Source voltage and the two fixed resistances of the embryo circuit."""

    v_s: float
    r_s: float
    r_l: float

    def __post_init__(self):
        if self.v_s <= 0.0 or self.r_s <= 0.0 or self.r_l <= 0.0:
            raise ValueError("embryo parameters must be strictly positive")

    @property
    def characteristic_resistance(self) -> float:
        return math.sqrt(self.r_s * self.r_l)

    @property
    def divider_gain(self) -> float:
        return self.r_l / (self.r_s + self.r_l)


@dataclass(frozen=True)
class FilterSpec:
    """Filter kind, cutoff band and evaluation grid.

    ``f_lo`` and ``f_hi`` both hold the single cutoff for low/high-pass.
    The default grid spans two decades either side of the cutoff band with
    200 logarithmically spaced points.
    """

    kind: str
    f_lo: float
    f_hi: float
    grid_points: int = 200
    grid_lo: float = 0.0
    grid_hi: float = 0.0

    def __post_init__(self):
        if self.kind not in (LOWPASS, HIGHPASS, BANDPASS):
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if self.f_lo <= 0.0 or self.f_hi <= 0.0:
            raise ValueError("cutoff frequencies must be positive")
        if self.kind == BANDPASS and not self.f_lo < self.f_hi:
            raise ValueError("band-pass needs f_lo < f_hi")
        if self.kind != BANDPASS and self.f_lo != self.f_hi:
            raise ValueError("low/high-pass carry a single cutoff")
        if self.grid_points < 1:
            raise ValueError("grid_points must be positive")
        if self.grid_lo == 0.0:
            object.__setattr__(self, "grid_lo", self.f_lo / 100.0)
        if self.grid_hi == 0.0:
            object.__setattr__(self, "grid_hi", self.f_hi * 100.0)
        if not 0.0 < self.grid_lo < self.grid_hi:
            raise ValueError("grid bounds must satisfy 0 < grid_lo < grid_hi")

    @classmethod
    def lowpass(cls, f_c: float, **kwargs) -> "FilterSpec":
        return cls(LOWPASS, f_c, f_c, **kwargs)

    @classmethod
    def highpass(cls, f_c: float, **kwargs) -> "FilterSpec":
        return cls(HIGHPASS, f_c, f_c, **kwargs)

    @classmethod
    def bandpass(cls, f_lo: float, f_hi: float, **kwargs) -> "FilterSpec":
        return cls(BANDPASS, f_lo, f_hi, **kwargs)

    def in_passband(self, f: float) -> bool:
        """Brick-wall passband membership; boundaries belong to the passband."""
        if self.kind == LOWPASS:
            return f <= self.f_hi
        if self.kind == HIGHPASS:
            return f >= self.f_lo
        return self.f_lo <= f <= self.f_hi

    def grid(self) -> np.ndarray:
        return np.logspace(
            math.log10(self.grid_lo), math.log10(self.grid_hi), self.grid_points
        )


@dataclass(eq=False)
class CompiledCircuit:
    """Embryo plus evolved elements, ready for derivation.

    ``element_provenance`` maps each evolved element id to the preorder index
    of the terminal node that created it.
    """

    graph: LinearGraph
    load_node: int
    element_provenance: dict[int, int] = field(default_factory=dict)


def build_embryo(spec: EmbryoSpec) -> LinearGraph:
    """Source and internal resistance only: nodes 1 (ground), 2, 3 with V_S
    from 2 to 1 and R_S from 2 to 3. The load is attached at compile time."""
    elements = (
        Element(1, ElementKind.A_SOURCE, EnergyDomain.ELECTRICAL, 2, 1, spec.v_s, "s"),
        Element(2, ElementKind.D_TYPE, EnergyDomain.ELECTRICAL, 2, 3, spec.r_s, "Rs"),
    )
    return LinearGraph(node_count=3, elements=elements)


def sample_parameter(
    kind: str, espec: EmbryoSpec, fspec: FilterSpec, rng: random.Random
) -> float:
    """Draw a component value log-uniformly from a band tied to the embryo
    resistances and the cutoff frequencies.

    With R_c = sqrt(R_S * R_L) and the cutoff band [f_min, f_max], impedance
    matching at cutoff gives the centers 1/(2 pi f R_c) for capacitors and
    R_c/(2 pi f) for inductors; both ranges stretch a factor 50 either way.
    Resistors span [R_L/10, 10 R_S].
    """
    r_c = espec.characteristic_resistance
    f_min, f_max = fspec.f_lo, fspec.f_hi
    if kind == ADD_A:
        lo = 1.0 / (2.0 * math.pi * f_max * r_c * 50.0)
        hi = 50.0 / (2.0 * math.pi * f_min * r_c)
    elif kind == ADD_T:
        lo = r_c / (2.0 * math.pi * f_max * 50.0)
        hi = 50.0 * r_c / (2.0 * math.pi * f_min)
    elif kind == ADD_D:
        lo = espec.r_l / 10.0
        hi = 10.0 * espec.r_s
    else:
        raise ValueError(f"unknown terminal kind {kind!r}")
    return math.exp(rng.uniform(math.log(lo), math.log(hi)))


def make_terminal_sampler(espec: EmbryoSpec, fspec: FilterSpec) -> TerminalSampler:
    """Bind sample_parameter to one embryo/filter pair for the GP engine."""

    def sampler(kind: str, rng: random.Random) -> float:
        return sample_parameter(kind, espec, fspec, rng)

    return sampler


def compile_tree(tree: GpTree | None, espec: EmbryoSpec) -> CompiledCircuit:
    """Interpret a constructor tree against the embryo.

    Depth-first, first-child-first, with a cursor node starting at node 3:
    a terminal adds its element from the cursor to a fresh node and moves
    the cursor there; series threads the cursor through both children; split
    runs both children from the same node and marks the first child's final
    cursor for grounding. The root's final cursor is grounded too, ground
    merges are applied in one pass, the load lands on the highest surviving
    non-ground node (node 3 if nothing else survives) and nodes are
    renumbered densely. Every tree compiles; electrical viability is the
    fitness function's concern.
    """
    elements = list(build_embryo(espec).elements)
    provenance: dict[int, int] = {}
    merges: list[int] = []
    next_node = EMBRYO_CURSOR_NODE + 1
    next_tree_node = 0

    def interpret(node, cursor: int) -> int:
        nonlocal next_node, next_tree_node
        tree_node_id = next_tree_node
        next_tree_node += 1
        if node.op == SERIES:
            mid = interpret(node.children[0], cursor)
            return interpret(node.children[1], mid)
        if node.op == SPLIT:
            end_a = interpret(node.children[0], cursor)
            if end_a != EMBRYO_CURSOR_NODE:
                merges.append(end_a)
            return interpret(node.children[1], cursor)
        kind = _TERMINAL_KIND[node.op]
        fresh = next_node
        next_node += 1
        eid = len(elements) + 1
        elements.append(
            Element(
                eid,
                kind,
                EnergyDomain.ELECTRICAL,
                cursor,
                fresh,
                float(node.param),
                f"{_KIND_PREFIX[kind]}{eid}",
            )
        )
        provenance[eid] = tree_node_id
        return fresh

    final_cursor = interpret(tree.root, EMBRYO_CURSOR_NODE) if tree is not None else EMBRYO_CURSOR_NODE
    if final_cursor != EMBRYO_CURSOR_NODE:
        merges.append(final_cursor)

    grounded = set(merges)

    def mapped(node: int) -> int:
        return 1 if node in grounded else node

    elements = [
        Element(e.id, e.kind, e.domain, mapped(e.source_node), mapped(e.target_node), e.param_value, e.param_label)
        for e in elements
    ]

    present = {1, 2, 3}
    for e in elements:
        present.add(e.source_node)
        present.add(e.target_node)
    load_node = max(present - {1})

    rl_id = len(elements) + 1
    elements.append(
        Element(rl_id, ElementKind.D_TYPE, EnergyDomain.ELECTRICAL, load_node, 1, espec.r_l, "RL")
    )

    renumber = {old: new for new, old in enumerate(sorted(present), start=1)}
    elements = [
        Element(e.id, e.kind, e.domain, renumber[e.source_node], renumber[e.target_node], e.param_value, e.param_label)
        for e in elements
    ]
    graph = LinearGraph(
        node_count=len(present),
        elements=tuple(elements),
        output_spec=((rl_id, "across"),),
    )
    return CompiledCircuit(graph, renumber[load_node], provenance)


def target_magnitude(fspec: FilterSpec, espec: EmbryoSpec, f: float) -> float:
    """Brick-wall desired load voltage: V_S in the passband, 0 outside."""
    if f <= 0.0:
        raise ValueError("frequency must be positive")
    return espec.v_s if fspec.in_passband(f) else 0.0


def _target_vector(fspec: FilterSpec, espec: EmbryoSpec, freqs: np.ndarray) -> np.ndarray:
    return np.array([target_magnitude(fspec, espec, float(f)) for f in freqs])


def evaluate_fitness(tree: GpTree | None, espec: EmbryoSpec, fspec: FilterSpec) -> float:
    """Summed deviation of the load-voltage magnitude from the brick-wall
    target over the grid (band-pass squares the passband errors); every
    modeling or evaluation failure maps to the PENALTY value."""
    compiled = compile_tree(tree, espec)
    if validate_graph(compiled.graph):
        return PENALTY
    try:
        partition = select_normal_tree(compiled.graph)
        model = derive_state_space(compiled.graph, partition)
    except LinearGraphError:
        return PENALTY

    freqs = fspec.grid()
    response = frequency_response(model, freqs)
    if response.singular:
        return PENALTY
    gains = response.gains[:, 0, 0]
    if not np.all(np.isfinite(gains)):
        return PENALTY

    magnitudes = espec.v_s * np.abs(gains)
    targets = _target_vector(fspec, espec, freqs)
    errors = np.abs(magnitudes - targets)
    if fspec.kind == BANDPASS:
        passband = targets > 0.0
        total = float(np.sum(errors[passband] ** 2) + np.sum(errors[~passband]))
    else:
        total = float(np.sum(errors))
    return total if math.isfinite(total) else PENALTY


def baseline_fitness(espec: EmbryoSpec, fspec: FilterSpec) -> float:
    """Fitness of the bare embryo divider (no evolved elements)."""
    return evaluate_fitness(None, espec, fspec)


def passband_stopband_contrast(
    freqs: np.ndarray, magnitudes: np.ndarray, fspec: FilterSpec
) -> float:
    """Mean passband magnitude over the mean magnitude in the stopband decade
    farthest from the passband; band-pass takes the worse of its two outer
    decades. Large values mean strong attenuation."""
    freqs = np.asarray(freqs, dtype=float)
    magnitudes = np.asarray(magnitudes, dtype=float)
    passband = np.array([fspec.in_passband(float(f)) for f in freqs])
    if not passband.any():
        return 0.0
    pass_mean = float(np.mean(magnitudes[passband]))

    decades: list[np.ndarray] = []
    if fspec.kind in (LOWPASS, BANDPASS):
        decades.append(~passband & (freqs >= fspec.grid_hi / 10.0))
    if fspec.kind in (HIGHPASS, BANDPASS):
        decades.append(~passband & (freqs <= fspec.grid_lo * 10.0))

    ratios = []
    for mask in decades:
        if not mask.any():
            continue
        stop_mean = float(np.mean(magnitudes[mask]))
        ratios.append(math.inf if stop_mean == 0.0 else pass_mean / stop_mean)
    return min(ratios) if ratios else 0.0
