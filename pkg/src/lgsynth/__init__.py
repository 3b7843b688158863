"""Linear-graph modeling and genetic-programming synthesis of passive filters."""

from .lineargraph import (
    ElementKind,
    EnergyDomain,
    Element,
    LinearGraph,
    TreePartition,
    StateSpaceModel,
    LinearGraphError,
    build_graph,
    validate_graph,
    select_normal_tree,
    derive_state_space,
)
from .dynamics import (
    FrequencyResponse,
    Trajectory,
    frequency_response,
    simulate,
    integrate_signal,
)
from .gp import (
    GpNode,
    GpTree,
    EvolutionConfig,
    GenerationStats,
    random_tree,
    select_parent,
    crossover,
    mutate,
    evolve,
)
from .filters import (
    EmbryoSpec,
    FilterSpec,
    CompiledCircuit,
    PENALTY,
    build_embryo,
    sample_parameter,
    compile_tree,
    target_magnitude,
    evaluate_fitness,
)

__version__ = "0.1.0"

__all__ = [
    "ElementKind",
    "EnergyDomain",
    "Element",
    "LinearGraph",
    "TreePartition",
    "StateSpaceModel",
    "LinearGraphError",
    "build_graph",
    "validate_graph",
    "select_normal_tree",
    "derive_state_space",
    "FrequencyResponse",
    "Trajectory",
    "frequency_response",
    "simulate",
    "integrate_signal",
    "GpNode",
    "GpTree",
    "EvolutionConfig",
    "GenerationStats",
    "random_tree",
    "select_parent",
    "crossover",
    "mutate",
    "evolve",
    "EmbryoSpec",
    "FilterSpec",
    "CompiledCircuit",
    "PENALTY",
    "build_embryo",
    "sample_parameter",
    "compile_tree",
    "target_magnitude",
    "evaluate_fitness",
    "__version__",
]
