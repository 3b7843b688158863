"""Tree-based genetic programming engine.

Individuals are binary constructor trees: inner nodes apply one of two
combinator functions (series, split), leaves carry one of three
element-adding terminals (add_a, add_d, add_t) with a sampled numeric
payload. Any composition is a valid individual (closure), and evolution
minimizes a caller-supplied fitness.
"""

from __future__ import annotations

import math
import random
import statistics
from bisect import bisect_left
from dataclasses import dataclass
from itertools import accumulate
from typing import Callable, Sequence

SERIES = "series"
SPLIT = "split"
ADD_A = "add_a"
ADD_D = "add_d"
ADD_T = "add_t"

FUNCTION_OPS = (SERIES, SPLIT)
TERMINAL_OPS = (ADD_A, ADD_D, ADD_T)

# terminal_sampler(op, rng) -> payload value for a freshly created terminal
TerminalSampler = Callable[[str, random.Random], float]


class EmptyPopulationError(Exception):
    """Selection was asked to draw from an empty population."""


@dataclass(frozen=True)
class GpNode:
    """One tree node: a 2-ary function or a payload-carrying terminal."""

    op: str
    children: tuple["GpNode", ...] = ()
    param: float | None = None

    def __post_init__(self):
        if self.op in FUNCTION_OPS:
            if len(self.children) != 2:
                raise ValueError(f"{self.op} node needs exactly 2 children")
            if self.param is not None:
                raise ValueError(f"{self.op} node carries no payload")
        elif self.op in TERMINAL_OPS:
            if self.children:
                raise ValueError(f"{self.op} terminal cannot have children")
            if self.param is None:
                raise ValueError(f"{self.op} terminal needs a payload value")
        else:
            raise ValueError(f"unknown op {self.op!r}")

    @property
    def is_function(self) -> bool:
        return self.op in FUNCTION_OPS


def node_count(root: GpNode) -> int:
    total = 0
    stack = [root]
    while stack:
        node = stack.pop()
        total += 1
        stack.extend(node.children)
    return total


def node_depth(root: GpNode) -> int:
    """Number of nodes on the longest root-to-leaf path (single node = 1)."""
    best = 0
    stack = [(root, 1)]
    while stack:
        node, level = stack.pop()
        best = max(best, level)
        stack.extend((c, level + 1) for c in node.children)
    return best


@dataclass(frozen=True)
class GpTree:
    """Immutable individual with cached size and depth."""

    root: GpNode
    size: int
    depth: int

    @classmethod
    def from_root(cls, root: GpNode) -> "GpTree":
        return cls(root, node_count(root), node_depth(root))


def iter_subtrees(root: GpNode) -> list[GpNode]:
    """All subtrees in preorder; index in this list names a node position."""
    out: list[GpNode] = []

    def walk(node: GpNode) -> None:
        out.append(node)
        for c in node.children:
            walk(c)

    walk(root)
    return out


def _level_of_index(root: GpNode, index: int) -> int:
    """1-based level of the preorder ``index``-th node."""
    counter = 0

    def walk(node: GpNode, level: int) -> int | None:
        nonlocal counter
        if counter == index:
            return level
        counter += 1
        for c in node.children:
            found = walk(c, level + 1)
            if found is not None:
                return found
        return None

    hit = walk(root, 1)
    if hit is None:
        raise IndexError(f"node index {index} outside tree")
    return hit


def _replace_at(root: GpNode, index: int, replacement: GpNode) -> GpNode:
    """New tree with the preorder ``index``-th subtree swapped out."""
    counter = 0

    def walk(node: GpNode) -> GpNode:
        nonlocal counter
        if counter == index:
            counter += node_count(node)
            return replacement
        counter += 1
        if not node.children:
            return node
        return GpNode(node.op, tuple(walk(c) for c in node.children))

    out = walk(root)
    if counter < index:
        raise IndexError(f"node index {index} outside tree")
    return out


def tree_to_expression(tree: GpTree) -> str:
    """S-expression rendering, e.g. "(series (add_t 0.001) (add_a 1e-08))"."""

    def render(node: GpNode) -> str:
        if node.is_function:
            return f"({node.op} {render(node.children[0])} {render(node.children[1])})"
        return f"({node.op} {node.param!r})"

    return render(tree.root)


@dataclass(frozen=True)
class EvolutionConfig:
    """Hyperparameters of one evolution run."""

    population_size: int
    generations: int
    max_depth: int = 8
    crossover_rate: float = 0.85
    mutation_rate: float = 0.10
    reproduction_rate: float = 0.05
    selection: str = "tournament"
    tournament_k: int = 4
    elitism_count: int = 1
    rng_seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.generations < 1:
            raise ValueError("generations must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be positive")
        rates = (self.crossover_rate, self.mutation_rate, self.reproduction_rate)
        if any(r < 0.0 or r > 1.0 for r in rates):
            raise ValueError("operator rates must lie in [0, 1]")
        if abs(sum(rates) - 1.0) > 1e-12:
            raise ValueError(f"operator rates must sum to 1, got {sum(rates)}")
        if self.selection not in ("tournament", "roulette"):
            raise ValueError(f"unknown selection method {self.selection!r}")
        if self.tournament_k < 1:
            raise ValueError("tournament_k must be positive")
        if not (0 <= self.elitism_count < self.population_size):
            raise ValueError("elitism_count must be in [0, population_size)")


@dataclass(frozen=True)
class GenerationStats:
    """Fitness and complexity record for one generation."""

    generation: int
    best_so_far_fitness: float
    median_fitness: float
    mean_fitness: float
    fitness_stddev: float
    best_depth: int
    best_size: int


def _random_terminal(terminal_sampler: TerminalSampler, rng: random.Random) -> GpNode:
    op = TERMINAL_OPS[rng.randrange(len(TERMINAL_OPS))]
    return GpNode(op, param=float(terminal_sampler(op, rng)))


_ALL_OPS = FUNCTION_OPS + TERMINAL_OPS


def _grow_node(
    levels_left: int,
    method: str,
    terminal_sampler: TerminalSampler,
    rng: random.Random,
) -> GpNode:
    if levels_left <= 1:
        return _random_terminal(terminal_sampler, rng)
    if method == "full":
        op = FUNCTION_OPS[rng.randrange(len(FUNCTION_OPS))]
    else:
        op = _ALL_OPS[rng.randrange(len(_ALL_OPS))]
        if op not in FUNCTION_OPS:
            return GpNode(op, param=float(terminal_sampler(op, rng)))
    return GpNode(
        op,
        (
            _grow_node(levels_left - 1, method, terminal_sampler, rng),
            _grow_node(levels_left - 1, method, terminal_sampler, rng),
        ),
    )


def _ramped_subtree(
    depth_limit: int, terminal_sampler: TerminalSampler, rng: random.Random
) -> GpNode:
    target = rng.randint(1, depth_limit)
    method = "full" if rng.random() < 0.5 else "grow"
    return _grow_node(target, method, terminal_sampler, rng)


def random_tree(
    cfg: EvolutionConfig, terminal_sampler: TerminalSampler, rng: random.Random
) -> GpTree:
    """Ramped half-and-half initialization: the target depth is uniform in
    [1, max_depth]; half the draws use the "full" method (functions at every
    level above the target), half use "grow" (uniform primitive choice)."""
    return GpTree.from_root(_ramped_subtree(cfg.max_depth, terminal_sampler, rng))


def select_parent(
    pop_fitness: Sequence[float],
    method: str,
    rng: random.Random,
    tournament_k: int = 4,
) -> int:
    """Pick a parent index from the fitness values (lower is better).

    Roulette adapts the classic wheel to minimization: the slot width of
    individual i is f_max - f_i + eps with eps = 1e-9 * (1 + f_max).
    Tournament draws k indices with replacement and keeps the fittest,
    breaking ties toward the lower index.
    """
    n = len(pop_fitness)
    if n == 0:
        raise EmptyPopulationError("cannot select from an empty population")
    if method == "roulette":
        f_max = max(pop_fitness)
        eps = 1e-9 * (1.0 + f_max)
        weights = [f_max - f + eps for f in pop_fitness]
        cumulative = list(accumulate(weights))
        r = rng.random() * cumulative[-1]
        return min(bisect_left(cumulative, r), n - 1)
    if method == "tournament":
        picks = [rng.randrange(n) for _ in range(tournament_k)]
        return min(picks, key=lambda i: (pop_fitness[i], i))
    raise ValueError(f"unknown selection method {method!r}")


def crossover(
    a: GpTree, b: GpTree, cfg: EvolutionConfig, rng: random.Random
) -> tuple[GpTree, GpTree]:
    """Swap a uniformly chosen subtree of each parent.

    A child that would exceed max_depth is replaced by a copy of its own
    parent, so depth bounds hold without retry loops. Parents are never
    modified.
    """
    i = rng.randrange(a.size)
    j = rng.randrange(b.size)
    sub_a = iter_subtrees(a.root)[i]
    sub_b = iter_subtrees(b.root)[j]
    child1 = GpTree.from_root(_replace_at(a.root, i, sub_b))
    child2 = GpTree.from_root(_replace_at(b.root, j, sub_a))
    if child1.depth > cfg.max_depth:
        child1 = a
    if child2.depth > cfg.max_depth:
        child2 = b
    return child1, child2


def mutate(
    a: GpTree,
    cfg: EvolutionConfig,
    terminal_sampler: TerminalSampler,
    rng: random.Random,
) -> GpTree:
    """Replace a uniformly chosen subtree with a freshly grown random one,
    sized so the result stays within max_depth. The parent is unmodified."""
    i = rng.randrange(a.size)
    level = _level_of_index(a.root, i)
    budget = cfg.max_depth - level + 1
    replacement = _ramped_subtree(max(budget, 1), terminal_sampler, rng)
    return GpTree.from_root(_replace_at(a.root, i, replacement))


def evolve(
    cfg: EvolutionConfig,
    fitness_fn: Callable[[GpTree], float],
    terminal_sampler: TerminalSampler,
    rng: random.Random | None = None,
) -> tuple[GpTree, list[GenerationStats]]:
    """Run the generational loop and return the best individual ever seen
    plus one stats record per generation.

    Every stochastic choice is made on the single ``rng`` stream (seeded from
    the config when not supplied), so runs are reproducible bit for bit.
    ``fitness_fn`` must return a finite value for every tree; invalid
    individuals are expected to come back as a large penalty, never as an
    exception.
    """
    if rng is None:
        rng = random.Random(cfg.rng_seed)

    population = [random_tree(cfg, terminal_sampler, rng) for _ in range(cfg.population_size)]
    best_tree: GpTree | None = None
    best_fitness = math.inf
    history: list[GenerationStats] = []

    for generation in range(cfg.generations):
        fitness = [float(fitness_fn(tree)) for tree in population]
        for i, f in enumerate(fitness):
            if f < best_fitness:
                best_fitness = f
                best_tree = population[i]
        assert best_tree is not None
        history.append(
            GenerationStats(
                generation=generation,
                best_so_far_fitness=best_fitness,
                median_fitness=float(statistics.median(fitness)),
                mean_fitness=float(statistics.fmean(fitness)),
                fitness_stddev=float(statistics.pstdev(fitness)),
                best_depth=best_tree.depth,
                best_size=best_tree.size,
            )
        )
        if generation == cfg.generations - 1:
            break

        ranked = sorted(range(cfg.population_size), key=lambda i: (fitness[i], i))
        next_population = [population[i] for i in ranked[: cfg.elitism_count]]
        while len(next_population) < cfg.population_size:
            draw = rng.random()
            if draw < cfg.crossover_rate:
                p1 = select_parent(fitness, cfg.selection, rng, cfg.tournament_k)
                p2 = select_parent(fitness, cfg.selection, rng, cfg.tournament_k)
                c1, c2 = crossover(population[p1], population[p2], cfg, rng)
                next_population.append(c1)
                if len(next_population) < cfg.population_size:
                    next_population.append(c2)
            elif draw < cfg.crossover_rate + cfg.mutation_rate:
                p = select_parent(fitness, cfg.selection, rng, cfg.tournament_k)
                next_population.append(mutate(population[p], cfg, terminal_sampler, rng))
            else:
                p = select_parent(fitness, cfg.selection, rng, cfg.tournament_k)
                next_population.append(population[p])
        population = next_population

    assert best_tree is not None
    return best_tree, history
