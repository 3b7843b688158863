import math
import random

import numpy as np
import pytest

import lgsynth.filters as filters
from lgsynth.dynamics import frequency_response
from lgsynth.filters import (
    PENALTY,
    CompiledCircuit,
    EmbryoSpec,
    FilterSpec,
    baseline_fitness,
    build_embryo,
    compile_tree,
    evaluate_fitness,
    make_terminal_sampler,
    passband_stopband_contrast,
    sample_parameter,
    target_magnitude,
)
from lgsynth.gp import (
    ADD_A,
    ADD_D,
    ADD_T,
    SERIES,
    SPLIT,
    EvolutionConfig,
    GpNode,
    GpTree,
    evolve,
    iter_subtrees,
    random_tree,
)
from lgsynth.lineargraph import (
    ElementKind,
    derive_state_space,
    select_normal_tree,
    validate_graph,
)

from oracles import divider_fitness_by_summation, nodal_voltage_transfer

PAPER_EMBRYO = EmbryoSpec(v_s=10.0, r_s=750.0, r_l=50.0)
LP50K = FilterSpec.lowpass(50e3)


def terminal(op, value):
    return GpNode(op, param=value)


def fig4_tree():
    """The worked low-pass constructor: split at the start node, an L-L-R/L-R
    ladder down one side, shunt capacitors on the way back."""
    return GpTree.from_root(
        GpNode(SPLIT, (
            GpNode(SERIES, (
                terminal(ADD_T, 2.2e-3),
                GpNode(SPLIT, (
                    GpNode(SERIES, (
                        terminal(ADD_T, 1.5e-3),
                        GpNode(SPLIT, (
                            terminal(ADD_D, 220.0),
                            GpNode(SERIES, (terminal(ADD_T, 1.0e-3), terminal(ADD_D, 330.0))),
                        )),
                    )),
                    terminal(ADD_A, 22e-9),
                )),
            )),
            terminal(ADD_A, 47e-9),
        ))
    )


class TestEmbryo:
    def test_paper_embryo(self):
        g = build_embryo(PAPER_EMBRYO)
        assert g.node_count == 3
        assert len(g.elements) == 2
        vs, rs = g.elements
        assert vs.kind is ElementKind.A_SOURCE
        assert (vs.source_node, vs.target_node, vs.param_value) == (2, 1, 10.0)
        assert rs.kind is ElementKind.D_TYPE
        assert (rs.source_node, rs.target_node, rs.param_value) == (2, 3, 750.0)

    def test_unit_embryo(self):
        g = build_embryo(EmbryoSpec(1.0, 1.0, 1.0))
        assert g.node_count == 3 and len(g.elements) == 2

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            EmbryoSpec(0.0, 750.0, 50.0)

    def test_empty_tree_compiles_to_divider(self):
        compiled = compile_tree(None, PAPER_EMBRYO)
        assert compiled.load_node == 3
        assert len(compiled.graph.elements) == 3
        ss = derive_state_space(compiled.graph, select_normal_tree(compiled.graph))
        fr = frequency_response(ss, np.logspace(2, 6, 20))
        assert np.allclose(np.abs(fr.gains[:, 0, 0]), 0.0625, rtol=1e-12)


class TestSampleParameter:
    def test_lp_capacitance_bounds(self):
        r_c = PAPER_EMBRYO.characteristic_resistance
        assert r_c == pytest.approx(193.649, rel=1e-4)
        lo = 1.0 / (2 * math.pi * 50e3 * r_c * 50)
        hi = 50.0 / (2 * math.pi * 50e3 * r_c)
        assert lo == pytest.approx(0.329e-9, rel=1e-2)
        assert hi == pytest.approx(0.822e-6, rel=1e-2)
        rng = random.Random(12)
        draws = [sample_parameter(ADD_A, PAPER_EMBRYO, LP50K, rng) for _ in range(2000)]
        assert min(draws) >= lo and max(draws) <= hi

    def test_single_cutoff_bound_ratio_is_2500(self):
        r_c = PAPER_EMBRYO.characteristic_resistance
        lo = 1.0 / (2 * math.pi * LP50K.f_hi * r_c * 50)
        hi = 50.0 / (2 * math.pi * LP50K.f_lo * r_c)
        assert hi / lo == pytest.approx(2500.0, rel=1e-12)

    def test_all_kinds_within_bounds_and_log_flat(self):
        rng = random.Random(77)
        bounds = {
            ADD_A: (1.0 / (2 * math.pi * 50e3 * PAPER_EMBRYO.characteristic_resistance * 50),
                    50.0 / (2 * math.pi * 50e3 * PAPER_EMBRYO.characteristic_resistance)),
            ADD_T: (PAPER_EMBRYO.characteristic_resistance / (2 * math.pi * 50e3 * 50),
                    50.0 * PAPER_EMBRYO.characteristic_resistance / (2 * math.pi * 50e3)),
            ADD_D: (5.0, 7500.0),
        }
        for kind, (lo, hi) in bounds.items():
            draws = [sample_parameter(kind, PAPER_EMBRYO, LP50K, rng) for _ in range(10_000)]
            assert min(draws) >= lo and max(draws) <= hi
            # Log-spaced histogram should be approximately flat.
            logs = np.log(draws)
            counts, _ = np.histogram(logs, bins=10, range=(math.log(lo), math.log(hi)))
            assert counts.min() > 600 and counts.max() < 1400

    def test_bandpass_uses_band_edges(self):
        bp = FilterSpec.bandpass(20e3, 250e3)
        rng = random.Random(5)
        r_c = PAPER_EMBRYO.characteristic_resistance
        lo = 1.0 / (2 * math.pi * 250e3 * r_c * 50)
        hi = 50.0 / (2 * math.pi * 20e3 * r_c)
        draws = [sample_parameter(ADD_A, PAPER_EMBRYO, bp, rng) for _ in range(2000)]
        assert min(draws) >= lo and max(draws) <= hi


class TestCompileTree:
    def test_fig4_ladder(self):
        compiled = compile_tree(fig4_tree(), PAPER_EMBRYO)
        g = compiled.graph
        evolved = [e for e in g.elements if e.id in compiled.element_provenance]
        kinds = sorted(e.kind.name for e in evolved)
        assert len(evolved) == 7
        assert kinds.count("T_TYPE") == 3
        assert kinds.count("D_TYPE") == 2
        assert kinds.count("A_TYPE") == 2
        # Ladder topology after grounding and dense renumbering.
        span = {(e.param_label[0], e.source_node, e.target_node) for e in evolved}
        assert span == {
            ("L", 3, 4), ("L", 4, 5), ("R", 5, 1), ("L", 5, 6),
            ("R", 6, 1), ("C", 4, 1), ("C", 3, 1),
        }
        rl = g.elements[-1]
        assert rl.param_label == "RL"
        assert (rl.source_node, rl.target_node) == (6, 1)
        assert compiled.load_node == 6
        assert validate_graph(g) == []

    def test_single_add_d_parallels_load(self):
        compiled = compile_tree(GpTree.from_root(terminal(ADD_D, 100.0)), PAPER_EMBRYO)
        g = compiled.graph
        new_r = g.elements[2]
        rl = g.elements[3]
        assert (new_r.source_node, new_r.target_node) == (3, 1)
        assert (rl.source_node, rl.target_node) == (3, 1)
        assert compiled.load_node == 3
        ss = derive_state_space(g, select_normal_tree(g))
        # Divider with 100 || 50 ohm load.
        expected = (100.0 * 50.0 / 150.0) / (750.0 + 100.0 * 50.0 / 150.0)
        fr = frequency_response(ss, [1e3])
        assert abs(fr.gains[0, 0, 0]) == pytest.approx(expected, rel=1e-12)

    def test_series_lt_then_a_is_lc_section(self):
        tree = GpTree.from_root(
            GpNode(SERIES, (terminal(ADD_T, 1e-3), terminal(ADD_A, 10e-9)))
        )
        compiled = compile_tree(tree, PAPER_EMBRYO)
        g = compiled.graph
        l_el, c_el = g.elements[2], g.elements[3]
        assert l_el.kind is ElementKind.T_TYPE and (l_el.source_node, l_el.target_node) == (3, 4)
        assert c_el.kind is ElementKind.A_TYPE and (c_el.source_node, c_el.target_node) == (4, 1)
        assert compiled.load_node == 4
        # Cross-check the transfer magnitude against the nodal oracle.
        ss = derive_state_space(g, select_normal_tree(g))
        freqs = np.logspace(3, 6.5, 40)
        fr = frequency_response(ss, freqs)
        oracle = nodal_voltage_transfer(g, compiled.load_node, freqs)
        assert np.allclose(np.abs(fr.gains[:, 0, 0]), np.abs(oracle), rtol=1e-9)

    def test_element_conservation(self):
        rng = random.Random(31)
        cfg = EvolutionConfig(population_size=2, generations=1, max_depth=7)
        sampler = make_terminal_sampler(PAPER_EMBRYO, LP50K)
        for _ in range(300):
            tree = random_tree(cfg, sampler, rng)
            compiled = compile_tree(tree, PAPER_EMBRYO)
            n_terminals = sum(1 for n in iter_subtrees(tree.root) if not n.is_function)
            assert len(compiled.element_provenance) == n_terminals
            assert len(compiled.graph.elements) == n_terminals + 3

    def test_split_children_ground_independently(self):
        # Both chains hanging off the split node must reach ground on their own.
        tree = GpTree.from_root(
            GpNode(SPLIT, (
                GpNode(SERIES, (terminal(ADD_T, 1e-3), terminal(ADD_T, 2e-3))),
                terminal(ADD_D, 100.0),
            ))
        )
        compiled = compile_tree(tree, PAPER_EMBRYO)
        subtrees = iter_subtrees(tree.root)
        child_a, child_b = tree.root.children
        ids_a = {i for i, n in enumerate(subtrees) if n in iter_subtrees(child_a)}
        ids_b = {i for i, n in enumerate(subtrees) if n in iter_subtrees(child_b)}
        for ids in (ids_a, ids_b):
            chain = [
                e for e in compiled.graph.elements
                if compiled.element_provenance.get(e.id) in ids
            ]
            assert chain, "each split child must add elements"
            # Union-find reachability: split node (3) to ground (1) via the chain.
            parent = {}

            def find(x):
                parent.setdefault(x, x)
                while parent[x] != x:
                    parent[x] = parent[parent[x]]
                    x = parent[x]
                return x

            for e in chain:
                parent.setdefault(e.source_node, e.source_node)
                parent.setdefault(e.target_node, e.target_node)
                parent[find(e.source_node)] = find(e.target_node)
            assert find(3) == find(1)


class TestTargetMagnitude:
    def test_lowpass_pass_and_stop(self):
        assert target_magnitude(LP50K, PAPER_EMBRYO, 10e3) == 10.0
        assert target_magnitude(LP50K, PAPER_EMBRYO, 500e3) == 0.0

    def test_boundary_belongs_to_passband(self):
        assert target_magnitude(LP50K, PAPER_EMBRYO, 50e3) == 10.0
        hp = FilterSpec.highpass(300e3)
        assert target_magnitude(hp, PAPER_EMBRYO, 300e3) == 10.0

    def test_bandpass_window(self):
        bp = FilterSpec.bandpass(20e3, 250e3)
        assert target_magnitude(bp, PAPER_EMBRYO, 100e3) == 10.0
        assert target_magnitude(bp, PAPER_EMBRYO, 1e3) == 0.0
        assert target_magnitude(bp, PAPER_EMBRYO, 1e6) == 0.0

    def test_rejects_nonpositive_frequency(self):
        with pytest.raises(ValueError):
            target_magnitude(LP50K, PAPER_EMBRYO, 0.0)


class TestEvaluateFitness:
    def test_divider_fitness_matches_direct_summation(self):
        expected = divider_fitness_by_summation(PAPER_EMBRYO, LP50K)
        assert evaluate_fitness(None, PAPER_EMBRYO, LP50K) == pytest.approx(expected, rel=1e-9)
        bp = FilterSpec.bandpass(20e3, 250e3)
        assert evaluate_fitness(None, PAPER_EMBRYO, bp) == pytest.approx(
            divider_fitness_by_summation(PAPER_EMBRYO, bp), rel=1e-9
        )

    def test_parallel_capacitors_hit_penalty(self):
        tree = GpTree.from_root(GpNode(SPLIT, (terminal(ADD_A, 1e-9), terminal(ADD_A, 2e-9))))
        assert evaluate_fitness(tree, PAPER_EMBRYO, LP50K) == PENALTY

    def test_disconnected_load_hits_penalty(self, monkeypatch):
        # compile_tree cannot produce a disconnected graph, so force one to
        # exercise the guard.
        real = compile_tree

        def broken(tree, espec):
            compiled = real(tree, espec)
            g = compiled.graph
            moved = tuple(
                type(e)(e.id, e.kind, e.domain, 4, 5, e.param_value, e.param_label)
                if e.param_label == "RL"
                else e
                for e in g.elements
            )
            graph = type(g)(5, moved, g.output_spec)
            return CompiledCircuit(graph, 4, compiled.element_provenance)

        monkeypatch.setattr(filters, "compile_tree", broken)
        assert filters.evaluate_fitness(None, PAPER_EMBRYO, LP50K) == PENALTY

    def test_perfect_gain_would_score_zero(self):
        # Lower bound sanity: the fitness is exactly the summed deviation, so
        # a hypothetical response equal to the target gives zero.
        freqs = LP50K.grid()
        targets = np.array([target_magnitude(LP50K, PAPER_EMBRYO, float(f)) for f in freqs])
        errors = np.abs(targets - targets)
        assert float(np.sum(errors)) == 0.0

    def test_valid_circuits_strictly_below_penalty(self):
        rng = random.Random(8)
        cfg = EvolutionConfig(population_size=2, generations=1, max_depth=6)
        sampler = make_terminal_sampler(PAPER_EMBRYO, LP50K)
        fits = [
            evaluate_fitness(random_tree(cfg, sampler, rng), PAPER_EMBRYO, LP50K)
            for _ in range(100)
        ]
        assert all(0.0 <= f <= PENALTY for f in fits)
        assert any(f < PENALTY for f in fits)
        for f in fits:
            assert f == PENALTY or f < 1e6  # valid scores are far below the penalty

    def test_compile_totality_fuzz(self):
        rng = random.Random(4242)
        cfg = EvolutionConfig(population_size=2, generations=1, max_depth=8)
        fspec = FilterSpec.lowpass(50e3, grid_points=32)
        sampler = make_terminal_sampler(PAPER_EMBRYO, fspec)
        for _ in range(1500):
            tree = random_tree(cfg, sampler, rng)
            compiled = compile_tree(tree, PAPER_EMBRYO)
            assert compiled.graph.elements[-1].param_label == "RL"
            assert validate_graph(compiled.graph) == []
            fitness = evaluate_fitness(tree, PAPER_EMBRYO, fspec)
            assert fitness == PENALTY or (0.0 <= fitness < PENALTY)


class TestContrast:
    def test_ideal_lowpass_contrast(self):
        freqs = LP50K.grid()
        mags = np.where([LP50K.in_passband(float(f)) for f in freqs], 0.625, 0.625e-3)
        assert passband_stopband_contrast(freqs, mags, LP50K) == pytest.approx(1000.0)

    def test_flat_response_contrast_is_one(self):
        freqs = LP50K.grid()
        mags = np.full(freqs.size, 0.625)
        assert passband_stopband_contrast(freqs, mags, LP50K) == pytest.approx(1.0)

    def test_bandpass_takes_worse_outer_decade(self):
        bp = FilterSpec.bandpass(20e3, 250e3)
        freqs = bp.grid()
        mags = np.ones(freqs.size)
        mags[freqs <= bp.grid_lo * 10.0] = 0.01   # strong low-side attenuation
        mags[freqs >= bp.grid_hi / 10.0] = 0.5    # weak high-side attenuation
        inband = np.array([bp.in_passband(float(f)) for f in freqs])
        mags[inband] = 1.0
        assert passband_stopband_contrast(freqs, mags, bp) == pytest.approx(2.0)


class TestSmallScaleEvolution:
    def test_monotone_and_beats_baseline(self):
        fspec = FilterSpec.lowpass(50e3, grid_points=60)
        cfg = EvolutionConfig(population_size=16, generations=15, rng_seed=2)
        sampler = make_terminal_sampler(PAPER_EMBRYO, fspec)
        best, history = evolve(
            cfg, lambda t: evaluate_fitness(t, PAPER_EMBRYO, fspec), sampler
        )
        values = [s.best_so_far_fitness for s in history]
        assert all(b <= a for a, b in zip(values, values[1:]))
        assert values[-1] < baseline_fitness(PAPER_EMBRYO, fspec)
