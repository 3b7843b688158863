"""Batch command-line front-end.

Three subcommands: ``model`` derives and prints a state-space model from a
model file, ``simulate`` integrates it in time, ``evolve`` runs a filter
evolution from a config file. All artifacts are CSV/SVG/JSON files that are
byte-identical across reruns with the same inputs and seed. The environment
variable LGSYNTH_LOG (debug|info|warning|error) controls log verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import NonFiniteStateError, frequency_response, integrate_signal, simulate
from .filters import (
    PENALTY,
    baseline_fitness,
    compile_tree,
    evaluate_fitness,
    make_terminal_sampler,
    passband_stopband_contrast,
    target_magnitude,
)
from .gp import evolve, tree_to_expression
from .lineargraph import (
    ElementKind,
    LinearGraphError,
    derive_state_space,
    select_normal_tree,
    validate_graph,
)
from .runfiles import ConfigError, ModelFileError, parse_config, parse_model, serialize_config, with_overrides
from .svgplot import line_plot

log = logging.getLogger("lgsynth.cli")

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_MODEL = 2
EXIT_NONFINITE = 3
EXIT_DEGENERATE = 4

_NETLIST_LETTER = {
    ElementKind.A_SOURCE: "V",
    ElementKind.T_SOURCE: "I",
    ElementKind.A_TYPE: "C",
    ElementKind.D_TYPE: "R",
    ElementKind.T_TYPE: "L",
    ElementKind.TRANSFORMER: "TF",
    ElementKind.GYRATOR: "GY",
}
_NETLIST_UNIT = {
    ElementKind.A_SOURCE: "V",
    ElementKind.T_SOURCE: "A",
    ElementKind.A_TYPE: "F",
    ElementKind.D_TYPE: "ohm",
    ElementKind.T_TYPE: "H",
    ElementKind.TRANSFORMER: "ratio",
    ElementKind.GYRATOR: "ratio",
}


def _num(value: float) -> str:
    """Canonical float rendering for artifacts; kills negative zero."""
    v = float(value)
    if v == 0.0:
        v = 0.0
    return repr(v)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")


def _read_model(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return None
    try:
        return parse_model(text)
    except ModelFileError as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        return None
    except LinearGraphError as exc:
        # Construction-level failures count as unparseable model input.
        print(f"error: {path}: {type(exc).__name__.removesuffix('Error')}: {exc}", file=sys.stderr)
        return None


def _derive(graph):
    partition = select_normal_tree(graph)
    return derive_state_space(graph, partition)


def _matrix_block(name: str, matrix: np.ndarray) -> list[str]:
    lines = [f"{name} = ({matrix.shape[0]}x{matrix.shape[1]})"]
    for row in np.atleast_2d(matrix):
        lines.append("  " + " ".join(_num(v) for v in row))
    return lines


def _state_space_text(ss) -> str:
    lines = [
        "states = " + " ".join(ss.state_labels),
        "inputs = " + " ".join(ss.input_labels),
        "outputs = " + " ".join(ss.output_labels),
    ]
    for name, m in (("A", ss.A), ("B", ss.B), ("C", ss.C), ("D", ss.D), ("F", ss.F)):
        lines.extend(_matrix_block(name, m))
    return "\n".join(lines) + "\n"


def cmd_model(args) -> int:
    graph = _read_model(args.model_file)
    if graph is None:
        return EXIT_PARSE
    diagnostics = validate_graph(graph)
    try:
        ss = _derive(graph)
    except LinearGraphError as exc:
        print(f"error: {type(exc).__name__.removesuffix('Error')}: {exc}", file=sys.stderr)
        return EXIT_MODEL

    text = _state_space_text(ss)
    diag_lines = ["diagnostics = none" if not diagnostics else "diagnostics:"]
    diag_lines += [f"  {d.code}: {d.message}" for d in diagnostics]
    text += "\n".join(diag_lines) + "\n"
    out = Path(args.out) / "state_space.txt"
    _write(out, text)
    print(text, end="")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.dt <= 0.0 or args.t_end < args.dt:
        print("error: need dt > 0 and t_end >= dt", file=sys.stderr)
        return EXIT_PARSE
    graph = _read_model(args.model_file)
    if graph is None:
        return EXIT_PARSE
    try:
        ss = _derive(graph)
    except LinearGraphError as exc:
        print(f"error: {type(exc).__name__.removesuffix('Error')}: {exc}", file=sys.stderr)
        return EXIT_MODEL

    amplitudes = np.array(
        [e.param_value for e in graph.elements if e.kind in (ElementKind.A_SOURCE, ElementKind.T_SOURCE)]
    )
    channels = list(args.integrate or [])
    for ch in channels:
        if not (0 <= ch < ss.output_count):
            print(f"error: no output channel {ch}", file=sys.stderr)
            return EXIT_PARSE
    try:
        trajectory = simulate(ss, lambda t: amplitudes, t_end=args.t_end, dt=args.dt)
    except NonFiniteStateError as exc:
        print(f"error: NonFiniteState: {exc} (last valid step {exc.last_valid_step})", file=sys.stderr)
        return EXIT_NONFINITE

    integrals = {ch: integrate_signal(trajectory, ch) for ch in channels}
    header = ["time_s"] + [f"y_{label}" for label in ss.output_labels]
    header += [f"int_y_{ss.output_labels[ch]}" for ch in channels]
    rows = [",".join(header)]
    for k in range(trajectory.times.size):
        row = [_num(trajectory.times[k])]
        row += [_num(v) for v in trajectory.outputs[k]]
        row += [_num(integrals[ch][k]) for ch in channels]
        rows.append(",".join(row))
    out = Path(args.out) / "trajectory.csv"
    _write(out, "\n".join(rows) + "\n")
    print(f"wrote {out}")

    if args.plot:
        series = [
            (trajectory.times, trajectory.outputs[:, i], f"y_{label}")
            for i, label in enumerate(ss.output_labels)
        ]
        series += [(trajectory.times, integrals[ch], f"int_y_{ss.output_labels[ch]}") for ch in channels]
        svg = line_plot(series, title="Simulated response", xlabel="time [s]", ylabel="output")
        svg_path = Path(args.out) / "trajectory.svg"
        _write(svg_path, svg)
        print(f"wrote {svg_path}")
    return EXIT_OK


def _netlist_csv(compiled) -> str:
    rows = ["element_id,kind,node_a,node_b,value,unit,tree_node"]
    for e in compiled.graph.elements:
        tree_node = compiled.element_provenance.get(e.id, "")
        rows.append(
            ",".join(
                [
                    str(e.id),
                    _NETLIST_LETTER[e.kind],
                    str(e.source_node),
                    str(e.target_node),
                    _num(e.param_value),
                    _NETLIST_UNIT[e.kind],
                    str(tree_node),
                ]
            )
        )
    return "\n".join(rows) + "\n"


def cmd_evolve(args) -> int:
    try:
        cfg = parse_config(Path(args.config_file).read_text(encoding="utf-8"))
    except OSError as exc:
        print(f"error: cannot read {args.config_file}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConfigError as exc:
        print(f"error: {args.config_file}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if cfg.mode != "evolve":
        print(f"error: config mode is {cfg.mode!r}, expected 'evolve'", file=sys.stderr)
        return EXIT_PARSE
    cfg = with_overrides(
        cfg,
        seed=args.seed,
        output_dir=args.out,
        plot=False if args.no_plot else None,
    )

    espec, fspec, evo = cfg.embryo, cfg.filter, cfg.evolution
    sampler = make_terminal_sampler(espec, fspec)
    fitness_fn = lambda tree: evaluate_fitness(tree, espec, fspec)
    log.info("evolving %s filter: pop=%d gens=%d seed=%d", fspec.kind, evo.population_size, evo.generations, evo.rng_seed)

    rng = random.Random(evo.rng_seed)
    best, history = evolve(evo, fitness_fn, sampler, rng)
    if history[-1].best_so_far_fitness >= PENALTY:
        print("error: every candidate in every generation scored the penalty value", file=sys.stderr)
        return EXIT_DEGENERATE

    out_dir = Path(cfg.output_dir)
    compiled = compile_tree(best, espec)
    model = _derive(compiled.graph)
    freqs = fspec.grid()
    response = frequency_response(model, freqs)
    gains = response.gains[:, 0, 0]
    magnitudes = espec.v_s * np.abs(gains)
    phases = np.angle(gains)
    targets = np.array([target_magnitude(fspec, espec, float(f)) for f in freqs])
    baseline = baseline_fitness(espec, fspec)
    contrast = passband_stopband_contrast(freqs, magnitudes, fspec)

    netlist_path = out_dir / "netlist.csv"
    _write(netlist_path, _netlist_csv(compiled))

    rows = ["freq_hz,magnitude_v,phase_rad,target_v"]
    for k in range(freqs.size):
        rows.append(f"{_num(freqs[k])},{_num(magnitudes[k])},{_num(phases[k])},{_num(targets[k])}")
    response_path = out_dir / "response.csv"
    _write(response_path, "\n".join(rows) + "\n")

    rows = ["generation,best_so_far,median,mean,stddev,best_depth,best_size"]
    for s in history:
        rows.append(
            f"{s.generation},{_num(s.best_so_far_fitness)},{_num(s.median_fitness)},"
            f"{_num(s.mean_fitness)},{_num(s.fitness_stddev)},{s.best_depth},{s.best_size}"
        )
    stats_path = out_dir / "stats.csv"
    _write(stats_path, "\n".join(rows) + "\n")

    artifacts = [netlist_path.name, response_path.name, stats_path.name, "manifest.json"]
    if cfg.plot:
        generations = [s.generation for s in history]
        fitness_svg = line_plot(
            [
                (generations, [s.best_so_far_fitness for s in history], "best so far"),
                (generations, [s.median_fitness for s in history], "median"),
                (generations, [s.mean_fitness for s in history], "mean"),
            ],
            title=f"Fitness history ({fspec.kind})",
            xlabel="generation",
            ylabel="fitness",
            log_y=True,
        )
        _write(out_dir / "fitness.svg", fitness_svg)
        response_svg = line_plot(
            [(freqs, magnitudes, "evolved |V|"), (freqs, targets, "target")],
            title=f"Load-voltage magnitude ({fspec.kind})",
            xlabel="frequency [Hz]",
            ylabel="|V| [V]",
            log_x=True,
            log_y=True,
        )
        _write(out_dir / "response.svg", response_svg)
        artifacts += ["fitness.svg", "response.svg"]

    manifest = {
        "seed": evo.rng_seed,
        "config": serialize_config(cfg).splitlines(),
        "baseline_fitness": baseline,
        "best_fitness": history[-1].best_so_far_fitness,
        "best_tree": tree_to_expression(best),
        "best_size": best.size,
        "best_depth": best.depth,
        "evolved_elements": len(compiled.element_provenance),
        "passband_stopband_contrast": contrast,
        "artifacts": sorted(artifacts),
    }
    _write(out_dir / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    print(f"best fitness {history[-1].best_so_far_fitness:.6g} (baseline {baseline:.6g}), "
          f"contrast {contrast:.3g}x, artifacts in {out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lgsynth",
        description="Linear-graph modeling and evolutionary filter synthesis",
    )
    parser.add_argument("--version", action="version", version=f"lgsynth {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_model = sub.add_parser("model", help="derive a state-space model from a model file")
    p_model.add_argument("model_file")
    p_model.add_argument("--out", default="out", help="output directory (default: out)")
    p_model.set_defaults(func=cmd_model)

    p_sim = sub.add_parser("simulate", help="integrate a model file in time")
    p_sim.add_argument("model_file")
    p_sim.add_argument("--dt", type=float, default=1e-3, help="time step in seconds")
    p_sim.add_argument("--t-end", type=float, default=10.0, help="end time in seconds")
    p_sim.add_argument(
        "--integrate",
        type=int,
        action="append",
        metavar="CH",
        help="also emit the cumulative integral of output channel CH (repeatable)",
    )
    p_sim.add_argument("--out", default="out")
    p_sim.add_argument("--plot", action="store_true", help="also write an SVG line plot")
    p_sim.set_defaults(func=cmd_simulate)

    p_evo = sub.add_parser("evolve", help="run a filter evolution from a config file")
    p_evo.add_argument("config_file")
    p_evo.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_evo.add_argument("--out", default=None, help="override the config output directory")
    p_evo.add_argument("--no-plot", action="store_true", help="skip SVG plot artifacts")
    p_evo.set_defaults(func=cmd_evolve)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("LGSYNTH_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
