"""Text formats for model files and run configurations.

Both formats are flat "key = value" documents: blank lines and lines starting
with '#' are ignored. Model files carry the per-element construction vectors;
config files carry a full evolution run setup under dotted keys. See the
repository README for the documented grammar and worked examples.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .filters import FilterSpec, EmbryoSpec
from .gp import EvolutionConfig
from .lineargraph import LinearGraph, build_graph


class ModelFileError(Exception):
    """Unparseable model file."""


class ConfigError(Exception):
    """Unparseable or inconsistent run configuration."""


def _split_lines(text: str) -> list[tuple[str, str]]:
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        pairs.append((key.strip(), value.strip()))
    return pairs


def parse_model(text: str) -> LinearGraph:
    """Parse a model file into a validated LinearGraph.

    Required keys: S, T, type, domain, param, label — whitespace-separated
    vectors of equal length. Zero or more repeated ``output`` keys name the
    reported variables as "<element id> <across|through>".
    """
    try:
        pairs = _split_lines(text)
    except ValueError as exc:
        raise ModelFileError(str(exc)) from None

    vectors: dict[str, list[str]] = {}
    outputs: list[tuple[int, str]] = []
    for key, value in pairs:
        if key == "output":
            fields = value.split()
            if len(fields) != 2 or fields[1] not in ("across", "through"):
                raise ModelFileError(
                    f"output must be '<element id> <across|through>', got {value!r}"
                )
            try:
                outputs.append((int(fields[0]), fields[1]))
            except ValueError:
                raise ModelFileError(f"output element id {fields[0]!r} is not an integer") from None
        elif key in ("S", "T", "type", "domain", "param", "label"):
            if key in vectors:
                raise ModelFileError(f"duplicate key {key!r}")
            vectors[key] = value.split()
        else:
            raise ModelFileError(f"unknown key {key!r}")

    missing = [k for k in ("S", "T", "type", "domain", "param", "label") if k not in vectors]
    if missing:
        raise ModelFileError(f"missing keys: {', '.join(missing)}")

    def ints(key: str) -> list[int]:
        try:
            return [int(v) for v in vectors[key]]
        except ValueError as exc:
            raise ModelFileError(f"vector {key}: {exc}") from None

    def floats(key: str) -> list[float]:
        try:
            return [float(v) for v in vectors[key]]
        except ValueError as exc:
            raise ModelFileError(f"vector {key}: {exc}") from None

    return build_graph(
        ints("S"),
        ints("T"),
        ints("type"),
        ints("domain"),
        floats("param"),
        vectors["label"],
        outputs,
    )


@dataclass(frozen=True)
class RunConfig:
    """One batch run: what to do, on which system, with which settings."""

    mode: str
    embryo: EmbryoSpec
    filter: FilterSpec
    evolution: EvolutionConfig
    input_path: str = ""
    output_dir: str = "out"
    plot: bool = True

    def __post_init__(self):
        if self.mode not in ("model", "simulate", "evolve"):
            raise ValueError(f"unknown mode {self.mode!r}")


_CONFIG_KEYS = (
    "mode",
    "embryo.v_s",
    "embryo.r_s",
    "embryo.r_l",
    "filter.kind",
    "filter.f_lo",
    "filter.f_hi",
    "filter.grid_points",
    "filter.grid_lo",
    "filter.grid_hi",
    "evolution.population_size",
    "evolution.generations",
    "evolution.max_depth",
    "evolution.crossover_rate",
    "evolution.mutation_rate",
    "evolution.reproduction_rate",
    "evolution.selection",
    "evolution.tournament_k",
    "evolution.elitism_count",
    "evolution.rng_seed",
    "io.input",
    "io.output_dir",
    "plot",
)


def parse_config(text: str) -> RunConfig:
    """Parse a run configuration; unknown keys are rejected.

    ``filter.f_c`` is accepted as shorthand for setting both cutoffs of a
    low/high-pass filter. Grid keys may be omitted to use the defaults.
    """
    try:
        pairs = _split_lines(text)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    values: dict[str, str] = {}
    for key, value in pairs:
        if key == "filter.f_c":
            values["filter.f_lo"] = value
            values["filter.f_hi"] = value
            continue
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown key {key!r}")
        if key in values:
            raise ConfigError(f"duplicate key {key!r}")
        values[key] = value

    def need(key: str) -> str:
        if key not in values:
            raise ConfigError(f"missing key {key!r}")
        return values[key]

    def as_float(key: str, default: float | None = None) -> float:
        raw = values.get(key)
        if raw is None:
            if default is None:
                raise ConfigError(f"missing key {key!r}")
            return default
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: {raw!r} is not a number") from None

    def as_int(key: str, default: int | None = None) -> int:
        raw = values.get(key)
        if raw is None:
            if default is None:
                raise ConfigError(f"missing key {key!r}")
            return default
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: {raw!r} is not an integer") from None

    def as_bool(key: str, default: bool) -> bool:
        raw = values.get(key)
        if raw is None:
            return default
        if raw.lower() in ("true", "yes", "on", "1"):
            return True
        if raw.lower() in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"{key}: {raw!r} is not a boolean")

    try:
        embryo = EmbryoSpec(as_float("embryo.v_s"), as_float("embryo.r_s"), as_float("embryo.r_l"))
        fspec = FilterSpec(
            kind=need("filter.kind"),
            f_lo=as_float("filter.f_lo"),
            f_hi=as_float("filter.f_hi"),
            grid_points=as_int("filter.grid_points", 200),
            grid_lo=as_float("filter.grid_lo", 0.0),
            grid_hi=as_float("filter.grid_hi", 0.0),
        )
        evolution = EvolutionConfig(
            population_size=as_int("evolution.population_size"),
            generations=as_int("evolution.generations"),
            max_depth=as_int("evolution.max_depth", 8),
            crossover_rate=as_float("evolution.crossover_rate", 0.85),
            mutation_rate=as_float("evolution.mutation_rate", 0.10),
            reproduction_rate=as_float("evolution.reproduction_rate", 0.05),
            selection=values.get("evolution.selection", "tournament"),
            tournament_k=as_int("evolution.tournament_k", 4),
            elitism_count=as_int("evolution.elitism_count", 1),
            rng_seed=as_int("evolution.rng_seed", 0),
        )
        return RunConfig(
            mode=need("mode"),
            embryo=embryo,
            filter=fspec,
            evolution=evolution,
            input_path=values.get("io.input", ""),
            output_dir=values.get("io.output_dir", "out"),
            plot=as_bool("plot", True),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(0.0 if value == 0 else value)
    return str(value)


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form; parse(serialize(cfg)) reproduces cfg exactly."""
    e, f, ev = cfg.embryo, cfg.filter, cfg.evolution
    lines = [
        f"mode = {cfg.mode}",
        f"embryo.v_s = {_fmt(e.v_s)}",
        f"embryo.r_s = {_fmt(e.r_s)}",
        f"embryo.r_l = {_fmt(e.r_l)}",
        f"filter.kind = {f.kind}",
        f"filter.f_lo = {_fmt(f.f_lo)}",
        f"filter.f_hi = {_fmt(f.f_hi)}",
        f"filter.grid_points = {f.grid_points}",
        f"filter.grid_lo = {_fmt(f.grid_lo)}",
        f"filter.grid_hi = {_fmt(f.grid_hi)}",
        f"evolution.population_size = {ev.population_size}",
        f"evolution.generations = {ev.generations}",
        f"evolution.max_depth = {ev.max_depth}",
        f"evolution.crossover_rate = {_fmt(ev.crossover_rate)}",
        f"evolution.mutation_rate = {_fmt(ev.mutation_rate)}",
        f"evolution.reproduction_rate = {_fmt(ev.reproduction_rate)}",
        f"evolution.selection = {ev.selection}",
        f"evolution.tournament_k = {ev.tournament_k}",
        f"evolution.elitism_count = {ev.elitism_count}",
        f"evolution.rng_seed = {ev.rng_seed}",
        f"io.input = {cfg.input_path}",
        f"io.output_dir = {cfg.output_dir}",
        f"plot = {_fmt(cfg.plot)}",
    ]
    return "\n".join(lines) + "\n"


def with_overrides(
    cfg: RunConfig,
    seed: int | None = None,
    output_dir: str | None = None,
    plot: bool | None = None,
) -> RunConfig:
    """Apply command-line overrides on top of a parsed config."""
    out = cfg
    if seed is not None:
        out = replace(out, evolution=replace(out.evolution, rng_seed=seed))
    if output_dir is not None:
        out = replace(out, output_dir=output_dir)
    if plot is not None:
        out = replace(out, plot=plot)
    return out
