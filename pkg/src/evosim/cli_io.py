"""Config parsing, CSV output, plot rendering, and the command-line surface.

Config files are `key = value` lines using the SimConfig field names; `#`
starts a comment; omitted keys take the baseline defaults.  All real
numbers in CSV output are rendered with 6 significant digits so outputs
are byte-stable; every CSV starts with `#` metadata lines (version, master
seed, config echo).
"""

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import engine
from ._version import __version__
from .engine import SimConfig
from .experiments import ExperimentSpec, preset, run_experiment

TIMESERIES_HEADER = ("births,mean_fitness,mean_genome_length,mean_mutation_rate,"
                     "mean_fitness_increase,sd_fitness,sd_genome_length,"
                     "sd_mutation_rate")
SWEEP_HEADER = ("param_value,mean_last_novel_birth,fraction_runs_nonzero_rate,"
                "mean_final_fitness,mean_final_mutation_rate")

_CONFIG_KEYS = ("pop_size", "run_length", "era_length", "target_change_rate",
                "tournament_size", "mutation_code_length", "seed",
                "sample_interval", "stop_on_zero_mutation")
_INT_KEYS = ("pop_size", "run_length", "era_length", "tournament_size",
             "mutation_code_length", "seed", "sample_interval")


class ConfigError(ValueError):
    """A config file failed to parse or validate."""


def _parse_value(key: str, raw: str):
    if key in _INT_KEYS:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key} expects an integer, got {raw!r}") from None
    if key == "target_change_rate":
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key} expects a number, got {raw!r}") from None
    low = raw.lower()
    if low in ("true", "1"):
        return True
    if low in ("false", "0"):
        return False
    raise ConfigError(f"{key} expects true or false, got {raw!r}")


def parse_config(text: str) -> SimConfig:
    """Parse and validate config text; unknown keys are errors."""
    values = {}
    key_lines = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected 'key = value', got {line!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"line {ln}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {ln}: duplicate key {key!r}")
        try:
            values[key] = _parse_value(key, val)
        except ConfigError as e:
            raise ConfigError(f"line {ln}: {e}") from None
        key_lines[key] = ln
    try:
        return SimConfig(**values)
    except ValueError as e:
        msg = str(e)
        for key, ln in key_lines.items():
            if key in msg:
                raise ConfigError(f"line {ln}: {msg}") from None
        raise ConfigError(msg) from None


def config_lines(config: SimConfig, include_seed: bool = True) -> list:
    """The config as canonical `key = value` lines."""
    out = []
    for key in _CONFIG_KEYS:
        if key == "seed" and not include_seed:
            continue
        v = getattr(config, key)
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = repr(v)
        out.append(f"{key} = {v}")
    return out


def format_config(config: SimConfig) -> str:
    """Render a config as parseable text; parse(format(c)) == c."""
    return "\n".join(config_lines(config)) + "\n"


def _fmt(x: float) -> str:
    return "%.6g" % x


def write_timeseries(samples, path, metadata=()) -> None:
    """Write sampled metrics as CSV; metadata lines become `#` comments."""
    if not samples:
        raise ValueError(f"no samples to write to {path}")
    with open(path, "w", newline="\n") as f:
        for m in metadata:
            f.write(f"# {m}\n")
        f.write(TIMESERIES_HEADER + "\n")
        for s in samples:
            f.write(f"{s.births},{_fmt(s.mean_fitness)},"
                    f"{_fmt(s.mean_genome_length)},{_fmt(s.mean_mutation_rate)},"
                    f"{_fmt(s.mean_fitness_increase)},{_fmt(s.sd_fitness)},"
                    f"{_fmt(s.sd_genome_length)},{_fmt(s.sd_mutation_rate)}\n")


def write_sweep(points, path, metadata=()) -> None:
    """Write sweep summary rows as CSV, in sweep order."""
    if not points:
        raise ValueError(f"no sweep points to write to {path}")
    with open(path, "w", newline="\n") as f:
        for m in metadata:
            f.write(f"# {m}\n")
        f.write(SWEEP_HEADER + "\n")
        for p in points:
            f.write(f"{_fmt(p.value)},{_fmt(p.mean_last_novel_birth)},"
                    f"{_fmt(p.fraction_runs_nonzero_rate)},"
                    f"{_fmt(p.mean_final_fitness)},"
                    f"{_fmt(p.mean_final_mutation_rate)}\n")


def write_experiment_csv(result, out_dir: str) -> str:
    """Emit an ExperimentResult as CSV in out_dir; returns the path."""
    spec = result.spec
    cfg = spec.base_config
    meta = [f"evosim {__version__}"]
    if spec.id:
        meta.append(f"experiment = {spec.id}")
    meta.append(f"num_runs = {spec.num_runs}")
    meta.append(f"master_seed = {cfg.seed}")
    if spec.swept_parameter is not None:
        meta.append(f"swept_parameter = {spec.swept_parameter}")
        meta.append("sweep_values = " +
                    ",".join(_fmt(float(v)) for v in spec.sweep_values))
    elif any(r.last_novel_birth is not None for r in result.runs):
        meta.append("last_novel_births = " + ",".join(
            "none" if r.last_novel_birth is None else str(r.last_novel_birth)
            for r in result.runs))
    meta.extend(config_lines(cfg, include_seed=False))
    os.makedirs(out_dir, exist_ok=True)
    if spec.swept_parameter is not None:
        name = (f"experiment{spec.id}.csv" if spec.id
                else f"sweep_{spec.swept_parameter}.csv")
        path = os.path.join(out_dir, name)
        write_sweep(result.points, path, meta)
    else:
        name = f"experiment{spec.id}.csv" if spec.id else "experiment.csv"
        path = os.path.join(out_dir, name)
        write_timeseries(result.aggregate.samples, path, meta)
    return path


def read_csv(path):
    """Read one of our CSVs: (column names in order, name -> float array)."""
    names = None
    rows = []
    with open(path) as f:
        for raw in f:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if names is None:
                names = line.split(",")
            else:
                rows.append([float(x) for x in line.split(",")])
    if names is None:
        raise ValueError(f"no header found in {path}")
    data = np.array(rows, dtype=float).reshape(len(rows), len(names))
    return names, {n: data[:, j] for j, n in enumerate(names)}


def render_plot(csv_path, columns, out_path) -> None:
    """Plot the named columns against the CSV's first column as one SVG.

    One panel per column, two panels across.  Output bytes are
    deterministic for identical input.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names, cols = read_csv(csv_path)
    missing = [c for c in columns if c not in cols]
    if missing:
        raise ValueError(f"column(s) {', '.join(missing)} not in {csv_path}")
    xname = names[0]
    x = cols[xname]
    if x.size == 0:
        raise ValueError(f"no data rows in {csv_path}")
    n = len(columns)
    ncols = 2 if n > 2 else 1
    nrows = (n + ncols - 1) // ncols
    with plt.rc_context({"svg.hashsalt": "evosim"}):
        fig, axes = plt.subplots(nrows, ncols, figsize=(5.0 * ncols, 3.2 * nrows),
                                 squeeze=False, constrained_layout=True)
        for j, c in enumerate(columns):
            ax = axes[j // ncols][j % ncols]
            ax.plot(x, cols[c], linewidth=1.0)
            ax.set_xlabel(xname)
            ax.set_ylabel(c)
        for j in range(n, nrows * ncols):
            axes[j // ncols][j % ncols].axis("off")
        fig.savefig(out_path, format="svg", metadata={"Date": None})
        plt.close(fig)


def _parse_values_arg(raw: str) -> tuple:
    try:
        return tuple(float(x) for x in raw.split(",") if x.strip())
    except ValueError:
        raise ValueError(f"bad --values list: {raw!r}") from None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evosim",
        description="Steady-state evolution simulator with a drifting target.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single run from a config file")
    p.add_argument("--config", required=True, help="config file path")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the seed")

    p = sub.add_parser("experiment", help="run a preset experiment (1-8)")
    p.add_argument("number", type=int, help="experiment id, 1-8")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--scale", type=float, default=1.0,
                   help="shrink factor for run length and sample interval")
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--values", default=None,
                   help="override sweep values, comma-separated")
    p.add_argument("--runs", type=int, default=None, help="override run count")

    p = sub.add_parser("sweep", help="sweep one parameter of a config")
    p.add_argument("--param", required=True, help="parameter to sweep")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--config", required=True, help="base config file")
    p.add_argument("--runs", type=int, default=10, help="runs per value")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=None, help="master seed")

    p = sub.add_parser("plot", help="render CSV columns as an SVG")
    p.add_argument("--csv", required=True, help="input CSV path")
    p.add_argument("--columns", required=True, help="comma-separated columns")
    p.add_argument("--out", required=True, help="output SVG path")
    return parser


def _cmd_run(args) -> int:
    cfg = parse_config(Path(args.config).read_text())
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    result = engine.run(cfg)
    meta = [f"evosim {__version__}"] + config_lines(cfg)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "run.csv")
    write_timeseries(result.samples, path, meta)
    print(path)
    return 0


def _cmd_experiment(args) -> int:
    spec = preset(args.number)
    if args.seed is not None:
        spec = replace(spec, base_config=replace(spec.base_config, seed=args.seed))
    if args.runs is not None:
        spec = replace(spec, num_runs=args.runs)
    if args.scale != 1.0:
        spec = replace(spec, scale=args.scale)
    if args.values is not None:
        if spec.swept_parameter is None:
            raise ValueError(
                f"experiment {spec.id} has no swept parameter to override")
        spec = replace(spec, sweep_values=_parse_values_arg(args.values))
    result = run_experiment(spec, out_dir=args.out)
    print(result.csv_path)
    return 0


def _cmd_sweep(args) -> int:
    cfg = parse_config(Path(args.config).read_text())
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    spec = ExperimentSpec(0, cfg, args.param, _parse_values_arg(args.values),
                          num_runs=args.runs)
    result = run_experiment(spec, out_dir=args.out)
    print(result.csv_path)
    return 0


def _cmd_plot(args) -> int:
    columns = [c.strip() for c in args.columns.split(",") if c.strip()]
    if not columns:
        raise ValueError("no columns requested")
    render_plot(args.csv, columns, args.out)
    print(args.out)
    return 0


def cli_main(argv) -> int:
    """Entry point; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    handlers = {"run": _cmd_run, "experiment": _cmd_experiment,
                "sweep": _cmd_sweep, "plot": _cmd_plot}
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main():
    sys.exit(cli_main(sys.argv[1:]))
