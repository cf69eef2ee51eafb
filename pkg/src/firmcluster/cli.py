"""Command-line entry point: ``firmcluster <subcommand> [options]``.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import pandas as pd

from . import harness, model
from .config import KINDS, PRESETS, SCALES, ExperimentSpec, load_json, parse_config_dict, preset
from .errors import ConfigError, InvalidParameterError
from .output import build_manifest, read_table, run_table, write_json, write_results
from .plots import PLOT_KINDS, plot_static
from .sobol import index_table_csv

log = logging.getLogger("firmcluster")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

DEFAULT_PRESET = {"convergence": "convergence", "gsa": "table1", "grid": "fig1", "optimize": "fig2"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="firmcluster",
        description="Agent-based model of innovation in geographical firm clusters, with its experiment suite.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    for kind in KINDS:
        p = sub.add_parser(kind, help=f"{kind} experiment" if kind != "run" else "single seeded model run")
        p.add_argument("--config", type=Path, help="JSON config file")
        p.add_argument("--out", type=Path, help=f"output directory (default: out/{kind})")
        p.add_argument("--seed", type=int, help="override the (base) seed")
        p.add_argument("--workers", type=int, help="worker processes (default 1)")
        if kind == "run":
            p.add_argument("--dump-state", action="store_true", help="also write the final firm state as JSON")
        else:
            p.add_argument("--scale", choices=SCALES, default="desk", help="protocol size (default desk)")
            p.add_argument("--preset", choices=sorted(PRESETS), help="named study protocol")
            p.add_argument("--yes", action="store_true", help="confirm a paper-scale run")

    p = sub.add_parser("plot", help="SVG figure from a result table")
    p.add_argument("--input", type=Path, required=True, help="summary or archive CSV")
    p.add_argument("--kind", choices=PLOT_KINDS, required=True)
    p.add_argument("--out", type=Path, help="SVG path (default: next to the input)")
    return parser


def resolve_spec(args) -> ExperimentSpec:
    kind = args.command
    doc: dict = {}
    if kind != "run":
        name = args.preset or DEFAULT_PRESET[kind]
        if PRESETS[name] != kind:
            raise ConfigError(f"preset: {name!r} belongs to the {PRESETS[name]!r} subcommand, not {kind!r}")
        doc = preset(name, args.scale)
    if args.config is not None:
        overlay = load_json(args.config)
        if not isinstance(overlay, dict):
            raise ConfigError("config: top level must be a JSON object")
        doc.update(overlay)
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.workers is not None:
        doc["workers"] = args.workers
    if kind == "run" and args.dump_state:
        doc["dump_state"] = True
    return parse_config_dict(doc, kind)


def execute(spec: ExperimentSpec, out: Path) -> list[Path]:
    """Run the experiment described by ``spec`` and write its output tree into ``out``."""
    manifest = build_manifest(spec)
    if spec.kind == "run":
        result = model.run(spec.params, keep_state=spec.dump_state)
        written = write_results({"run": run_table(result)}, out, manifest)
        write_json(out / "params.json", spec.params.to_symbols())
        written.append(out / "params.json")
        if spec.dump_state:
            write_json(out / "state.json", result.final_state)
            written.append(out / "state.json")
        return written

    if spec.kind == "convergence":
        res = harness.convergence_experiment(
            spec.space, spec.n_points, spec.n_reps, spec.seed, fixed=spec.params, workers=spec.workers
        )
        tables = {
            "design": res.design.to_csv(),
            "raw": res.raw,
            "point_stats": res.point_stats,
            "quartiles": res.quartiles,
        }
        return write_results(tables, out, manifest)

    if spec.kind == "gsa":
        res = harness.gsa_experiment(
            spec.space,
            spec.n_base,
            spec.seed,
            fixed=spec.params,
            workers=spec.workers,
            n_boot=spec.n_boot,
            level=spec.level,
            method=spec.method,
        )
        outputs = pd.DataFrame(res.design.values, columns=res.design.names)
        for j, name in enumerate(harness.INDICATORS):
            outputs[name] = res.outputs[:, j]
        tables = {"design": res.design.to_csv(), "outputs": outputs, "indices": index_table_csv(res.indices)}
        return write_results(tables, out, manifest)

    if spec.kind == "grid":
        res = harness.grid_experiment(spec.axes, spec.params, spec.n_reps, spec.seed, workers=spec.workers)
        written = write_results({"raw": res.raw, "summary": res.summary}, out, manifest)
        if {"p_E", "d_E"} <= set(res.summary.columns):
            for kind in ("fitness_vs_dE", "diversity_vs_dE"):
                written.append(plot_static(res.summary, kind, out / f"{kind}.svg"))
        return written

    res = harness.optimize_experiment(
        spec.space,
        spec.params,
        population=spec.population,
        generations=spec.generations,
        seed=spec.seed,
        f_threshold=spec.f_threshold,
        d_threshold=spec.d_threshold,
        min_samples=spec.min_samples,
        resample_prob=spec.resample_prob,
        max_samples=spec.max_samples,
    )
    written = write_results({"archive": res.table, "compromise": res.compromise_table}, out, manifest)
    written.append(plot_static(res.table, "pareto_front", out / "pareto_front.svg"))
    return written


def _plot(args) -> Path:
    table = read_table(args.input)
    out = args.out or args.input.with_name(f"{args.input.stem}_{args.kind}.svg")
    return plot_static(table, args.kind, out)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "plot":
            path = _plot(args)
            print(path)
            return EXIT_OK
        spec = resolve_spec(args)
        if args.command != "run" and args.scale == "paper":
            print(f"paper scale: about {spec.estimated_runs()} model runs", file=sys.stderr)
            if not args.yes:
                print("refusing to start without --yes", file=sys.stderr)
                return EXIT_CONFIG
        out = args.out or Path("out") / args.command
        log.info("running %s (%d model runs) into %s", spec.kind, spec.estimated_runs(), out)
        for path in execute(spec, out):
            print(path)
        return EXIT_OK
    except (ConfigError, InvalidParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # surfaced as a runtime failure with its message
        log.debug("runtime failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
