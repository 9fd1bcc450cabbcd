"""Command-line entry point: ``tdabc <subcommand> ...``.

Every subcommand writes into ``--out``: the resolved config (``config.txt``),
``run.json`` with the seed and SHA-256 of every input file, and its primary
outputs.  Nothing time-dependent is written, so reruns are byte-identical.

Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .formats import (RUN_KEYS, FormatError, format_config, load_dataset, parse_config, parse_network_csv,
                      parse_raster, write_raster, write_temporal, write_transect_csv)
from .geometry import pattern_to_str
from .model import ModelParams
from .exact_oracle import exact_posterior_grid, likelihood_table
from .projection import project, seed_points
from .samplers import ChainConfig, InitializationError, NoMatchError, rejection_abc, run_chain
from .simulate import simulate_dataset
from .study import coverage_study, default_road_table, summarize_trace
from .summaries import summarize
from .svg import histogram_svg, mask_svg

logger = logging.getLogger("tdabc")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def _load_config(args):
    if args.config:
        config, run = parse_config(args.config)
    else:
        config, run = ChainConfig(), {k: v[1] for k, v in RUN_KEYS.items()}
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    return config, run


def _prepare(args, inputs: dict):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config, run = _load_config(args)
    meta = {
        "command": args.command,
        "version": __version__,
        "seed": config.seed,
        "inputs": {name: {"path": str(p), "sha256": _sha256(p)} for name, p in sorted(inputs.items()) if p},
    }
    if args.config:
        meta["inputs"]["config"] = {"path": str(args.config), "sha256": _sha256(args.config)}
    (out / "config.txt").write_text(format_config(config, run))
    (out / "run.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return out, config, run


def _write_summary(path, trace, level):
    a = 0.5 * (1.0 - level)
    rows = summarize_trace(trace, (a, 1.0 - a))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["parameter", "median", "lower", "upper", "mean"])
        for r in rows:
            w.writerow([r.parameter, *(_fmt(v) for v in r[1:])])
    return rows


def _print_summary(rows):
    print(f"{'parameter':<12}{'median':>14}{'lower':>14}{'upper':>14}{'mean':>14}")
    for r in rows:
        print(f"{r.parameter:<12}{r.median:>14.6g}{r.lower:>14.6g}{r.upper:>14.6g}{r.mean:>14.6g}")


def _histograms(out, trace):
    for name in trace.parameters():
        (out / f"hist_{name}.svg").write_text(histogram_svg(trace.parameter(name), name))


class _TraceWriter:
    """Appends trace rows to CSV as the chain fills them."""

    def __init__(self, path, burn_in):
        self.fh = open(path, "w", newline="")
        self.w = csv.writer(self.fh, lineterminator="\n")
        self.done = 0
        self.offset = burn_in

    def __call__(self, stop, trace):
        if self.done == 0:
            self.w.writerow(["iteration", *trace.columns])
        for i in range(self.done, stop):
            self.w.writerow([self.offset + i + 1, *(_fmt(v) for v in trace.row(i))])
        self.fh.flush()
        self.done = stop

    def close(self):
        self.fh.close()


# -- subcommands ------------------------------------------------------------

def cmd_simulate(args):
    out, config, run = _prepare(args, {})
    rng = np.random.default_rng(config.seed)
    params = ModelParams(run["lambdas"], run["nu"], run["sigma2"]).validate()
    roads = default_road_table(rng, run["roads_per_group"], params.groups, (run["age_min"], run["age_max"]))
    sim = simulate_dataset(rng, params, roads, run["n_z"])
    write_transect_csv(out / "transects.csv", sim.dataset.roads)
    write_temporal(out / "temporal.txt", sim.dataset.temporal)
    with open(out / "latents.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group", "road", "s", "t"])
        for rec, st in zip(sim.dataset.roads, sim.latents):
            for x in st.introductions:
                w.writerow([rec.group, rec.road, _fmt(x.s), _fmt(x.t)])
    print(f"simulated {len(sim.dataset.roads)} roads in {params.groups} group(s); "
          f"{sum(st.k for st in sim.latents)} introductions")
    return EXIT_OK


def _infer(args, sampler):
    out, config, run = _prepare(args, {"transects": args.data, "temporal": args.temporal})
    dataset = load_dataset(args.data, args.temporal)
    if sampler == "chain":
        writer = _TraceWriter(out / "trace.csv", config.burn_in)
        try:
            trace = run_chain(None, dataset, config, on_record=writer)
        finally:
            writer.close()
    else:
        trace = rejection_abc(None, dataset, config)
        writer = _TraceWriter(out / "trace.csv", config.burn_in)
        writer(len(trace), trace)
        writer.close()
    rows = _write_summary(out / "summary.csv", trace, run["level"])
    _histograms(out, trace)
    stats = {k: int(v) for k, v in sorted(trace.stats.items())}
    (out / "stats.json").write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n")
    _print_summary(rows)
    return EXIT_OK


def cmd_infer(args):
    return _infer(args, "chain")


def cmd_rejection(args):
    return _infer(args, "rejection")


def cmd_oracle(args):
    out, config, run = _prepare(args, {"transects": args.data, "temporal": args.temporal})
    dataset = load_dataset(args.data, args.temporal)
    nu = config.fixed_nu if config.fixed_nu is not None else run["nu"]
    grid = np.linspace(run["grid_min"], run["grid_max"], run["grid_points"])
    cols = {}
    for g in range(1, dataset.groups + 1):
        roads = [r for r in dataset.roads if r.group == g]
        if roads:
            cols[g] = exact_posterior_grid([r.observed for r in roads], [r.age for r in roads], nu, grid)
    with open(out / "posterior_grid.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", *(f"lambda_{g}" for g in cols)])
        for i, lam in enumerate(grid):
            w.writerow([_fmt(lam), *(_fmt(cols[g][i]) for g in cols)])
    with open(out / "roads.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group", "road", "age", "pattern", "runs", "ones"])
        for r in dataset.roads:
            s = summarize(r.observed)
            w.writerow([r.group, r.road, _fmt(r.age), pattern_to_str(r.observed), s.runs, s.ones])
    with open(out / "likelihood.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["age", "pattern", "runs", "ones", "likelihood"])
        for age in sorted({r.age for r in dataset.roads}):
            table = likelihood_table(nu, age)
            for Y in range(table.npatterns):
                s = summarize(Y)
                w.writerow([_fmt(age), pattern_to_str(Y), s.runs, s.ones, _fmt(table.probability(Y, run["lam"]))])
    print(f"{'group':<8}{'mode':>14}{'mean':>14}")
    for g, wts in cols.items():
        print(f"{g:<8}{grid[int(np.argmax(wts))]:>14.6g}{float(np.dot(grid, wts)):>14.6g}")
    return EXIT_OK


def cmd_study(args):
    out, config, run = _prepare(args, {})
    params = ModelParams(run["lambdas"], run["nu"], run["sigma2"]).validate()
    rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(1)[0])
    roads = default_road_table(rng, run["roads_per_group"], params.groups, (run["age_min"], run["age_max"]))
    res = coverage_study(config.seed, params, roads, run["replicates"], config, run["n_z"],
                         run["level"], workers=max(1, args.threads))
    with open(out / "coverage.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["parameter", "coverage", "std_error", "n_effective_replicates", "n_failed"])
        for r in res.rows:
            w.writerow([r.parameter, _fmt(r.coverage), _fmt(r.std_error), r.n_effective, r.n_failed])
    for r in res.rows:
        print(f"{r.parameter:<12}{r.coverage:>8.3f} +- {r.std_error:.3f}  (n={r.n_effective}, failed={r.n_failed})")
    return EXIT_OK


def cmd_project(args):
    out, config, run = _prepare(args, {"network": args.network, "habitat": args.habitat})
    network = parse_network_csv(args.network)
    habitat = parse_raster(args.habitat)
    rng = np.random.default_rng(config.seed)
    pts = seed_points(network, run["spacing"])
    res = project(rng, pts, habitat, run["lam"], run["nu"], run["horizon_years"], run["spacing"])
    write_raster(out / "invaded.txt", habitat.origin, habitat.cell_size, res.invaded)
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", "nu", "horizon_years", "invaded_km2", "fraction"])
        w.writerow([_fmt(run["lam"]), _fmt(run["nu"]), _fmt(run["horizon_years"]),
                    _fmt(res.invaded_km2), _fmt(res.fraction)])
    if args.svg:
        (out / "invaded.svg").write_text(mask_svg(habitat.suitable, res.invaded))
    print(f"{len(pts)} seed points, {len(res.introductions)} invaded; "
          f"{res.invaded_km2:.4f} km2 ({100 * res.fraction:.2f}% of suitable habitat)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tdabc", description="Transdimensional ABC for road-side invasion data.")
    p.add_argument("--threads", type=int, default=1, help="worker processes for the study subcommand")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    lines = format_config(ChainConfig(), {k: v[1] for k, v in RUN_KEYS.items()}).splitlines()
    n_chain = len(ChainConfig.__dataclass_fields__)
    chain_keys = "\n".join(f"  {line}" for line in lines[:n_chain])
    run_keys = "\n".join(f"  {line:<28}{v[2]}" for line, v in zip(lines[n_chain:], RUN_KEYS.values()))
    epilog = f"config keys (chain):\n{chain_keys}\n\nconfig keys (run):\n{run_keys}"

    def common(sp):
        sp.epilog = epilog
        sp.add_argument("--config", help="flat 'key = value' file; keys and defaults listed below")
        sp.add_argument("--seed", type=int, help="overrides the config seed")
        sp.add_argument("--out", required=True, help="run directory")

    def data(sp):
        sp.add_argument("--data", required=True, help="transect CSV")
        sp.add_argument("--temporal", required=True, help="temporal data, one value per line")

    fmt = argparse.RawDescriptionHelpFormatter
    sp = sub.add_parser("simulate", help="generate a synthetic dataset", formatter_class=fmt)
    common(sp)
    sp.set_defaults(func=cmd_simulate)
    sp = sub.add_parser("infer", help="birth-death ABC within Gibbs", formatter_class=fmt)
    common(sp)
    data(sp)
    sp.set_defaults(func=cmd_infer)
    sp = sub.add_parser("rejection", help="rejection ABC baseline", formatter_class=fmt)
    common(sp)
    data(sp)
    sp.set_defaults(func=cmd_rejection)
    sp = sub.add_parser("oracle", help="exact grid posterior of each group rate at fixed nu", formatter_class=fmt)
    common(sp)
    data(sp)
    sp.set_defaults(func=cmd_oracle)
    sp = sub.add_parser("study", help="coverage simulation study", formatter_class=fmt)
    common(sp)
    sp.set_defaults(func=cmd_study)
    sp = sub.add_parser("project", help="project invasion over a road network", formatter_class=fmt)
    common(sp)
    sp.add_argument("--network", required=True, help="road network CSV")
    sp.add_argument("--habitat", required=True, help="habitat raster text file")
    sp.add_argument("--svg", action="store_true", help="also render invaded.svg")
    sp.set_defaults(func=cmd_project)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (FormatError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"tdabc: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NoMatchError, InitializationError, RuntimeError, ArithmeticError) as exc:
        print(f"tdabc: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"tdabc: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
