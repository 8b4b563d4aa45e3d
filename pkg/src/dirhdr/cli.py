"""Command-line interface: ``dirhdr {ingest-check,select,hdr,distance,simulate}``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
import warnings
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .bandwidth import (
    CIRCLE_ONLY,
    SELECTOR_IDS,
    BoundaryHitWarning,
    SelectorConfig,
    SelectorError,
    select_bandwidth,
)
from .geometry import make_grid
from .io import FORMATS, IngestError, ingest, read_boundary_file, write_region, write_trace_csv
from .kde import KdeEstimate
from .levelsets import EmptyBoundary, count_components, hdr_region, region_probability
from .metrics import DegenerateRegion, EmptySet, hausdorff, min_set_distance
from .simulation import DEGENERATE_LIMIT, ExperimentPlan, run_experiment, summarize, write_results

log = logging.getLogger("dirhdr")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_DEGENERATE = 0, 2, 3, 4
MIN_HDR_N = 10


class UsageError(ValueError):
    pass


def _common(parser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=d(None), help="master random seed (default 0, or the plan seed)")
    parser.add_argument("--grid-resolution", type=int, default=d(None),
                        help="evaluation grid resolution (longitudes on S2, points on S1)")
    parser.add_argument("--format", choices=FORMATS, default=d("angles-rad"), help="input data format")
    parser.add_argument("--out-dir", default=d("."), help="directory for output files")


def _selector_args(p):
    p.add_argument("--selector", default="h7", help="bandwidth selector h1..h7 (default h7)")
    p.add_argument("--B", type=int, help="bootstrap resamples (h1, h6)")
    p.add_argument("--pilot", help="pilot selector id or bandwidth (h1, h6)")
    p.add_argument("--search-interval", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--search-grid", type=int)
    p.add_argument("--config", help="YAML file with selector options")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dirhdr", description="Highest density regions for directional data.")
    parser.add_argument("--version", action="version", version=f"dirhdr {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    _common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest-check", help="parse a data file and report what was read")
    p.add_argument("data")
    _common(p, suppress=True)

    p = sub.add_parser("select", help="select a bandwidth and write its objective trace")
    p.add_argument("data")
    p.add_argument("--tau", type=float, help="HDR level, required by h1")
    _selector_args(p)
    _common(p, suppress=True)

    p = sub.add_parser("hdr", help="estimate HDRs and export regions and boundaries")
    p.add_argument("data")
    p.add_argument("--tau", type=float, nargs="+", required=True)
    p.add_argument("--h", type=float, help="fixed bandwidth; skips selection")
    p.add_argument("--threshold-mode", choices=("sample-values", "pseudo-sample"), default="sample-values")
    _selector_args(p)
    _common(p, suppress=True)

    p = sub.add_parser("distance", help="Hausdorff and minimum distances between boundary files")
    p.add_argument("files", nargs="+")
    _common(p, suppress=True)

    p = sub.add_parser("simulate", help="run a simulation plan")
    p.add_argument("plan")
    p.add_argument("--workers", type=int, help="worker processes (overrides the plan)")
    _common(p, suppress=True)
    return parser


def _selector_config(args, tau=None) -> SelectorConfig:
    opts = {}
    if args.config:
        with open(args.config) as fh:
            opts = yaml.safe_load(fh) or {}
        if not isinstance(opts, dict):
            raise UsageError(f"{args.config}: selector config must be a mapping")
    for key in ("B", "search_grid"):
        if getattr(args, key) is not None:
            opts[key] = getattr(args, key)
    if args.search_interval:
        opts["search_interval"] = tuple(args.search_interval)
    if args.pilot is not None:
        try:
            opts["pilot"] = float(args.pilot)
        except ValueError:
            opts["pilot"] = args.pilot
    if tau is not None:
        opts["tau"] = tau
    opts["seed"] = args.seed
    opts.setdefault("grid_resolution", args.grid_resolution)
    try:
        return SelectorConfig(**opts)
    except TypeError as exc:
        raise UsageError(f"bad selector option: {exc}") from exc


def _check_selector(sel: str, q: int, tau):
    if sel not in SELECTOR_IDS:
        raise UsageError(f"unknown selector {sel!r}; expected one of {', '.join(SELECTOR_IDS)}")
    if sel in CIRCLE_ONLY and q != 1:
        raise UsageError(f"selector {sel} is defined for circular data only")
    if sel == "h1" and tau is None:
        raise UsageError("selector h1 needs --tau")


def _out(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _r(v):
    return repr(float(v))


def cmd_ingest_check(args) -> int:
    ds = ingest(args.data, args.format)
    print(f"file={ds.path} format={ds.format} q={ds.q} n={ds.n} rows={ds.n_rows} "
          f"skipped={ds.n_skipped} seed={args.seed}")
    for w in ds.warnings:
        print(f"  skipped {w}")
    return EXIT_OK


def cmd_select(args) -> int:
    ds = ingest(args.data, args.format)
    _check_selector(args.selector, ds.q, args.tau)
    cfg = _selector_config(args, args.tau)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = select_bandwidth(ds.points, args.selector, cfg)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    out = _out(args)
    trace_path = out / f"trace_{args.selector}.csv"
    write_trace_csv(res.trace, trace_path)
    _write_csv(out / f"select_{args.selector}.csv", ["selector", "h", "boundary_hit", "n", "seed"],
               [[args.selector, _r(res.h), int(res.boundary_hit), ds.n, args.seed]])
    print(f"selector={args.selector} h={res.h:.6g} boundary_hit={res.boundary_hit} n={ds.n} seed={args.seed}")
    print(f"trace written to {trace_path}")
    return EXIT_OK


def cmd_hdr(args) -> int:
    ds = ingest(args.data, args.format)
    if ds.n < MIN_HDR_N:
        raise UsageError(f"hdr needs at least {MIN_HDR_N} observations, got {ds.n}")
    taus = sorted(set(args.tau))
    if any(not 0 < t < 1 for t in taus):
        raise UsageError("every --tau must lie in (0, 1)")
    if args.h is not None and args.h <= 0:
        raise UsageError("--h must be positive")
    sel = "fixed" if args.h is not None else args.selector
    if args.h is None:
        _check_selector(sel, ds.q, taus[0])
    grid = make_grid(ds.q, args.grid_resolution)
    out = _out(args)
    rows, degenerate, h_cache = [], [], {}
    for tau in taus:
        if args.h is not None:
            h = args.h
        else:
            key = tau if sel == "h1" else None
            if key not in h_cache:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", BoundaryHitWarning)
                    h_cache[key] = select_bandwidth(ds.points, sel, _selector_config(args, tau)).h
            h = h_cache[key]
        est = KdeEstimate(ds.points, h)
        rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(taus.index(tau),)))
        reg = hdr_region(est, tau, grid, mode=args.threshold_mode, rng=rng)
        stem = f"hdr_tau{tau:g}"
        write_region(reg, out, stem, {"tau": tau, "h": h})
        comps = count_components(reg)
        prob = region_probability(reg, est)
        if not reg.is_proper:
            degenerate.append(tau)
        rows.append([_r(tau), sel, _r(h), _r(reg.level), comps, _r(prob), _r(reg.area()), ds.n, args.seed])
        print(f"tau={tau:g} h={h:.6g} threshold={reg.level:.6g} components={comps} probability={prob:.4f}")
    _write_csv(out / "hdr_summary.csv",
               ["tau", "selector", "h", "threshold", "components", "probability", "measure", "n", "seed"], rows)
    print(f"n={ds.n} q={ds.q} seed={args.seed} summary={out / 'hdr_summary.csv'}")
    if degenerate:
        print(f"degenerate region (no boundary) at tau={degenerate}", file=sys.stderr)
        return EXIT_DEGENERATE
    return EXIT_OK


def cmd_distance(args) -> int:
    if len(args.files) < 2:
        raise UsageError("distance needs at least two boundary files")
    sets = []
    for f in args.files:
        pts = read_boundary_file(f)
        if len(pts) == 0:
            raise EmptySet(f"{f}: empty boundary")
        sets.append(pts)
    if len({s.shape[1] for s in sets}) != 1:
        raise UsageError("boundary files mix circle and sphere points")
    out = _out(args)
    if len(sets) == 2:
        dh, de = hausdorff(*sets), min_set_distance(*sets)
        _write_csv(out / "distance.csv", ["file_a", "file_b", "hausdorff", "min_euclidean", "seed"],
                   [[args.files[0], args.files[1], _r(dh), _r(de), args.seed]])
        print(f"hausdorff={dh:.6g} min_euclidean={de:.6g} seed={args.seed}")
        return EXIT_OK
    k = len(sets)
    H, E = np.zeros((k, k)), np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            H[i, j] = H[j, i] = hausdorff(sets[i], sets[j])
            E[i, j] = E[j, i] = min_set_distance(sets[i], sets[j])
    names = [Path(f).name for f in args.files]
    for M, name in ((H, "hausdorff_matrix.csv"), (E, "min_euclidean_matrix.csv")):
        _write_csv(out / name, ["file"] + names, [[nm] + [_r(v) for v in row] for nm, row in zip(names, M)])
    print(f"{k}x{k} distance matrices written to {out} seed={args.seed}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    plan = ExperimentPlan.load(args.plan)
    if args.seed_given:
        plan.seed = args.seed
    if args.grid_resolution is not None:
        plan.grid_resolution = args.grid_resolution
    if args.workers is not None:
        plan.workers = args.workers
    t0 = time.perf_counter()
    table = run_experiment(plan, progress=_progress)
    paths = write_results(table, _out(args))
    for r in summarize(table):
        print(f"{r['model']:>8} {r['selector']} n={r['n']} tau={r['tau']:g} M={r['M']} "
              f"mean={r['mean']:.4f} sd={r['sd']:.4f} degenerate={r['degenerate_count']}")
    print(f"seed={plan.seed} summary={paths['summary']} raw={paths['raw']} "
          f"elapsed={time.perf_counter() - t0:.1f}s")
    if table.too_degenerate:
        print(f"more than {DEGENERATE_LIMIT:.0%} degenerate replicates in some cell", file=sys.stderr)
        return EXIT_DEGENERATE
    return EXIT_OK


def _progress(k, total):
    log.info("replicate %d/%d", k, total)


COMMANDS = {"ingest-check": cmd_ingest_check, "select": cmd_select, "hdr": cmd_hdr,
            "distance": cmd_distance, "simulate": cmd_simulate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args.seed_given = args.seed is not None
    if not args.seed_given:
        args.seed = 0
    try:
        return COMMANDS[args.command](args)
    except (DegenerateRegion, EmptyBoundary, EmptySet) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (UsageError, IngestError, KeyError, ValueError, OSError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SelectorError, FloatingPointError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
