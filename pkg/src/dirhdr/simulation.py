"""Replicated HDR estimation experiments and their error tables."""
from __future__ import annotations

import csv
import io
import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .bandwidth import CIRCLE_ONLY, SELECTOR_IDS, SelectorConfig, SelectorError, select_bandwidth
from .bandwidth.bootstrap import H1_PILOT
from .geometry import make_grid
from .kde import KdeEstimate
from .levelsets import extract_boundary, hdr_region, true_hdr_region
from .metrics import hdr_error
from .vmf import resolve_model

log = logging.getLogger(__name__)

PENALTY = 2.0
DEGENERATE_LIMIT = 0.2
THRESHOLD_RESOLUTION = {1: 1 << 14, 2: 1024}
_OPTION_KEYS = {"B", "pilot", "search_interval", "search_grid", "grid_resolution", "xtol", "threshold_mode"}


@dataclass
class ExperimentPlan:
    """Design of a simulation study.

    ``selector_options`` maps a selector id to :class:`SelectorConfig` fields
    such as ``B`` or ``pilot``; ``tau`` and ``seed`` are filled in per run.
    """
    models: list
    sample_sizes: list
    taus: list
    selectors: list
    replicates: int
    seed: int = 0
    grid_resolution: int | None = None
    threshold_resolution: int | None = None
    selector_options: dict = field(default_factory=dict)
    workers: int = 1

    def __post_init__(self):
        for name in ("models", "sample_sizes", "taus", "selectors"):
            val = getattr(self, name)
            if isinstance(val, (str, int, float)):
                val = [val]
            val = list(val)
            if not val:
                raise ValueError(f"plan field {name!r} is empty")
            setattr(self, name, val)
        self.models = [str(m) for m in self.models]
        self.sample_sizes = [int(n) for n in self.sample_sizes]
        self.taus = [float(t) for t in self.taus]
        self.selectors = [str(s) for s in self.selectors]
        if any(n < 1 for n in self.sample_sizes):
            raise ValueError("sample sizes must be at least 1")
        if any(not 0 < t < 1 for t in self.taus):
            raise ValueError(f"taus must lie in (0, 1), got {self.taus}")
        for s in self.selectors:
            if s not in SELECTOR_IDS:
                raise ValueError(f"unknown selector {s!r}")
        if int(self.replicates) < 1:
            raise ValueError("replicates must be at least 1")
        self.replicates = int(self.replicates)
        self.seed = int(self.seed)
        if int(self.workers) < 1:
            raise ValueError("workers must be at least 1")
        self.workers = int(self.workers)
        opts = {}
        for sel, o in (self.selector_options or {}).items():
            bad = set(o or {}) - _OPTION_KEYS
            if bad:
                raise ValueError(f"unknown options for {sel}: {sorted(bad)}")
            opts[str(sel)] = dict(o or {})
            SelectorConfig(**opts[sel])
        self.selector_options = opts

    @classmethod
    def from_dict(cls, cfg: dict) -> "ExperimentPlan":
        cfg = dict(cfg)
        aliases = {"n": "sample_sizes", "M": "replicates", "tau": "taus", "model": "models",
                   "selector": "selectors"}
        for a, b in aliases.items():
            if a in cfg and b not in cfg:
                cfg[b] = cfg.pop(a)
        known = set(cls.__dataclass_fields__)
        bad = set(cfg) - known
        if bad:
            raise ValueError(f"unknown plan fields: {sorted(bad)}")
        return cls(**cfg)

    @classmethod
    def load(cls, path) -> "ExperimentPlan":
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
        if not isinstance(cfg, dict):
            raise ValueError(f"{path}: plan must be a mapping")
        return cls.from_dict(cfg)


@dataclass
class Cell:
    errors: list = field(default_factory=list)
    degenerate: list = field(default_factory=list)
    bandwidths: list = field(default_factory=list)

    @property
    def M(self) -> int:
        return len(self.errors)

    @property
    def mean(self) -> float:
        return float(np.mean(self.errors))

    @property
    def sd(self) -> float:
        return float(np.std(self.errors, ddof=1)) if self.M > 1 else 0.0

    @property
    def degenerate_count(self) -> int:
        return int(sum(self.degenerate))

    @property
    def degenerate_fraction(self) -> float:
        return self.degenerate_count / self.M if self.M else 0.0


@dataclass
class ErrorTable:
    plan: ExperimentPlan
    cells: dict = field(default_factory=dict)

    def cell(self, model, selector, n, tau) -> Cell:
        return self.cells[(model, selector, int(n), float(tau))]

    def keys(self) -> list:
        return sorted(self.cells, key=lambda k: (k[0], k[3], k[2], k[1]))

    @property
    def max_degenerate_fraction(self) -> float:
        return max((c.degenerate_fraction for c in self.cells.values()), default=0.0)

    @property
    def too_degenerate(self) -> bool:
        return self.max_degenerate_fraction > DEGENERATE_LIMIT


def replicate_seed(master: int, model_idx: int, n_idx: int, rep: int) -> np.random.SeedSequence:
    """Seed for one replicate, independent of execution order."""
    return np.random.SeedSequence(master, spawn_key=(model_idx, n_idx, rep))


def _truth_boundaries(plan: ExperimentPlan) -> dict:
    out = {}
    for model_ref in plan.models:
        model = resolve_model(model_ref)
        q = model.q
        grid = make_grid(q, plan.grid_resolution)
        tgrid = make_grid(q, plan.threshold_resolution or THRESHOLD_RESOLUTION[q])
        for tau in plan.taus:
            reg = true_hdr_region(model, tau, grid, tgrid)
            if not reg.is_proper:
                raise ValueError(f"true HDR of {model_ref} at tau={tau} has no boundary")
            out[(model_ref, tau)] = extract_boundary(reg).points
    return out


def _selector_config(plan: ExperimentPlan, selector: str, tau: float, seed: int, pilot=None) -> SelectorConfig:
    opts = dict(plan.selector_options.get(selector, {}))
    if pilot is not None:
        opts["pilot"] = pilot
    opts.setdefault("grid_resolution", None)
    return SelectorConfig(tau=tau, seed=seed, **opts)


def run_replicate(plan: ExperimentPlan, model_idx: int, n_idx: int, rep: int, truth: dict) -> list:
    """One sample shared across all taus and selectors.

    Returns tuples ``(model, selector, n, tau, error, degenerate, h)``.
    """
    model_ref = plan.models[model_idx]
    model = resolve_model(model_ref)
    n = plan.sample_sizes[n_idx]
    ss = replicate_seed(plan.seed, model_idx, n_idx, rep)
    data_ss, sel_ss = ss.spawn(2)
    x = model.sample(n, np.random.default_rng(data_ss))
    sel_seed = int(sel_ss.generate_state(1)[0])
    grid = make_grid(model.q, plan.grid_resolution)
    rows = []
    for tau in plan.taus:
        cache = {}
        # tau-free selectors are computed once and reused as pilots
        order = sorted(plan.selectors, key=lambda s: s == "h1")
        for sel in order:
            if sel != "h1" and sel in cache:
                res_h = cache[sel]
            else:
                pilot = None
                if sel == "h1":
                    want = plan.selector_options.get("h1", {}).get("pilot", H1_PILOT[model.q])
                    if isinstance(want, str) and want in cache and cache[want] is not None:
                        pilot = cache[want]
                try:
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore")
                        cfg = _selector_config(plan, sel, tau, sel_seed, pilot)
                        res_h = select_bandwidth(x, sel, cfg).h
                except SelectorError as exc:
                    log.warning("%s n=%d rep=%d %s failed: %s", model_ref, n, rep, sel, exc)
                    res_h = None
                cache[sel] = res_h
            if res_h is None:
                rows.append((model_ref, sel, n, tau, PENALTY, True, float("nan")))
                continue
            reg = hdr_region(KdeEstimate(x, res_h), tau, grid)
            if not reg.is_proper:
                rows.append((model_ref, sel, n, tau, PENALTY, True, res_h))
                continue
            err = hdr_error(truth[(model_ref, tau)], extract_boundary(reg).points)
            rows.append((model_ref, sel, n, tau, min(err, PENALTY), False, res_h))
    return rows


def _run_task(args):
    return run_replicate(*args)


def run_experiment(plan: ExperimentPlan, progress=None) -> ErrorTable:
    """Run every (model, n, replicate) of `plan` and collect errors per cell.

    Results do not depend on ``plan.workers``: each replicate has its own
    seed and results are reduced in a fixed order.
    """
    for model_ref in plan.models:
        q = resolve_model(model_ref).q
        bad = [s for s in plan.selectors if q == 2 and s in CIRCLE_ONLY]
        if bad:
            raise ValueError(f"selectors {bad} are defined on the circle only ({model_ref} is spherical)")
    truth = _truth_boundaries(plan)
    tasks = [(plan, mi, ni, r, truth)
             for mi in range(len(plan.models))
             for ni in range(len(plan.sample_sizes))
             for r in range(plan.replicates)]
    table = ErrorTable(plan)
    for model_ref in plan.models:
        for sel in plan.selectors:
            for n in plan.sample_sizes:
                for tau in plan.taus:
                    table.cells[(model_ref, sel, n, tau)] = Cell()
    if plan.workers > 1:
        with ProcessPoolExecutor(plan.workers) as pool:
            results = pool.map(_run_task, tasks)
            _collect(table, results, progress, len(tasks))
    else:
        _collect(table, map(_run_task, tasks), progress, len(tasks))
    return table


def _collect(table, results, progress, total):
    for k, rows in enumerate(results, 1):
        for model_ref, sel, n, tau, err, degen, h in rows:
            c = table.cells[(model_ref, sel, n, tau)]
            c.errors.append(float(err))
            c.degenerate.append(bool(degen))
            c.bandwidths.append(float(h))
        if progress is not None:
            progress(k, total)


SUMMARY_COLUMNS = ["model", "selector", "n", "tau", "M", "mean", "sd", "degenerate_count"]
RAW_COLUMNS = ["model", "selector", "n", "tau", "replicate", "error", "degenerate", "h"]


def summarize(table: ErrorTable) -> list[dict]:
    """One row per cell, sorted by (model, tau, n, selector)."""
    if not table.cells:
        raise ValueError("empty error table")
    rows = []
    for key in table.keys():
        c = table.cells[key]
        model, sel, n, tau = key
        rows.append({"model": model, "selector": sel, "n": n, "tau": tau, "M": c.M,
                     "mean": c.mean, "sd": c.sd, "degenerate_count": c.degenerate_count})
    return rows


def raw_rows(table: ErrorTable) -> list[dict]:
    """Per-replicate errors in long format, for violin plots."""
    rows = []
    for key in table.keys():
        c = table.cells[key]
        model, sel, n, tau = key
        for r, (e, d, h) in enumerate(zip(c.errors, c.degenerate, c.bandwidths)):
            rows.append({"model": model, "selector": sel, "n": n, "tau": tau, "replicate": r,
                         "error": e, "degenerate": int(d), "h": h})
    return rows


def _fmt(v):
    return repr(float(v)) if isinstance(v, float) else str(v)


def _csv_text(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def summary_csv(table: ErrorTable) -> str:
    return _csv_text(summarize(table), SUMMARY_COLUMNS)


def raw_csv(table: ErrorTable) -> str:
    return _csv_text(raw_rows(table), RAW_COLUMNS)


def write_results(table: ErrorTable, out_dir) -> dict:
    """Write ``summary.csv``, ``errors_raw.csv`` and the resolved plan."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"summary": out / "summary.csv", "raw": out / "errors_raw.csv", "plan": out / "plan_resolved.yaml"}
    paths["summary"].write_text(summary_csv(table))
    paths["raw"].write_text(raw_csv(table))
    paths["plan"].write_text(yaml.safe_dump(asdict(table.plan), sort_keys=True))
    return paths


def read_raw_csv(path) -> dict:
    """Raw errors grouped by cell key, as written by :func:`write_results`."""
    cells = {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            key = (r["model"], r["selector"], int(r["n"]), float(r["tau"]))
            cells.setdefault(key, []).append(float(r["error"]))
    return cells
