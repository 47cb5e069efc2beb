"""Command-line entry point: ``mslqw walk|batch|fit|sample``.

Exit codes: 0 success, 2 usage/validation error, 3 runtime failure.
Machine-readable output goes to files; stdout carries a short human summary.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import BatchPlan, PlanError, load_config_file, load_summary, run_batch
from .fitting import FitError, FitPreconditionError, fit_csv, fit_log, fit_sqrt
from .hypercube import MarkedSet, SamplingError, parse_marked, sample_non_adjacent_set
from .walk import WalkConfig, run_walk
from .weights import WeightScheme

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3

log = logging.getLogger("mslqw")


class UsageError(Exception):
    pass


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S%z")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict
    master_seed: int | None
    version: str = __version__
    started: str = field(default_factory=_now)
    finished: str = ""
    outputs: dict[str, str] = field(default_factory=dict)

    def finish(self, paths, out_dir: Path) -> Path:
        self.finished = _now()
        for p in paths:
            p = Path(p)
            self.outputs[p.name] = _sha256(p)
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(asdict(self), indent=1, sort_keys=True) + "\n", encoding="utf-8")
        return path


def _env_seed() -> int:
    raw = os.environ.get("MSLQW_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"MSLQW_SEED must be an integer, got {raw!r}") from None


def _marked_from_args(args, n: int) -> MarkedSet:
    if args.marked is not None and args.k is not None:
        raise UsageError("give either --marked or --k, not both")
    if args.marked is not None:
        return parse_marked(args.marked, n)
    if args.k is None:
        raise UsageError("one of --marked or --k is required")
    if args.k < 0:
        raise UsageError("--k must be >= 0")
    seed = args.seed if args.seed is not None else _env_seed()
    return sample_non_adjacent_set(n, args.k, seed)


def cmd_walk(args) -> int:
    try:
        cfg = WalkConfig(args.n, args.m, args.s, WeightScheme.parse(args.scheme), args.oracle)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        marked = _marked_from_args(args, args.n)
    except ValueError as exc:
        if isinstance(exc, SamplingError):
            raise
        raise UsageError(str(exc)) from None
    k = args.weight_k if args.weight_k is not None else len(marked)
    try:
        cfg.loop_weights(k)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.horizon is not None and args.horizon < 1:
        raise UsageError("--horizon must be >= 1")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest("walk", {**cfg.to_json(), "marked": marked.to_json(), "k_for_weight": k,
                                    "horizon": args.horizon or cfg.default_horizon()},
                           args.seed if args.seed is not None else _env_seed())
    result = run_walk(cfg, marked, args.horizon, k)
    jpath, cpath = out / "walk.json", out / "walk.csv"
    jpath.write_text(json.dumps(result.to_json()) + "\n", encoding="utf-8")
    cpath.write_text(result.to_csv(), encoding="utf-8")
    manifest.finish([jpath, cpath], out)
    print(f"marked: {list(marked.vertices)}")
    print(f"peak probability: {result.peak_probability:.6f}")
    print(f"peak step: {result.peak_step} (of {result.steps_run}); first-lobe peak step: "
          f"{result.first_peak_step}")
    return EXIT_OK


def cmd_batch(args) -> int:
    try:
        raw = load_config_file(args.plan)
    except FileNotFoundError:
        raise UsageError(f"plan file not found: {args.plan}") from None
    except ValueError as exc:
        raise UsageError(f"cannot parse plan {args.plan}: {exc}") from None
    raw = dict(raw.get("plan", raw))
    for flag, key in [("gamma", "gamma"), ("seed", "master_seed"), ("horizon", "horizon")]:
        value = getattr(args, flag)
        if value is not None:
            raw[key] = value
    if "master_seed" not in raw:
        raw["master_seed"] = _env_seed()
    try:
        plan = BatchPlan.from_dict(raw)
    except PlanError as exc:
        raise UsageError(f"invalid plan: {exc}") from None

    jobs = args.jobs or os.cpu_count() or 1
    manifest = RunManifest("batch", plan.to_json(), plan.master_seed)
    result = run_batch(plan, jobs=jobs)
    out = Path(args.out)
    paths = result.write(out)
    manifest.config["jobs"] = jobs
    manifest.finish(paths, out)
    failed = sum(1 for c in result.cells.values() if c.error)
    print(f"batch {plan.name or args.plan}: {len(result.rows)} walks, {len(result.cells)} cells"
          + (f", {failed} with errors" if failed else ""))
    for row in result.best_m_table():
        print(f"  {row.scheme:<24} k={row.k:<3} best m={row.best_m:<3} peak={row.peak:.4f} cv={row.cv:.3e}")
    return EXIT_OK


def _select_cells(summary: dict, scheme: str | None, k: int | None):
    cells = []
    for key, cell in summary["cells"].items():
        sch, kk, mm = key.rsplit("/", 2)
        cells.append((sch, int(kk), int(mm), cell))
    schemes = sorted({c[0] for c in cells})
    if scheme is None:
        if len(schemes) != 1:
            raise UsageError(f"summary holds several schemes {schemes}; pick one with --scheme")
        scheme = schemes[0]
    ks = sorted({c[1] for c in cells if c[0] == scheme})
    if k is None:
        if len(ks) != 1:
            raise UsageError(f"summary holds several k {ks}; pick one with --k")
        k = ks[0]
    chosen = [(m, cell) for sch, kk, m, cell in cells
              if sch == scheme and kk == k and cell.get("gamma_effective", 0) > 0]
    return sorted(chosen, key=lambda t: t[0])


def _best(cells):
    return min(cells, key=lambda t: (-t[1]["mean_peak_probability"], t[0]))


STEP_FIELDS = {"first": "mean_first_peak_step", "global": "mean_peak_step"}


def fit_points_from_summaries(summaries: list[dict], model: str, *, scheme=None, k=None, m="1",
                              steps: str = "first"):
    """Collect (x, t) with x = (n+m)*N and t a mean step count from batch summaries.

    ``steps="first"`` uses the first-lobe peak step, ``"global"`` the step of
    the highest point over the whole horizon.
    """
    if steps not in STEP_FIELDS:
        raise UsageError(f"unknown step count {steps!r}; use one of {sorted(STEP_FIELDS)}")
    field_name = STEP_FIELDS[steps]
    xs, ts = [], []
    if model == "log":
        if len(summaries) != 1:
            raise UsageError("the log model fits one hypercube size; pass a single summary")
        n = int(summaries[0]["n"])
        for mm, cell in _select_cells(summaries[0], scheme, k):
            xs.append((n + mm) * (1 << n))
            ts.append(cell[field_name])
        return np.array(xs, float), np.array(ts, float)
    for summary in summaries:
        n = int(summary["n"])
        cells = _select_cells(summary, scheme, k)
        if not cells:
            continue
        if m == "best":
            mm, cell = _best(cells)
        else:
            match = [c for c in cells if c[0] == int(m)]
            if not match:
                raise UsageError(f"summary for n={n} has no m={m} cell")
            mm, cell = match[0]
        xs.append((n + mm) * (1 << n))
        ts.append(cell[field_name])
    order = np.argsort(xs)
    return np.array(xs, float)[order], np.array(ts, float)[order]


def cmd_fit(args) -> int:
    summaries = []
    for p in args.inputs:
        try:
            summaries.append(load_summary(p))
        except FileNotFoundError:
            raise UsageError(f"input file not found: {p}") from None
        except ValueError as exc:
            raise UsageError(f"cannot parse {p}: {exc}") from None
    try:
        x, t = fit_points_from_summaries(summaries, args.model, scheme=args.scheme, k=args.k, m=args.m,
                                         steps=args.steps)
    except KeyError as exc:
        raise UsageError(f"summary lacks field {exc}") from None
    fit = fit_sqrt if args.model == "sqrt" else fit_log
    try:
        result = fit(x, t)
    except FitPreconditionError as exc:
        raise UsageError(f"cannot fit: {exc}") from None
    except FitError as exc:
        result = exc.best
        print(f"warning: {exc}; writing best iterate", file=sys.stderr)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(result.dumps(), encoding="utf-8")
    out.with_suffix(".csv").write_text(fit_csv(result, x, t), encoding="utf-8")
    print(f"{args.model} fit over {x.size} points: c1={result.c1:.6g} c2={result.c2:.6g} "
          f"c3={result.c3:.6g} r^2={result.r_squared:.5f}")
    return EXIT_OK if result.converged else EXIT_RUNTIME


def cmd_sample(args) -> int:
    seed = args.seed if args.seed is not None else _env_seed()
    rng = np.random.default_rng(seed)
    sets = [sample_non_adjacent_set(args.n, args.k, rng) for _ in range(args.count)]
    text = json.dumps([s.to_json() for s in sets])
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    for s in sets:
        bits = ", ".join(format(v, f"0{args.n}b") for v in s.vertices)
        print(f"{list(s.vertices)}  [{bits}]")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mslqw", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    w = sub.add_parser("walk", help="run a single walk")
    w.add_argument("--n", type=int, required=True)
    w.add_argument("--m", type=int, default=1)
    w.add_argument("--s", type=int, default=None)
    w.add_argument("--scheme", default="n_over_N")
    w.add_argument("--oracle", choices=["partial", "full", "none"], default="partial")
    w.add_argument("--marked", help="comma-separated vertex ids")
    w.add_argument("--k", type=int, help="number of marked vertices to sample")
    w.add_argument("--weight-k", type=int, default=None,
                   help="k used by k-dependent weight schemes (default: number of marked vertices)")
    w.add_argument("--seed", type=int, default=None, help="sampling seed (default $MSLQW_SEED or 0)")
    w.add_argument("--horizon", type=int, default=None)
    w.add_argument("--out", default="mslqw-walk")
    w.set_defaults(func=cmd_walk)

    b = sub.add_parser("batch", help="run a (scheme, k, m) sweep from a plan file")
    b.add_argument("--plan", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--jobs", type=int, default=None)
    b.add_argument("--gamma", type=int, default=None, help="override samples per k")
    b.add_argument("--seed", type=int, default=None, help="override master seed")
    b.add_argument("--horizon", type=int, default=None)
    b.set_defaults(func=cmd_batch)

    f = sub.add_parser("fit", help="fit a runtime model to batch summaries")
    f.add_argument("--model", choices=["sqrt", "log"], required=True)
    f.add_argument("--in", dest="inputs", nargs="+", required=True)
    f.add_argument("--out", required=True)
    f.add_argument("--scheme", default=None)
    f.add_argument("--k", type=int, default=None)
    f.add_argument("--m", default="1", help="sqrt model: fixed m, or 'best' for the best-m series")
    f.add_argument("--steps", choices=sorted(STEP_FIELDS), default="first",
                   help="step count to fit: first-lobe peak (default) or global argmax")
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("sample", help="draw non-adjacent marked sets")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_sample)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mslqw {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SamplingError as exc:
        print(f"mslqw {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
