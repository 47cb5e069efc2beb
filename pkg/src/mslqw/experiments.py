"""Parameter sweeps over (scheme, k, m) with sampled marked sets.

Marked sets are drawn once per ``k`` from seeds derived from
``(master_seed, k, sample_index)`` and reused by every (scheme, m) cell, so the
m-comparison is free of sampling noise. Aggregation is keyed and sorted, which
makes the output independent of worker count and completion order.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .hypercube import MarkedSet, sample_non_adjacent_set
from .walk import OracleMode, WalkConfig, run_walk
from .weights import WeightScheme

log = logging.getLogger(__name__)


class PlanError(ValueError):
    pass


def _load_toml(text: str) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:  # python < 3.11
        import tomli as tomllib
    return tomllib.loads(text)


def load_config_file(path: str | Path) -> dict:
    """Read a TOML plan, or JSON when the suffix is ``.json``."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        return json.loads(text)
    return _load_toml(text)


def _int_list(value, name) -> list[int]:
    if isinstance(value, dict):
        lo, hi = int(value["start"]), int(value["stop"])
        return list(range(lo, hi + 1))
    if isinstance(value, int):
        return [value]
    try:
        return [int(v) for v in value]
    except TypeError:
        raise PlanError(f"{name} must be a list of integers") from None


@dataclass
class BatchPlan:
    n: int
    k_range: list[int]
    m_range: list[int]
    schemes: list[WeightScheme]
    oracle: OracleMode = OracleMode.PARTIAL
    gamma: int = 10
    master_seed: int = 0
    s: int = 1
    horizon: Optional[int] = None
    name: str = ""

    def __post_init__(self):
        self.schemes = [WeightScheme.parse(s) if isinstance(s, str) else s for s in self.schemes]
        self.oracle = OracleMode(self.oracle)
        self.validate()

    def validate(self) -> None:
        if self.n < 1:
            raise PlanError("n must be >= 1")
        if not self.k_range:
            raise PlanError("k_range is empty")
        if not self.m_range:
            raise PlanError("m_range is empty")
        if not self.schemes:
            raise PlanError("schemes is empty")
        if self.gamma < 1:
            raise PlanError("gamma must be >= 1")
        if any(k < 0 for k in self.k_range):
            raise PlanError("k values must be >= 0")
        if any(m < 0 for m in self.m_range):
            raise PlanError("m values must be >= 0")
        if self.horizon is not None and self.horizon < 1:
            raise PlanError("horizon must be >= 1")
        for m in self.m_range:
            for scheme in self.schemes:
                try:
                    WalkConfig(self.n, m, min(self.s, m), scheme, self.oracle)
                except ValueError as exc:
                    raise PlanError(f"invalid cell (scheme={scheme.name}, m={m}): {exc}") from None

    @classmethod
    def from_dict(cls, d: dict) -> "BatchPlan":
        d = dict(d.get("plan", d))
        try:
            schemes = d.pop("schemes", None) or [d.pop("scheme")]
            return cls(
                n=int(d.pop("n")),
                k_range=_int_list(d.pop("k_range"), "k_range"),
                m_range=_int_list(d.pop("m_range"), "m_range"),
                schemes=list(schemes),
                oracle=d.pop("oracle", "partial"),
                gamma=int(d.pop("gamma", 10)),
                master_seed=int(d.pop("master_seed", 0)),
                s=int(d.pop("s", 1)),
                horizon=d.pop("horizon", None),
                name=str(d.pop("name", "")),
            )
        except KeyError as exc:
            raise PlanError(f"plan is missing field {exc}") from None
        except ValueError as exc:
            raise PlanError(str(exc)) from None

    @classmethod
    def load(cls, path: str | Path) -> "BatchPlan":
        return cls.from_dict(load_config_file(path))

    def to_json(self) -> dict:
        return {"name": self.name, "n": self.n, "k_range": list(self.k_range),
                "m_range": list(self.m_range), "schemes": [s.name for s in self.schemes],
                "oracle": self.oracle.value, "gamma": self.gamma,
                "master_seed": self.master_seed, "s": self.s, "horizon": self.horizon}

    def sample_seed(self, k: int, index: int) -> np.random.SeedSequence:
        return np.random.SeedSequence([self.master_seed, k, index])

    def marked_sets(self, k: int) -> list[MarkedSet]:
        return [sample_non_adjacent_set(self.n, k, np.random.default_rng(self.sample_seed(k, g)))
                for g in range(self.gamma)]


def coefficient_of_variation(values: Sequence[float]) -> float:
    """Population standard deviation over mean; 0 when the mean is 0."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("coefficient of variation of an empty list")
    mean = arr.mean()
    if mean == 0:
        return 0.0
    return float(arr.std() / abs(mean))


@dataclass(frozen=True)
class SampleRow:
    scheme: str
    k: int
    m: int
    sample: int
    marked: str
    peak_probability: float
    peak_step: int
    first_peak_step: int = -1
    error: str = ""


@dataclass
class CellStats:
    scheme: str
    k: int
    m: int
    mean_peak_probability: float
    cv_peak_probability: float
    mean_peak_step: float
    cv_peak_step: float
    gamma_effective: int
    cv_undefined: bool = False
    error: str = ""
    mean_first_peak_step: float = math.nan
    cv_first_peak_step: float = math.nan

    @property
    def key(self) -> str:
        return f"{self.scheme}/{self.k}/{self.m}"

    def to_json(self) -> dict:
        d = {"mean_peak_probability": self.mean_peak_probability,
             "cv_peak_probability": self.cv_peak_probability,
             "mean_peak_step": self.mean_peak_step,
             "cv_peak_step": self.cv_peak_step,
             "mean_first_peak_step": self.mean_first_peak_step,
             "cv_first_peak_step": self.cv_first_peak_step,
             "gamma_effective": self.gamma_effective}
        if self.cv_undefined:
            d["cv_undefined"] = True
        if self.error:
            d["error"] = self.error
        return d


def _aggregate(scheme: str, k: int, m: int, rows: list[SampleRow]) -> CellStats:
    ok = [r for r in rows if not r.error]
    errors = sorted({r.error for r in rows if r.error})
    if not ok:
        return CellStats(scheme, k, m, math.nan, math.nan, math.nan, math.nan, 0,
                         error="; ".join(errors))
    peaks = [r.peak_probability for r in ok]
    steps = [float(r.peak_step) for r in ok]
    first = [float(r.first_peak_step) for r in ok]
    return CellStats(
        scheme, k, m,
        mean_peak_probability=float(np.mean(peaks)),
        cv_peak_probability=coefficient_of_variation(peaks),
        mean_peak_step=float(np.mean(steps)),
        cv_peak_step=coefficient_of_variation(steps),
        gamma_effective=len(ok),
        cv_undefined=float(np.mean(peaks)) == 0 or float(np.mean(steps)) == 0,
        error="; ".join(errors),
        mean_first_peak_step=float(np.mean(first)),
        cv_first_peak_step=coefficient_of_variation(first),
    )


@dataclass(frozen=True)
class BestRow:
    scheme: str
    k: int
    best_m: int
    peak: float
    cv: float


@dataclass
class BatchResult:
    plan: BatchPlan
    cells: dict[tuple[str, int, int], CellStats]
    rows: list[SampleRow]
    marked: dict[int, list[MarkedSet]] = field(default_factory=dict)

    def cell(self, scheme: str | WeightScheme, k: int, m: int) -> CellStats:
        return self.cells[(str(scheme), k, m)]

    def best_m_table(self) -> list[BestRow]:
        return best_m_table(self)

    def summary(self) -> dict:
        return {
            "n": self.plan.n,
            "plan": self.plan.to_json(),
            "cells": {c.key: c.to_json() for c in self.cells.values()},
            "best_m": [{"scheme": b.scheme, "k": b.k, "best_m": b.best_m,
                        "peak": b.peak, "cv": b.cv} for b in self.best_m_table()],
            "marked_sets": {str(k): [s.vertices for s in sets] for k, sets in sorted(self.marked.items())},
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True, indent=1) + "\n"

    def long_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scheme", "k", "m", "sample", "marked", "peak_probability", "peak_step",
                    "first_peak_step", "error"])
        for r in self.rows:
            w.writerow([r.scheme, r.k, r.m, r.sample, r.marked, repr(r.peak_probability),
                        r.peak_step, r.first_peak_step, r.error])
        return buf.getvalue()

    def surface_csv(self, scheme: str | WeightScheme) -> str:
        """k x m matrix of mean peak probabilities; first column is k, header lists m."""
        scheme = str(scheme)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        ms = sorted(set(self.plan.m_range))
        w.writerow(["k"] + [f"m={m}" for m in ms])
        for k in sorted(set(self.plan.k_range)):
            w.writerow([k] + [repr(self.cells[(scheme, k, m)].mean_peak_probability) for m in ms])
        return buf.getvalue()

    def write(self, out_dir: str | Path) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for name, text in [("samples.csv", self.long_csv()), ("summary.json", self.summary_json())]:
            (out / name).write_text(text, encoding="utf-8")
            paths.append(out / name)
        for scheme in self.plan.schemes:
            p = out / f"surface_{scheme.name.replace(':', '_')}.csv"
            p.write_text(self.surface_csv(scheme), encoding="utf-8")
            paths.append(p)
        return paths


def best_m_table(result: BatchResult) -> list[BestRow]:
    """Per (scheme, k), the m with the highest mean peak; ties go to the smaller m."""
    groups: dict[tuple[str, int], list[CellStats]] = {}
    for (scheme, k, m), cell in sorted(result.cells.items()):
        groups.setdefault((scheme, k), []).append(cell)
    rows = []
    for (scheme, k), cells in groups.items():
        valid = [c for c in cells if c.gamma_effective > 0]
        if not valid:
            continue
        best = min(valid, key=lambda c: (-c.mean_peak_probability, c.m))
        rows.append(BestRow(scheme, k, best.m, best.mean_peak_probability, best.cv_peak_probability))
    return rows


def _run_job(job):
    n, scheme, k, m, s, oracle, horizon, g, vertices = job
    marked = MarkedSet(n, vertices)
    try:
        cfg = WalkConfig(n, m, min(s, m), WeightScheme.parse(scheme), oracle)
        res = run_walk(cfg, marked, horizon, k)
        return (scheme, k, m, g), (res.peak_probability, res.peak_step, res.first_peak_step, "")
    except Exception as exc:  # recorded per cell, batch carries on
        return (scheme, k, m, g), (math.nan, -1, -1, f"{type(exc).__name__}: {exc}")


def run_batch(plan: BatchPlan, jobs: int = 1, progress=None) -> BatchResult:
    """Run every (scheme, k, m, sample) walk of ``plan``.

    ``jobs > 1`` spreads walks over worker processes; the result does not
    depend on it. ``progress`` is an optional callable fed the completed count.
    """
    plan.validate()
    marked = {k: plan.marked_sets(k) for k in sorted(set(plan.k_range))}
    work = []
    for scheme in plan.schemes:
        for k in sorted(set(plan.k_range)):
            for m in sorted(set(plan.m_range)):
                for g, ms in enumerate(marked[k]):
                    work.append((plan.n, scheme.name, k, m, plan.s, plan.oracle.value,
                                 plan.horizon, g, ms.vertices))
    log.info("batch %s: %d walks on %d worker(s)", plan.name or "<unnamed>", len(work), jobs)
    outcomes = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for i, (key, val) in enumerate(pool.map(_run_job, work, chunksize=4), 1):
                outcomes[key] = val
                if progress:
                    progress(i)
    else:
        for i, job in enumerate(work, 1):
            key, val = _run_job(job)
            outcomes[key] = val
            if progress:
                progress(i)

    rows = []
    by_cell: dict[tuple[str, int, int], list[SampleRow]] = {}
    for key in sorted(outcomes):
        scheme, k, m, g = key
        p, t, t_first, err = outcomes[key]
        row = SampleRow(scheme, k, m, g, marked[k][g].key, p, t, t_first, err)
        rows.append(row)
        by_cell.setdefault((scheme, k, m), []).append(row)
    cells = {key: _aggregate(*key, rs) for key, rs in sorted(by_cell.items())}
    return BatchResult(plan, cells, rows, marked)


def load_summary(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
