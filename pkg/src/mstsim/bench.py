"""Timing comparisons of the three formulations on synthetic cases."""

from __future__ import annotations

import csv
import io
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Optional

from .formulation.core import FormulationVariant, Options, assemble, commitment_variable_count
from .io.synthetic import SyntheticCaseSpec, generate_case
from .milp import solve

COLUMNS = ("case", "penetration", "T", "variant", "status", "objective", "gap",
           "median_wall_s", "walls_s", "commitment_vars", "variables", "constraints",
           "clipped_rows", "clipping_reduction_pct")


@dataclass(frozen=True)
class BenchConfig:
    penetrations: tuple[float, ...] = (0.0, 0.75)
    horizons: tuple[int, ...] = (24, 168)
    variants: tuple[str, ...] = ("mst", "buc")
    repeats: int = 1
    gap: float = 0.01
    backend: str = "highs"
    time_limit: float = 600.0
    seed: int = 0
    clipping: bool = True
    workers: int = 1


@dataclass
class BenchRow:
    case: str
    penetration: float
    T: int
    variant: str
    status: str
    objective: float
    gap: float
    median_wall_s: float
    walls_s: tuple[float, ...]
    commitment_vars: int
    variables: int
    constraints: int
    clipped_rows: int
    clipping_reduction_pct: float


def _one(args) -> BenchRow:
    pen, T, variant, cfg = args
    bundle = generate_case(SyntheticCaseSpec(penetration=pen, T=T, seed=cfg.seed))
    ctx = assemble(bundle.case, bundle.init, variant, Options(clipping=cfg.clipping))
    walls, res = [], None
    for _ in range(cfg.repeats):
        t0 = time.perf_counter()
        res = solve(ctx.model, gap=cfg.gap, time_limit=cfg.time_limit, backend=cfg.backend)
        walls.append(time.perf_counter() - t0)
    counts = ctx.model.meta["counts"]
    clip = ctx.model.meta["clipping"]
    return BenchRow(
        bundle.meta.get("name", ""), pen, T, FormulationVariant(variant).value,
        res.status.value, res.objective, res.gap, statistics.median(walls), tuple(walls),
        counts["variables_by_group"].get("commitment", 0), counts["variables"],
        counts["constraints"], sum(clip["clipped"].values()), clip["reduction_pct"])


def run_bench(cfg: BenchConfig, progress=None) -> list[BenchRow]:
    jobs = [(pen, T, v, cfg) for pen in cfg.penetrations for T in cfg.horizons for v in cfg.variants]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            rows = list(pool.map(_one, jobs))
    else:
        rows = []
        for job in jobs:
            rows.append(_one(job))
            if progress:
                progress(rows[-1])
    return rows


def count_ratio(pen: float = 0.0, T: int = 168, seed: int = 0):
    """``(MST/BUC commitment-variable ratio, |G_syn| / sum of units)`` as exact fractions."""
    case = generate_case(SyntheticCaseSpec(penetration=pen, T=T, seed=seed)).case
    mst = commitment_variable_count(case, FormulationVariant.MST)
    buc = commitment_variable_count(case, FormulationVariant.BUC)
    syn = case.syn_plants
    return Fraction(mst, buc), Fraction(len(syn), sum(g.units for g in syn))


def speedups(rows: list[BenchRow], fast: str = "mst", slow: str = "buc") -> list[dict]:
    by = {(r.penetration, r.T, r.variant): r for r in rows}
    out = []
    for (pen, T, v), r in sorted(by.items()):
        if v != fast or (pen, T, slow) not in by:
            continue
        s = by[(pen, T, slow)]
        out.append({"penetration": pen, "T": T, f"{fast}_s": r.median_wall_s,
                    f"{slow}_s": s.median_wall_s,
                    "ratio": s.median_wall_s / r.median_wall_s if r.median_wall_s > 0 else float("inf"),
                    "ordered": r.median_wall_s < s.median_wall_s})
    return out


def to_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        d = asdict(r)
        d["walls_s"] = ";".join(f"{x:.3f}" for x in r.walls_s)
        w.writerow([d[c] for c in COLUMNS])
    return buf.getvalue()


def format_table(rows: list[BenchRow]) -> str:
    head = (f"{'case':<16}{'T':>5} {'variant':<8}{'status':<14}{'objective':>16}{'gap':>9}"
            f"{'median s':>10}{'commit vars':>13}{'vars':>9}{'rows':>9}{'clip %':>8}")
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(f"{r.case:<16}{r.T:>5} {r.variant:<8}{r.status:<14}{r.objective:>16.1f}"
                     f"{r.gap:>9.4f}{r.median_wall_s:>10.2f}{r.commitment_vars:>13}"
                     f"{r.variables:>9}{r.constraints:>9}{r.clipping_reduction_pct:>8.2f}")
    sp = speedups(rows)
    if sp:
        lines.append("")
        lines.append(f"{'penetration':<13}{'T':>5}{'mst s':>10}{'buc s':>10}{'buc/mst':>10}  ordered")
        for s in sp:
            lines.append(f"{s['penetration']:<13}{s['T']:>5}{s['mst_s']:>10.2f}{s['buc_s']:>10.2f}"
                         f"{s['ratio']:>10.2f}  {'yes' if s['ordered'] else 'NO'}")
    return "\n".join(lines)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("MSTSIM_WORKERS", "1")))
    except ValueError:
        return 1


def micro_bench(seeds=range(5), T: int = 8, variants=("mst", "buc"), gap: float = 0.0,
                backend: str = "reference", time_limit: float = 120.0,
                progress=None) -> list[BenchRow]:
    """Same table on the seeded micro fixtures (desk-scale reference solver)."""
    from .fixtures import random_micro_case

    rows = []
    for seed in seeds:
        case = random_micro_case(seed, T=T)
        for v in variants:
            ctx = assemble(case, None, v)
            res = solve(ctx.model, gap=gap, time_limit=time_limit, backend=backend)
            counts = ctx.model.meta["counts"]
            clip = ctx.model.meta["clipping"]
            rows.append(BenchRow(
                f"micro{seed}", 0.0, T, FormulationVariant(v).value, res.status.value,
                res.objective, res.gap, res.wall_time, (res.wall_time,),
                counts["variables_by_group"].get("commitment", 0), counts["variables"],
                counts["constraints"], sum(clip["clipped"].values()), clip["reduction_pct"]))
            if progress:
                progress(rows[-1])
    return rows


def summary_line(rows: list[BenchRow], label: Optional[str] = None) -> str:
    sp = speedups(rows)
    ok = all(s["ordered"] for s in sp)
    txt = f"{len(sp)} configurations, MST faster in {sum(s['ordered'] for s in sp)}"
    return f"{label + ': ' if label else ''}{txt}{'' if ok else ' (ordering violated)'}"
