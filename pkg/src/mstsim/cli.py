"""Batch entry point: gen, validate, solve, roll, compare, bench.

Exit codes: 0 success, 1 infeasible, 2 usage or I/O, 3 solver failure.
``MSTSIM_BACKEND`` picks the default MILP backend and ``MSTSIM_WORKERS`` the
number of bench workers.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import bench
from .formulation import FormulationVariant, InfeasibleProsumer, Options
from .io import (ParseError, SyntheticCaseSpec, ValidationError, generate_case, load_results,
                 load_scenario, persist_results)
from .io.bundle import atomic_write
from .metrics import compare
from .milp import BACKENDS, DEFAULT_GAP, SolveStatus, UnknownBackend
from .results import AuditFailure, InfeasibleDispatch
from .rolling import InvalidPlan, default_plan, plan, run_rolling

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3
SCENARIO_SUBDIR = "scenario"


class _Usage(Exception):
    pass


def _backend_default() -> str:
    return os.environ.get("MSTSIM_BACKEND", "highs")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _solve_flags(p: argparse.ArgumentParser):
    p.add_argument("scenario", help="scenario bundle directory")
    p.add_argument("--out", required=True, help="result directory to write")
    p.add_argument("--variant", choices=[v.value for v in FormulationVariant], default="mst")
    p.add_argument("--no-clipping", dest="clipping", action="store_false")
    p.add_argument("--prosumer-mode", choices=("presolve", "kkt"), default="presolve")
    p.add_argument("--losses", action="store_true", help="piecewise-linear line losses")
    p.add_argument("--symmetry-breaking", action="store_true",
                   help="unit-order rows for the per-unit variant (not valid with ramps)")
    p.add_argument("--gap", type=float, default=DEFAULT_GAP)
    p.add_argument("--time-limit", type=float, default=float("inf"), help="seconds per window")
    p.add_argument("--backend", choices=BACKENDS, default=None,
                   help="MILP backend (default: $MSTSIM_BACKEND or highs)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mstsim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic scenario bundle")
    g.add_argument("--out", required=True)
    g.add_argument("--penetration", type=float, default=0.0)
    g.add_argument("--T", type=int, default=168)
    g.add_argument("--dt", type=float, default=1.0)
    g.add_argument("--regions", type=int, default=4)
    g.add_argument("--nodes-per-region", type=int, default=5)
    g.add_argument("--peak-load", type=float, default=36500.0, help="MW")
    g.add_argument("--seed", type=int, default=0)

    v = sub.add_parser("validate", help="parse and validate a scenario bundle")
    v.add_argument("scenario")

    s = sub.add_parser("solve", help="solve a scenario as one window")
    _solve_flags(s)
    s.add_argument("--monolithic", action="store_true", default=True,
                   help="whole horizon in one window (the only mode of this command)")

    r = sub.add_parser("roll", help="solve a scenario with a rolling horizon")
    _solve_flags(r)
    r.add_argument("--window", "-W", type=int, help="slots per window (default: 3 days)")
    r.add_argument("--commit", "-C", type=int, help="slots committed per window (default: 2 days)")

    c = sub.add_parser("compare", help="compare two result directories (deltas are B - A)")
    c.add_argument("a")
    c.add_argument("b")
    c.add_argument("--out", help="write comparison.csv and summary.txt here")

    b = sub.add_parser("bench", help="timing table over variants, horizons and penetrations")
    b.add_argument("--variants", default="mst,buc")
    b.add_argument("--horizons", type=_ints, default=(24, 168))
    b.add_argument("--penetrations", type=_floats, default=(0.0, 0.75))
    b.add_argument("--repeats", type=int, default=1)
    b.add_argument("--gap", type=float, default=DEFAULT_GAP)
    b.add_argument("--time-limit", type=float, default=600.0)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--no-clipping", dest="clipping", action="store_false")
    b.add_argument("--backend", choices=BACKENDS, default=None)
    b.add_argument("--workers", type=int, default=None, help="default: $MSTSIM_WORKERS or 1")
    b.add_argument("--micro", type=int, default=0, metavar="N",
                   help="use N seeded micro fixtures instead of the synthetic system")
    b.add_argument("--out", help="write bench.csv and bench.txt here")
    return ap


def _err(msg: str):
    print(f"mstsim: {msg}", file=sys.stderr)


def _variants(text: str) -> tuple[str, ...]:
    out = tuple(x.strip().lower() for x in text.split(",") if x.strip())
    bad = [x for x in out if x not in {v.value for v in FormulationVariant}]
    if bad or not out:
        raise _Usage(f"unknown variant(s) {bad or text!r}")
    return out


def cmd_gen(a) -> int:
    try:
        spec = SyntheticCaseSpec(penetration=a.penetration, regions=a.regions,
                                 nodes_per_region=a.nodes_per_region, T=a.T, dt=a.dt,
                                 peak_load_mw=a.peak_load, seed=a.seed)
        bundle = generate_case(spec)
    except ValueError as exc:
        raise _Usage(str(exc))
    bundle.save(a.out)
    c = bundle.case
    print(f"wrote {a.out}: {len(c.plants)} plants, {sum(g.units for g in c.syn_plants)} "
          f"synchronous units, {len(c.network.nodes)} nodes, T={c.T}")
    return EXIT_OK


def cmd_validate(a) -> int:
    bundle = load_scenario(a.scenario)
    c = bundle.case
    print(f"ok: {len(c.plants)} plants, {len(c.network.nodes)} nodes, T={c.T}, dt={c.dt} h")
    return EXIT_OK


def _run(a, rolling: bool) -> int:
    bundle = load_scenario(a.scenario)
    case = bundle.case
    options = Options(clipping=a.clipping, prosumer_mode=a.prosumer_mode, losses=a.losses,
                      symmetry_breaking=a.symmetry_breaking)
    backend = a.backend or _backend_default()
    if not rolling:
        horizon = plan(case.T, case.T, case.T)
    elif a.window is None and a.commit is None:
        horizon = default_plan(case.T, case.dt)
    else:
        d = default_plan(case.T, case.dt)
        horizon = plan(case.T, a.window or d.W, a.commit or min(d.C, a.window or d.C))
    t0 = time.perf_counter()
    result = run_rolling(case, horizon, a.variant, options, bundle.init, a.gap, a.time_limit,
                         backend)
    run = {"command": "roll" if rolling else "solve", "scenario": str(Path(a.scenario).resolve()),
           "backend": backend, "gap": a.gap, "time_limit": a.time_limit,
           "elapsed_s": time.perf_counter() - t0, "scenario_meta": bundle.meta}
    out = persist_results(result, a.out, case, run)
    bundle.save(out / SCENARIO_SUBDIR)
    status = {s["status"] for s in result.solves}
    print(f"{result.variant.value}: objective {result.objective:.6f}, gap {result.gap:.3g}, "
          f"{len(result.solves)} window(s), {result.wall_time:.2f} s solver time -> {out}")
    if SolveStatus.FEASIBLE_AT_GAP.value in status:
        _err("time limit reached in at least one window; result is feasible, not optimal")
    return EXIT_OK


def _case_for(result_dir: Path):
    d = result_dir / SCENARIO_SUBDIR
    if not d.exists():
        raise FileNotFoundError(f"{d} not found (result directory lacks its scenario copy)")
    return load_scenario(d).case


def cmd_compare(a) -> int:
    ra, _ = load_results(a.a)
    rb, _ = load_results(a.b)
    case = _case_for(Path(a.a))
    try:
        cmp = compare(ra, rb, case.network, case.plants)
    except ValueError as exc:
        raise _Usage(str(exc))
    text = cmp.summary()
    print(text)
    if a.out:
        d = Path(a.out)
        d.mkdir(parents=True, exist_ok=True)
        lines = ["slot,metric,region,value"] + [f"{s},{m},{r},{v!r}" for s, m, r, v in cmp.rows()]
        atomic_write(d / "comparison.csv", "\n".join(lines) + "\n")
        atomic_write(d / "summary.txt", text + "\n")
    return EXIT_OK


def cmd_bench(a) -> int:
    variants = _variants(a.variants)
    backend = a.backend or _backend_default()

    def progress(row):
        print(f"  {row.case} T={row.T} {row.variant}: {row.status} in {row.median_wall_s:.2f} s",
              file=sys.stderr, flush=True)

    t0 = time.perf_counter()
    if a.micro:
        rows = bench.micro_bench(range(a.micro), T=a.horizons[0], variants=variants, gap=a.gap,
                                 backend=backend, time_limit=a.time_limit, progress=progress)
    else:
        cfg = bench.BenchConfig(
            penetrations=a.penetrations, horizons=a.horizons, variants=variants,
            repeats=a.repeats, gap=a.gap, backend=backend, time_limit=a.time_limit,
            seed=a.seed, clipping=a.clipping, workers=a.workers or bench.default_workers())
        rows = bench.run_bench(cfg, progress)
    total = time.perf_counter() - t0
    lines = [bench.format_table(rows)]
    if not a.micro and {"mst", "buc"} <= set(variants):
        for pen in a.penetrations:
            got, want = bench.count_ratio(pen, a.horizons[-1], a.seed)
            lines.append(f"commitment variables MST/BUC at penetration {pen}: {got} "
                         f"(synchronous plants / units = {want}, {'equal' if got == want else 'DIFFERENT'})")
    lines.append(bench.summary_line(rows))
    lines.append(f"total bench time {total:.1f} s")
    text = "\n".join(lines)
    print(text)
    if a.out:
        d = Path(a.out)
        d.mkdir(parents=True, exist_ok=True)
        atomic_write(d / "bench.csv", bench.to_csv(rows))
        atomic_write(d / "bench.txt", text + "\n")
        atomic_write(d / "bench.json", json.dumps({"backend": backend, "total_s": total,
                                                   "argv": sys.argv[1:]}, indent=1) + "\n")
    failed = [r for r in rows if not SolveStatus(r.status).has_solution]
    return EXIT_SOLVER if failed else EXIT_OK


COMMANDS = {
    "gen": cmd_gen, "validate": cmd_validate, "solve": lambda a: _run(a, False),
    "roll": lambda a: _run(a, True), "compare": cmd_compare, "bench": cmd_bench,
}


def run(argv=None) -> int:
    try:
        a = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return COMMANDS[a.command](a)
    except InfeasibleDispatch as exc:
        _err(f"no solution: {exc}")
        return EXIT_INFEASIBLE if exc.status is SolveStatus.INFEASIBLE else EXIT_SOLVER
    except InfeasibleProsumer as exc:
        _err(f"infeasible prosumer sub-problem: {exc}")
        return EXIT_INFEASIBLE
    except ValidationError as exc:
        _err(f"invalid scenario:\n{exc}")
        return EXIT_USAGE
    except (ParseError, InvalidPlan, UnknownBackend, _Usage) as exc:
        _err(str(exc))
        return EXIT_USAGE
    except OSError as exc:
        _err(f"I/O error: {exc}")
        return EXIT_USAGE
    except AuditFailure as exc:
        _err(f"solution failed the feasibility audit: {exc}")
        return EXIT_SOLVER


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
