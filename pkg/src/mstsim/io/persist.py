"""Result directories: dispatch tables, per-unit table, inertia table and metadata."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from ..formulation.core import FormulationVariant
from ..metrics import inertia_requirement, inertia_timeseries
from ..model import Case
from ..results import DispatchResult
from .bundle import FORMAT_VERSION, ParseError, atomic_write, check_version
from .bundle import initial_state_doc, initial_state_from_doc

DISPATCH_NAME = "dispatch.csv"
UNITS_NAME = "units.csv"
INERTIA_NAME = "inertia.csv"
META_NAME = "metadata.json"
DISPATCH_COLUMNS = ("slot", "entity", "kind", "s", "u", "d", "p", "soc", "flow", "angle",
                    "aux", "import", "export")


def _f(v) -> str:
    return repr(float(v))


def _table(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def dispatch_rows(result: DispatchResult):
    """One row per (slot, entity); entities are plants, lines, nodes, storage, prosumers."""
    rows = []
    for t in range(result.T):
        slot = t + 1
        for gid, ser in result.plants.items():
            row = {"kind": "plant", "p": ser["p"][t]}
            if "s" in ser:
                row.update(s=ser["s"][t], u=ser["u"][t], d=ser["d"][t])
            if gid in result.tes:
                row.update(soc=result.tes[gid][t], aux=result.reserve_aux[gid][t])
            rows.append((slot, gid, row))
        for lid, f in result.flows.items():
            row = {"kind": "line", "flow": f[t]}
            if lid in result.losses:
                row["aux"] = result.losses[lid][t]
            rows.append((slot, lid, row))
        for n, a in result.angles.items():
            rows.append((slot, n, {"kind": "node", "angle": a[t]}))
        for sid, ser in result.storage.items():
            rows.append((slot, sid, {"kind": "storage", "p": ser["p"][t], "soc": ser["soc"][t]}))
        for pid, ser in result.prosumers.items():
            rows.append((slot, pid, {"kind": "prosumer", "p": ser["battery"][t],
                                     "soc": ser["soc"][t], "import": ser["grid_in"][t],
                                     "export": ser["grid_out"][t]}))
    return rows


def persist_results(result: DispatchResult, path, case: Case, run: dict | None = None) -> Path:
    """Write a result directory; every file is replaced atomically."""
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    out = []
    for slot, entity, row in dispatch_rows(result):
        out.append([slot, entity, row["kind"]] +
                   ["" if c not in row else _f(row[c]) for c in DISPATCH_COLUMNS[3:]])
    atomic_write(d / DISPATCH_NAME, _table(DISPATCH_COLUMNS, out))

    if result.units:
        rows = []
        for t in range(result.T):
            for gid, ser in result.units.items():
                for i in range(ser["s"].shape[0]):
                    rows.append([t + 1, gid, i] + [_f(ser[q][i][t]) for q in "sudp"])
        atomic_write(d / UNITS_NAME, _table(("slot", "plant", "unit", "s", "u", "d", "p"), rows))

    have = inertia_timeseries(result, case.network, case.plants)
    need = inertia_requirement(case.scenario, case.network)
    rows = [[r, t + 1, _f(have[r][t]), _f(need[r][t])]
            for r in case.network.regions for t in range(result.T)]
    atomic_write(d / INERTIA_NAME, _table(("region", "slot", "inertia_mws", "requirement_mws"), rows))

    meta = {
        "format_version": FORMAT_VERSION,
        "variant": result.variant.value,
        "T": result.T, "dt_h": result.dt,
        "objective": result.objective,
        "solver_objective": result.solver_objective,
        "gap": result.gap, "wall_time_s": result.wall_time,
        "solves": result.solves,
        "counts": result.counts,
        "clipping": result.clipping,
        "plan": result.plan,
        "options": result.meta.get("options", {}),
        "initial_state": initial_state_doc(result.initial) if result.initial else None,
        "run": run or {},
    }
    atomic_write(d / META_NAME, json.dumps(_jsonable(meta), indent=1, allow_nan=True) + "\n")
    return d


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def load_results(path) -> tuple[DispatchResult, dict]:
    """Rebuild a ``DispatchResult`` (and the metadata document) from a result directory."""
    d = Path(path)
    try:
        meta = json.loads((d / META_NAME).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{META_NAME}:{exc.lineno}", exc.msg) from None
    check_version(meta, META_NAME)
    T = int(meta["T"])
    plants, flows, angles, losses, storage, tes, aux, prosumers = ({} for _ in range(8))

    def series(store, key, q=None):
        tgt = store.setdefault(key, {}) if q is not None else store
        if q is None:
            return tgt.setdefault(key, np.zeros(T))
        return tgt.setdefault(q, np.zeros(T))

    with open(d / DISPATCH_NAME, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            t = int(row["slot"]) - 1
            e, kind = row["entity"], row["kind"]
            val = {k: float(v) for k, v in row.items() if k in DISPATCH_COLUMNS[3:] and v != ""}
            if kind == "plant":
                for q in ("s", "u", "d", "p"):
                    if q in val:
                        series(plants, e, q)[t] = val[q]
                if "soc" in val:
                    series(tes, e)[t] = val["soc"]
                    series(aux, e)[t] = val["aux"]
            elif kind == "line":
                series(flows, e)[t] = val["flow"]
                if "aux" in val:
                    series(losses, e)[t] = val["aux"]
            elif kind == "node":
                series(angles, e)[t] = val["angle"]
            elif kind == "storage":
                series(storage, e, "p")[t] = val["p"]
                series(storage, e, "soc")[t] = val["soc"]
            elif kind == "prosumer":
                for q, col in (("battery", "p"), ("soc", "soc"), ("grid_in", "import"),
                               ("grid_out", "export")):
                    series(prosumers, e, q)[t] = val[col]
            else:
                raise ParseError(f"{DISPATCH_NAME}:{reader.line_num}", f"unknown kind {kind!r}")
    units = {}
    if (d / UNITS_NAME).exists():
        raw: dict = {}
        with open(d / UNITS_NAME, newline="") as fh:
            for row in csv.DictReader(fh):
                raw.setdefault(row["plant"], {}).setdefault(int(row["unit"]), {})[int(row["slot"]) - 1] = \
                    [float(row[q]) for q in "sudp"]
        for gid, by_unit in raw.items():
            n = max(by_unit) + 1
            arr = np.zeros((4, n, T))
            for i, by_slot in by_unit.items():
                for t, vals in by_slot.items():
                    arr[:, i, t] = vals
            units[gid] = {q: arr[k] for k, q in enumerate("sudp")}
    init = initial_state_from_doc(meta["initial_state"]) if meta.get("initial_state") else None
    result = DispatchResult(
        variant=FormulationVariant(meta["variant"]), T=T, dt=float(meta["dt_h"]), plants=plants,
        flows=flows, angles=angles, losses=losses, storage=storage, tes=tes, reserve_aux=aux,
        prosumers=prosumers, units=units, objective=float(meta["objective"]),
        solver_objective=float(meta["solver_objective"]), solves=meta["solves"],
        counts=meta["counts"], clipping=meta["clipping"], plan=meta["plan"], initial=init,
        meta={"options": meta.get("options", {})},
    )
    return result, meta
