"""Scenario bundles on disk: ``config.json`` plus long-format ``traces.csv``.

See ``docs/file_formats.md`` for the field reference.
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..model import (ACLine, Case, Consumer, GeneratorCluster, HVDCLine, InitialState,
                     NetworkModel, PlantClass, ProsumerAggregate, Scenario, StoragePlant,
                     Violation, validate_case)

FORMAT_VERSION = "1.0"
CONFIG_NAME = "config.json"
TRACES_NAME = "traces.csv"
TRACE_COLUMNS = ("slot", "entity", "quantity", "value")

# trace quantity -> Scenario field
QUANTITIES = {
    "load": "consumer_load", "res_avail": "res_avail", "cst_capture": "cst_capture",
    "reserve": "reserve", "inertia": "inertia", "prosumer_load": "prosumer_load",
    "prosumer_pv": "prosumer_pv",
}
_FIELD_QUANTITY = {v: k for k, v in QUANTITIES.items()}


class ParseError(ValueError):
    """Malformed input; ``where`` names the file and line or field."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


class UnsupportedVersion(ParseError):
    pass


class ValidationError(ValueError):
    def __init__(self, report: list[Violation]):
        super().__init__("scenario failed validation:\n" + "\n".join(f"  {v}" for v in report))
        self.report = report


def check_version(doc: dict, where: str):
    version = str(doc.get("format_version", ""))
    major = version.split(".")[0]
    if major != FORMAT_VERSION.split(".")[0]:
        raise UnsupportedVersion(where, f"unsupported format_version {version!r} "
                                        f"(this reader handles {FORMAT_VERSION})")


def atomic_write(path: Path, text: str):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _num(v):
    """JSON-safe float: None for missing."""
    return None if v is None else float(v)


@dataclass
class ScenarioBundle:
    case: Case
    init: Optional[InitialState] = None
    options: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    # -- serialization --------------------------------------------------

    def config_dict(self) -> dict:
        c = self.case
        net = c.network
        doc = {
            "format_version": FORMAT_VERSION,
            "meta": self.meta,
            "horizon": {"T": c.T, "dt_h": c.dt},
            "network": {
                "regions": list(net.regions),
                "nodes": [{"id": n, "region": net.node_region[n]} for n in net.nodes],
                "angle_bound_rad": net.angle_bound,
                "reference_nodes": list(net.reference_nodes),
                "ac_lines": [{"id": l.id, "from": l.from_node, "to": l.to_node,
                              "susceptance_mw_per_rad": l.susceptance, "limit_mw": l.limit,
                              "loss_factor": l.loss_factor} for l in net.ac_lines],
                "hvdc_lines": [{"id": l.id, "from": l.from_node, "to": l.to_node,
                                "limit_mw": l.limit} for l in net.hvdc_lines],
            },
            "plants": [_plant_doc(g) for g in c.plants],
            "storage": [{"id": s.id, "node": s.node, "efficiency": s.efficiency,
                         "e_min_mwh": s.e_min, "e_max_mwh": s.e_max,
                         "p_discharge_mw": s.p_discharge, "p_charge_mw": s.p_charge}
                        for s in c.storage],
            "prosumers": [{"id": p.id, "node": p.node, "efficiency": p.efficiency,
                           "e_min_mwh": p.e_min, "e_max_mwh": p.e_max,
                           "p_discharge_mw": p.p_discharge, "p_charge_mw": p.p_charge,
                           "feed_in_ratio": p.feed_in_ratio} for p in c.prosumers],
            "consumers": [{"id": k.id, "node": k.node} for k in c.scenario.consumers],
            "options": self.options,
        }
        if self.init is not None:
            doc["initial_state"] = initial_state_doc(self.init)
        return doc

    def traces_text(self) -> str:
        lines = [",".join(TRACE_COLUMNS)]
        for name, key, arr in self.case.scenario.traces():
            q = _FIELD_QUANTITY[name]
            for t, v in enumerate(arr.tolist()):
                lines.append(f"{t + 1},{key},{q},{v!r}")
        return "\n".join(lines) + "\n"

    def save(self, directory) -> Path:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        atomic_write(d / CONFIG_NAME, json.dumps(self.config_dict(), indent=1) + "\n")
        atomic_write(d / TRACES_NAME, self.traces_text())
        return d

    def validate(self) -> list[Violation]:
        return validate_case(self.case, self.init)


def _plant_doc(g: GeneratorCluster) -> dict:
    doc = {
        "id": g.id, "node": g.node, "class": g.kind.value, "tech": g.tech, "units": g.units,
        "p_min_mw": g.p_min, "p_max_mw": g.p_max,
        "ramp_up_mw_per_h": _num(g.ramp_up), "ramp_down_mw_per_h": _num(g.ramp_down),
        "min_up_slots": g.min_up, "min_down_slots": g.min_down,
        "c_fix_per_unit_slot": g.c_fix, "c_su_per_start": g.c_su, "c_sd_per_stop": g.c_sd,
        "c_var_per_mwh": g.c_var, "inertia_h_s": g.inertia_h, "rating_mva": g.rating,
    }
    if g.kind is PlantClass.SYN_CST:
        doc.update(tes_efficiency=g.tes_eff, tes_min_mwh=g.tes_min, tes_max_mwh=g.tes_max)
    return doc


def initial_state_doc(init: InitialState) -> dict:
    return {
        "online_units": dict(init.s), "dispatch_mw": dict(init.p),
        "up_history": {k: list(v) for k, v in init.up_hist.items()},
        "down_history": {k: list(v) for k, v in init.down_hist.items()},
        "tes_mwh": dict(init.tes), "storage_mwh": dict(init.storage),
        "battery_mwh": dict(init.battery),
        "unit_dispatch_mw": {k: list(v) for k, v in init.unit_p.items()},
    }


def initial_state_from_doc(doc: dict, where: str = "initial_state") -> InitialState:
    try:
        return InitialState(
            s={k: int(v) for k, v in doc.get("online_units", {}).items()},
            p={k: float(v) for k, v in doc.get("dispatch_mw", {}).items()},
            up_hist={k: tuple(int(x) for x in v) for k, v in doc.get("up_history", {}).items()},
            down_hist={k: tuple(int(x) for x in v)
                       for k, v in doc.get("down_history", {}).items()},
            tes={k: float(v) for k, v in doc.get("tes_mwh", {}).items()},
            storage={k: float(v) for k, v in doc.get("storage_mwh", {}).items()},
            battery={k: float(v) for k, v in doc.get("battery_mwh", {}).items()},
            unit_p={k: tuple(float(x) for x in v)
                    for k, v in doc.get("unit_dispatch_mw", {}).items()},
        )
    except (TypeError, ValueError, AttributeError) as exc:
        raise ParseError(where, str(exc)) from None


class _Fields:
    """Typed access to a JSON object with precise error locations."""

    def __init__(self, doc, where: str):
        if not isinstance(doc, dict):
            raise ParseError(where, "expected an object")
        self.doc, self.where = doc, where

    def get(self, key, kind, default=...):
        if key not in self.doc:
            if default is ...:
                raise ParseError(f"{self.where}.{key}", "missing field")
            return default
        v = self.doc[key]
        if v is None and default is None:
            return None
        try:
            if kind is float:
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise TypeError
                v = float(v)
                if math.isnan(v):
                    raise ValueError
                return v
            if kind is int:
                if isinstance(v, bool) or not isinstance(v, int):
                    raise TypeError
                return v
            if kind in (str, dict, list):
                if not isinstance(v, kind):
                    raise TypeError
                return v
            return kind(v)
        except (TypeError, ValueError):
            raise ParseError(f"{self.where}.{key}",
                             f"expected {getattr(kind, '__name__', kind)}, got {v!r}") from None


def _parse_config(doc: dict, where: str):
    check_version(doc, where)
    top = _Fields(doc, where)
    hz = _Fields(top.get("horizon", dict), f"{where}:horizon")
    T, dt = hz.get("T", int), hz.get("dt_h", float, 1.0)
    nd = _Fields(top.get("network", dict), f"{where}:network")
    nodes, node_region = [], {}
    for i, n in enumerate(nd.get("nodes", list)):
        f = _Fields(n, f"{where}:network.nodes[{i}]")
        nid = f.get("id", str)
        nodes.append(nid)
        node_region[nid] = f.get("region", str)
    ac = []
    for i, l in enumerate(nd.get("ac_lines", list, [])):
        f = _Fields(l, f"{where}:network.ac_lines[{i}]")
        ac.append(ACLine(f.get("id", str), f.get("from", str), f.get("to", str),
                         f.get("susceptance_mw_per_rad", float), f.get("limit_mw", float),
                         f.get("loss_factor", float, 0.0)))
    hv = []
    for i, l in enumerate(nd.get("hvdc_lines", list, [])):
        f = _Fields(l, f"{where}:network.hvdc_lines[{i}]")
        hv.append(HVDCLine(f.get("id", str), f.get("from", str), f.get("to", str),
                           f.get("limit_mw", float)))
    net = NetworkModel(tuple(nodes), tuple(str(r) for r in nd.get("regions", list)), node_region,
                       tuple(ac), tuple(hv), nd.get("angle_bound_rad", float, math.pi / 6),
                       tuple(nd.get("reference_nodes", list, [])))
    plants = []
    for i, g in enumerate(top.get("plants", list)):
        f = _Fields(g, f"{where}:plants[{i}]")
        pid = f.get("id", str)
        f.where = f"{where}:plants[{pid}]"
        try:
            kind = PlantClass(f.get("class", str))
        except ValueError:
            raise ParseError(f"{f.where}.class", f"unknown plant class {g.get('class')!r}") from None
        plants.append(GeneratorCluster(
            pid, f.get("node", str), kind, units=f.get("units", int, 1),
            p_min=f.get("p_min_mw", float, 0.0), p_max=f.get("p_max_mw", float),
            ramp_up=f.get("ramp_up_mw_per_h", float, None),
            ramp_down=f.get("ramp_down_mw_per_h", float, None),
            min_up=f.get("min_up_slots", int, 1), min_down=f.get("min_down_slots", int, 1),
            c_fix=f.get("c_fix_per_unit_slot", float, 0.0), c_su=f.get("c_su_per_start", float, 0.0),
            c_sd=f.get("c_sd_per_stop", float, 0.0), c_var=f.get("c_var_per_mwh", float, 0.0),
            inertia_h=f.get("inertia_h_s", float, 0.0), rating=f.get("rating_mva", float, 0.0),
            tes_eff=f.get("tes_efficiency", float, 1.0), tes_min=f.get("tes_min_mwh", float, 0.0),
            tes_max=f.get("tes_max_mwh", float, 0.0), tech=f.get("tech", str, "")))
    storage = []
    for i, s in enumerate(top.get("storage", list, [])):
        f = _Fields(s, f"{where}:storage[{i}]")
        storage.append(StoragePlant(f.get("id", str), f.get("node", str), f.get("efficiency", float, 1.0),
                                    f.get("e_min_mwh", float, 0.0), f.get("e_max_mwh", float),
                                    f.get("p_discharge_mw", float), f.get("p_charge_mw", float)))
    prosumers = []
    for i, p in enumerate(top.get("prosumers", list, [])):
        f = _Fields(p, f"{where}:prosumers[{i}]")
        prosumers.append(ProsumerAggregate(
            f.get("id", str), f.get("node", str), f.get("efficiency", float, 1.0),
            f.get("e_min_mwh", float, 0.0), f.get("e_max_mwh", float),
            f.get("p_discharge_mw", float), f.get("p_charge_mw", float),
            f.get("feed_in_ratio", float, 0.0)))
    consumers = []
    for i, c in enumerate(top.get("consumers", list, [])):
        f = _Fields(c, f"{where}:consumers[{i}]")
        consumers.append(Consumer(f.get("id", str), f.get("node", str)))
    init = None
    if "initial_state" in doc:
        init = initial_state_from_doc(doc["initial_state"], f"{where}:initial_state")
    return (T, dt, net, tuple(plants), tuple(storage), tuple(prosumers), tuple(consumers), init,
            top.get("options", dict, {}), top.get("meta", dict, {}))


def _parse_traces(path: Path, T: int) -> dict[str, dict[str, np.ndarray]]:
    out: dict[str, dict[str, list]] = {f: {} for f in QUANTITIES.values()}
    seen: dict[tuple, int] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != TRACE_COLUMNS:
            raise ParseError(f"{path.name}:1", f"header must be {','.join(TRACE_COLUMNS)}")
        for row in reader:
            line = reader.line_num
            where = f"{path.name}:{line}"
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise ParseError(where, f"expected 4 columns, got {len(row)}")
            slot_s, entity, quantity, value_s = (c.strip() for c in row)
            try:
                slot = int(slot_s)
            except ValueError:
                raise ParseError(f"{where}:slot", f"not an integer: {slot_s!r}") from None
            if quantity not in QUANTITIES:
                raise ParseError(f"{where}:quantity", f"unknown quantity {quantity!r}")
            try:
                value = float(value_s)
            except ValueError:
                raise ParseError(f"{where}:value", f"not a number: {value_s!r}") from None
            if not 1 <= slot <= T:
                raise ParseError(f"{where}:slot", f"slot {slot} outside 1..{T}")
            key = (quantity, entity, slot)
            if key in seen:
                raise ParseError(where, f"duplicate entry (first on line {seen[key]})")
            seen[key] = line
            out[QUANTITIES[quantity]].setdefault(entity, {})[slot] = value
    traces = {}
    for fname, by_entity in out.items():
        traces[fname] = {}
        for entity, values in by_entity.items():
            missing = [t for t in range(1, T + 1) if t not in values]
            if missing:
                raise ParseError(f"{path.name}", f"trace {_FIELD_QUANTITY[fname]}[{entity}] has "
                                                 f"{len(values)} of {T} slots (first missing: {missing[0]})")
            traces[fname][entity] = np.array([values[t] for t in range(1, T + 1)])
    return traces


def read_bundle(path) -> ScenarioBundle:
    """Parse a bundle directory (or its config file) without validating it."""
    p = Path(path)
    d = p.parent if p.is_file() else p
    cfg = d / CONFIG_NAME
    if not cfg.exists():
        raise FileNotFoundError(f"{cfg} not found")
    try:
        doc = json.loads(cfg.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{CONFIG_NAME}:{exc.lineno}", exc.msg) from None
    if not isinstance(doc, dict):
        raise ParseError(CONFIG_NAME, "top level must be an object")
    T, dt, net, plants, storage, prosumers, consumers, init, options, meta = \
        _parse_config(doc, CONFIG_NAME)
    traces = _parse_traces(d / TRACES_NAME, T)
    scenario = Scenario(T, dt, consumers, **traces)
    return ScenarioBundle(Case(net, plants, scenario, storage, prosumers), init, options, meta)


def load_scenario(path) -> ScenarioBundle:
    """Parse and validate; raises ``ParseError`` or ``ValidationError``."""
    bundle = read_bundle(path)
    report = bundle.validate()
    if report:
        raise ValidationError(report)
    return bundle
