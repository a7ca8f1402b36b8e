"""Evaluation quantities computed from dispatch results."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import NetworkModel, PlantClass, Scenario


def inertia_timeseries(result, network: NetworkModel, plants) -> dict[str, np.ndarray]:
    """Online synchronous inertia per region and slot, in MW*s."""
    out = {r: np.zeros(result.T) for r in network.regions}
    for g in plants:
        if not g.synchronous:
            continue
        s = result.plants[g.id]["s"]
        out[network.node_region[g.node]] = out[network.node_region[g.node]] + s * g.inertia_per_unit
    return out


def inertia_requirement(scenario: Scenario, network: NetworkModel) -> dict[str, np.ndarray]:
    out = {r: np.zeros(scenario.T) for r in network.regions}
    for n, req in scenario.inertia.items():
        r = network.node_region[n]
        out[r] = out[r] + req
    return out


def online_units_timeseries(result) -> np.ndarray:
    return result.online_units()


def res_spillage(result, scenario: Scenario, plants=None):
    """``(per-slot MW, total MWh)`` of RES availability left undispatched."""
    spill = np.zeros(result.T)
    for gid, avail in scenario.res_avail.items():
        if plants is not None and not any(g.id == gid and g.kind is PlantClass.RES for g in plants):
            continue
        spill = spill + np.maximum(avail - result.plants[gid]["p"], 0.0)
    return spill, float(np.sum(spill) * result.dt)


@dataclass
class Comparison:
    objective_a: float
    objective_b: float
    objective_delta: float
    objective_rel_delta: float
    online_delta: np.ndarray
    inertia_delta: dict[str, np.ndarray] = field(default_factory=dict)
    time_a: float = 0.0
    time_b: float = 0.0
    counts_a: dict = field(default_factory=dict)
    counts_b: dict = field(default_factory=dict)

    @property
    def timing_ratio(self) -> float:
        """``time_b / time_a``: how many times faster run A was."""
        return self.time_b / self.time_a if self.time_a > 0 else float("inf")

    @property
    def max_online_delta(self) -> float:
        return float(np.max(np.abs(self.online_delta))) if self.online_delta.size else 0.0

    @property
    def max_inertia_delta(self) -> float:
        vals = [float(np.max(np.abs(v))) for v in self.inertia_delta.values() if v.size]
        return max(vals, default=0.0)

    def is_zero(self, tol: float = 1e-9) -> bool:
        return (abs(self.objective_delta) <= tol * max(1.0, abs(self.objective_a))
                and self.max_online_delta <= tol and self.max_inertia_delta <= tol)

    def summary(self) -> str:
        ca, cb = self.counts_a, self.counts_b
        lines = [
            f"objective A            {self.objective_a:.6f}",
            f"objective B            {self.objective_b:.6f}",
            f"objective delta (B-A)  {self.objective_delta:.6g} ({self.objective_rel_delta:.3g} rel)",
            f"max |online delta|     {self.max_online_delta:g} units",
            f"max |inertia delta|    {self.max_inertia_delta:g} MW*s",
            f"wall time A / B        {self.time_a:.3f} s / {self.time_b:.3f} s "
            f"(B/A = {self.timing_ratio:.3g})",
            f"variables A / B        {ca.get('variables', '?')} / {cb.get('variables', '?')}",
            f"constraints A / B      {ca.get('rows', '?')} / {cb.get('rows', '?')}",
        ]
        return "\n".join(lines)

    def rows(self):
        """Long-format ``(slot, metric, region, value)`` rows of the per-slot deltas."""
        out = [(t + 1, "online_delta", "", float(v)) for t, v in enumerate(self.online_delta)]
        for r, arr in self.inertia_delta.items():
            out += [(t + 1, "inertia_delta", r, float(v)) for t, v in enumerate(arr)]
        return out


def compare(a, b, network: NetworkModel, plants) -> Comparison:
    """Deltas are ``b - a``."""
    if a.T != b.T:
        raise ValueError(f"results cover different horizons ({a.T} vs {b.T} slots)")
    ha, hb = inertia_timeseries(a, network, plants), inertia_timeseries(b, network, plants)
    diff = b.objective - a.objective
    return Comparison(
        a.objective, b.objective, diff, diff / max(1.0, abs(a.objective)),
        b.online_units() - a.online_units(), {r: hb[r] - ha[r] for r in ha},
        a.wall_time, b.wall_time, _counts(a), _counts(b))


def _counts(r) -> dict:
    c = r.counts or {}
    return {"variables": c.get("variables"), "rows": c.get("constraints"),
            "commitment": c.get("variables_by_group", {}).get("commitment")}
