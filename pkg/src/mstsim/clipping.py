"""Plan-time removal of ramp and minimum up/down rows that cannot bind."""

from __future__ import annotations

from dataclasses import dataclass, field

RAMP_UP, RAMP_DOWN, MIN_UP, MIN_DOWN = "ramp_up", "ramp_down", "min_up", "min_down"
CLIPPABLE = (RAMP_UP, RAMP_DOWN, MIN_UP, MIN_DOWN)


@dataclass
class ClippingReport:
    emitted: dict[str, int] = field(default_factory=lambda: {g: 0 for g in CLIPPABLE})
    clipped: dict[str, int] = field(default_factory=lambda: {g: 0 for g in CLIPPABLE})
    total_with: int = 0  # all model rows after clipping
    total_without: int = 0

    @property
    def clipped_total(self) -> int:
        return sum(self.clipped.values())

    @property
    def reduction_pct(self) -> float:
        if not self.total_without:
            return 0.0
        return 100.0 * (self.total_without - self.total_with) / self.total_without

    def to_dict(self) -> dict:
        return {
            "emitted": dict(self.emitted), "clipped": dict(self.clipped),
            "total_with": self.total_with, "total_without": self.total_without,
            "reduction_pct": self.reduction_pct,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClippingReport":
        return cls(dict(d["emitted"]), dict(d["clipped"]), d["total_with"], d["total_without"])


def ramp_binding(rate, p_max: float, dt: float) -> bool:
    """A ramp row can bind only if the per-slot ramp ``rate*dt`` is below rated power."""
    return rate is not None and rate * dt < p_max


def mudt_binding(slots: int) -> bool:
    return slots > 1


def clip_plan(plants, dt: float, T: int = 1, blocks_per_plant=None):
    """Return ``(exclusions, report)``.

    ``exclusions`` holds ``(plant_id, group)`` pairs whose rows are never built.
    Report counts assume ``T`` slots and ``blocks_per_plant[g.id]`` commitment
    blocks (1 per plant unless given), so they match what assembly emits.
    """
    exclusions: set[tuple[str, str]] = set()
    report = ClippingReport()
    for g in plants:
        if not g.synchronous:
            continue
        n = T * (blocks_per_plant or {}).get(g.id, 1)
        keep = {
            RAMP_UP: ramp_binding(g.ramp_up, g.p_max, dt),
            RAMP_DOWN: ramp_binding(g.ramp_down, g.p_max, dt),
            MIN_UP: mudt_binding(g.min_up),
            MIN_DOWN: mudt_binding(g.min_down),
        }
        for group, kept in keep.items():
            if group in (RAMP_UP, RAMP_DOWN) and getattr(g, group) is None:
                continue  # no limit at all, so no row either way
            if kept:
                report.emitted[group] += n
            else:
                exclusions.add((g.id, group))
                report.clipped[group] += n
    return exclusions, report
