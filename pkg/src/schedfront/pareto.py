"""2-D dominated hypervolume and hypervolume improvement for minimization.

The hypervolume of a frontier w.r.t. a reference point r is the area of the
region dominated by the frontier inside the box bounded by r. Hypervolume
improvement (HVI) of a candidate is the area it would add.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .domain import ParetoFrontier, dominates, get_frontier


@dataclass(frozen=True)
class RefPoint:
    """Reference corner for hypervolume; must be weakly worse than every
    observed point."""

    time_ms: float
    energy_j: float

    def as_tuple(self) -> tuple[float, float]:
        return (self.time_ms, self.energy_j)


def compute_ref_point(observations: Iterable[tuple[float, float]]) -> RefPoint:
    """Reference point at 1.1x the worst observed time and energy."""
    obs = list(observations)
    if not obs:
        raise ValueError("cannot compute a reference point from no observations")
    return RefPoint(1.1 * max(t for t, _ in obs), 1.1 * max(e for _, e in obs))


def hypervolume(frontier: ParetoFrontier | Sequence[tuple[float, float]], r: RefPoint) -> float:
    """Dominated area of ``frontier`` bounded by ``r`` (sorted-sweep sum)."""
    if isinstance(frontier, ParetoFrontier):
        pts = frontier.objectives()
    else:
        pts = [(float(t), float(e)) for t, e in frontier]
    if not pts:
        return 0.0
    for t, e in pts:
        if t > r.time_ms or e > r.energy_j:
            raise ValueError(f"point ({t}, {e}) lies outside the reference box {r}")
    pts.sort()
    hv = 0.0
    for i, (t, e) in enumerate(pts):
        t_next = pts[i + 1][0] if i + 1 < len(pts) else r.time_ms
        hv += (r.energy_j - e) * (t_next - t)
    return hv


def clamp_to_box(point: tuple[float, float], r: RefPoint) -> tuple[float, float]:
    return (min(point[0], r.time_ms), min(point[1], r.energy_j))


def hvi(frontier: ParetoFrontier, candidate: tuple[float, float], r: RefPoint) -> float:
    """Hypervolume gained by adding ``candidate`` to ``frontier``.

    Candidates beyond the reference box are clamped to its boundary and
    contribute zero; dominated candidates contribute zero.
    """
    ct, ce = clamp_to_box(candidate, r)
    base = frontier.objectives()
    if any(dominates(p, (ct, ce)) or p == (ct, ce) for p in base):
        return 0.0
    # Area of the candidate's rectangle not already covered: sweep only over
    # the part of the frontier inside the candidate's rectangle.
    hv_before = hypervolume(frontier, r)
    hv_after = hypervolume(get_frontier(base + [(ct, ce)]), r)
    gain = hv_after - hv_before
    return max(gain, 0.0)
