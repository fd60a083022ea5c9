"""Core value types: kernels, partitions, schedule configurations, measurements,
and the 2-D (time, energy) Pareto frontier that every other module produces or
consumes.

Units are fixed package-wide: milliseconds for time, Joules for energy,
MHz for frequency. All types here are immutable and safe to share.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

# Arithmetic intensity (flops per byte) below which a kernel with no
# communication traffic is labeled memory-bound. Set near the machine balance
# of the default GPU model at max frequency.
MEMORY_BOUND_INTENSITY = 150.0


@dataclass(frozen=True)
class FrequencyGrid:
    """Ascending grid of core frequencies in MHz."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise ValueError("frequency grid must be non-empty")
        if any(v <= 0 for v in vals):
            raise ValueError("frequencies must be positive")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("frequency grid must be strictly ascending")

    @classmethod
    def default(cls) -> "FrequencyGrid":
        # 900..1410 MHz, stride 30: 18 values.
        return cls(tuple(float(f) for f in range(900, 1411, 30)))

    @property
    def min(self) -> float:
        return self.values[0]

    @property
    def max(self) -> float:
        return self.values[-1]

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class SmGrid:
    """Ascending grid of SM counts allocatable to the communication kernel."""

    values: tuple[int, ...]

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise ValueError("SM grid must be non-empty")
        if any(v < 1 for v in vals):
            raise ValueError("SM counts must be >= 1")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("SM grid must be strictly ascending")

    @classmethod
    def default_for_group(cls, comm_group_size: int) -> "SmGrid":
        """1..20 stride 1 for small comm groups, 3..30 stride 3 for groups >= 4."""
        if comm_group_size < 4:
            return cls(tuple(range(1, 21)))
        return cls(tuple(range(3, 31, 3)))

    @property
    def min(self) -> int:
        return self.values[0]

    @property
    def max(self) -> int:
        return self.values[-1]

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class LaunchTiming:
    """When the communication kernel is launched relative to the computation
    sequence.

    ``sequential()`` runs everything serially (the baseline execution model).
    ``overlap(start, span)`` co-launches the communication kernel with
    computation kernel ``start``; the next ``span`` computation kernels may run
    concurrently with it, and the first kernel after the span (if any) waits
    for the communication to complete. A span reaching the end of the sequence
    is plain launch-and-forget overlap.
    """

    sequential_flag: bool
    start: int = 0
    span: int = 0

    def __post_init__(self):
        if not self.sequential_flag:
            if self.start < 0:
                raise ValueError("overlap start must be >= 0")
            if self.span < 1:
                raise ValueError("overlap span must be >= 1")

    @classmethod
    def sequential(cls) -> "LaunchTiming":
        return cls(True)

    @classmethod
    def overlap(cls, start: int, span: int) -> "LaunchTiming":
        return cls(False, start, span)

    @property
    def is_sequential(self) -> bool:
        return self.sequential_flag

    def sort_key(self) -> tuple[int, int, int]:
        if self.sequential_flag:
            return (0, 0, 0)
        return (1, self.start, self.span)

    def encode(self) -> str:
        return "seq" if self.sequential_flag else f"ov{self.start}x{self.span}"

    @classmethod
    def decode(cls, text: str) -> "LaunchTiming":
        if text == "seq":
            return cls.sequential()
        if not text.startswith("ov") or "x" not in text:
            raise ValueError(f"bad launch timing encoding: {text!r}")
        start, span = text[2:].split("x", 1)
        return cls.overlap(int(start), int(span))

    def __str__(self) -> str:
        return self.encode()


@dataclass(frozen=True)
class ScheduleConfig:
    """One candidate execution schedule: frequency, communication SM
    allocation, and launch timing. ``sm_alloc`` is ignored when the timing is
    sequential."""

    frequency_mhz: float
    sm_alloc: int
    timing: LaunchTiming

    def __post_init__(self):
        if self.frequency_mhz <= 0:
            raise ValueError("frequency must be positive")
        if self.sm_alloc < 1:
            raise ValueError("sm_alloc must be >= 1")

    def sort_key(self) -> tuple:
        return (self.frequency_mhz, self.sm_alloc) + self.timing.sort_key()


@dataclass(frozen=True)
class KernelSpec:
    """One kernel's resource footprint. Compute/memory kernels carry flops and
    bytes; communication kernels carry interconnect bytes. At most one side may
    be non-zero."""

    name: str
    flops: float = 0.0
    bytes: float = 0.0
    comm_bytes: float = 0.0

    def __post_init__(self):
        if self.flops < 0 or self.bytes < 0 or self.comm_bytes < 0:
            raise ValueError("kernel work amounts must be non-negative")
        if self.comm_bytes > 0 and (self.flops > 0 or self.bytes > 0):
            raise ValueError(
                f"kernel {self.name!r} mixes computation and communication work"
            )

    @property
    def kind(self) -> str:
        if self.comm_bytes > 0:
            return "communication"
        if self.flops < MEMORY_BOUND_INTENSITY * self.bytes:
            return "memory-bound"
        return "compute-bound"

    @property
    def is_comm(self) -> bool:
        return self.comm_bytes > 0

    @property
    def is_memory_bound(self) -> bool:
        return self.kind == "memory-bound"


@dataclass(frozen=True)
class PartitionSpec:
    """One communication kernel overlapped against the ordered computation
    kernels of the other nanobatch. The unit of local schedule optimization."""

    comp_kernels: tuple[KernelSpec, ...]
    comm_kernel: KernelSpec
    comm_group_size: int = 1
    name: str = "partition"

    def __post_init__(self):
        object.__setattr__(self, "comp_kernels", tuple(self.comp_kernels))
        if not self.comp_kernels:
            raise ValueError("partition needs at least one computation kernel")
        if any(k.is_comm for k in self.comp_kernels):
            raise ValueError("computation sequence must not contain comm kernels")
        if not self.comm_kernel.is_comm:
            raise ValueError("comm_kernel must carry communication work")
        if self.comm_group_size < 1:
            raise ValueError("comm_group_size must be >= 1")

    @property
    def partition_class(self) -> str:
        n = len(self.comp_kernels)
        if n == 1:
            return "small"
        if n <= 3:
            return "medium"
        return "large"


@dataclass(frozen=True)
class Measurement:
    """Wall time and the energy split of one evaluated schedule.

    ``total_energy_j == dyn_energy_j + static_energy_j`` holds exactly; use
    :meth:`build` so static energy is derived from time and static power.
    """

    time_ms: float
    dyn_energy_j: float
    static_energy_j: float
    total_energy_j: float

    @classmethod
    def build(cls, time_ms: float, dyn_energy_j: float, p_static_w: float) -> "Measurement":
        static = time_ms / 1000.0 * p_static_w
        return cls(time_ms, dyn_energy_j, static, dyn_energy_j + static)


def dominates(p: tuple[float, float], q: tuple[float, float]) -> bool:
    """True iff p is at least as good as q in both objectives and strictly
    better in one (minimization)."""
    return p[0] <= q[0] and p[1] <= q[1] and (p[0] < q[0] or p[1] < q[1])


@dataclass(frozen=True)
class FrontierPoint:
    time_ms: float
    energy_j: float
    payload: Any = None

    @property
    def objectives(self) -> tuple[float, float]:
        return (self.time_ms, self.energy_j)


def _payload_order(payload: Any, fallback: int):
    if payload is None:
        return (1, fallback)
    key = getattr(payload, "sort_key", None)
    if callable(key):
        return (0, key())
    return (1, fallback)


@dataclass(frozen=True)
class ParetoFrontier:
    """Non-dominated set of (time, energy) points, sorted by time ascending.

    Construct via :func:`get_frontier`; direct construction validates the
    frontier invariants (time strictly ascending, energy strictly descending).
    """

    points: tuple[FrontierPoint, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        pts = self.points
        for a, b in zip(pts, pts[1:]):
            if not (a.time_ms < b.time_ms and a.energy_j > b.energy_j):
                raise ValueError(
                    "frontier must be strictly ascending in time and "
                    "strictly descending in energy"
                )

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def objectives(self) -> list[tuple[float, float]]:
        return [p.objectives for p in self.points]

    @property
    def min_time(self) -> FrontierPoint:
        return self.points[0]

    @property
    def min_energy(self) -> FrontierPoint:
        return self.points[-1]


def get_frontier(
    points: Iterable[tuple[float, float] | tuple[float, float, Any] | FrontierPoint],
) -> ParetoFrontier:
    """Non-dominated subset of ``points``, duplicates collapsed.

    Points may be (time, energy) pairs, (time, energy, payload) triples, or
    FrontierPoints. Among points with identical objectives, the one whose
    payload sorts first (via its ``sort_key``, falling back to insertion
    order) is kept.
    """
    normalized: list[FrontierPoint] = []
    for item in points:
        if isinstance(item, FrontierPoint):
            normalized.append(item)
        elif len(item) == 2:
            normalized.append(FrontierPoint(float(item[0]), float(item[1])))
        else:
            normalized.append(FrontierPoint(float(item[0]), float(item[1]), item[2]))
    if not normalized:
        return ParetoFrontier(())

    order = sorted(
        range(len(normalized)),
        key=lambda i: (
            normalized[i].time_ms,
            normalized[i].energy_j,
            _payload_order(normalized[i].payload, i),
        ),
    )
    kept: list[FrontierPoint] = []
    best_energy = float("inf")
    for i in order:
        p = normalized[i]
        # Sorted by time then energy: a point is dominated iff some earlier
        # kept point has energy <= ours. Equal-objective duplicates lose too.
        if p.energy_j < best_energy:
            kept.append(p)
            best_energy = p.energy_j
    return ParetoFrontier(tuple(kept))
