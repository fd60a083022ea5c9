"""Ground-truth machinery: exhaustive schedule enumeration, the
launch-timing dynamic program over two independent operation sequences, its
closed-form pattern counting, and the constant-frequency energy check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

from .domain import (
    FrequencyGrid,
    KernelSpec,
    LaunchTiming,
    Measurement,
    ParetoFrontier,
    PartitionSpec,
    ScheduleConfig,
    SmGrid,
    get_frontier,
)
from .mbo import DEFAULT_MAX_OVERLAP_SPAN, enumerate_space
from .simgpu import GpuModel, kernel_duration, simulate_schedule

MAX_EXHAUSTIVE_SPACE = 1_000_000


class SpaceTooLargeError(ValueError):
    """Candidate space exceeds the exhaustive-search guard."""


@dataclass
class ExhaustiveResult:
    rows: list[tuple[ScheduleConfig, Measurement]]
    frontier: ParetoFrontier  # (time_ms, dyn_energy_j) with config payloads

    @property
    def eval_count(self) -> int:
        return len(self.rows)

    def total_energy_frontier(self) -> ParetoFrontier:
        return get_frontier((m.time_ms, m.total_energy_j, c) for c, m in self.rows)


def exhaustive_frontier(
    partition: PartitionSpec,
    gpu: GpuModel,
    freq_grid: FrequencyGrid,
    sm_grid: SmGrid,
    max_overlap_span: int = DEFAULT_MAX_OVERLAP_SPAN,
) -> ExhaustiveResult:
    """Evaluate every candidate schedule noise-free and return the exact
    frontier. Guarded against spaces beyond MAX_EXHAUSTIVE_SPACE configs."""
    space = enumerate_space(partition, gpu, freq_grid, sm_grid, max_overlap_span)
    if len(space) > MAX_EXHAUSTIVE_SPACE:
        raise SpaceTooLargeError(
            f"space has {len(space)} configs, exceeding the "
            f"{MAX_EXHAUSTIVE_SPACE}-config exhaustive guard"
        )
    rows = [(c, simulate_schedule(partition, c, gpu)) for c in space]
    frontier = get_frontier((m.time_ms, m.dyn_energy_j, c) for c, m in rows)
    return ExhaustiveResult(rows, frontier)


@dataclass(frozen=True)
class OpSequencePair:
    """Two independent in-order operation sequences; s1 is pure computation,
    s2 contains the (pre-fused) communication. Operations across sequences may
    overlap."""

    s1: tuple[KernelSpec, ...]
    s2: tuple[KernelSpec, ...]
    max_overlap_len: int = 9

    def __post_init__(self):
        object.__setattr__(self, "s1", tuple(self.s1))
        object.__setattr__(self, "s2", tuple(self.s2))
        if not self.s1 or not self.s2:
            raise ValueError("both sequences must be non-empty")
        if any(op.is_comm for op in self.s1):
            raise ValueError("s1 must be a computation sequence")
        for a, b in zip(self.s2, self.s2[1:]):
            if a.is_comm and b.is_comm:
                raise ValueError("consecutive communication ops must be pre-fused")
        if self.max_overlap_len < 0:
            raise ValueError("max_overlap_len must be >= 0")


class SimulatedCost:
    """Cost evaluator backed by the schedule simulator, so the dynamic
    program and the optimizer share one ground truth.

    Serial computation runs at full SMs; serial communication at the
    saturating SM count; an overlap group is simulated as a transient
    partition at this evaluator's (frequency, SM allocation). Energies are
    total energy so unit costs add along a schedule.
    """

    def __init__(self, gpu: GpuModel, freq_mhz: float, sm_alloc: int):
        self.gpu = gpu
        self.freq_mhz = freq_mhz
        self.sm_alloc = sm_alloc
        self._cache: dict = {}

    def single(self, op: KernelSpec) -> tuple[float, float]:
        key = ("single", op)
        if key in self._cache:
            return self._cache[key]
        gpu = self.gpu
        if op.is_comm:
            t = kernel_duration(op, self.freq_mhz, gpu.sm_bw_saturation, gpu)
            dyn = gpu.e_comm_byte_j * op.comm_bytes
        else:
            t = kernel_duration(op, self.freq_mhz, gpu.num_sms, gpu)
            scale = (self.freq_mhz / gpu.f_max_mhz) ** 2
            dyn = gpu.e_flop_j * op.flops * scale + gpu.e_byte_j * op.bytes
        result = (t, dyn + t / 1000.0 * gpu.p_static_w)
        self._cache[key] = result
        return result

    def can_overlap(self, single: KernelSpec, subseq: tuple[KernelSpec, ...]) -> bool:
        # Overlap only pairs communication with computation.
        if single.is_comm:
            return all(not op.is_comm for op in subseq)
        return len(subseq) == 1 and subseq[0].is_comm

    def overlap(self, single: KernelSpec, subseq: tuple[KernelSpec, ...]) -> tuple[float, float]:
        key = ("overlap", single, tuple(subseq))
        if key in self._cache:
            return self._cache[key]
        if single.is_comm:
            comm, comps = single, subseq
        else:
            comm, comps = subseq[0], (single,)
        part = PartitionSpec(comps, comm, name="dp_group")
        config = ScheduleConfig(self.freq_mhz, self.sm_alloc, LaunchTiming.overlap(0, len(comps)))
        m = simulate_schedule(part, config, self.gpu)
        result = (m.time_ms, m.total_energy_j)
        self._cache[key] = result
        return result


def _pareto_min(points: list[tuple[float, float]], cap: int | None) -> list[tuple[float, float]]:
    front = [p.objectives for p in get_frontier(points)]
    if cap is not None and len(front) > cap:
        # Drop interior points contributing the least exclusive area until the
        # cap holds; the extremes always survive.
        while len(front) > cap:
            worst_i, worst_area = None, math.inf
            for i in range(1, len(front) - 1):
                area = (front[i + 1][0] - front[i][0]) * (front[i - 1][1] - front[i][1])
                if area < worst_area:
                    worst_i, worst_area = i, area
            front.pop(worst_i)
    return front


def dp_launch_frontier(
    pair: OpSequencePair,
    cost,
    state_cap: int | None = 64,
) -> ParetoFrontier:
    """Time-energy frontier over all launch-timing schedules of the pair.

    A schedule is a sequence of units, each either one op run serially or an
    overlap group (one op of one sequence against a contiguous subsequence of
    the other, capped at ``max_overlap_len``); in-order execution within each
    sequence is preserved and everything after a group waits for the whole
    group. The memoized recurrence takes the Pareto-minimal union of the four
    transition families at every (i, j) state.
    """
    s1, s2 = pair.s1, pair.s2
    n1, n2 = len(s1), len(s2)
    cap = pair.max_overlap_len

    @lru_cache(maxsize=None)
    def solve(i: int, j: int) -> tuple[tuple[float, float], ...]:
        if i == n1 and j == n2:
            return ((0.0, 0.0),)
        options: list[tuple[float, float]] = []

        def extend(unit_cost, tail):
            ut, ue = unit_cost
            options.extend((ut + t, ue + e) for t, e in tail)

        if i < n1:
            extend(cost.single(s1[i]), solve(i + 1, j))
        if j < n2:
            extend(cost.single(s2[j]), solve(i, j + 1))
        if i < n1:
            for k in range(1, min(cap, n2 - j) + 1):
                subseq = s2[j : j + k]
                if cost.can_overlap(s1[i], subseq):
                    extend(cost.overlap(s1[i], subseq), solve(i + 1, j + k))
        if j < n2:
            for k in range(1, min(cap, n1 - i) + 1):
                subseq = s1[i : i + k]
                if cost.can_overlap(s2[j], subseq):
                    extend(cost.overlap(s2[j], subseq), solve(i + k, j + 1))
        return tuple(_pareto_min(options, state_cap))

    return get_frontier(solve(0, 0))


def count_subproblems(pair: OpSequencePair) -> tuple[int, int]:
    """Closed-form size of the launch-timing space under the
    communication-x-computation restriction.

    Overlap patterns: each communication op may start at any of the other
    sequence's computation positions with any overlap length up to
    min(cap, #computations). Non-overlapped cases are the order-preserving
    interleavings of the two sequences.
    """
    cap = pair.max_overlap_len
    patterns = 0
    for seq, other in ((pair.s1, pair.s2), (pair.s2, pair.s1)):
        n_comp_other = sum(1 for op in other if not op.is_comm)
        for op in seq:
            if op.is_comm:
                patterns += n_comp_other * min(cap, n_comp_other)
    serial = math.comb(len(pair.s1) + len(pair.s2), len(pair.s1))
    return patterns, patterns + serial


@dataclass(frozen=True)
class FreqTrace:
    """Piecewise-constant frequency trace: (frequency_mhz, duration_s)
    segments."""

    segments: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple((float(f), float(d)) for f, d in self.segments))
        if not self.segments:
            raise ValueError("trace must have at least one segment")
        if any(f <= 0 for f, _ in self.segments):
            raise ValueError("frequencies must be positive")
        if any(d < 0 for _, d in self.segments) or self.duration_s <= 0:
            raise ValueError("durations must be non-negative with positive total")

    @property
    def duration_s(self) -> float:
        return sum(d for _, d in self.segments)

    @property
    def mean_freq_mhz(self) -> float:
        return sum(f * d for f, d in self.segments) / self.duration_s


@dataclass(frozen=True)
class ConstantFrequencyReport:
    e_fluct_j: float
    e_const_j: float
    f_bar_mhz: float
    holds: bool
    equality: bool


def check_constant_frequency(
    trace: FreqTrace, kappa: float, p_s: float, rel_tol: float = 1e-12
) -> ConstantFrequencyReport:
    """Compare a fluctuating frequency trace against running constantly at its
    time-average frequency for the same duration.

    With dynamic power kappa * f^3 and constant static power, convexity of the
    cube makes the constant schedule consume no more total energy; equality
    holds only for constant traces.
    """
    T = trace.duration_s
    f_bar = trace.mean_freq_mhz
    e_fluct = kappa * sum(f**3 * d for f, d in trace.segments) + p_s * T
    e_const = kappa * T * f_bar**3 + p_s * T
    holds = e_const <= e_fluct * (1.0 + rel_tol)
    equality = abs(e_fluct - e_const) <= rel_tol * max(e_fluct, e_const)
    return ConstantFrequencyReport(e_fluct, e_const, f_bar, holds, equality)
