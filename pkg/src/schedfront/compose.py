"""Frontier composition: partitions -> microbatch -> training iteration.

A microbatch executes its partitions sequentially under one shared GPU
frequency, with partitions of the same type sharing an (SM, timing) choice;
its frontier enumerates those combinations. Iteration frontiers come from a
1F1B pipeline emulation where every (stage, microbatch, direction) slot picks
one microbatch-frontier point; idle stages burn static power and frequency
switches between differing microbatches cost a few milliseconds of static
time.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field

from .domain import (
    FrequencyGrid,
    KernelSpec,
    LaunchTiming,
    Measurement,
    ParetoFrontier,
    PartitionSpec,
    ScheduleConfig,
    get_frontier,
)
from .simgpu import GpuModel, simulate_schedule


def fuse_comm_kernels(kernels) -> KernelSpec:
    """Fuse consecutive communication kernels into one that shares an SM
    allocation; transferred bytes add."""
    kernels = list(kernels)
    if not kernels:
        raise ValueError("nothing to fuse")
    if any(not k.is_comm for k in kernels):
        raise ValueError("can only fuse communication kernels")
    if len(kernels) == 1:
        return kernels[0]
    return KernelSpec(
        "+".join(k.name for k in kernels),
        comm_bytes=sum(k.comm_bytes for k in kernels),
    )


def group_memory_bound(kernels) -> tuple[KernelSpec, ...]:
    """Merge maximal consecutive runs of memory-bound kernels into one logical
    kernel (summed flops and bytes), shrinking the launch-timing space."""
    out: list[KernelSpec] = []
    run: list[KernelSpec] = []

    def flush():
        if not run:
            return
        if len(run) == 1:
            out.append(run[0])
        else:
            out.append(
                KernelSpec(
                    "+".join(k.name for k in run),
                    flops=sum(k.flops for k in run),
                    bytes=sum(k.bytes for k in run),
                )
            )
        run.clear()

    for k in kernels:
        if k.is_memory_bound:
            run.append(k)
        else:
            flush()
            out.append(k)
    flush()
    return tuple(out)


@dataclass(frozen=True)
class MicrobatchSpec:
    """Ordered partition types of one microbatch plus per-frequency costs of
    everything outside partitions. ``non_partition_costs`` maps frequency to
    (time_ms, dyn_energy_j); None means no non-partition work."""

    name: str
    partition_sequence: tuple[str, ...]
    non_partition_costs: dict[float, tuple[float, float]] | None = None

    def __post_init__(self):
        object.__setattr__(self, "partition_sequence", tuple(self.partition_sequence))
        if not self.partition_sequence:
            raise ValueError("microbatch needs at least one partition")

    def non_partition_at(self, freq_mhz: float) -> tuple[float, float]:
        if self.non_partition_costs is None:
            return (0.0, 0.0)
        if freq_mhz not in self.non_partition_costs:
            raise KeyError(
                f"non-partition cost table of {self.name!r} is missing "
                f"frequency {freq_mhz}"
            )
        return self.non_partition_costs[freq_mhz]


@dataclass(frozen=True)
class TypeChoice:
    """One partition type's shared (SM, timing) choice at some frequency, with
    its measured per-instance cost."""

    time_ms: float
    dyn_energy_j: float
    config: ScheduleConfig

    def sort_key(self):
        return self.config.sort_key()


@dataclass(frozen=True)
class MicrobatchPoint:
    """Payload of one microbatch-frontier point: the shared frequency and the
    per-type choices that realize it."""

    frequency_mhz: float
    time_ms: float
    dyn_energy_j: float
    total_energy_j: float
    choices: tuple[tuple[str, ScheduleConfig], ...]
    execution_model: str = "overlap"

    def sort_key(self):
        return (
            self.frequency_mhz,
            self.execution_model,
            tuple((n, c.sort_key()) for n, c in self.choices),
        )


PerFrequencyFrontiers = dict[str, dict[float, list[TypeChoice]]]


def build_per_frequency_frontiers(
    rows_by_type: dict[str, list[tuple[ScheduleConfig, Measurement]]],
) -> PerFrequencyFrontiers:
    """Group evaluated rows by frequency and keep each frequency's
    non-dominated (time, dynamic energy) choices. Dominated choices can never
    appear in an optimal shared-config combination, so the pruning is
    lossless."""
    out: PerFrequencyFrontiers = {}
    for type_name, rows in rows_by_type.items():
        by_freq: dict[float, list[tuple[float, float, TypeChoice]]] = {}
        for config, m in rows:
            choice = TypeChoice(m.time_ms, m.dyn_energy_j, config)
            by_freq.setdefault(config.frequency_mhz, []).append(
                (m.time_ms, m.dyn_energy_j, choice)
            )
        out[type_name] = {
            f: [p.payload for p in get_frontier(pts)] for f, pts in by_freq.items()
        }
    return out


def microbatch_frontier(
    spec: MicrobatchSpec,
    partition_frontiers: PerFrequencyFrontiers,
    p_static_w: float,
) -> ParetoFrontier:
    """Compose per-type per-frequency choices into the microbatch's
    (time, total energy) frontier.

    Frequency is uniform across the microbatch; instances of the same type
    share one choice. Composable frequencies are those covered by every
    referenced type.
    """
    counts = Counter(spec.partition_sequence)
    for type_name in counts:
        if type_name not in partition_frontiers or not partition_frontiers[type_name]:
            raise KeyError(f"no frontier available for partition type {type_name!r}")
    type_names = sorted(counts)
    freq_sets = [set(partition_frontiers[t]) for t in type_names]
    freqs = sorted(set.intersection(*freq_sets))
    if not freqs:
        raise ValueError("no frequency is covered by every partition type")

    points: list[tuple[float, float, MicrobatchPoint]] = []
    for f in freqs:
        np_time, np_dyn = spec.non_partition_at(f)
        per_type = [partition_frontiers[t][f] for t in type_names]
        for combo in itertools.product(*per_type):
            time_ms = np_time + sum(
                counts[t] * c.time_ms for t, c in zip(type_names, combo)
            )
            dyn = np_dyn + sum(
                counts[t] * c.dyn_energy_j for t, c in zip(type_names, combo)
            )
            total = dyn + time_ms / 1000.0 * p_static_w
            payload = MicrobatchPoint(
                frequency_mhz=f,
                time_ms=time_ms,
                dyn_energy_j=dyn,
                total_energy_j=total,
                choices=tuple((t, c.config) for t, c in zip(type_names, combo)),
            )
            points.append((time_ms, total, payload))
    return get_frontier(points)


def sequential_microbatch_points(
    spec: MicrobatchSpec,
    partitions: dict[str, PartitionSpec],
    gpu: GpuModel,
    freq_grid: FrequencyGrid,
) -> list[tuple[float, float, MicrobatchPoint]]:
    """Per-frequency fully sequential execution of the whole microbatch,
    usable as execution-model-switch candidates."""
    out = []
    for f in freq_grid.values:
        np_time, np_dyn = spec.non_partition_at(f)
        time_ms, dyn = np_time, np_dyn
        choices = []
        for type_name in sorted(set(spec.partition_sequence)):
            part = partitions[type_name]
            config = ScheduleConfig(f, 1, LaunchTiming.sequential())
            m = simulate_schedule(part, config, gpu)
            mult = sum(1 for t in spec.partition_sequence if t == type_name)
            time_ms += mult * m.time_ms
            dyn += mult * m.dyn_energy_j
            choices.append((type_name, config))
        total = dyn + time_ms / 1000.0 * gpu.p_static_w
        out.append(
            (
                time_ms,
                total,
                MicrobatchPoint(f, time_ms, dyn, total, tuple(choices), "sequential"),
            )
        )
    return out


def execution_model_switch(
    overlap_frontier: ParetoFrontier,
    sequential_points,
) -> ParetoFrontier:
    """Frontier of the union of overlapped-execution candidates and fully
    sequential candidates; whichever model wins at a tradeoff point survives."""
    merged = [(p.time_ms, p.energy_j, p.payload) for p in overlap_frontier]
    merged.extend(sequential_points)
    return get_frontier(merged)


@dataclass(frozen=True)
class PipelineSpec:
    """1F1B pipeline shape. Forward and backward microbatch frontiers are
    supplied per stage when composing."""

    num_stages: int
    num_microbatches: int

    def __post_init__(self):
        if self.num_stages < 1 or self.num_microbatches < 1:
            raise ValueError("pipeline needs >= 1 stage and >= 1 microbatch")

    def stage_op_order(self, stage: int) -> list[tuple[str, int]]:
        """Per-stage op sequence of the 1F1B schedule: warmup forwards, a
        steady one-forward-one-backward phase, then draining backwards."""
        warmup = min(self.num_stages - 1 - stage, self.num_microbatches)
        ops = [("F", m) for m in range(warmup)]
        for m in range(warmup, self.num_microbatches):
            ops.append(("F", m))
            ops.append(("B", m - warmup))
        for m in range(self.num_microbatches - warmup, self.num_microbatches):
            ops.append(("B", m))
        return ops

    def ops(self) -> list[tuple[int, int, str]]:
        return [
            (s, m, d)
            for s in range(self.num_stages)
            for m in range(self.num_microbatches)
            for d in ("F", "B")
        ]


@dataclass(frozen=True)
class PipelineOpChoice:
    """One microbatch execution option: duration, busy total energy, and the
    frequency it runs at (for switch-overhead accounting)."""

    time_ms: float
    energy_j: float
    frequency_mhz: float
    payload: object = None


Assignment = dict[tuple[int, int, str], PipelineOpChoice]


class _PipelineGraph:
    """Static 1F1B dependency structure: per-stage op order plus cross-stage
    activation/gradient edges, topologically sorted once."""

    def __init__(self, pipeline: PipelineSpec):
        self.pipeline = pipeline
        S, M = pipeline.num_stages, pipeline.num_microbatches
        self.stage_orders = [pipeline.stage_op_order(s) for s in range(S)]
        self.op_ids: dict[tuple[int, int, str], int] = {}
        self.id_ops: list[tuple[int, int, str]] = []
        for s in range(S):
            for d, m in self.stage_orders[s]:
                self.op_ids[(s, m, d)] = len(self.id_ops)
                self.id_ops.append((s, m, d))
        n = len(self.id_ops)
        self.preds: list[list[tuple[int, bool]]] = [[] for _ in range(n)]  # (pred, stage_edge)
        for s in range(S):
            prev = None
            for d, m in self.stage_orders[s]:
                cur = self.op_ids[(s, m, d)]
                if prev is not None:
                    self.preds[cur].append((prev, True))
                prev = cur
        for m in range(M):
            for s in range(1, S):
                self.preds[self.op_ids[(s, m, "F")]].append((self.op_ids[(s - 1, m, "F")], False))
            for s in range(S - 2, -1, -1):
                self.preds[self.op_ids[(s, m, "B")]].append((self.op_ids[(s + 1, m, "B")], False))
            self.preds[self.op_ids[(S - 1, m, "B")]].append((self.op_ids[(S - 1, m, "F")], False))
        self.topo = self._topo_sort()
        self.succs: list[list[tuple[int, bool]]] = [[] for _ in range(n)]
        for v, plist in enumerate(self.preds):
            for u, stage_edge in plist:
                self.succs[u].append((v, stage_edge))

    def _topo_sort(self) -> list[int]:
        n = len(self.id_ops)
        indeg = [len(p) for p in self.preds]
        succs = [[] for _ in range(n)]
        for v, plist in enumerate(self.preds):
            for u, _ in plist:
                succs[u].append(v)
        queue = [i for i in range(n) if indeg[i] == 0]
        order = []
        while queue:
            u = queue.pop()
            order.append(u)
            for v in succs[u]:
                indeg[v] -= 1
                if indeg[v] == 0:
                    queue.append(v)
        if len(order) != n:
            raise ValueError("pipeline dependency graph has a cycle")
        return order

    def earliest(self, durations, switch_delay) -> tuple[list[float], float]:
        start = [0.0] * len(self.id_ops)
        for u in self.topo:
            est = 0.0
            for p, stage_edge in self.preds[u]:
                t = start[p] + durations[p] + (switch_delay[(p, u)] if stage_edge else 0.0)
                if t > est:
                    est = t
            start[u] = est
        makespan = max(start[u] + durations[u] for u in range(len(start)))
        return start, makespan

    def latest(self, durations, switch_delay, makespan) -> list[float]:
        finish = [makespan] * len(self.id_ops)
        for u in reversed(self.topo):
            lft = makespan
            for v, stage_edge in self.succs[u]:
                t = finish[v] - durations[v] - (switch_delay[(u, v)] if stage_edge else 0.0)
                if t < lft:
                    lft = t
            finish[u] = lft
        return finish


def simulate_pipeline(
    pipeline: PipelineSpec,
    assignment: Assignment,
    p_static_w: float,
    freq_switch_ms: float = 0.0,
) -> tuple[float, float]:
    """Event-driven 1F1B emulation.

    Iteration time is the dependency-honoring makespan; energy is the sum of
    the assigned microbatch energies plus static power over every stage's
    non-busy time (idle waits and frequency-switch gaps alike).
    """
    graph = _PipelineGraph(pipeline)
    durations = [assignment[op].time_ms for op in graph.id_ops]
    switch_delay = _switch_delays(graph, assignment, freq_switch_ms)
    _, makespan = graph.earliest(durations, switch_delay)
    busy = sum(durations)
    energy = sum(assignment[op].energy_j for op in graph.id_ops)
    energy += p_static_w * (pipeline.num_stages * makespan - busy) / 1000.0
    return makespan, energy


def _switch_delays(graph: _PipelineGraph, assignment: Assignment, freq_switch_ms: float):
    delays: dict[tuple[int, int], float] = {}
    for v, plist in enumerate(graph.preds):
        for u, stage_edge in plist:
            if stage_edge:
                fu = assignment[graph.id_ops[u]].frequency_mhz
                fv = assignment[graph.id_ops[v]].frequency_mhz
                delays[(u, v)] = freq_switch_ms if fu != fv else 0.0
    return delays


@dataclass(frozen=True)
class IterationPoint:
    """One iteration-frontier point: realized time/energy plus the
    per-(stage, microbatch, direction) frontier-point indices behind it."""

    time_ms: float
    energy_j: float
    assignment_idx: tuple[tuple[tuple[int, int, str], int], ...]

    def sort_key(self):
        return self.assignment_idx


MbFrontiers = dict[tuple[int, str], list[PipelineOpChoice]]

EXACT_ENUMERATION_LIMIT = 20_000


def _assignment_from_indices(graph: _PipelineGraph, frontiers: MbFrontiers, idx) -> Assignment:
    return {
        (s, m, d): frontiers[(s, d)][idx[(s, m, d)]]
        for (s, m, d) in graph.id_ops
    }


def iteration_frontier(
    pipeline: PipelineSpec,
    mb_frontiers: MbFrontiers,
    p_static_w: float,
    freq_switch_ms: float = 0.0,
    exact_limit: int = EXACT_ENUMERATION_LIMIT,
) -> list[IterationPoint]:
    """Time-energy frontier over per-(stage, microbatch, direction) choices
    from the microbatch frontiers.

    Small assignment spaces (at most ``exact_limit`` combinations) are
    enumerated exhaustively, which is exact. Larger ones use a time-cost
    tradeoff sweep: start everything at its fastest point, repeatedly relax
    the critical path by the step with the best energy-saved-per-time-added
    ratio, reclaiming slack off the critical path after every step, and
    record each visited schedule. Every returned point is validated by
    ``simulate_pipeline`` on its assignment.
    """
    graph = _PipelineGraph(pipeline)
    for s, m, d in graph.id_ops:
        if not mb_frontiers.get((s, d)):
            raise ValueError(f"missing microbatch frontier for stage {s} direction {d}")

    sizes = {op: len(mb_frontiers[(op[0], op[2])]) for op in graph.id_ops}
    combos = 1
    for n in sizes.values():
        combos *= n
        if combos > exact_limit:
            break

    if combos <= exact_limit:
        recorded = _enumerate_assignments(graph, pipeline, mb_frontiers, p_static_w, freq_switch_ms)
    else:
        recorded = _tradeoff_sweep(graph, pipeline, mb_frontiers, p_static_w, freq_switch_ms)

    frontier = get_frontier((t, e, pt) for t, e, pt in recorded)
    return [p.payload for p in frontier]


def _record(graph, pipeline, frontiers, idx, p_static_w, freq_switch_ms):
    assignment = _assignment_from_indices(graph, frontiers, idx)
    t, e = simulate_pipeline(pipeline, assignment, p_static_w, freq_switch_ms)
    point = IterationPoint(t, e, tuple(sorted(idx.items())))
    return (t, e, point)


def _enumerate_assignments(graph, pipeline, frontiers, p_static_w, freq_switch_ms):
    ops = graph.id_ops
    recorded = []
    for combo in itertools.product(*(range(len(frontiers[(s, d)])) for s, m, d in ops)):
        idx = dict(zip(ops, combo))
        recorded.append(_record(graph, pipeline, frontiers, idx, p_static_w, freq_switch_ms))
    return recorded


def _tradeoff_sweep(graph, pipeline, frontiers, p_static_w, freq_switch_ms):
    ops = graph.id_ops
    idx = {op: 0 for op in ops}

    def durations():
        return [frontiers[(s, d)][idx[(s, m, d)]].time_ms for s, m, d in ops]

    def delays():
        assignment = _assignment_from_indices(graph, frontiers, idx)
        return _switch_delays(graph, assignment, freq_switch_ms)

    def slack_table():
        dur = durations()
        dly = delays()
        start, makespan = graph.earliest(dur, dly)
        finish = graph.latest(dur, dly, makespan)
        return {
            op: finish[i] - (start[i] + dur[i])
            for i, op in enumerate(ops)
        }, makespan

    def reclaim():
        # Move ops off the critical path to the lowest-energy point fitting
        # their slack, one at a time, until no move helps.
        while True:
            slack, _ = slack_table()
            moved = False
            for op in ops:
                s, m, d = op
                options = frontiers[(s, d)]
                cur = idx[op]
                budget = options[cur].time_ms + slack[op] + 1e-9
                best = cur
                for j in range(len(options) - 1, cur, -1):
                    if options[j].time_ms <= budget and options[j].energy_j < options[best].energy_j:
                        best = j
                        break
                if best != cur:
                    idx[op] = best
                    moved = True
                    break
            if not moved:
                return

    recorded = [_record(graph, pipeline, frontiers, idx, p_static_w, freq_switch_ms)]
    reclaim()
    recorded.append(_record(graph, pipeline, frontiers, idx, p_static_w, freq_switch_ms))

    while True:
        slack, _ = slack_table()
        best_op, best_ratio = None, -1.0
        for op in ops:
            s, m, d = op
            options = frontiers[(s, d)]
            cur = idx[op]
            if cur + 1 >= len(options) or slack[op] > 1e-9:
                continue
            dt = options[cur + 1].time_ms - options[cur].time_ms
            de = options[cur].energy_j - options[cur + 1].energy_j
            if dt <= 0:
                continue
            ratio = de / dt
            if ratio > best_ratio:
                best_op, best_ratio = op, ratio
        if best_op is None:
            break
        idx[best_op] += 1
        reclaim()
        recorded.append(_record(graph, pipeline, frontiers, idx, p_static_w, freq_switch_ms))
    return recorded


def prune_choices(choices: list[PipelineOpChoice], max_points: int) -> list[PipelineOpChoice]:
    """Thin a frontier to at most ``max_points`` options, keeping the extremes
    and the interior points contributing the most area."""
    if len(choices) <= max_points:
        return list(choices)
    pts = sorted(choices, key=lambda c: c.time_ms)
    while len(pts) > max_points:
        worst_i, worst_area = None, math.inf
        for i in range(1, len(pts) - 1):
            area = (pts[i + 1].time_ms - pts[i].time_ms) * (pts[i - 1].energy_j - pts[i].energy_j)
            if area < worst_area:
                worst_i, worst_area = i, area
        pts.pop(worst_i)
    return pts
