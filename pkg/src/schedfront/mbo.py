"""Multi-pass multi-objective Bayesian optimization over one partition's
schedule space.

Each batch fits time and dynamic-energy surrogates on everything measured so
far, scores every unevaluated candidate with three hypervolume-improvement
acquisitions (total, dynamic, and static energy against predicted time) plus
a bootstrap-ensemble uncertainty score, evaluates the selected batch on the
simulator, and stops early once the relative hypervolume gain flattens out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import (
    FrequencyGrid,
    LaunchTiming,
    Measurement,
    ParetoFrontier,
    PartitionSpec,
    ScheduleConfig,
    SmGrid,
    get_frontier,
)
from .pareto import RefPoint, clamp_to_box, compute_ref_point, hvi, hypervolume
from .rng import substream, substream_seed
from .simgpu import GpuModel, ProfilingProtocol, ThermalModel, ThermalState, kernel_duration, measure
from .surrogate import FeatureContext, GbtHyper, fit, fit_ensemble, uncertainty

PASS_INIT = "init"
PASS_TOTAL = "total"
PASS_DYNAMIC = "dynamic"
PASS_STATIC = "static"
PASS_UNCERTAINTY = "uncertainty"

DEFAULT_MAX_OVERLAP_SPAN = 9


@dataclass(frozen=True)
class MboHyperparams:
    n_init: int = 48
    b_max: int = 4
    batch_k: int = 16
    pass_fractions: tuple[float, float, float, float] = (0.4, 0.2, 0.2, 0.2)
    ensemble_m: int = 5
    bootstrap_fraction: float = 0.8
    stop_window_r: int = 2
    stop_eps: float = 1e-3
    seed: int = 0
    gbt: GbtHyper = field(default_factory=GbtHyper)

    def __post_init__(self):
        if abs(sum(self.pass_fractions) - 1.0) > 1e-9:
            raise ValueError("pass fractions must sum to 1")

    @classmethod
    def for_partition(cls, partition: PartitionSpec, seed: int = 0) -> "MboHyperparams":
        cls_defaults = {
            "small": (36, 3, 16),
            "medium": (48, 4, 16),
            "large": (96, 4, 32),
        }[partition.partition_class]
        n_init, b_max, batch_k = cls_defaults
        return cls(n_init=n_init, b_max=b_max, batch_k=batch_k, seed=seed)


def hvi_pass_quotas(batch_k: int, fractions) -> tuple[int, int, int]:
    """Per-pass quotas for the three HVI passes: floor of each fraction; the
    uncertainty pass absorbs the remainder (its quota is k - |selected|)."""
    return tuple(int(math.floor(f * batch_k)) for f in fractions[:3])


def should_stop(rel_improvements: list[float], window_r: int, eps: float) -> bool:
    """Moving average of the relative HV improvement over the last ``window_r``
    batches fell below ``eps``."""
    if len(rel_improvements) < window_r:
        return False
    recent = rel_improvements[-window_r:]
    return sum(recent) / window_r < eps


def enumerate_space(
    partition: PartitionSpec,
    gpu: GpuModel,
    freq_grid: FrequencyGrid,
    sm_grid: SmGrid,
    max_overlap_span: int = DEFAULT_MAX_OVERLAP_SPAN,
) -> list[ScheduleConfig]:
    """All valid schedule candidates: the Cartesian product of frequencies,
    SM allocations, and launch timings, plus one sequential config per
    frequency.

    Timing options are (start, span) pairs with span capped at
    min(max_overlap_span, #kernels). Start positions from which even the
    longest possible computation window (lowest frequency, fewest compute
    SMs) cannot cover the communication kernel's fastest duration always
    expose communication and are excluded.
    """
    if sm_grid.max >= gpu.num_sms:
        raise ValueError("SM grid exceeds the GPU's SM count")
    n = len(partition.comp_kernels)
    span_max = min(max_overlap_span, n)

    comm_min_ms = kernel_duration(partition.comm_kernel, freq_grid.min, sm_grid.max, gpu)
    comp_sms = max(1, gpu.num_sms - sm_grid.max)
    suffix_ms = 0.0
    windows = [0.0] * n
    for i in range(n - 1, -1, -1):
        suffix_ms += kernel_duration(partition.comp_kernels[i], freq_grid.min, comp_sms, gpu)
        windows[i] = suffix_ms
    starts = [i for i in range(n) if windows[i] >= comm_min_ms]

    configs: list[ScheduleConfig] = []
    if span_max >= 1:
        for f in freq_grid.values:
            for sm in sm_grid.values:
                for start in starts:
                    for span in range(1, span_max + 1):
                        configs.append(
                            ScheduleConfig(f, sm, LaunchTiming.overlap(start, span))
                        )
    for f in freq_grid.values:
        configs.append(ScheduleConfig(f, sm_grid.min, LaunchTiming.sequential()))
    return configs


@dataclass
class EvalRecord:
    config: ScheduleConfig
    measurement: Measurement
    batch: int
    pass_label: str


@dataclass
class EvaluatedDataset:
    """Measured rows plus the full candidate space; no config is ever
    evaluated twice."""

    candidate_space: list[ScheduleConfig]
    records: list[EvalRecord] = field(default_factory=list)

    def __post_init__(self):
        self._evaluated: set[ScheduleConfig] = {r.config for r in self.records}

    def add(self, record: EvalRecord):
        if record.config in self._evaluated:
            raise ValueError(f"config evaluated twice: {record.config}")
        self.records.append(record)
        self._evaluated.add(record.config)

    def is_evaluated(self, config: ScheduleConfig) -> bool:
        return config in self._evaluated

    def unevaluated(self) -> list[ScheduleConfig]:
        return [c for c in self.candidate_space if c not in self._evaluated]

    def measured_objectives(self) -> tuple[np.ndarray, np.ndarray]:
        times = np.array([r.measurement.time_ms for r in self.records])
        dyns = np.array([r.measurement.dyn_energy_j for r in self.records])
        return times, dyns


def select_batch(
    models,
    ensembles,
    dataset: EvaluatedDataset,
    hyper: MboHyperparams,
    p_static_w: float,
    ctx: FeatureContext,
) -> list[tuple[ScheduleConfig, str]]:
    """Multi-pass selection of up to batch_k unevaluated candidates.

    Three TopK passes over predicted hypervolume improvement (total, dynamic,
    static energy), each skipping already-chosen configs, then the remainder
    filled by TopK ensemble uncertainty.
    """
    model_t, model_e = models
    candidates = dataset.unevaluated()
    if not candidates:
        return []
    X = ctx.encode_many(candidates)
    t_hat = model_t.predict(X)
    e_hat = model_e.predict(X)

    times, dyns = dataset.measured_objectives()
    statics = times / 1000.0 * p_static_w
    totals = dyns + statics
    pred_static = t_hat / 1000.0 * p_static_w

    variant_preds = {
        PASS_TOTAL: (totals, pred_static + e_hat),
        PASS_DYNAMIC: (dyns, e_hat),
        PASS_STATIC: (statics, pred_static),
    }

    order_keys = [c.sort_key() for c in candidates]
    chosen: list[tuple[ScheduleConfig, str]] = []
    chosen_idx: set[int] = set()

    def take_top(scores: np.ndarray, quota: int, label: str, require_positive: bool = False):
        eligible = (
            i
            for i in range(len(candidates))
            if i not in chosen_idx and not (require_positive and scores[i] <= 0.0)
        )
        ranked = sorted(eligible, key=lambda i: (-scores[i], order_keys[i]))
        for i in ranked[:quota]:
            chosen_idx.add(i)
            chosen.append((candidates[i], label))

    quotas = hvi_pass_quotas(hyper.batch_k, hyper.pass_fractions)
    for (label, (observed_e, pred_e)), quota in zip(variant_preds.items(), quotas):
        pts = list(zip(times, observed_e))
        ref = compute_ref_point(pts)
        frontier = get_frontier(pts)
        scores = np.array(
            [hvi(frontier, (t_hat[i], pred_e[i]), ref) for i in range(len(candidates))]
        )
        # Zero improvement means the frontier already covers the prediction;
        # such candidates fall through to the uncertainty pass.
        take_top(scores, quota, label, require_positive=True)

    remaining = hyper.batch_k - len(chosen)
    if remaining > 0:
        ens_t, ens_e = ensembles
        unc = uncertainty(ens_t, ens_e, X)
        take_top(unc, remaining, PASS_UNCERTAINTY)
    return chosen


@dataclass
class MboResult:
    partition_name: str
    records: list[EvalRecord]
    frontier: ParetoFrontier  # (time_ms, dyn_energy_j) with ScheduleConfig payloads
    hv_history: list[float]   # normalized HV after init and after each batch
    rel_improvements: list[float]
    batches_run: int
    stopped_early: bool
    space_size: int
    p_static_w: float

    def total_energy_frontier(self) -> ParetoFrontier:
        """The (time, total energy) view of the same measurements."""
        return get_frontier(
            (r.measurement.time_ms, r.measurement.total_energy_j, r.config)
            for r in self.records
        )

    def record_for(self, config: ScheduleConfig) -> EvalRecord:
        for r in self.records:
            if r.config == config:
                return r
        raise KeyError(config)


def _normalized_hv(rows: list[tuple[float, float]], bounds) -> float:
    (t_min, t_max), (e_min, e_max) = bounds
    t_span = (t_max - t_min) or 1.0
    e_span = (e_max - e_min) or 1.0
    pts = [((t - t_min) / t_span, (e - e_min) / e_span) for t, e in rows]
    return hypervolume(get_frontier(pts), RefPoint(1.1, 1.1))


def run_mbo(
    partition: PartitionSpec,
    gpu: GpuModel,
    thermal: ThermalModel,
    protocol: ProfilingProtocol,
    hyper: MboHyperparams,
    freq_grid: FrequencyGrid | None = None,
    sm_grid: SmGrid | None = None,
    max_overlap_span: int = DEFAULT_MAX_OVERLAP_SPAN,
) -> MboResult:
    """Optimize one partition; returns the (time, dynamic energy) frontier of
    everything actually measured, with per-evaluation provenance."""
    freq_grid = freq_grid or FrequencyGrid.default()
    sm_grid = sm_grid or SmGrid.default_for_group(partition.comm_group_size)
    space = enumerate_space(partition, gpu, freq_grid, sm_grid, max_overlap_span)
    if not space:
        raise ValueError("candidate space is empty")
    ctx = FeatureContext.from_space(freq_grid, sm_grid, min(max_overlap_span, len(partition.comp_kernels)))
    dataset = EvaluatedDataset(candidate_space=space)
    state = ThermalState.new(thermal, protocol)

    def evaluate(config: ScheduleConfig, batch: int, label: str):
        m = measure(partition, config, gpu, thermal, protocol, state)
        dataset.add(EvalRecord(config, m, batch, label))

    if hyper.n_init >= len(space):
        for config in space:
            evaluate(config, 0, PASS_INIT)
        return _finalize(partition, dataset, [], [], 0, False, gpu)

    rng = substream(hyper.seed, "mbo", partition.name, "init")
    init_idx = rng.choice(len(space), size=hyper.n_init, replace=False)
    for i in sorted(init_idx):
        evaluate(space[i], 0, PASS_INIT)

    times, dyns = dataset.measured_objectives()
    bounds = ((times.min(), times.max()), (dyns.min(), dyns.max()))
    hv_history = [_normalized_hv(list(zip(times, dyns)), bounds)]
    rel_improvements: list[float] = []
    batches_run = 0
    stopped_early = False

    for b in range(1, hyper.b_max + 1):
        X = ctx.encode_many([r.config for r in dataset.records])
        times, dyns = dataset.measured_objectives()
        model_t = fit(X, times, hyper.gbt)
        model_e = fit(X, dyns, hyper.gbt)
        seed_t = int(substream_seed(hyper.seed, "mbo", partition.name, "ens_t", b).generate_state(1)[0])
        seed_e = int(substream_seed(hyper.seed, "mbo", partition.name, "ens_e", b).generate_state(1)[0])
        ens_t = fit_ensemble(X, times, hyper.ensemble_m, hyper.bootstrap_fraction, seed_t, hyper.gbt)
        ens_e = fit_ensemble(X, dyns, hyper.ensemble_m, hyper.bootstrap_fraction, seed_e, hyper.gbt)

        batch = select_batch((model_t, model_e), (ens_t, ens_e), dataset, hyper, gpu.p_static_w, ctx)
        if not batch:
            break
        prev_rows = list(zip(*dataset.measured_objectives()))
        for config, label in batch:
            evaluate(config, b, label)
        batches_run = b

        times, dyns = dataset.measured_objectives()
        bounds = ((times.min(), times.max()), (dyns.min(), dyns.max()))
        hv_prev = _normalized_hv(prev_rows, bounds)
        hv_new = _normalized_hv(list(zip(times, dyns)), bounds)
        hv_history.append(hv_new)
        rel = (hv_new - hv_prev) / hv_prev if hv_prev > 0 else float("inf")
        rel_improvements.append(rel)
        if should_stop(rel_improvements, hyper.stop_window_r, hyper.stop_eps):
            stopped_early = True
            break

    return _finalize(partition, dataset, hv_history, rel_improvements, batches_run, stopped_early, gpu)


def _finalize(partition, dataset, hv_history, rel_improvements, batches_run, stopped_early, gpu):
    frontier = get_frontier(
        (r.measurement.time_ms, r.measurement.dyn_energy_j, r.config) for r in dataset.records
    )
    return MboResult(
        partition_name=partition.name,
        records=dataset.records,
        frontier=frontier,
        hv_history=hv_history,
        rel_improvements=rel_improvements,
        batches_run=batches_run,
        stopped_early=stopped_early,
        space_size=len(dataset.candidate_space),
        p_static_w=gpu.p_static_w,
    )


def frontier_pass_attribution(result: MboResult) -> dict[str, int]:
    """How many final-frontier points each selection pass discovered."""
    counts = {label: 0 for label in (PASS_INIT, PASS_TOTAL, PASS_DYNAMIC, PASS_STATIC, PASS_UNCERTAINTY)}
    for point in result.frontier:
        counts[result.record_for(point.payload).pass_label] += 1
    return counts
