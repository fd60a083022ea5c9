"""Acceptance suite: one test per criterion, each printing a PASS line with
its measured numbers once the assertions at the stated tolerances hold.

Run with `pytest tests/test_acceptance.py -v -rA` (or -s) to see the
per-criterion lines.
"""

import itertools
import json
import time

import numpy as np
import pytest

from schedfront.cli import (
    EXIT_OK,
    cmd_compare,
    cmd_optimize,
    thermal_cooldown_sweep,
    thermal_window_sweep,
)
from schedfront.compose import (
    MicrobatchSpec,
    PipelineOpChoice,
    PipelineSpec,
    TypeChoice,
    iteration_frontier,
    microbatch_frontier,
    simulate_pipeline,
)
from schedfront.domain import (
    FrequencyGrid,
    KernelSpec,
    LaunchTiming,
    PartitionSpec,
    ScheduleConfig,
    SmGrid,
    get_frontier,
)
from schedfront.frontier_io import FrontierRow, write_frontier_csv
from schedfront.mbo import MboHyperparams, enumerate_space, run_mbo
from schedfront.oracle import (
    FreqTrace,
    OpSequencePair,
    SimulatedCost,
    check_constant_frequency,
    count_subproblems,
    dp_launch_frontier,
    exhaustive_frontier,
)
from schedfront.pareto import RefPoint, compute_ref_point, hypervolume
from schedfront.simgpu import ProfilingProtocol, ThermalModel, simulate_schedule
from schedfront.workloads import (
    attention_partition,
    default_gpu,
    interference_partition,
    mlp_partition,
    reduced_grids,
    small_partition,
)

GPU = default_gpu()
INERT_THERMAL = ThermalModel()


def quiet_protocol(seed):
    return ProfilingProtocol(warmup_s=0.0, window_s=5.0, cooldown_s=0.0,
                             noise_std_frac=0.0, seed=seed)


# Reference MBO setups: exhaustive space sizes stay under 600 configurations.
REFERENCE_SETUPS = {
    "small": (small_partition, FrequencyGrid.default(), SmGrid.default_for_group(4), 9),
    "medium": (mlp_partition, *reduced_grids(), 3),
    "large": (attention_partition, *reduced_grids(), 2),
}


def test_criterion_01_search_space_counting():
    started = time.time()
    comps = tuple(KernelSpec(f"op{i}", flops=1.0e11, bytes=1.0e7) for i in range(9))
    comm = KernelSpec("allreduce", comm_bytes=1.0e6)  # small: no start excluded
    partition = PartitionSpec(comps, comm, comm_group_size=8)
    freqs = FrequencyGrid(tuple(float(f) for f in range(900, 1411, 15)))  # 35
    sms = SmGrid(tuple(range(1, 31)))  # 30
    space = enumerate_space(partition, GPU, freqs, sms, max_overlap_span=9)
    overlap = [c for c in space if not c.timing.is_sequential]
    assert len(overlap) == 85_050

    pair = OpSequencePair(comps, (comm,), max_overlap_len=9)
    assert count_subproblems(pair) == (81, 91)
    elapsed = time.time() - started
    assert elapsed < 1.0
    print(f"ACCEPTANCE 1 PASS: 85050 overlap configs, subproblems (81, 91), {elapsed:.2f}s")


def test_criterion_02_constant_frequency_theorem():
    started = time.time()
    rng = np.random.default_rng(20240)
    checked = equalities = 0
    for i in range(10_000):
        k = int(rng.integers(1, 9))
        freqs = rng.uniform(500.0, 2000.0, size=k)
        if i % 100 == 0:
            freqs[:] = freqs[0]  # sprinkle constant traces among the fuzz
        durs = rng.uniform(0.01, 5.0, size=k)
        rep = check_constant_frequency(
            FreqTrace(tuple(zip(freqs, durs))), kappa=1.2e-7, p_s=60.0, rel_tol=1e-12
        )
        assert rep.holds
        constant = len(set(freqs.tolist())) == 1
        if rep.equality:
            assert constant
            equalities += 1
        elif constant:
            pytest.fail("constant trace must reach equality")
        checked += 1
    assert equalities >= 100
    elapsed = time.time() - started
    assert elapsed < 5.0
    print(f"ACCEPTANCE 2 PASS: {checked} traces hold, {equalities} exact equalities, {elapsed:.2f}s")


def _brute_force_launch(pair, cost):
    results = []

    def rec(i, j, t, e):
        n1, n2 = len(pair.s1), len(pair.s2)
        if i == n1 and j == n2:
            results.append((t, e))
            return
        if i < n1:
            dt, de = cost.single(pair.s1[i])
            rec(i + 1, j, t + dt, e + de)
        if j < n2:
            dt, de = cost.single(pair.s2[j])
            rec(i, j + 1, t + dt, e + de)
        if i < n1:
            for k in range(1, min(pair.max_overlap_len, n2 - j) + 1):
                sub = pair.s2[j : j + k]
                if cost.can_overlap(pair.s1[i], sub):
                    dt, de = cost.overlap(pair.s1[i], sub)
                    rec(i + 1, j + k, t + dt, e + de)
        if j < n2:
            for k in range(1, min(pair.max_overlap_len, n1 - i) + 1):
                sub = pair.s1[i : i + k]
                if cost.can_overlap(pair.s2[j], sub):
                    dt, de = cost.overlap(pair.s2[j], sub)
                    rec(i + k, j + 1, t + dt, e + de)

    rec(0, 0, 0.0, 0.0)
    return get_frontier(results)


def _frontier_sets_match(a, b, tol=1e-9):
    def close(x, y):
        return abs(x[0] - y[0]) <= tol * max(1.0, abs(y[0])) and abs(
            x[1] - y[1]
        ) <= tol * max(1.0, abs(y[1]))

    pa, pb = a.objectives(), b.objectives()
    return all(any(close(x, y) for y in pb) for x in pa) and all(
        any(close(y, x) for x in pa) for y in pb
    )


def test_criterion_03_dp_oracle_equivalence():
    started = time.time()
    rng = np.random.default_rng(77)
    for trial in range(50):
        n1 = int(rng.integers(1, 5))
        n2 = int(rng.integers(1, 5))
        s1 = tuple(
            KernelSpec(f"t{trial}c{i}", flops=GPU.flop_rate(GPU.num_sms, GPU.f_max_mhz)
                       * float(rng.uniform(0.2, 2.0)) / 1e3,
                       bytes=float(rng.uniform(1e7, 3e8)))
            for i in range(n1)
        )
        s2_ops = [KernelSpec(f"t{trial}ar", comm_bytes=GPU.net_bw_bps * float(rng.uniform(0.2, 2.0)) / 1e3)]
        s2_ops += [
            KernelSpec(f"t{trial}d{i}", flops=GPU.flop_rate(GPU.num_sms, GPU.f_max_mhz)
                       * float(rng.uniform(0.2, 1.0)) / 1e3)
            for i in range(n2 - 1)
        ]
        rng.shuffle(s2_ops)
        pair = OpSequencePair(s1, tuple(s2_ops), max_overlap_len=int(rng.integers(1, 5)))
        cost = SimulatedCost(
            GPU, float(rng.choice([900.0, 1110.0, 1410.0])), int(rng.integers(2, 20))
        )
        dp = dp_launch_frontier(pair, cost, state_cap=None)
        bf = _brute_force_launch(pair, cost)
        assert _frontier_sets_match(dp, bf), f"trial {trial} mismatch"
    elapsed = time.time() - started
    assert elapsed < 30.0
    print(f"ACCEPTANCE 3 PASS: 50 random pairs, DP == brute force at 1e-9, {elapsed:.2f}s")


def test_criterion_04_composition_oracle_equivalence():
    started = time.time()
    rng = np.random.default_rng(4040)

    # 10 microbatch instances vs brute-force product enumeration.
    for trial in range(10):
        freqs = [1000.0, 1200.0, 1400.0][: int(rng.integers(1, 4))]
        types = [f"t{i}" for i in range(int(rng.integers(1, 4)))]
        per_freq = {
            t: {
                f: [
                    TypeChoice(
                        float(rng.uniform(1, 5)),
                        float(rng.uniform(1, 5)),
                        ScheduleConfig(f, int(rng.integers(1, 20)), LaunchTiming.overlap(0, 1)),
                    )
                    for _ in range(int(rng.integers(1, 4)))
                ]
                for f in freqs
            }
            for t in types
        }
        seq = tuple(rng.choice(types) for _ in range(int(rng.integers(1, 5))))
        np_costs = {f: (float(rng.uniform(0, 2)), float(rng.uniform(0, 2))) for f in freqs}
        spec = MicrobatchSpec(f"mb{trial}", seq, np_costs)
        got = microbatch_frontier(spec, per_freq, 60.0)

        counts = {t: seq.count(t) for t in set(seq)}
        names = sorted(counts)
        brute = []
        combos = 0
        for f in freqs:
            for combo in itertools.product(*(range(len(per_freq[t][f])) for t in names)):
                combos += 1
                t_sum, e_sum = np_costs[f]
                for t, ci in zip(names, combo):
                    c = per_freq[t][f][ci]
                    t_sum += counts[t] * c.time_ms
                    e_sum += counts[t] * c.dyn_energy_j
                brute.append((t_sum, e_sum + t_sum / 1000.0 * 60.0))
        assert combos <= 10_000
        expected = get_frontier(brute)
        assert _frontier_sets_match(
            get_frontier([p.objectives for p in got]), expected, tol=1e-12
        )

    # 10 iteration instances vs brute-force assignment enumeration.
    for trial in range(10):
        S = int(rng.integers(1, 3))
        M = int(rng.integers(1, 3))
        pipe = PipelineSpec(S, M)
        frontiers = {}
        for s in range(S):
            for d in "FB":
                n = int(rng.integers(2, 4))
                times = np.sort(rng.uniform(1.0, 4.0, n))
                energies = np.sort(rng.uniform(1.0, 4.0, n))[::-1]
                fs = rng.choice([1100.0, 1250.0, 1400.0], n)
                frontiers[(s, d)] = [
                    PipelineOpChoice(float(t), float(e), float(f))
                    for t, e, f in zip(times, energies, fs)
                ]
        ops = pipe.ops()
        combos = int(np.prod([len(frontiers[(s, d)]) for s, m, d in ops]))
        assert combos <= 10_000
        pts = iteration_frontier(pipe, frontiers, 30.0, freq_switch_ms=2.0)
        brute = []
        for combo in itertools.product(*(range(len(frontiers[(s, d)])) for s, m, d in ops)):
            asg = {op: frontiers[(op[0], op[2])][c] for op, c in zip(ops, combo)}
            brute.append(simulate_pipeline(pipe, asg, 30.0, 2.0))
        expected = get_frontier(brute)
        got = get_frontier([(p.time_ms, p.energy_j) for p in pts])
        assert got.objectives() == expected.objectives()

    elapsed = time.time() - started
    assert elapsed < 60.0
    print(f"ACCEPTANCE 4 PASS: 10 microbatch + 10 iteration instances match brute force, {elapsed:.2f}s")


def _reference_exhaustive(cls):
    make, freqs, sms, cap = REFERENCE_SETUPS[cls]
    part = make()
    res = exhaustive_frontier(part, GPU, freqs, sms, cap)
    assert res.eval_count <= 600
    ref = compute_ref_point([(m.time_ms, m.dyn_energy_j) for _, m in res.rows])
    return part, freqs, sms, cap, res, ref


def test_criterion_05_mbo_quality():
    started = time.time()
    lines = []
    for cls in ("small", "medium", "large"):
        part, freqs, sms, cap, exact, ref = _reference_exhaustive(cls)
        hv_exact = hypervolume(exact.frontier, ref)
        budget = {"small": 36 + 3 * 16, "medium": 48 + 4 * 16, "large": 96 + 4 * 32}[cls]
        wins = 0
        for seed in range(10):
            res = run_mbo(
                part, GPU, INERT_THERMAL, quiet_protocol(seed),
                MboHyperparams.for_partition(part, seed=seed), freqs, sms, cap,
            )
            assert len(res.records) <= budget
            hv = hypervolume(get_frontier(p.objectives for p in res.frontier), ref)
            wins += hv >= 0.95 * hv_exact
        assert wins >= 9, f"{cls}: only {wins}/10 seeds reached 0.95x exhaustive HV"
        lines.append(f"{cls} {wins}/10 (space {exact.eval_count}, budget {budget})")
    elapsed = time.time() - started
    assert elapsed < 600.0
    print(f"ACCEPTANCE 5 PASS: {'; '.join(lines)}, {elapsed:.1f}s")


def test_criterion_06_mbo_sample_efficiency():
    started = time.time()
    part, freqs, sms, cap, exact, ref = _reference_exhaustive("large")
    hv_exact = hypervolume(exact.frontier, ref)
    res = run_mbo(
        part, GPU, INERT_THERMAL, quiet_protocol(0),
        MboHyperparams.for_partition(part, seed=0), freqs, sms, cap,
    )
    first_reach = None
    rows = []
    for i, rec in enumerate(res.records):
        rows.append((rec.measurement.time_ms, rec.measurement.dyn_energy_j))
        if hypervolume(get_frontier(rows), ref) >= 0.95 * hv_exact:
            first_reach = i + 1
            break
    limit = 0.30 * exact.eval_count
    assert first_reach is not None and first_reach <= limit
    elapsed = time.time() - started
    assert elapsed < 300.0
    print(
        f"ACCEPTANCE 6 PASS: 0.95x exhaustive HV after {first_reach} evals "
        f"(<= {limit:.0f} = 30% of {exact.eval_count}), {elapsed:.1f}s"
    )


def test_criterion_07_simulator_phenomena():
    started = time.time()
    # (a) interior SM sweet spot on the attention-like partition.
    part = attention_partition()
    n = len(part.comp_kernels)
    timings = [LaunchTiming.overlap(i, s) for i in range(n) for s in range(1, n + 1)]
    grid = list(range(1, 21))
    best_energy = [
        min(
            simulate_schedule(part, ScheduleConfig(GPU.f_max_mhz, sm, tm), GPU).total_energy_j
            for tm in timings
        )
        for sm in grid
    ]
    argmin = int(np.argmin(best_energy))
    assert 0 < argmin < len(grid) - 1
    sweet = grid[argmin]

    # (b) energy-optimal launch timing flips between f_max and 0.78 f_max.
    part_b = interference_partition()
    nb = len(part_b.comp_kernels)
    timings_b = [LaunchTiming.sequential()] + [
        LaunchTiming.overlap(i, s) for i in range(nb) for s in range(1, nb + 1)
    ]

    def argmin_timing(freq):
        scored = [
            (simulate_schedule(part_b, ScheduleConfig(freq, 8, tm), GPU).total_energy_j, tm)
            for tm in timings_b
        ]
        return min(scored, key=lambda se: (se[0], se[1].sort_key()))[1]

    t_hi = argmin_timing(GPU.f_max_mhz)
    t_lo = argmin_timing(0.78 * GPU.f_max_mhz)
    assert t_hi != t_lo

    # (c) dynamic energy schedule-invariant at fixed frequency within 1e-9.
    f = 1200.0
    dyns = [
        simulate_schedule(part, ScheduleConfig(f, sm, tm), GPU).dyn_energy_j
        for sm in (2, 8, 20)
        for tm in timings + [LaunchTiming.sequential()]
    ]
    assert max(dyns) - min(dyns) <= 1e-9 * max(dyns)
    elapsed = time.time() - started
    assert elapsed < 60.0
    print(
        f"ACCEPTANCE 7 PASS: sweet spot at {sweet} SMs (interior), timing flip "
        f"{t_hi} -> {t_lo}, dyn spread {(max(dyns)-min(dyns))/max(dyns):.2e}, {elapsed:.1f}s"
    )


def test_criterion_08_hypervolume_vs_monte_carlo():
    started = time.time()
    rng = np.random.default_rng(808)
    worst = 0.0
    for trial in range(200):
        n = int(rng.integers(1, 30))
        pts = get_frontier([tuple(map(float, p)) for p in rng.random((n, 2))])
        ref = RefPoint(1.2, 1.2)
        hv = hypervolume(pts, ref)
        xs = rng.uniform(0.0, ref.time_ms, 1_000_000)
        ys = rng.uniform(0.0, ref.energy_j, 1_000_000)
        arr = pts.objectives()
        t = np.array([p[0] for p in arr])
        e = np.array([p[1] for p in arr])
        idx = np.searchsorted(t, xs, side="right") - 1
        dominated = (idx >= 0) & (e[np.clip(idx, 0, None)] <= ys)
        mc = dominated.mean() * ref.time_ms * ref.energy_j
        rel = abs(hv - mc) / hv
        worst = max(worst, rel)
        assert rel < 0.01
    elapsed = time.time() - started
    assert elapsed < 30.0
    print(f"ACCEPTANCE 8 PASS: 200 frontiers vs 1e6-sample MC, worst rel err {worst:.4%}, {elapsed:.1f}s")


def test_criterion_09_thermal_protocol():
    started = time.time()
    window = thermal_window_sweep(seed=0)
    stds = window["energy_std"]
    assert all(b < a for a, b in zip(stds, stds[1:])), stds
    cooldown = thermal_cooldown_sweep(seed=0)
    means = cooldown["energy_mean"]
    assert all(b <= a * (1 + 2e-3) for a, b in zip(means, means[1:])), means
    assert abs(means[-1] - means[-2]) <= 2e-3 * means[-1]
    elapsed = time.time() - started
    assert elapsed < 120.0
    print(
        f"ACCEPTANCE 9 PASS: window stds {['%.4f' % s for s in stds]} nonincreasing; "
        f"cooldown means plateau at {means[-1]:.3f} J, {elapsed:.1f}s"
    )


def test_criterion_10_iso_metric_arithmetic(tmp_path):
    started = time.time()
    fa = tmp_path / "a.csv"
    fb = tmp_path / "b.csv"
    write_frontier_csv(fa, [FrontierRow(10.0, 80.0, 100.0, None, None, "seq", "hand")])
    write_frontier_csv(
        fb,
        [
            FrontierRow(10.0, 60.0, 80.0, None, None, "seq", "hand"),
            FrontierRow(8.0, 80.0, 100.0, None, None, "seq", "hand"),
        ],
    )
    assert cmd_compare(out_dir=tmp_path / "o1", frontier_a=fa, frontier_b=fb) == EXIT_OK
    report = json.loads((tmp_path / "o1" / "comparison.json").read_text())
    assert report["iso_time_energy_reduction_pct"] == pytest.approx(20.0, abs=1e-9)
    assert report["iso_energy_time_reduction_pct"] == pytest.approx(20.0, abs=1e-9)

    assert cmd_compare(out_dir=tmp_path / "o2", frontier_a=fa, frontier_b=fa) == EXIT_OK
    self_report = json.loads((tmp_path / "o2" / "comparison.json").read_text())
    assert self_report["iso_time_energy_reduction_pct"] == 0.0
    assert self_report["iso_energy_time_reduction_pct"] == 0.0
    elapsed = time.time() - started
    assert elapsed < 1.0
    print(f"ACCEPTANCE 10 PASS: iso metrics 20%/20% and 0%/0%, {elapsed:.2f}s")


def test_criterion_11_cli_determinism(tmp_path):
    started = time.time()
    config = {
        "seed": 11,
        "protocol": {"warmup_s": 0.5, "window_s": 5.0, "cooldown_s": 1.0, "noise_std_frac": 0.01},
        "thermal": {"ambient_c": 30.0, "heat_coeff": 0.05, "cool_tau_s": 1.0, "power_temp_coeff": 0.003},
        "freq_grid_mhz": [1110.0, 1260.0, 1410.0],
        "max_overlap_span": 2,
        "partitions": {
            "attn": {
                "comp_kernels": [
                    {"name": "norm", "flops": 5.0e8, "bytes": 4.0e8},
                    {"name": "qkv", "flops": 4.64e11, "bytes": 3.6e8},
                    {"name": "proj", "flops": 1.55e11, "bytes": 1.7e8},
                ],
                "comm_kernels": [{"name": "ar", "comm_bytes": 3.0e8}],
                "comm_group_size": 4,
                "sm_grid": [4, 8, 12],
            }
        },
        "microbatches": {"fwd": {"partition_sequence": ["attn", "attn"]}},
        "pipeline": {"num_stages": 2, "num_microbatches": 2, "forward": "fwd", "backward": "fwd"},
        "mbo": {"n_init": 12, "b_max": 2, "batch_k": 6},
    }
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(config))
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert cmd_optimize(cfg, out1) == EXIT_OK
    assert cmd_optimize(cfg, out2) == EXIT_OK
    compared = 0
    for p1 in sorted(out1.rglob("*")):
        if not p1.is_file() or p1.suffix not in (".csv", ".json", ".jsonl"):
            continue
        p2 = out2 / p1.relative_to(out1)
        assert p1.read_bytes() == p2.read_bytes(), p1.name
        compared += 1
    assert compared >= 5
    elapsed = time.time() - started
    assert elapsed < 300.0
    print(f"ACCEPTANCE 11 PASS: {compared} CSV/JSON outputs byte-identical across reruns, {elapsed:.1f}s")
