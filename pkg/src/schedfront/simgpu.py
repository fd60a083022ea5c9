"""Synthetic GPU cost, power, and thermal model.

Stands in for hardware profiling: given a partition and a schedule
(frequency, communication SM allocation, launch timing), produces wall time
and a dynamic/static energy split. The model reproduces the qualitative
phenomena that make schedule optimization interesting:

* an interior sweet spot in communication SM allocation (too few SMs expose
  the communication tail, too many steal SMs from computation),
* memory-bandwidth contention between the communication kernel and
  co-resident memory-bound computation,
* frequency-dependent boundedness: lowering the clock lowers the roofline's
  compute ceiling, so kernels become compute-bound and contend less for
  bandwidth, shifting the energy-optimal launch timing,
* dynamic energy that is schedule-invariant at fixed frequency (compute work
  scaled by (f/f_max)^2, memory and communication work frequency-independent),
  so schedules trade off only time and static energy.

Durations are derived from a roofline: compute time flops/(SMs * per-SM rate
* frequency), memory time bytes/bandwidth, kernel time the max of both.
Communication runs at the interconnect rate scaled by SM allocation up to a
saturation count and does not depend on core frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import KernelSpec, LaunchTiming, Measurement, PartitionSpec, ScheduleConfig


@dataclass(frozen=True)
class GpuModel:
    """Simulator parameters for one GPU.

    ``kappa`` is the cubic dynamic-power coefficient (W per MHz^3), used by
    the constant-frequency energy analysis. ``e_flop_j`` / ``e_byte_j`` /
    ``e_comm_byte_j`` are per-unit dynamic energies; the flop energy applies
    at f_max and scales with (f/f_max)^2.
    """

    num_sms: int = 108
    peak_flops_per_sm_mhz: float = 2.0e9   # FLOP/s contributed per SM per MHz
    mem_bw_gbps: float = 1555.0            # HBM bandwidth, GB/s
    net_bw_gbps: float = 240.0             # interconnect bandwidth at saturation, GB/s
    sm_bw_saturation: int = 8              # SMs at which comm saturates net bandwidth
    p_static_w: float = 60.0
    kappa: float = 1.2e-7                  # W / MHz^3
    f_max_mhz: float = 1410.0
    freq_switch_ms: float = 5.0
    e_flop_j: float = 1.1e-12              # J per flop at f_max
    e_byte_j: float = 1.0e-10              # J per HBM byte
    e_comm_byte_j: float = 2.5e-10         # J per interconnect byte
    overlap_launch_overhead_ms: float = 0.05  # stream setup + sync cost of overlap mode

    def __post_init__(self):
        if self.sm_bw_saturation > self.num_sms:
            raise ValueError("sm_bw_saturation cannot exceed num_sms")
        for name in (
            "num_sms", "peak_flops_per_sm_mhz", "mem_bw_gbps", "net_bw_gbps",
            "sm_bw_saturation", "p_static_w", "kappa", "f_max_mhz",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def mem_bw_bps(self) -> float:
        return self.mem_bw_gbps * 1e9

    @property
    def net_bw_bps(self) -> float:
        return self.net_bw_gbps * 1e9

    def flop_rate(self, sm_count: float, freq_mhz: float) -> float:
        """FLOP/s delivered by ``sm_count`` SMs at ``freq_mhz``."""
        return sm_count * self.peak_flops_per_sm_mhz * freq_mhz

    def comm_rate_bps(self, sm_count: int) -> float:
        return self.net_bw_bps * min(1.0, sm_count / self.sm_bw_saturation)


class InvalidConfigError(ValueError):
    """Schedule configuration is not executable on the given GPU model."""


@dataclass(frozen=True)
class ThermalModel:
    """First-order thermal model: heating proportional to instantaneous power,
    exponential cooling toward ambient. All coefficients zero = thermally
    inert."""

    ambient_c: float = 30.0
    heat_coeff: float = 0.0        # degC per Joule dissipated
    cool_tau_s: float = 0.0        # exponential cooling time constant
    power_temp_coeff: float = 0.0  # fractional power increase per degC above ambient

    def __post_init__(self):
        for name in ("heat_coeff", "cool_tau_s", "power_temp_coeff"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class ProfilingProtocol:
    """Thermally stable measurement protocol: warm up, measure repeatedly over
    a window, then cool down before the next candidate.

    ``counter_quantum_j`` models the energy counter's coarse update interval:
    an absolute error on the window-total reading, so its per-execution effect
    shrinks with the repetition count and short windows read noisy.
    """

    warmup_s: float = 2.0
    window_s: float = 5.0
    cooldown_s: float = 5.0
    noise_std_frac: float = 0.0
    counter_quantum_j: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.window_s <= 0:
            raise ValueError("window_s must be positive")
        if self.cooldown_s < 0 or self.warmup_s < 0:
            raise ValueError("durations must be >= 0")
        if self.noise_std_frac < 0 or self.counter_quantum_j < 0:
            raise ValueError("noise magnitudes must be >= 0")


@dataclass
class ThermalState:
    """Mutable per-GPU state threaded through consecutive measurements."""

    temperature_c: float
    rng: np.random.Generator

    @classmethod
    def new(cls, thermal: ThermalModel, protocol: ProfilingProtocol) -> "ThermalState":
        return cls(thermal.ambient_c, np.random.default_rng(protocol.seed))


def kernel_duration(
    kernel: KernelSpec,
    freq_mhz: float,
    sm_count: int,
    gpu: GpuModel,
    bw_frac: float = 1.0,
) -> float:
    """Roofline duration of one kernel in milliseconds.

    Compute/memory kernels: max of the compute term (scaled by SMs and
    frequency) and the memory term (scaled by the available bandwidth
    fraction). Communication kernels: interconnect-limited, frequency
    independent, saturating in SM count.
    """
    if sm_count < 1:
        raise InvalidConfigError("kernel needs at least one SM")
    if not 0 < bw_frac <= 1:
        raise ValueError("bw_frac must be in (0, 1]")
    if kernel.is_comm:
        return kernel.comm_bytes / gpu.comm_rate_bps(sm_count) * 1e3
    if kernel.flops == 0 and kernel.bytes == 0:
        return 0.0
    t_compute = kernel.flops / gpu.flop_rate(sm_count, freq_mhz) if kernel.flops else 0.0
    t_memory = kernel.bytes / (gpu.mem_bw_bps * bw_frac) if kernel.bytes else 0.0
    return max(t_compute, t_memory) * 1e3


def dynamic_energy(partition: PartitionSpec, freq_mhz: float, gpu: GpuModel) -> float:
    """Schedule-invariant dynamic energy of one partition execution (Joules)."""
    scale = (freq_mhz / gpu.f_max_mhz) ** 2
    e = 0.0
    for k in partition.comp_kernels:
        e += gpu.e_flop_j * k.flops * scale + gpu.e_byte_j * k.bytes
    e += gpu.e_comm_byte_j * partition.comm_kernel.comm_bytes
    return e


def _sequential_makespan(partition: PartitionSpec, freq_mhz: float, gpu: GpuModel) -> float:
    total = sum(
        kernel_duration(k, freq_mhz, gpu.num_sms, gpu) for k in partition.comp_kernels
    )
    # Solo communication uses enough SMs to saturate the interconnect, as
    # NCCL-style kernels tuned for non-concurrent execution do.
    total += kernel_duration(partition.comm_kernel, freq_mhz, gpu.sm_bw_saturation, gpu)
    return total


def _overlap_makespan(
    partition: PartitionSpec,
    freq_mhz: float,
    sm_alloc: int,
    start: int,
    span: int,
    gpu: GpuModel,
) -> float:
    """Event-driven makespan of the overlapped execution (milliseconds).

    Kernels before ``start`` run serially at full SMs; the communication kernel
    launches with kernel ``start`` and holds ``sm_alloc`` SMs until done; the
    kernel after the span (if any) additionally waits for the communication.
    Memory bandwidth is shared in proportion to demand whenever the co-resident
    kernels together want more than the HBM provides.
    """
    n = len(partition.comp_kernels)
    span_eff = min(span, n - start)
    comm = partition.comm_kernel

    t = 0.0  # seconds
    for k in partition.comp_kernels[:start]:
        t += kernel_duration(k, freq_mhz, gpu.num_sms, gpu) / 1e3

    comm_rem = comm.comm_bytes
    comm_rate_full = gpu.comm_rate_bps(sm_alloc)
    for k in partition.comp_kernels[start : start + span_eff]:
        rem_flops = k.flops
        rem_bytes = k.bytes
        while rem_flops > 0 or rem_bytes > 0:
            sms = gpu.num_sms - sm_alloc if comm_rem > 0 else gpu.num_sms
            flop_rate = gpu.flop_rate(sms, freq_mhz)
            # Unconstrained finish time of this kernel at current resources.
            t_unc = 0.0
            if rem_flops > 0:
                t_unc = max(t_unc, rem_flops / flop_rate)
            if rem_bytes > 0:
                t_unc = max(t_unc, rem_bytes / gpu.mem_bw_bps)
            if t_unc == 0.0:
                break
            demand_k = rem_bytes / t_unc if rem_bytes > 0 else 0.0
            demand_c = comm_rate_full if comm_rem > 0 else 0.0
            total_demand = demand_k + demand_c
            scale = gpu.mem_bw_bps / total_demand if total_demand > gpu.mem_bw_bps else 1.0
            byte_rate = demand_k * scale
            comm_rate = demand_c * scale

            t_finish_k = 0.0
            if rem_flops > 0:
                t_finish_k = max(t_finish_k, rem_flops / flop_rate)
            if rem_bytes > 0:
                t_finish_k = max(t_finish_k, rem_bytes / byte_rate)
            dt = t_finish_k
            if comm_rem > 0 and comm_rate > 0:
                dt = min(dt, comm_rem / comm_rate)
            t += dt
            rem_flops = max(0.0, rem_flops - flop_rate * dt)
            rem_bytes = max(0.0, rem_bytes - byte_rate * dt)
            if comm_rem > 0:
                comm_rem = max(0.0, comm_rem - comm_rate * dt)
            if rem_flops <= 1e-9 * max(1.0, k.flops) and rem_bytes <= 1e-9 * max(1.0, k.bytes):
                break

    if comm_rem > 0:
        # Exposed tail: communication finishes alone before later kernels may start.
        t += comm_rem / comm_rate_full

    for k in partition.comp_kernels[start + span_eff :]:
        t += kernel_duration(k, freq_mhz, gpu.num_sms, gpu) / 1e3

    return t * 1e3 + gpu.overlap_launch_overhead_ms


def simulate_schedule(
    partition: PartitionSpec, config: ScheduleConfig, gpu: GpuModel
) -> Measurement:
    """Noise-free, thermally inert execution of one schedule."""
    timing = config.timing
    if not timing.is_sequential:
        if config.sm_alloc >= gpu.num_sms:
            raise InvalidConfigError(
                f"sm_alloc {config.sm_alloc} must leave SMs for computation "
                f"(GPU has {gpu.num_sms})"
            )
        if timing.start >= len(partition.comp_kernels):
            raise InvalidConfigError(
                f"overlap start {timing.start} out of range for "
                f"{len(partition.comp_kernels)} computation kernels"
            )
        makespan = _overlap_makespan(
            partition, config.frequency_mhz, config.sm_alloc, timing.start, timing.span, gpu
        )
    else:
        makespan = _sequential_makespan(partition, config.frequency_mhz, gpu)
    dyn = dynamic_energy(partition, config.frequency_mhz, gpu)
    return Measurement.build(makespan, dyn, gpu.p_static_w)


def _advance_active(
    thermal: ThermalModel, temp_c: float, power_w: float, duration_s: float
) -> tuple[float, float]:
    """Advance temperature through an active phase of constant power.

    Returns (new temperature, integral of (T - ambient) dt over the phase) in
    closed form for dT/dt = heat_coeff * P - (T - ambient)/tau.
    """
    if duration_s <= 0:
        return temp_c, 0.0
    tau = thermal.cool_tau_s
    if tau == 0.0:
        # Instant cooling: temperature pinned at ambient.
        return thermal.ambient_c, 0.0
    rise_ss = thermal.heat_coeff * power_w * tau  # steady-state excess temperature
    excess0 = temp_c - thermal.ambient_c
    decay = math.exp(-duration_s / tau)
    excess = rise_ss + (excess0 - rise_ss) * decay
    integral = rise_ss * duration_s + (excess0 - rise_ss) * tau * (1.0 - decay)
    return thermal.ambient_c + excess, integral


def _advance_cooling(thermal: ThermalModel, temp_c: float, duration_s: float) -> float:
    if duration_s <= 0:
        return temp_c
    tau = thermal.cool_tau_s
    if tau == 0.0:
        return thermal.ambient_c
    excess = (temp_c - thermal.ambient_c) * math.exp(-duration_s / tau)
    return thermal.ambient_c + excess


def measure(
    partition: PartitionSpec,
    config: ScheduleConfig,
    gpu: GpuModel,
    thermal: ThermalModel,
    protocol: ProfilingProtocol,
    state: ThermalState,
) -> Measurement:
    """One thermally-aware, noisy profiling pass over a candidate schedule.

    Warms up (power applied, nothing recorded), executes the schedule
    back-to-back across the measurement window (recorded dynamic energy scaled
    by the temperature-dependent power factor integrated over the window),
    then cools down. Multiplicative Gaussian noise of ``noise_std_frac`` per
    execution applies to time and dynamic energy; averaging over the window's
    repetitions shrinks it by sqrt(repetitions).
    """
    base = simulate_schedule(partition, config, gpu)
    exec_s = base.time_ms / 1e3
    if exec_s <= 0:
        return base

    power_w = base.total_energy_j / exec_s
    temp = state.temperature_c
    temp, _ = _advance_active(thermal, temp, power_w, protocol.warmup_s)

    reps = max(1, int(protocol.window_s // exec_s))
    window_s = reps * exec_s
    temp, heat_integral = _advance_active(thermal, temp, power_w, window_s)
    thermal_factor = 1.0 + thermal.power_temp_coeff * heat_integral / window_s

    sigma = protocol.noise_std_frac / math.sqrt(reps)
    noise_t = state.rng.normal(1.0, sigma)
    noise_e = state.rng.normal(1.0, sigma)
    quantum_e = state.rng.normal(0.0, protocol.counter_quantum_j / reps)

    temp = _advance_cooling(thermal, temp, protocol.cooldown_s)
    state.temperature_c = temp

    return Measurement.build(
        base.time_ms * noise_t,
        base.dyn_energy_j * thermal_factor * noise_e + quantum_e,
        gpu.p_static_w,
    )
