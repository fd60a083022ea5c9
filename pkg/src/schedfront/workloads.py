"""Reference GPU models and partitions used by tests and demos.

Kernel sizes are desk-scale stand-ins for a transformer block at microbatch
size 8, sequence length 4K, tensor-parallel degree 4: big tensor-core GEMMs,
short memory-bound elementwise kernels, and an activation-sized AllReduce.
Constants are calibrated to reproduce orderings (sweet spots, contention,
frequency-dependent optima), not absolute hardware numbers.
"""

from __future__ import annotations

from .domain import FrequencyGrid, KernelSpec, PartitionSpec, SmGrid
from .simgpu import GpuModel, ProfilingProtocol, ThermalModel


def default_gpu() -> GpuModel:
    return GpuModel()


def default_thermal() -> ThermalModel:
    """Thermal constants sized so a 400 W load settles ~20 degC above ambient
    and a 5 s cooldown returns within 1% of ambient."""
    return ThermalModel(
        ambient_c=30.0,
        heat_coeff=0.05,
        cool_tau_s=1.0,
        power_temp_coeff=0.003,
    )


def inert_protocol(seed: int = 0) -> ProfilingProtocol:
    """Noise-free protocol; with a zero-coefficient ThermalModel, measure()
    reproduces simulate_schedule() exactly."""
    return ProfilingProtocol(warmup_s=0.0, window_s=5.0, cooldown_s=0.0,
                             noise_std_frac=0.0, seed=seed)


def attention_partition() -> PartitionSpec:
    """Five-kernel attention-like partition: two short memory-bound kernels
    interleaved with three compute-bound ones, overlapped against the other
    nanobatch's AllReduce."""
    return PartitionSpec(
        comp_kernels=(
            KernelSpec("norm", flops=5.0e8, bytes=4.0e8),
            KernelSpec("linear_qkv", flops=4.64e11, bytes=3.6e8),
            KernelSpec("rope", flops=3.0e8, bytes=2.0e8),
            KernelSpec("attention_core", flops=4.1e11, bytes=1.2e8),
            KernelSpec("linear_proj", flops=1.55e11, bytes=1.7e8),
        ),
        comm_kernel=KernelSpec("allreduce", comm_bytes=3.0e8),
        comm_group_size=4,
        name="attn_ar",
    )


def mlp_partition() -> PartitionSpec:
    """Three-kernel MLP-like partition (medium class)."""
    return PartitionSpec(
        comp_kernels=(
            KernelSpec("norm", flops=5.0e8, bytes=4.0e8),
            KernelSpec("linear_up", flops=6.2e11, bytes=4.2e8),
            KernelSpec("linear_down", flops=3.1e11, bytes=2.6e8),
        ),
        comm_kernel=KernelSpec("allreduce", comm_bytes=3.0e8),
        comm_group_size=4,
        name="mlp_ar",
    )


def small_partition() -> PartitionSpec:
    """Single-GEMM partition (small class)."""
    return PartitionSpec(
        comp_kernels=(KernelSpec("linear", flops=6.1e11, bytes=3.0e8),),
        comm_kernel=KernelSpec("allreduce", comm_bytes=4.2e8),
        comm_group_size=4,
        name="linear_ar",
    )


def interference_partition() -> PartitionSpec:
    """Two-kernel partition for the launch-timing interference study: one
    memory-bound kernel whose bandwidth demand contends with the AllReduce,
    followed by one long compute-bound GEMM. The energy-optimal launch timing
    flips between max frequency and 0.78x max frequency."""
    return PartitionSpec(
        comp_kernels=(
            KernelSpec("fused_norm", flops=3.0e10, bytes=1.4e9),
            KernelSpec("linear", flops=4.5e11, bytes=1.0e8),
        ),
        comm_kernel=KernelSpec("allreduce", comm_bytes=4.6e8),
        comm_group_size=4,
        name="interference",
    )


def reference_partition(partition_class: str) -> PartitionSpec:
    if partition_class == "small":
        return small_partition()
    if partition_class == "medium":
        return mlp_partition()
    if partition_class == "large":
        return attention_partition()
    raise ValueError(f"unknown partition class {partition_class!r}")


def reduced_grids() -> tuple[FrequencyGrid, SmGrid]:
    """Grids small enough that exhaustive search stays under a few hundred
    configurations; used by oracle-vs-MBO comparisons."""
    freqs = FrequencyGrid(tuple(float(f) for f in range(910, 1411, 100)))  # 6 values
    sms = SmGrid(tuple(range(2, 21, 2)))  # 10 values
    return freqs, sms
