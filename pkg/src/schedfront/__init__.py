"""schedfront: time-energy Pareto frontiers for GPU execution schedules.

A desk-scale stack for studying joint optimization of GPU frequency,
communication SM allocation, and kernel launch timing: a synthetic
cost/power/thermal simulator, multi-pass multi-objective Bayesian
optimization per partition, and composition of partition frontiers into
microbatch and training-iteration frontiers, all validated against
exhaustive oracles.
"""

from .domain import (
    FrequencyGrid,
    FrontierPoint,
    KernelSpec,
    LaunchTiming,
    Measurement,
    ParetoFrontier,
    PartitionSpec,
    ScheduleConfig,
    SmGrid,
    dominates,
    get_frontier,
)
from .pareto import RefPoint, compute_ref_point, hvi, hypervolume
from .simgpu import (
    GpuModel,
    InvalidConfigError,
    ProfilingProtocol,
    ThermalModel,
    ThermalState,
    kernel_duration,
    measure,
    simulate_schedule,
)

__all__ = [
    "FrequencyGrid",
    "FrontierPoint",
    "GpuModel",
    "InvalidConfigError",
    "KernelSpec",
    "LaunchTiming",
    "Measurement",
    "ParetoFrontier",
    "PartitionSpec",
    "ProfilingProtocol",
    "RefPoint",
    "ScheduleConfig",
    "SmGrid",
    "ThermalModel",
    "ThermalState",
    "compute_ref_point",
    "dominates",
    "get_frontier",
    "hvi",
    "hypervolume",
    "kernel_duration",
    "measure",
    "simulate_schedule",
]

__version__ = "0.1.0"
