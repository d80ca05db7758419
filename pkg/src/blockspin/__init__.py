"""Two-block Ising model on a random directed communication graph."""

from .errors import ConfigError, ResourceLimitError
from .exact import (
    CompleteModel,
    MagnetizationLaw,
    concentration_report,
    enumerate_gibbs,
    log_partition_complete,
    log_partition_random,
    relative_entropy,
    sandwich_check,
)
from .experiment import ExperimentConfig, TraceSummary, run_experiment, summarize, sweep
from .glauber import (
    ChainState,
    MagnetizationTrace,
    detailed_balance_check,
    flip_probability,
    run_chain,
    stationarity_residual,
)
from .glauber import sweep as glauber_sweep
from .graph import BlockGraph, GraphSequence, edge_counts, gen_graph, gen_nested
from .hamiltonian import (
    LinkCounts,
    Magnetization,
    ModelParams,
    energy_complete,
    energy_gap_bound,
    energy_random,
    energy_random_rewrite,
    link_counts,
    magnetization,
)
from .meanfield import (
    Phase,
    PhaseDiagnosis,
    classify_phase,
    cw_fixed_point,
    free_energy_variational,
    rate_function,
    rate_minimizers,
)

__version__ = "0.1.0"

__all__ = [
    "BlockGraph",
    "ChainState",
    "classify_phase",
    "CompleteModel",
    "concentration_report",
    "ConfigError",
    "cw_fixed_point",
    "detailed_balance_check",
    "edge_counts",
    "energy_complete",
    "energy_gap_bound",
    "energy_random",
    "energy_random_rewrite",
    "enumerate_gibbs",
    "ExperimentConfig",
    "flip_probability",
    "free_energy_variational",
    "gen_graph",
    "gen_nested",
    "glauber_sweep",
    "GraphSequence",
    "link_counts",
    "LinkCounts",
    "log_partition_complete",
    "log_partition_random",
    "magnetization",
    "Magnetization",
    "MagnetizationLaw",
    "MagnetizationTrace",
    "ModelParams",
    "Phase",
    "PhaseDiagnosis",
    "rate_function",
    "rate_minimizers",
    "relative_entropy",
    "ResourceLimitError",
    "run_chain",
    "run_experiment",
    "sandwich_check",
    "stationarity_residual",
    "summarize",
    "sweep",
    "TraceSummary",
]
