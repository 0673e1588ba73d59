"""Joint downlink power minimization and BS-user association for multi-cell
massive MIMO with non-coherent joint transmission and MRT precoding."""

from .channel import (
    ChannelStats,
    NetworkScenario,
    channel_stats,
    estimation_quality,
    large_scale_fading,
    load_scenario,
    path_loss_db,
    save_scenario,
)
from .harness import SweepSpec, default_scenario, emit_results, run_drop, run_sweep
from .lp import LinearProgram, LpSolution, LpStatus
from .lp import solve as lp_solve
from .lp import verify as lp_verify
from .maxmin import BisectionConfig, MaxMinResult, auto_upper_bound, solve_max_min
from .mc_oracle import McConfig, estimate_sinr_terms, mrt_precoder, sample_channel_pair
from .power_assoc import (
    AssociationMap,
    PowerMinProblem,
    PowerMinResult,
    association_rule_check,
    build_lp,
    solve_max_snr,
    solve_power_min,
)
from .se import (
    PowerAllocation,
    QosTargets,
    qos_to_threshold,
    se_mrt,
    se_mrt_all,
    sinr_mrt,
    sinr_mrt_all,
    threshold_to_qos,
)

__version__ = "0.1.0"
