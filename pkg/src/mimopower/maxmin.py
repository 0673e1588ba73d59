"""Weighted max-min SE optimization by bisection over feasibility LPs.

Feasibility of a candidate level xi (targets xi_k = w_k * xi) is monotone,
so a bisection over [0, xi_upper] converges linearly; the returned
allocation is the solution of the last feasible probe, whose candidate is
exactly the final lower bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelStats, NetworkScenario
from .power_assoc import AssociationMap, PowerMinResult, solve_max_snr, solve_power_min
from .se import PowerAllocation, QosTargets, spectral_efficiency


@dataclass(frozen=True)
class BisectionConfig:
    """Line-search accuracy ``delta`` in bit/symbol; bounds auto-size when unset."""

    xi_upper_init: float | None = None
    delta: float = 0.01
    max_iters: int | None = None

    def __post_init__(self):
        if self.delta <= 0.0:
            raise ValueError("delta must be positive")
        if self.max_iters is not None and self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")


def expected_iterations(xi_range: float, delta: float) -> int:
    """Bisection count: smallest n with range / 2^n <= delta."""
    if xi_range <= delta:
        return 0
    return math.ceil(math.log2(xi_range / delta))


def auto_upper_bound(stats: ChannelStats, scenario: NetworkScenario, weights) -> float:
    """A provably infeasible-or-boundary SE level.

    Grants every user full power from every BS and drops all interference,
    which upper-bounds any achievable weighted SE; the result is nudged up
    by 1e-6 relative so the bisection starts outside the feasible range.
    """
    weights = np.asarray(weights, dtype=float)
    snr_cap = scenario.num_antennas * (scenario.pmax @ stats.gamma) / scenario.noise_dl
    se_cap = spectral_efficiency(snr_cap, scenario.coherence_length, scenario.pilot_length)
    return float((se_cap / weights).min() * (1.0 + 1e-6))


@dataclass
class ProbeRecord:
    iteration: int
    candidate: float
    feasible: bool
    lower: float
    upper: float

    def to_json_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "candidate": self.candidate,
            "feasible": self.feasible,
            "lower": self.lower,
            "upper": self.upper,
        }


@dataclass
class MaxMinResult:
    xi_lower: float
    xi_upper: float
    allocation: PowerAllocation
    association: AssociationMap
    iterations: int
    trace: list = field(default_factory=list)
    last_feasible: PowerMinResult | None = None


def solve_max_min(
    stats: ChannelStats,
    scenario: NetworkScenario,
    weights=None,
    cfg: BisectionConfig | None = None,
    association: str = "optimal",
) -> MaxMinResult:
    """Maximize the minimum weighted SE over users.

    ``association`` selects the feasibility subproblem: "optimal" uses the
    joint power/association LP, "max-snr" restricts each user to its
    strongest BS. A zero level is feasible by construction (zero powers), so
    the loop always terminates with a valid interval.
    """
    if weights is None:
        weights = np.ones(scenario.num_users)
    weights = np.asarray(weights, dtype=float)
    cfg = cfg or BisectionConfig()
    if association == "optimal":
        probe_solver = solve_power_min
    elif association == "max-snr":
        probe_solver = solve_max_snr
    else:
        raise ValueError(f"unknown association mode {association!r}")

    upper0 = cfg.xi_upper_init if cfg.xi_upper_init is not None else auto_upper_bound(stats, scenario, weights)
    max_iters = cfg.max_iters if cfg.max_iters is not None else expected_iterations(upper0, cfg.delta)

    lower = 0.0
    width = upper0
    best: PowerMinResult | None = None
    trace: list[ProbeRecord] = []
    it = 0
    # Width halves exactly each iteration, so the count matches
    # expected_iterations(upper0, delta) whenever max_iters allows it.
    while width > cfg.delta and it < max_iters:
        candidate = lower + width / 2.0
        targets = QosTargets.from_se(
            weights * candidate, scenario.coherence_length, scenario.pilot_length, weights=weights
        )
        res = probe_solver(stats, targets, scenario)
        if res.feasible:
            lower = candidate
            best = res
        width /= 2.0
        it += 1
        trace.append(
            ProbeRecord(
                iteration=it,
                candidate=candidate,
                feasible=res.feasible,
                lower=lower,
                upper=lower + width,
            )
        )

    if best is not None:
        allocation, assoc = best.allocation, best.association
    else:
        allocation = PowerAllocation.zeros(scenario.num_bs, scenario.num_users)
        assoc = AssociationMap.from_allocation(allocation, scenario.pmax)
    return MaxMinResult(
        xi_lower=lower,
        xi_upper=lower + width,
        allocation=allocation,
        association=assoc,
        iterations=it,
        trace=trace,
        last_feasible=best,
    )
