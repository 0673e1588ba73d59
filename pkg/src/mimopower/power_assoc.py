"""Total transmit power minimization and the induced BS-user association.

The QoS-constrained power minimization is a linear program in the stacked
power variables. Variables are laid out user-major: index t*L + i holds the
power BS i spends on user t, matching the per-user power vectors. Row k of
the LP encodes user k's SINR constraint,

    sum_t c_k^T rho_t - b_k^T rho_k + noise_dl <= 0,
    c_k[i] = beta[i,k],   b_k[i] = M * gamma[i,k] / xi_hat[k],

and the last L rows cap each BS at its peak power. The optimal duals
(lambda per QoS row, mu per power row) yield the association rule: user t
is served only by BSs attaining min_i (1 + sum_k lambda_k beta[i,k] + mu_i)
/ b_t[i], where the minimum equals lambda_t.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelStats, NetworkScenario
from .lp import LinearProgram, LpSolution, LpStatus
from .lp import solve as lp_solve
from .se import PowerAllocation, QosTargets

# rho[i, t] > SERVING_THRESHOLD_SCALE * pmax[i] counts BS i as serving user t;
# nonbasic simplex variables are exact zeros, the margin only guards dust.
SERVING_THRESHOLD_SCALE = 1e-6


@dataclass(frozen=True)
class PowerMinProblem:
    """LP ingredients: c_mat[k] = c_k and b_mat[k] = b_k (both over BS index)."""

    c_mat: np.ndarray  # (K, L)
    b_mat: np.ndarray  # (K, L); zero rows where xi_hat == 0
    pmax: np.ndarray  # (L,)
    sigma2_dl: float

    @classmethod
    def from_stats(
        cls, stats: ChannelStats, targets: QosTargets, scenario: NetworkScenario
    ) -> "PowerMinProblem":
        if np.any(targets.xi_hat < 0.0):
            raise ValueError("SINR thresholds must be nonnegative")
        m_gamma = scenario.num_antennas * stats.gamma.T  # (K, L)
        with np.errstate(divide="ignore"):
            b_mat = np.where(targets.xi_hat[:, None] > 0.0, m_gamma / targets.xi_hat[:, None], 0.0)
        return cls(
            c_mat=stats.beta.T.copy(),
            b_mat=b_mat,
            pmax=scenario.pmax.copy(),
            sigma2_dl=scenario.noise_dl,
        )


def build_lp(stats: ChannelStats, targets: QosTargets, scenario: NetworkScenario) -> LinearProgram:
    """The K + L row LP over L*K user-major power variables.

    Users with a zero SINR threshold get an all-zero (vacuous) QoS row so the
    row layout stays fixed.
    """
    prob = PowerMinProblem.from_stats(stats, targets, scenario)
    L = prob.pmax.size
    K = prob.c_mat.shape[0]
    n = L * K
    a = np.zeros((K + L, n))
    b = np.zeros(K + L)
    for k in range(K):
        if targets.xi_hat[k] <= 0.0:
            continue  # vacuous constraint: 0 <= 0
        row = np.tile(prob.c_mat[k], K)
        row[k * L : (k + 1) * L] -= prob.b_mat[k]
        a[k] = row
        b[k] = -prob.sigma2_dl
    for i in range(L):
        a[K + i, i::L] = 1.0
        b[K + i] = prob.pmax[i]
    return LinearProgram(c=np.ones(n), a_ub=a, b_ub=b)


@dataclass(frozen=True)
class AssociationMap:
    """Serving BS sets per user, derived by thresholding the allocation."""

    serving_sets: tuple
    joint_flags: np.ndarray

    @classmethod
    def from_allocation(cls, alloc: PowerAllocation, pmax: np.ndarray) -> "AssociationMap":
        thr = SERVING_THRESHOLD_SCALE * np.asarray(pmax, dtype=float)
        sets = tuple(
            tuple(np.flatnonzero(alloc.rho[:, t] > thr).tolist())
            for t in range(alloc.rho.shape[1])
        )
        return cls(serving_sets=sets, joint_flags=np.array([len(s) >= 2 for s in sets]))

    @property
    def joint_fraction(self) -> float:
        return float(self.joint_flags.mean())


@dataclass
class PowerMinResult:
    """Outcome of one power-minimization solve; infeasibility is a status, not an error."""

    status: LpStatus
    allocation: PowerAllocation | None = None
    association: AssociationMap | None = None
    qos_duals: np.ndarray | None = None  # lambda, one per user
    power_duals: np.ndarray | None = None  # mu, one per BS
    objective: float | None = None
    lp_solution: LpSolution | None = None

    @property
    def feasible(self) -> bool:
        return self.status == LpStatus.OPTIMAL

    def to_json_dict(self) -> dict:
        out = {"status": self.status.value}
        if self.feasible:
            out.update(
                {
                    "objective_w": self.objective,
                    "rho": self.allocation.rho.tolist(),
                    "lambda": self.qos_duals.tolist(),
                    "mu": self.power_duals.tolist(),
                    "serving_sets": [list(s) for s in self.association.serving_sets],
                }
            )
        return out


def _result_from_lp(sol: LpSolution, rho: np.ndarray, scenario: NetworkScenario) -> PowerMinResult:
    K = scenario.num_users
    alloc = PowerAllocation(rho)
    return PowerMinResult(
        status=sol.status,
        allocation=alloc,
        association=AssociationMap.from_allocation(alloc, scenario.pmax),
        qos_duals=sol.duals[:K].copy(),
        power_duals=sol.duals[K:].copy(),
        objective=sol.objective,
        lp_solution=sol,
    )


def solve_power_min(
    stats: ChannelStats, targets: QosTargets, scenario: NetworkScenario
) -> PowerMinResult:
    """Jointly optimal power allocation and association for fixed SE targets."""
    sol = lp_solve(build_lp(stats, targets, scenario))
    if sol.status != LpStatus.OPTIMAL:
        return PowerMinResult(status=sol.status, lp_solution=sol)
    rho = sol.x.reshape(scenario.num_users, scenario.num_bs).T
    return _result_from_lp(sol, rho, scenario)


def max_snr_assignment(beta: np.ndarray) -> np.ndarray:
    """Strongest-average-signal BS per user; ties resolve to the lowest index."""
    return np.argmax(beta, axis=0)


def solve_max_snr(
    stats: ChannelStats, targets: QosTargets, scenario: NetworkScenario
) -> PowerMinResult:
    """Baseline: each user may only buy power from its strongest BS.

    Same cost and rows as the optimal problem with all other variables fixed
    at zero, so its feasible set is a subset of the optimal one.
    """
    L, K = stats.beta.shape
    best = max_snr_assignment(stats.beta)
    prob = PowerMinProblem.from_stats(stats, targets, scenario)
    a = np.zeros((K + L, K))
    b = np.zeros(K + L)
    for k in range(K):
        if targets.xi_hat[k] <= 0.0:
            continue
        a[k] = prob.c_mat[k, best]
        a[k, k] -= prob.b_mat[k, best[k]]
        b[k] = -prob.sigma2_dl
    for i in range(L):
        a[K + i, best == i] = 1.0
        b[K + i] = prob.pmax[i]
    sol = lp_solve(LinearProgram(c=np.ones(K), a_ub=a, b_ub=b))
    if sol.status != LpStatus.OPTIMAL:
        return PowerMinResult(status=sol.status, lp_solution=sol)
    rho = np.zeros((L, K))
    rho[best, np.arange(K)] = sol.x
    return _result_from_lp(sol, rho, scenario)


@dataclass
class AssociationCheck:
    """Dual-based association consistency report.

    ``violations`` lists (user, bs, relative gap) for serving BSs that miss
    the minimum of the dual ratio, plus (user, -1, gap) entries when the
    minimum disagrees with lambda_user.
    """

    passed: bool
    max_rel_gap: float
    violations: list = field(default_factory=list)


def association_rule_check(
    stats: ChannelStats,
    targets: QosTargets,
    scenario: NetworkScenario,
    alloc: PowerAllocation,
    qos_duals: np.ndarray,
    power_duals: np.ndarray,
    tol: float = 1e-6,
) -> AssociationCheck:
    """Check each served user against the dual association rule.

    For user t, every BS with positive power must attain (within relative
    ``tol``) the minimum over i of (1 + sum_k lambda_k beta[i,k] + mu_i) /
    b_t[i], and that minimum must equal lambda_t. Users with a zero SINR
    threshold pass vacuously.
    """
    prob = PowerMinProblem.from_stats(stats, targets, scenario)
    L, K = stats.beta.shape
    lam = np.asarray(qos_duals, dtype=float)
    mu = np.asarray(power_duals, dtype=float)
    price = 1.0 + stats.beta @ lam + mu  # per BS: 1 + sum_k lambda_k beta[i,k] + mu_i
    thr = SERVING_THRESHOLD_SCALE * scenario.pmax
    violations = []
    max_gap = 0.0
    for t in range(K):
        if targets.xi_hat[t] <= 0.0:
            continue
        ratio = price / prob.b_mat[t]
        rmin = float(ratio.min())
        for i in np.flatnonzero(alloc.rho[:, t] > thr):
            gap = (ratio[i] - rmin) / rmin
            max_gap = max(max_gap, gap)
            if gap > tol:
                violations.append((t, int(i), gap))
        lam_gap = abs(rmin - lam[t]) / max(lam[t], rmin)
        max_gap = max(max_gap, lam_gap)
        if lam_gap > tol:
            violations.append((t, -1, lam_gap))
    return AssociationCheck(passed=not violations, max_rel_gap=max_gap, violations=violations)
