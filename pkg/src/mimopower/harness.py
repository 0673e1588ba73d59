"""Monte-Carlo experiment harness: drops, sweeps, metrics, and file output.

Defaults reproduce the reference deployment: 4 BSs on the corners of a
1 km x 1 km square, 20 uniformly dropped users (10 m exclusion), 20 MHz
bandwidth, 200-symbol coherence blocks with 20 pilot symbols, 7 dB
log-normal shadowing, -96 dBm noise, 40 W peak power per BS, and pilot
sequences of 2e-7 J total energy (0.2 W per symbol at 20 MHz).

Per-drop randomness comes from a stream seeded by (sweep seed, drop index),
so results are independent of evaluation order; antenna sweeps reuse the
same drops, which makes the monotone-in-M trends hold drop by drop.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .channel import (
    ChannelStats,
    NetworkScenario,
    dbm_to_watt,
    estimation_quality,
    large_scale_fading,
    load_scenario,
    sample_user_positions,
    scenario_to_json_dict,
)
from .maxmin import BisectionConfig, solve_max_min
from .mc_oracle import McConfig, estimate_sinr_terms
from .power_assoc import PowerMinResult, association_rule_check, solve_max_snr, solve_power_min
from .se import PowerAllocation, QosTargets, se_mrt_all, sinr_mrt_all

DEFAULT_BANDWIDTH_HZ = 20e6
DEFAULT_PILOT_ENERGY_J = 2e-7
DEFAULT_NOISE_DBM = -96.0
DEFAULT_PMAX_W = 40.0
DEFAULT_SHADOW_STD_DB = 7.0
DEFAULT_COHERENCE_LENGTH = 200
DEFAULT_TARGET_SE = 1.0
MIN_BS_USER_DIST_KM = 0.01


class HarnessInvariantError(RuntimeError):
    """A per-drop consistency check failed; indicates a solver or model bug."""


def pilot_power_from_energy(
    energy_j: float,
    pilot_length: int,
    bandwidth_hz: float = DEFAULT_BANDWIDTH_HZ,
    convention: str = "sequence",
) -> float:
    """Per-symbol pilot power in W from a pilot energy figure.

    ``convention`` selects whether ``energy_j`` is the energy of the whole
    sequence (default) or of a single pilot symbol; the two readings differ
    by a factor pilot_length.
    """
    symbol_duration = 1.0 / bandwidth_hz
    if convention == "sequence":
        return energy_j / (pilot_length * symbol_duration)
    if convention == "symbol":
        return energy_j / symbol_duration
    raise ValueError(f"unknown pilot energy convention {convention!r}")


def default_scenario(
    num_antennas: int,
    num_users: int = 20,
    rng_seed: int = 0,
    *,
    side_km: float = 1.0,
    pilot_energy_j: float = DEFAULT_PILOT_ENERGY_J,
    pilot_energy_convention: str = "sequence",
    bandwidth_hz: float = DEFAULT_BANDWIDTH_HZ,
    coherence_length: int = DEFAULT_COHERENCE_LENGTH,
    pilot_length: int | None = None,
    pmax_w: float = DEFAULT_PMAX_W,
    noise_dbm: float = DEFAULT_NOISE_DBM,
    shadow_std_db: float = DEFAULT_SHADOW_STD_DB,
) -> NetworkScenario:
    """Reference deployment with freshly sampled user positions."""
    if pilot_length is None:
        pilot_length = num_users
    bs = np.array([[0.0, 0.0], [side_km, 0.0], [0.0, side_km], [side_km, side_km]])
    rng = np.random.default_rng(rng_seed)
    users = sample_user_positions(num_users, bs, rng, MIN_BS_USER_DIST_KM)
    noise_w = float(dbm_to_watt(noise_dbm))
    p = pilot_power_from_energy(pilot_energy_j, pilot_length, bandwidth_hz, pilot_energy_convention)
    return NetworkScenario(
        num_bs=4,
        num_users=num_users,
        num_antennas=num_antennas,
        bs_positions=bs,
        user_positions=users,
        coherence_length=coherence_length,
        pilot_length=pilot_length,
        pilot_power=np.full(num_users, p),
        noise_ul=noise_w,
        noise_dl=noise_w,
        pmax=np.full(4, pmax_w),
        shadow_std_db=shadow_std_db,
        rng_seed=rng_seed,
    )


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: which antenna counts, how many drops, and which mode."""

    antenna_counts: tuple
    mode: str = "powermin"  # or "maxmin"
    target_se: float = DEFAULT_TARGET_SE
    num_drops: int = 200
    rng_seed: int = 0
    scenario_path: str | None = None
    num_users: int = 20
    delta: float = 0.01
    collect_traces: bool = False

    def __post_init__(self):
        object.__setattr__(self, "antenna_counts", tuple(int(m) for m in self.antenna_counts))
        if not self.antenna_counts:
            raise ValueError("antenna_counts must be nonempty")
        if self.num_drops < 1:
            raise ValueError("num_drops must be >= 1")
        if self.mode not in ("powermin", "maxmin"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class DropMetrics:
    """Metrics of one (drop, antenna count) cell; absent values stay None."""

    num_antennas: int
    drop_index: int
    feasible_opt: bool = False
    feasible_maxsnr: bool = False
    total_power_opt: float | None = None
    total_power_maxsnr: float | None = None
    maxmin_xi: float | None = None
    maxmin_xi_maxsnr: float | None = None
    joint_tx_user_fraction: float | None = None


@dataclass
class SweepResult:
    spec: SweepSpec
    drops: dict  # num_antennas -> list[DropMetrics], ordered by drop index
    table: list  # (num_antennas, metric, value) rows
    config: dict
    traces: list = field(default_factory=list)

    @property
    def any_feasible(self) -> bool:
        return any(m.feasible_opt for drops in self.drops.values() for m in drops)


def check_solution_invariants(
    stats: ChannelStats,
    targets: QosTargets,
    scenario: NetworkScenario,
    result: PowerMinResult,
    check_association: bool = False,
) -> None:
    """Re-assert the optimality contracts on a feasible solve (raises on failure)."""
    alloc = result.allocation
    cap = alloc.per_bs_power() - scenario.pmax
    if np.any(cap > 1e-9):
        raise HarnessInvariantError(f"per-BS power cap violated by {cap.max():.3e} W")
    se = se_mrt_all(stats, alloc, scenario)
    if np.any(se < targets.xi - 1e-6):
        raise HarnessInvariantError("achieved SE fell below its target")
    sinr = sinr_mrt_all(stats, alloc, scenario)
    active = targets.xi_hat > 0.0
    binding = np.abs(sinr[active] / targets.xi_hat[active] - 1.0)
    if binding.size and binding.max() > 1e-8:
        raise HarnessInvariantError(
            f"an active QoS constraint is not binding (rel. residual {binding.max():.3e})"
        )
    if check_association:
        report = association_rule_check(
            stats, targets, scenario, alloc, result.qos_duals, result.power_duals
        )
        if not report.passed:
            raise HarnessInvariantError(f"association rule violated: {report.violations[:5]}")


def _drop_powermin(
    stats: ChannelStats, scenario: NetworkScenario, target_se: float
) -> DropMetrics:
    targets = QosTargets.uniform(target_se, scenario.num_users, scenario)
    opt = solve_power_min(stats, targets, scenario)
    snr = solve_max_snr(stats, targets, scenario)
    if snr.feasible and not opt.feasible:
        raise HarnessInvariantError("max-SNR feasible but joint optimization infeasible")
    if opt.feasible:
        check_solution_invariants(stats, targets, scenario, opt, check_association=True)
    if snr.feasible:
        check_solution_invariants(stats, targets, scenario, snr)
        if opt.objective > snr.objective * (1.0 + 1e-9):
            raise HarnessInvariantError("optimal objective exceeds the max-SNR objective")
    return DropMetrics(
        num_antennas=scenario.num_antennas,
        drop_index=-1,
        feasible_opt=opt.feasible,
        feasible_maxsnr=snr.feasible,
        total_power_opt=opt.objective if opt.feasible else None,
        total_power_maxsnr=snr.objective if snr.feasible else None,
        joint_tx_user_fraction=opt.association.joint_fraction if opt.feasible else None,
    )


def _drop_maxmin(stats: ChannelStats, scenario: NetworkScenario, delta: float):
    cfg = BisectionConfig(delta=delta)
    mm_opt = solve_max_min(stats, scenario, cfg=cfg, association="optimal")
    mm_snr = solve_max_min(stats, scenario, cfg=cfg, association="max-snr")
    if mm_opt.xi_lower < mm_snr.xi_lower - delta - 1e-12:
        raise HarnessInvariantError("joint max-min level fell below the max-SNR level")
    for mm in (mm_opt, mm_snr):
        if mm.last_feasible is not None:
            se = se_mrt_all(stats, mm.allocation, scenario)
            if np.any(se < mm.xi_lower - 1e-9):
                raise HarnessInvariantError("achieved SE fell below the max-min lower bound")
    metrics = DropMetrics(
        num_antennas=scenario.num_antennas,
        drop_index=-1,
        feasible_opt=True,
        feasible_maxsnr=True,
        maxmin_xi=mm_opt.xi_lower,
        maxmin_xi_maxsnr=mm_snr.xi_lower,
        joint_tx_user_fraction=mm_opt.association.joint_fraction,
    )
    return metrics, mm_opt, mm_snr


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Run the sweep: per drop, sample users and shadowing once, then solve
    every antenna count on the same realization."""
    if spec.scenario_path is not None:
        base = load_scenario(spec.scenario_path)
    else:
        base = default_scenario(spec.antenna_counts[0], spec.num_users, rng_seed=spec.rng_seed)
    drops: dict[int, list[DropMetrics]] = {m: [] for m in spec.antenna_counts}
    traces = []
    for d in range(spec.num_drops):
        rng = np.random.default_rng([spec.rng_seed, d])
        positions = sample_user_positions(
            base.num_users, base.bs_positions, rng, MIN_BS_USER_DIST_KM
        )
        scn0 = base.with_users(positions)
        beta = large_scale_fading(scn0, rng)
        stats = ChannelStats(beta=beta, gamma=estimation_quality(scn0, beta))
        for m in spec.antenna_counts:
            scn = scn0.with_antennas(m)
            if spec.mode == "powermin":
                metrics = _drop_powermin(stats, scn, spec.target_se)
            else:
                metrics, mm_opt, mm_snr = _drop_maxmin(stats, scn, spec.delta)
                if spec.collect_traces:
                    traces.append(
                        {
                            "num_antennas": m,
                            "drop": d,
                            "optimal": [p.to_json_dict() for p in mm_opt.trace],
                            "max_snr": [p.to_json_dict() for p in mm_snr.trace],
                        }
                    )
            metrics.drop_index = d
            drops[m].append(metrics)
    config = {
        "spec": {
            "antenna_counts": list(spec.antenna_counts),
            "mode": spec.mode,
            "target_se": spec.target_se,
            "num_drops": spec.num_drops,
            "rng_seed": spec.rng_seed,
            "scenario_path": spec.scenario_path,
            "num_users": spec.num_users,
            "delta": spec.delta,
        },
        "base_scenario": scenario_to_json_dict(base),
    }
    return SweepResult(
        spec=spec, drops=drops, table=aggregate_table(spec, drops), config=config, traces=traces
    )


def _mean(values) -> float | None:
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def aggregate_table(spec: SweepSpec, drops: dict) -> list:
    """Long-format rows (num_antennas, metric, value); empty metrics are omitted.

    Transmit powers average only over drops where both association methods
    are feasible, so the comparison is like for like.
    """
    rows = []
    for m in spec.antenna_counts:
        cell = drops[m]
        n = len(cell)
        rows.append((m, "num_drops", n))
        if spec.mode == "powermin":
            rows.append((m, "bad_service_prob_optimal", sum(not x.feasible_opt for x in cell) / n))
            rows.append((m, "bad_service_prob_max_snr", sum(not x.feasible_maxsnr for x in cell) / n))
            both = [x for x in cell if x.feasible_opt and x.feasible_maxsnr]
            rows.append((m, "num_both_feasible", len(both)))
            for name, key in (
                ("mean_total_power_w_optimal", "total_power_opt"),
                ("mean_total_power_w_max_snr", "total_power_maxsnr"),
            ):
                val = _mean(getattr(x, key) for x in both)
                if val is not None:
                    rows.append((m, name, val))
            frac = _mean(x.joint_tx_user_fraction for x in cell)
            if frac is not None:
                rows.append((m, "joint_tx_fraction_optimal", frac))
        else:
            rows.append((m, "mean_maxmin_se_optimal", _mean(x.maxmin_xi for x in cell)))
            rows.append((m, "mean_maxmin_se_max_snr", _mean(x.maxmin_xi_maxsnr for x in cell)))
            frac = _mean(x.joint_tx_user_fraction for x in cell)
            rows.append((m, "joint_tx_fraction_optimal", frac))
            rows.append((m, "single_bs_fraction_optimal", 1.0 - frac))
    return [(m, name, v) for (m, name, v) in rows if v is not None]


def emit_results(result: SweepResult, out_dir) -> tuple:
    """Write results.csv (one row per antenna-count/metric) plus a config.json
    sidecar carrying the sweep spec, base scenario and seed; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "results.csv")
    lines = ["num_antennas,metric,value"]
    for m, name, value in result.table:
        lines.append(f"{m},{name},{value!r}")
    with open(csv_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    json_path = os.path.join(out_dir, "config.json")
    with open(json_path, "w") as fh:
        json.dump(result.config, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths = [csv_path, json_path]
    if result.traces:
        trace_path = os.path.join(out_dir, "traces.jsonl")
        with open(trace_path, "w") as fh:
            for rec in result.traces:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
        paths.append(trace_path)
    return tuple(paths)


def run_drop(scenario: NetworkScenario, mode: str = "powermin", target_se: float = DEFAULT_TARGET_SE, delta: float = 0.01) -> dict:
    """Solve a single drop on the scenario as given; returns the full JSON record."""
    beta = large_scale_fading(scenario)
    stats = ChannelStats(beta=beta, gamma=estimation_quality(scenario, beta))
    if mode == "powermin":
        targets = QosTargets.uniform(target_se, scenario.num_users, scenario)
        opt = solve_power_min(stats, targets, scenario)
        snr = solve_max_snr(stats, targets, scenario)
        if opt.feasible:
            check_solution_invariants(stats, targets, scenario, opt, check_association=True)
        return {
            "mode": mode,
            "target_se": target_se,
            "optimal": opt.to_json_dict(),
            "max_snr": snr.to_json_dict(),
        }
    if mode == "maxmin":
        cfg = BisectionConfig(delta=delta)
        mm = solve_max_min(stats, scenario, cfg=cfg)
        record = mm.last_feasible.to_json_dict() if mm.last_feasible else {"status": "zero-level"}
        return {
            "mode": mode,
            "delta": delta,
            "xi_lower": mm.xi_lower,
            "xi_upper": mm.xi_upper,
            "iterations": mm.iterations,
            "solution": record,
            "trace": [p.to_json_dict() for p in mm.trace],
        }
    raise ValueError(f"unknown mode {mode!r}")


# --- closed-form validation ------------------------------------------------

def random_validation_scenario(index: int, rng_seed: int = 0):
    """Small random scenario plus allocation for oracle-vs-closed-form checks.

    Sizes stay small (L <= 4, K <= 8, M in {16, 64}) and geometry compact, so
    pilot SNRs keep the Monte-Carlo moments well conditioned.
    """
    rng = np.random.default_rng([rng_seed, index])
    L = int(rng.integers(1, 5))
    K = int(rng.integers(1, 9))
    M = 16 if index % 2 == 0 else 64
    side = 0.4
    bs = rng.uniform(0.0, side, size=(L, 2))
    users = rng.uniform(0.0, side, size=(K, 2))
    # keep every BS-user distance >= 20 m by redrawing offending users
    for _ in range(100):
        d = np.linalg.norm(bs[:, None, :] - users[None, :, :], axis=2)
        bad = d.min(axis=0) < 0.02
        if not bad.any():
            break
        users[bad] = rng.uniform(0.0, side, size=(int(bad.sum()), 2))
    noise = float(dbm_to_watt(DEFAULT_NOISE_DBM))
    scenario = NetworkScenario(
        num_bs=L,
        num_users=K,
        num_antennas=M,
        bs_positions=bs,
        user_positions=users,
        coherence_length=DEFAULT_COHERENCE_LENGTH,
        pilot_length=20,
        pilot_power=np.full(K, 0.2),
        noise_ul=noise,
        noise_dl=noise,
        pmax=np.full(L, DEFAULT_PMAX_W),
        shadow_std_db=4.0,
        rng_seed=int(rng.integers(0, 2**31)),
    )
    beta = large_scale_fading(scenario, rng)
    stats = ChannelStats(beta=beta, gamma=estimation_quality(scenario, beta))
    alloc = PowerAllocation(rng.uniform(0.05, 2.0, size=(L, K)))
    user = int(rng.integers(0, K))
    return scenario, stats, alloc, user


def validate_closed_form(
    num_scenarios: int = 20,
    num_samples: int = 100_000,
    rng_seed: int = 0,
    rel_tol: float = 0.01,
) -> list:
    """Compare the sampling oracle against the closed-form SINR.

    Returns one record per scenario with both values and the relative error;
    a record passes when the error is within ``rel_tol``.
    """
    from .se import sinr_mrt

    records = []
    for idx in range(num_scenarios):
        scenario, stats, alloc, user = random_validation_scenario(idx, rng_seed)
        cfg = McConfig(num_samples=num_samples, rng_seed=rng_seed + 1000 + idx)
        est = estimate_sinr_terms(stats, alloc, scenario, user, cfg)
        closed = sinr_mrt(stats, alloc, scenario, user)
        rel_err = abs(est.sinr - closed) / closed
        records.append(
            {
                "scenario": idx,
                "num_bs": scenario.num_bs,
                "num_users": scenario.num_users,
                "num_antennas": scenario.num_antennas,
                "user": user,
                "closed_form_sinr": closed,
                "monte_carlo_sinr": est.sinr,
                "monte_carlo_stderr": est.sinr_stderr,
                "rel_error": rel_err,
                "passed": bool(rel_err <= rel_tol),
            }
        )
    return records
