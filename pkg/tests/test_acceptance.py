"""Acceptance suite: every criterion prints one PASS/FAIL line (run with -s).

The heavyweight sweeps are shared module-scoped fixtures so the whole suite
stays well inside its runtime targets.
"""

import time

import numpy as np
import pytest
from conftest import single_cell
from oracles import brute_force_lp_min, random_feasible_lp

from mimopower.channel import ChannelStats, estimation_quality, large_scale_fading, sample_user_positions
from mimopower.harness import (
    SweepSpec,
    default_scenario,
    run_sweep,
    validate_closed_form,
)
from mimopower.lp import LinearProgram, LpStatus, solve, verify
from mimopower.maxmin import auto_upper_bound, expected_iterations, solve_max_min
from mimopower.power_assoc import association_rule_check, solve_max_snr, solve_power_min
from mimopower.se import QosTargets, se_mrt_all, sinr_mrt_all

ANTENNAS = (50, 100, 150, 200)


def report(num, desc, passed, detail=""):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {num}: {desc}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert passed, line


def iter_default_drops(num_drops, seed, num_users=20):
    """Replicates the sweep's drop sampling for direct per-drop checks."""
    base = default_scenario(ANTENNAS[0], num_users, rng_seed=seed)
    for d in range(num_drops):
        rng = np.random.default_rng([seed, d])
        pos = sample_user_positions(base.num_users, base.bs_positions, rng, 0.01)
        scn0 = base.with_users(pos)
        beta = large_scale_fading(scn0, rng)
        stats = ChannelStats(beta=beta, gamma=estimation_quality(scn0, beta))
        yield d, scn0, stats


@pytest.fixture(scope="module")
def drops_200():
    """200 default drops solved at every antenna count with full diagnostics."""
    records = []
    for d, scn0, stats in iter_default_drops(200, seed=11):
        for m in ANTENNAS:
            scn = scn0.with_antennas(m)
            targets = QosTargets.uniform(1.0, scn.num_users, scn)
            opt = solve_power_min(stats, targets, scn)
            snr = solve_max_snr(stats, targets, scn)
            rec = {
                "drop": d,
                "m": m,
                "feasible_opt": opt.feasible,
                "feasible_snr": snr.feasible,
            }
            if opt.feasible:
                check = association_rule_check(
                    stats, targets, scn, opt.allocation, opt.qos_duals, opt.power_duals
                )
                se = se_mrt_all(stats, opt.allocation, scn)
                sinr = sinr_mrt_all(stats, opt.allocation, scn)
                rec.update(
                    {
                        "assoc_ok": check.passed,
                        "assoc_gap": check.max_rel_gap,
                        "qos_margin": float((se - targets.xi).min()),
                        "binding_resid": float(np.abs(sinr / targets.xi_hat - 1.0).max()),
                        "cap_excess": float((opt.allocation.per_bs_power() - scn.pmax).max()),
                    }
                )
            records.append(rec)
    return records


@pytest.fixture(scope="module")
def maxmin_500():
    spec = SweepSpec(
        antenna_counts=ANTENNAS, mode="maxmin", num_drops=500, rng_seed=17, num_users=20
    )
    return run_sweep(spec)


@pytest.fixture(scope="module")
def powermin_500():
    spec = SweepSpec(
        antenna_counts=ANTENNAS, mode="powermin", target_se=1.0, num_drops=500, rng_seed=17,
        num_users=20,
    )
    return run_sweep(spec)


def test_criterion_1_closed_form_validation():
    t0 = time.perf_counter()
    records = validate_closed_form(num_scenarios=20, num_samples=100_000, rng_seed=0, rel_tol=0.01)
    elapsed = time.perf_counter() - t0
    worst = max(r["rel_error"] for r in records)
    within_cap = all(r["passed"] for r in records)
    within_band = all(
        abs(r["monte_carlo_sinr"] - r["closed_form_sinr"]) <= 3.0 * r["monte_carlo_stderr"]
        for r in records
    )
    report(
        1,
        "Monte-Carlo SINR matches closed form within 1% on 20 scenarios",
        within_cap and within_band and elapsed < 60.0,
        f"worst rel err {worst:.2e}, {elapsed:.1f} s",
    )


def test_criterion_2_lp_vs_brute_force():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst_obj_err = worst_resid = 0.0
    for _ in range(100):
        a, b, c = random_feasible_lp(rng, max_vars=12, max_rows=4)
        lp = LinearProgram(c=c, a_ub=a, b_ub=b)
        sol = solve(lp)
        assert sol.status == LpStatus.OPTIMAL
        ref_obj, _ = brute_force_lp_min(a, b, c)
        err = abs(sol.objective - ref_obj) / (1.0 + abs(ref_obj))
        worst_obj_err = max(worst_obj_err, err)
        worst_resid = max(worst_resid, verify(lp, sol).worst)
    elapsed = time.perf_counter() - t0
    report(
        2,
        "simplex matches vertex enumeration on 100 random LPs",
        worst_obj_err <= 1e-9 and worst_resid <= 1e-8 and elapsed < 10.0,
        f"obj err {worst_obj_err:.2e}, residual {worst_resid:.2e}, {elapsed:.1f} s",
    )


def test_criterion_3_analytic_single_user():
    scn, stats = single_cell(num_antennas=150, beta=2.5e-13)
    targets = QosTargets.uniform(1.5, 1, scn)
    res = solve_power_min(stats, targets, scn)
    b = 150 * stats.gamma[0, 0] / targets.xi_hat[0]
    beta = stats.beta[0, 0]
    rho_err = abs(res.allocation.rho[0, 0] - scn.noise_dl / (b - beta)) / (scn.noise_dl / (b - beta))
    lam_err = abs(res.qos_duals[0] - 1.0 / (b - beta)) * (b - beta)
    report(
        3,
        "single-user optimum matches the hand-derived stationarity solution",
        res.feasible and rho_err <= 1e-9 and lam_err <= 1e-9,
        f"rho err {rho_err:.2e}, lambda err {lam_err:.2e}",
    )


def test_criterion_4_association_rule_on_sweep(drops_200):
    feasible = [r for r in drops_200 if r["feasible_opt"]]
    violations = [r for r in feasible if not r["assoc_ok"]]
    worst = max((r["assoc_gap"] for r in feasible), default=0.0)
    report(
        4,
        "association rule holds on every feasible drop of a 200-drop sweep",
        len(violations) == 0 and len(feasible) > 0,
        f"{len(feasible)} feasible solves, worst rel gap {worst:.2e}",
    )


def test_criterion_5_qos_attainment(drops_200):
    feasible = [r for r in drops_200 if r["feasible_opt"]]
    min_margin = min(r["qos_margin"] for r in feasible)
    worst_binding = max(r["binding_resid"] for r in feasible)
    worst_cap = max(r["cap_excess"] for r in feasible)
    report(
        5,
        "every feasible drop meets its SE targets with binding QoS rows",
        min_margin >= -1e-6 and worst_binding <= 1e-8 and worst_cap <= 1e-9,
        f"min margin {min_margin:.2e}, binding {worst_binding:.2e}, cap excess {worst_cap:.2e}",
    )


def test_criterion_6_feasible_set_inclusion(drops_200, powermin_500):
    bad = [r for r in drops_200 if r["feasible_snr"] and not r["feasible_opt"]]
    for cell in powermin_500.drops.values():
        bad.extend(d for d in cell if d.feasible_maxsnr and not d.feasible_opt)
    report(
        6,
        "no drop anywhere has max-SNR feasible but joint optimization infeasible",
        len(bad) == 0,
        f"checked {len(drops_200)} + {sum(len(c) for c in powermin_500.drops.values())} solves",
    )


def test_criterion_7_trend_reproduction(maxmin_500, powermin_500):
    t0 = time.perf_counter()
    # (a) single-BS association fraction in max-min mode
    singles = {}
    for m in ANTENNAS:
        joint = np.mean([d.joint_tx_user_fraction for d in maxmin_500.drops[m]])
        singles[m] = 1.0 - joint
    ok_a = all(v >= 0.90 for v in singles.values())
    report(
        "7a",
        "single-BS association fraction >= 0.90 in max-min mode",
        ok_a,
        ", ".join(f"M={m}: {v:.3f}" for m, v in singles.items()),
    )
    # (b) mean max-min SE nondecreasing in M
    mean_xi = [float(np.mean([d.maxmin_xi for d in maxmin_500.drops[m]])) for m in ANTENNAS]
    ok_b = all(a <= b + 1e-12 for a, b in zip(mean_xi, mean_xi[1:]))
    report("7b", "mean max-min SE nondecreasing in antennas", ok_b,
           ", ".join(f"{v:.3f}" for v in mean_xi))
    # (c) joint association beats max-SNR by a 0-20% relative gain
    gains = []
    for m in ANTENNAS:
        opt = float(np.mean([d.maxmin_xi for d in maxmin_500.drops[m]]))
        snr = float(np.mean([d.maxmin_xi_maxsnr for d in maxmin_500.drops[m]]))
        gains.append(opt / snr - 1.0)
    ok_c = all(0.0 < g <= 0.20 for g in gains)
    report("7c", "max-min SE gain over max-SNR inside the 0-20% band", ok_c,
           ", ".join(f"{100*g:.1f}%" for g in gains))
    # (d) bad-service probability trends
    bad_opt = [np.mean([not d.feasible_opt for d in powermin_500.drops[m]]) for m in ANTENNAS]
    bad_snr = [np.mean([not d.feasible_maxsnr for d in powermin_500.drops[m]]) for m in ANTENNAS]
    ok_d = (
        all(a >= b - 1e-12 for a, b in zip(bad_opt, bad_opt[1:]))
        and all(a >= b - 1e-12 for a, b in zip(bad_snr, bad_snr[1:]))
        and all(o <= s for o, s in zip(bad_opt, bad_snr))
    )
    report("7d", "bad-service probability nonincreasing in M and lower when optimal", ok_d,
           "opt " + "/".join(f"{v:.3f}" for v in bad_opt) + " vs max-SNR "
           + "/".join(f"{v:.3f}" for v in bad_snr))
    print(f"criterion 7 aggregate checks took {time.perf_counter() - t0:.2f} s")


def test_power_trend_nonincreasing_in_antennas(powermin_500):
    # statistical harness invariant on the same 500-drop sweep: mean optimal
    # transmit power (over drops feasible for both methods) falls with M
    means = []
    for m in ANTENNAS:
        both = [
            d for d in powermin_500.drops[m] if d.feasible_opt and d.feasible_maxsnr
        ]
        assert both, f"no both-feasible drops at M={m}"
        means.append(float(np.mean([d.total_power_opt for d in both])))
    assert all(a >= b for a, b in zip(means, means[1:])), means
    print(
        "harness invariant: mean optimal power vs antennas "
        + " -> ".join(f"{v:.2f} W" for v in means)
    )


def test_criterion_8_bisection_contract():
    mismatches = []
    for d, scn0, stats in iter_default_drops(50, seed=23):
        scn = scn0.with_antennas(100)
        res = solve_max_min(stats, scn)
        bound = auto_upper_bound(stats, scn, np.ones(scn.num_users))
        expected = expected_iterations(bound, 0.01)
        lowers = [p.lower for p in res.trace]
        uppers = [p.upper for p in res.trace]
        ok = (
            res.iterations == expected
            and res.xi_upper - res.xi_lower <= 0.01
            and 0.0 <= res.xi_lower <= res.xi_upper
            and all(a <= b + 1e-15 for a, b in zip(lowers, lowers[1:]))
            and all(a >= b - 1e-15 for a, b in zip(uppers, uppers[1:]))
        )
        if not ok:
            mismatches.append(d)
    report(
        8,
        "bisection terminates in exactly ceil(log2(range/delta)) iterations",
        not mismatches,
        "50 drops, delta 0.01",
    )
