import json

import numpy as np
import pytest
from conftest import random_drop, single_cell

from mimopower.channel import ChannelStats
from mimopower.lp import LpStatus
from mimopower.power_assoc import (
    AssociationMap,
    PowerMinProblem,
    association_rule_check,
    build_lp,
    max_snr_assignment,
    solve_max_snr,
    solve_power_min,
)
from mimopower.se import PowerAllocation, QosTargets, se_mrt_all, sinr_mrt_all


def targets_for(scenario, xi=1.0):
    return QosTargets.uniform(xi, scenario.num_users, scenario)


class TestBuildLp:
    def test_shape_contract(self, small_scenario, small_stats):
        lp = build_lp(small_stats, targets_for(small_scenario), small_scenario)
        assert lp.num_vars == 4 * 6
        assert lp.num_rows == 6 + 4
        np.testing.assert_array_equal(lp.c, np.ones(24))

    def test_single_cell_specialization(self):
        scn, stats = single_cell(num_antennas=100)
        targets = targets_for(scn, 1.0)
        lp = build_lp(stats, targets, scn)
        b_expect = 100 * stats.gamma[0, 0] / targets.xi_hat[0]
        assert lp.num_vars == 1 and lp.num_rows == 2
        assert lp.a_ub[0, 0] == pytest.approx(stats.beta[0, 0] - b_expect, rel=1e-15)
        assert lp.b_ub[0] == -scn.noise_dl
        assert lp.a_ub[1, 0] == 1.0 and lp.b_ub[1] == 40.0

    def test_b_vector_ties_to_estimation_quality(self, small_scenario, small_stats):
        targets = targets_for(small_scenario, 1.3)
        prob = PowerMinProblem.from_stats(small_stats, targets, small_scenario)
        np.testing.assert_allclose(
            prob.b_mat * targets.xi_hat[:, None],
            small_scenario.num_antennas * small_stats.gamma.T,
            rtol=1e-15,
        )

    def test_zero_thresholds_give_zero_optimum(self, small_scenario, small_stats):
        targets = QosTargets.from_se(
            np.zeros(6), small_scenario.coherence_length, small_scenario.pilot_length
        )
        lp = build_lp(small_stats, targets, small_scenario)
        assert lp.num_rows == 10  # row count unchanged
        np.testing.assert_array_equal(lp.a_ub[:6], np.zeros((6, 24)))
        res = solve_power_min(small_stats, targets, small_scenario)
        assert res.feasible and res.objective == 0.0
        assert all(len(s) == 0 for s in res.association.serving_sets)


class TestSingleUserAnalytic:
    def test_interior_optimum_matches_stationarity(self):
        scn, stats = single_cell(num_antennas=120, beta=3e-13)
        targets = targets_for(scn, 1.2)
        res = solve_power_min(stats, targets, scn)
        b = 120 * stats.gamma[0, 0] / targets.xi_hat[0]
        beta = stats.beta[0, 0]
        assert res.feasible
        assert res.allocation.rho[0, 0] == pytest.approx(scn.noise_dl / (b - beta), rel=1e-9)
        assert res.qos_duals[0] == pytest.approx(1.0 / (b - beta), rel=1e-9)
        assert res.power_duals[0] == pytest.approx(0.0, abs=1e-12)

    def test_self_coupling_exceeding_gain_is_infeasible(self):
        # b <= beta makes the QoS row unsatisfiable for any rho >= 0
        scn, stats = single_cell(num_antennas=1, gamma=1e-14, beta=2e-13)
        targets = targets_for(scn, 1.0)
        assert 1 * stats.gamma[0, 0] / targets.xi_hat[0] <= stats.beta[0, 0]
        res = solve_power_min(stats, targets, scn)
        assert res.status == LpStatus.INFEASIBLE
        assert not res.feasible

    def test_association_rule_identity(self):
        scn, stats = single_cell(num_antennas=120, beta=3e-13)
        targets = targets_for(scn, 1.2)
        res = solve_power_min(stats, targets, scn)
        report = association_rule_check(
            stats, targets, scn, res.allocation, res.qos_duals, res.power_duals
        )
        assert report.passed
        assert report.max_rel_gap < 1e-12


class TestDegenerateSplit:
    def test_identical_bs_resolve_to_single_server(self):
        scn, stats = single_cell(num_antennas=100, beta=3e-13)
        from dataclasses import replace

        scn2 = replace(
            scn,
            num_bs=2,
            bs_positions=np.array([[0.0, 0.0], [1.0, 0.0]]),
            pmax=np.array([40.0, 40.0]),
        )
        stats2 = ChannelStats(
            beta=np.vstack([stats.beta, stats.beta]), gamma=np.vstack([stats.gamma, stats.gamma])
        )
        targets = targets_for(scn2, 1.0)
        res = solve_power_min(stats2, targets, scn2)
        assert res.feasible
        positive = res.allocation.rho[:, 0] > 0
        assert positive.sum() == 1  # a vertex, not an interior split
        b = 100 * stats2.gamma[0, 0] / targets.xi_hat[0]
        total = res.allocation.rho.sum()
        assert total == pytest.approx(scn2.noise_dl / (b - stats2.beta[0, 0]), rel=1e-9)


class TestMaxSnr:
    def test_assignment_breaks_ties_low(self):
        beta = np.array([[2.0, 1.0], [2.0, 3.0]])
        np.testing.assert_array_equal(max_snr_assignment(beta), [0, 1])

    def test_single_bs_equals_optimal(self):
        scn, stats = single_cell(num_antennas=100, num_users=3, rng_seed=4)
        targets = targets_for(scn, 0.8)
        a = solve_power_min(stats, targets, scn)
        b = solve_max_snr(stats, targets, scn)
        assert a.feasible and b.feasible
        assert a.objective == pytest.approx(b.objective, rel=1e-9)

    def test_restriction_never_beats_optimum(self):
        for seed in range(8):
            scn, stats = random_drop(seed, num_antennas=100, num_users=8)
            targets = targets_for(scn, 1.0)
            opt = solve_power_min(stats, targets, scn)
            snr = solve_max_snr(stats, targets, scn)
            if snr.feasible:
                assert opt.feasible  # feasible-set inclusion
                assert opt.objective <= snr.objective * (1 + 1e-9)
                best = max_snr_assignment(stats.beta)
                for t, s in enumerate(snr.association.serving_sets):
                    assert set(s) <= {int(best[t])}


class TestSolutionContracts:
    @pytest.mark.parametrize("seed", range(6))
    def test_feasible_drops_meet_all_invariants(self, seed):
        scn, stats = random_drop(seed, num_antennas=120, num_users=10)
        targets = targets_for(scn, 1.0)
        res = solve_power_min(stats, targets, scn)
        if not res.feasible:
            pytest.skip("infeasible drop")
        # power caps
        assert np.all(res.allocation.per_bs_power() <= scn.pmax + 1e-9)
        # QoS attainment and binding
        se = se_mrt_all(stats, res.allocation, scn)
        assert np.all(se >= targets.xi - 1e-6)
        sinr = sinr_mrt_all(stats, res.allocation, scn)
        np.testing.assert_allclose(sinr, targets.xi_hat, rtol=1e-8)
        # association rule at the dual optimum
        report = association_rule_check(
            stats, targets, scn, res.allocation, res.qos_duals, res.power_duals
        )
        assert report.passed, report.violations
        # duals are sign-correct
        assert np.all(res.qos_duals >= -1e-12) and np.all(res.power_duals >= -1e-12)

    def test_vacuous_user_passes_rule_check(self, small_scenario, small_stats):
        xi = np.array([1.0, 0.0, 1.0, 0.0, 1.0, 0.0])
        targets = QosTargets.from_se(
            xi, small_scenario.coherence_length, small_scenario.pilot_length
        )
        res = solve_power_min(small_stats, targets, small_scenario)
        assert res.feasible
        for t in (1, 3, 5):
            assert res.association.serving_sets[t] == ()
        report = association_rule_check(
            small_stats, targets, small_scenario, res.allocation, res.qos_duals, res.power_duals
        )
        assert report.passed

    def test_result_record_is_json_ready(self, small_scenario, small_stats):
        targets = targets_for(small_scenario, 1.0)
        res = solve_power_min(small_stats, targets, small_scenario)
        record = json.loads(json.dumps(res.to_json_dict()))
        assert record["status"] == "optimal"
        assert len(record["rho"]) == 4 and len(record["rho"][0]) == 6
        assert len(record["lambda"]) == 6 and len(record["mu"]) == 4
        assert len(record["serving_sets"]) == 6

    def test_association_map_threshold(self):
        alloc = PowerAllocation(np.array([[1.0, 1e-9], [0.0, 0.5]]))
        amap = AssociationMap.from_allocation(alloc, pmax=np.array([40.0, 40.0]))
        assert amap.serving_sets == ((0,), (1,))
        assert amap.joint_fraction == 0.0
