import math

import numpy as np
import pytest

from d2eal.audit import (
    audit_bounds,
    audit_convergence,
    convergence_step_bound,
    designated_convergence_run,
    _fit_sublinearity,
)
from d2eal.config import parse_config
from d2eal.harness import execute_run

CLEAN = parse_config(
    {
        "n": 4,
        "horizon": 200,
        "topology": "complete",
        "link_drop_p": 0.0,
        "reset_enabled": False,
        "gamma": {"kind": "constant", "values": [0.02, 0.1, 0.25, 0.15]},
        "seed": 42,
    }
)


class TestBoundArithmetic:
    def test_individual_regret_bound_value(self):
        cfg = parse_config({"n": 2, "horizon": 1400, "eta_alpha": 2.0,
                            "gamma": {"kind": "constant", "values": [0.1, 0.1]},
                            "horizon": 1400})
        result = execute_run(cfg.model_copy(update={"horizon": 20}), seed=1)
        audit = audit_bounds(result)
        # bound uses the configured horizon of the audited run
        assert audit.robots[0].individual_bound == pytest.approx(2.0 * 20 / 8 + math.log(2) / 2)
        # and the benchmark arithmetic: eta 2, T 1400 -> 350.347
        assert 2.0 * 1400 / 8 + math.log(2) / 2 == pytest.approx(350.347, abs=5e-4)

    def test_optimal_learning_rate_formulas(self):
        result = execute_run(CLEAN.model_copy(update={"horizon": 1400}), seed=2)
        audit = audit_bounds(result)
        assert audit.optimal_eta_alpha == pytest.approx(math.sqrt(8 * math.log(2) / 1400))
        assert audit.optimal_eta_alpha == pytest.approx(0.0629, abs=1e-3)
        assert audit.optimal_individual_bound == pytest.approx(math.sqrt(1400 / 2 * math.log(2)))
        assert audit.optimal_individual_bound == pytest.approx(22.03, abs=5e-3)
        # complete graph on 4 nodes: every robot sees d0 = 4
        r = audit.robots[0]
        assert r.d0 == 4
        assert r.optimal_eta_w == pytest.approx(math.sqrt(8 * math.log(4) / 1400))
        assert r.optimal_social_bound == pytest.approx(math.sqrt(1400 / 2 * math.log(4)))

    def test_lipschitz_is_inverse_scale(self):
        result = execute_run(CLEAN, seed=3)
        assert audit_bounds(result).lipschitz == pytest.approx(1.0 / 50.0)


class TestBoundsHoldInCleanRegime:
    def test_regret_bounds_hold(self):
        for seed in range(5):
            result = execute_run(CLEAN, seed=100 + seed)
            audit = audit_bounds(result)
            assert audit.assumption1_violation_fraction == 0.0
            for r in audit.robots:
                assert r.individual_holds, (seed, r)
                assert r.social_holds, (seed, r)
                assert r.global_individual_holds, (seed, r)
                assert r.best_expert_holds, (seed, r)

    def test_delta_sum_accumulates_divergences(self):
        result = execute_run(CLEAN, seed=7)
        audit = audit_bounds(result)
        assert audit.delta_sum == pytest.approx(float(result.pre.delta[1:201].sum()))
        assert audit.delta_sum > 0.0

    def test_best_indices_consistent(self):
        result = execute_run(CLEAN, seed=8)
        audit = audit_bounds(result)
        expert_cum = result.run.expert_loss.sum(axis=0)
        assert audit.best_expert == int(np.argmin(expert_cum))

    def test_reset_regime_reported(self):
        cfg = CLEAN.model_copy(update={"reset_enabled": True})
        audit = audit_bounds(execute_run(cfg, seed=9))
        assert audit.reset_enabled is True


class TestSublinearityFit:
    def test_power_law_recovered(self):
        t = np.arange(0, 301, dtype=float)
        cum = 3.0 * np.power(np.maximum(t, 1), 0.4)
        cum[0] = 0.0
        c0, alpha = _fit_sublinearity(cum, 300)
        assert c0 == pytest.approx(3.0, rel=1e-6)
        assert alpha == pytest.approx(0.6, abs=1e-9)

    def test_true_expert_short_circuits(self):
        cum = np.zeros(101)
        c0, alpha = _fit_sublinearity(cum, 100)
        assert (c0, alpha) == (0.0, 1.0)


class TestConvergenceAudit:
    def test_designated_scenario_verdicts(self):
        n, eta_w, eps = 5, 2.0, 0.1
        bound = convergence_step_bound(n, eta_w, eps)
        result = designated_convergence_run(n=n, eta_w=eta_w, margin=eps, horizon=bound + 5)
        conv = audit_convergence(result)
        for r in conv.robots:
            assert r.converged
            assert r.best_neighbor_final == 0
            assert r.first_step_at_099 is not None and r.first_step_at_099 <= bound
            # the injected per-step margin is recovered from the logs
            assert r.margin_mean_last_half == pytest.approx(eps, rel=0.1)

    def test_symmetric_scenario_no_false_convergence(self):
        # two agents with identical loss streams keep weight 1/2 forever
        result = designated_convergence_run(n=2, eta_w=2.0, margin=0.0, horizon=50)
        conv = audit_convergence(result)
        assert not conv.robots[0].converged
        assert result.run.w_rows[50, 0, 0] == pytest.approx(0.5)
        assert result.run.w_rows[50, 0, 1] == pytest.approx(0.5)

    def test_requires_weight_rows(self):
        result = execute_run(CLEAN, seed=3, record_w=False)
        result.run.w_rows = None
        with pytest.raises(ValueError):
            audit_convergence(result)

    def test_step_bound_formula(self):
        # ceil(log((n-1)/0.01) / (eta_w * eps))
        assert convergence_step_bound(5, 2.0, 0.1) == math.ceil(math.log(400.0) / 0.2)
        assert convergence_step_bound(2, 2.0, 0.1) == math.ceil(math.log(100.0) / 0.2)
