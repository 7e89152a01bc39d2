import math
from fractions import Fraction

import numpy as np
import pytest

import statattract as sa
from statattract.bowen import (
    BOWEN_GRID,
    BOWEN_LADDER,
    CELL_TRANSIT,
    CELL_X1,
    CELL_X2,
    BowenLedger,
    CycleOverflowError,
)


class TestSaddleParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            sa.SaddleParams(1.0, 2.0)
        with pytest.raises(ValueError):
            sa.SaddleParams(2.0, 2.0, L0_prime=0.0)
        with pytest.raises(ValueError):
            sa.SaddleParams(2.0, 2.0, r=1.5)
        with pytest.raises(ValueError):
            sa.SaddleParams(2.0, 2.0, transit_k=-1)

    def test_regime_defaults(self):
        assert sa.default_saddle_params(sa.RULE_B, 2, 4).r == 2.0
        assert sa.default_saddle_params(sa.RULE_A, 2, 4).r == 2.5
        assert sa.default_saddle_params(sa.RULE_C, 2, 4).r == 2.5


class TestStayingTime:
    def test_arithmetic_example(self):
        # L = ln 100 at eigenvalue e gives N = ln 100
        assert math.exp(sa.staying_time(math.log(100.0), math.e)) == pytest.approx(
            math.log(100.0), rel=1e-12)

    def test_linearity_in_L(self):
        n1 = math.exp(sa.staying_time(2.0, 3.0))
        n2 = math.exp(sa.staying_time(4.0, 3.0))
        assert n2 == pytest.approx(2 * n1, rel=1e-12)

    def test_eigenvalue_ratio(self):
        n1 = math.exp(sa.staying_time(5.0, 2.0))
        n2 = math.exp(sa.staying_time(5.0, 4.0))
        assert n1 / n2 == pytest.approx(2.0, rel=1e-12)

    def test_domain(self):
        with pytest.raises(ValueError):
            sa.staying_time(0.0, 2.0)
        with pytest.raises(ValueError):
            sa.staying_time(1.0, 1.0)


class TestPredictedT:
    def test_symmetric(self):
        assert sa.predicted_t(3.0, 3.0) == pytest.approx(0.5, abs=1e-15)

    def test_two_four_vs_simplified_oracle(self):
        # independent oracle: the algebraic simplification
        # ln(sigma2) / (ln(sigma1) + ln(sigma2))
        val = sa.predicted_t(2.0, 4.0)
        oracle = math.log(4.0) / (math.log(2.0) + math.log(4.0))
        assert val == pytest.approx(2.0 / 3.0, abs=1e-12)
        assert val == pytest.approx(oracle, abs=1e-12)

    def test_simplified_form_everywhere(self, rng):
        for _ in range(100):
            s1, s2 = 1.0 + rng.random(2) * 20
            oracle = math.log(s2) / (math.log(s1) + math.log(s2))
            assert abs(sa.predicted_t(s1, s2) - oracle) < 1e-12

    def test_reciprocal_identity(self, rng):
        # (1 + ln s1/ln s2)^-1 + (1 + ln s2/ln s1)^-1 == 1
        for _ in range(100):
            s1, s2 = 1.0 + rng.random(2) * 30
            q = math.log(s1) / math.log(s2)
            total = 1.0 / (1.0 + q) + 1.0 / (1.0 + 1.0 / q)
            assert abs(total - 1.0) < 1e-12


class TestRunCycles:
    def test_symmetric_eigenvalues_converge_to_half(self):
        params = sa.default_saddle_params(sa.RULE_B, 3.0, 3.0)
        ledger = sa.run_cycles(params, sa.RULE_B, 2000)
        tail = ledger.omega_u1[ledger.tail_slice()]
        assert abs(tail.mean() - 0.5) < 0.01

    def test_rule_b_matches_prediction(self):
        params = sa.default_saddle_params(sa.RULE_B, 2.0, 4.0)
        ledger = sa.run_cycles(params, sa.RULE_B, 10_000)
        tail = ledger.omega_u1[ledger.tail_slice()]
        assert abs(tail.mean() - sa.predicted_t(2.0, 4.0)) < 0.01

    def test_rule_a_frequency_vanishes(self):
        params = sa.default_saddle_params(sa.RULE_A, 2.0, 2.0)
        ledger = sa.run_cycles(params, sa.RULE_A, 1000)
        assert ledger.omega_u1[-1] < 0.01

    def test_frequencies_sum_to_one(self, bowen_ledgers):
        for ledger in bowen_ledgers.values():
            total = ledger.omega_u1 + ledger.omega_u2 + ledger.omega_transit
            assert np.abs(total - 1.0).max() < 1e-10

    def test_rule_b_reciprocal_limits(self):
        # 1/omega(U1) -> 1 + ln s1/ln s2 and 1/omega(U2) -> 1 + ln s2/ln s1
        params = sa.default_saddle_params(sa.RULE_B, 2.0, 8.0)
        ledger = sa.run_cycles(params, sa.RULE_B, 10_000)
        sl = ledger.tail_slice()
        w1 = ledger.omega_u1[sl].mean()
        w2 = ledger.omega_u2[sl].mean()
        q = math.log(2.0) / math.log(8.0)
        assert abs(1.0 / w1 - (1.0 + q)) < 0.01
        assert abs(1.0 / w2 - (1.0 + 1.0 / q)) < 0.1

    def test_distance_monotonicity(self, bowen_ledgers):
        # every rule strictly grows the staying times of each saddle
        for ledger in bowen_ledgers.values():
            for saddle in (1, 2):
                lns = [ln_N for _, s, ln_N in ledger.stays if s == saddle]
                assert all(b > a for a, b in zip(lns, lns[1:]))

    def test_rule_c_truncates_at_cap(self):
        params = sa.default_saddle_params(sa.RULE_C, 2.0, 2.0)
        ledger = sa.run_cycles(params, sa.RULE_C, 50)
        assert ledger.truncated
        assert len(ledger.stays) <= 12
        # all recorded log-distances stayed below the cap
        for _, _, ln_N in ledger.stays:
            assert ln_N < math.log(1e100)

    def test_rule_b_never_truncates(self):
        params = sa.default_saddle_params(sa.RULE_B, 2.0, 4.0)
        assert not sa.run_cycles(params, sa.RULE_B, 500).truncated

    def test_overflow_raises(self):
        params = sa.SaddleParams(2.0, 2.0, L0_prime=1e200, r=2.5)
        with pytest.raises(CycleOverflowError, match="representable range"):
            sa.run_cycles(params, sa.RULE_A, 5)

    def test_logsumexp_vs_exact_fraction_oracle(self):
        # brute-force oracle: staying times as plain floats, cumulative sums
        # in exact rational arithmetic
        for rule, sigma in ((sa.RULE_B, 4.0), (sa.RULE_A, 8.0)):
            params = sa.SaddleParams(sigma, sigma, L0_prime=2.0, transit_k=7,
                                     r=2.0 if rule.tag == "B" else 2.5)
            m = 20
            ledger = sa.run_cycles(params, rule, m)
            exact_t1 = Fraction(0)
            exact_t2 = Fraction(0)
            ln_sig = math.log(sigma)
            L_prime = params.L0_prime
            for _ in range(m):
                n1 = math.exp(math.log(L_prime) - math.log(ln_sig))
                assert n1 < 1e6
                exact_t1 += Fraction(n1)
                L = rule.next_L(L_prime, math.log(params.r))
                n2 = math.exp(math.log(L) - math.log(ln_sig))
                assert n2 < 1e6
                exact_t2 += Fraction(n2)
                L_prime = rule.next_L_prime(L_prime, L, math.log(params.r))
            assert math.exp(ledger.ln_T1) == pytest.approx(
                float(exact_t1), rel=1e-10)
            assert math.exp(ledger.ln_T2) == pytest.approx(
                float(exact_t2), rel=1e-10)

    def test_precondition(self):
        params = sa.default_saddle_params(sa.RULE_B, 2.0, 4.0)
        with pytest.raises(ValueError):
            sa.run_cycles(params, sa.RULE_B, 0)


class TestClassifyRegime:
    def test_rule_a(self, bowen_ledgers):
        verdict = sa.classify_regime(bowen_ledgers["A"])
        assert verdict.kind == "convergent_to_x2"

    def test_rule_b(self, bowen_ledgers):
        verdict = sa.classify_regime(bowen_ledgers["B"])
        assert verdict.kind == "convergent_mix"
        assert abs(verdict.t_hat - sa.predicted_t(2.0, 4.0)) < 0.01

    def test_rule_c(self, bowen_ledgers):
        verdict = sa.classify_regime(bowen_ledgers["C"])
        assert verdict.kind == "oscillatory"
        assert verdict.lo < 0.05
        assert verdict.hi > 0.95

    @pytest.mark.parametrize("s1", [1.5, 2.0, 4.0, 8.0])
    @pytest.mark.parametrize("s2", [1.5, 2.0, 4.0, 8.0])
    def test_class_matches_rule_over_eigenvalue_grid(self, s1, s2):
        expected = {"A": "convergent_to_x2", "B": "convergent_mix",
                    "C": "oscillatory"}
        for rule, cycles in ((sa.RULE_A, 400), (sa.RULE_B, 2000),
                             (sa.RULE_C, 12)):
            params = sa.default_saddle_params(rule, s1, s2)
            ledger = sa.run_cycles(params, rule, cycles)
            assert sa.classify_regime(ledger).kind == expected[rule.tag]

    def test_too_few_samples(self):
        params = sa.default_saddle_params(sa.RULE_B, 2.0, 4.0)
        ledger = BowenLedger(params=params, rule=sa.RULE_B,
                             omega_u1=np.full(10, 0.5), ln_n=np.arange(10.0))
        with pytest.raises(ValueError, match="fewer than 20"):
            sa.classify_regime(ledger)

    def test_inconclusive_pattern(self):
        params = sa.default_saddle_params(sa.RULE_B, 2.0, 4.0)
        w = np.tile([0.3, 0.4], 30)
        ledger = BowenLedger(params=params, rule=sa.RULE_B, omega_u1=w,
                             ln_n=np.arange(60.0),
                             saddle=np.ones(60, dtype=np.int64),
                             is_boundary=np.zeros(60, dtype=bool))
        with pytest.raises(ValueError, match="inconclusive"):
            sa.classify_regime(ledger)


class TestSymbolicTrace:
    def test_occupancies_normalized(self, bowen_ledgers):
        trace = sa.symbolic_trace(bowen_ledgers["C"])
        assert trace.grid is BOWEN_GRID
        np.testing.assert_allclose(trace.occ.sum(axis=1), 1.0, atol=1e-12)
        used = {CELL_X1, CELL_X2, CELL_TRANSIT}
        others = [c for c in range(BOWEN_GRID.size) if c not in used]
        assert np.all(trace.occ[:, others] == 0)

    def test_ledger_snapshots_are_measures(self, bowen_ledgers):
        snaps = sa.ledger_snapshots(bowen_ledgers["B"])
        assert len(snaps) >= 8
        for s in snaps[:5]:
            assert abs(s.weights.sum() - 1.0) < 1e-12

    def test_rule_c_tail_is_segment(self, bowen_ledgers):
        snaps = sa.ledger_snapshots(bowen_ledgers["C"])
        cls = sa.limit_set_classify(snaps)
        assert cls.tag == "segment"
        ends = {int(np.argmax(m.weights)) for m in cls.measures}
        assert ends == {CELL_X1, CELL_X2}

    def test_bowen_ladder_respects_floor(self):
        assert BOWEN_LADDER[-1] >= 2.0 / BOWEN_GRID.size
