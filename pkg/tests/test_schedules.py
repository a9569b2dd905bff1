import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dagrad.schedules import (
    Constant,
    ConstantC,
    DecayingC,
    InverseSqrtWarmup,
    PolynomialDecay,
    SqrtDecay,
    Stagewise,
    check_ck_lemma,
    ck_lemma_violation,
    lambda_weight,
    momentum_coeff,
    step_size,
)


class TestStepSize:
    def test_sqrt_decay(self):
        assert step_size(SqrtDecay(1.0, 0.0), 3) == 0.5  # 1/sqrt(4)

    def test_stagewise_tenthing(self):
        # ten-fold decrease at steps 150 and 225; at k=200 one boundary crossed
        sched = Stagewise(0.1, (150, 225), 0.1)
        assert step_size(sched, 200) == pytest.approx(0.01)
        assert step_size(sched, 149) == pytest.approx(0.1)
        assert step_size(sched, 300) == pytest.approx(0.001)

    def test_constant(self):
        sched = Constant(2.5e-4)
        for k in (0, 1, 10, 10_000):
            assert step_size(sched, k) == 2.5e-4

    def test_warmup_ramp_then_decay(self):
        sched = InverseSqrtWarmup(0.025, 4000)
        assert step_size(sched, 0) == pytest.approx(0.025 / 4000)
        assert step_size(sched, 3999) == pytest.approx(0.025)
        assert step_size(sched, 7999) == pytest.approx(0.025 * math.sqrt(0.5))

    def test_poly_decay_stays_positive(self):
        sched = PolynomialDecay(0.005, 100, 1.0)
        vals = [step_size(sched, k) for k in range(150)]
        assert all(v > 0 for v in vals)
        assert vals[0] == 0.005
        assert vals[50] == pytest.approx(0.0025)

    def test_validation(self):
        with pytest.raises(ValueError):
            Constant(0.0)
        with pytest.raises(ValueError):
            Stagewise(0.1, (10, 5), 0.1)
        with pytest.raises(ValueError):
            Stagewise(0.1, (10,), 1.5)
        with pytest.raises(ValueError):
            step_size(Constant(1.0), -1)


class TestLambdaWeight:
    def test_values(self):
        assert lambda_weight(0.1, 0) == pytest.approx(0.1)
        assert lambda_weight(0.5, 3) == pytest.approx(1.0)
        assert lambda_weight(1.0, 99) == pytest.approx(10.0)

    def test_nondecreasing_under_constant_gamma(self):
        vals = [lambda_weight(0.37, k) for k in range(2000)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))


class TestMomentumCoeff:
    def test_decaying_first_step_is_one(self):
        assert momentum_coeff(DecayingC(0.5, 0.0), 0) == pytest.approx(1.0)

    def test_decaying_k3(self):
        assert momentum_coeff(DecayingC(0.5, 0.0), 3) == pytest.approx(1.0 / 3.0)

    def test_rate_preset_matches_closed_form(self):
        sched = DecayingC(0.5, 0.0)
        for k in (0, 1, 7, 100, 12345):
            assert momentum_coeff(sched, k) == pytest.approx(1.5 / (k + 1.5))

    def test_constant_heavy_ball_mapping(self):
        # c = 0.1 corresponds to beta = 0.9 momentum
        c = momentum_coeff(ConstantC(0.1), 17)
        assert 1.0 - c == pytest.approx(0.9)

    def test_bounds(self):
        sched = DecayingC(0.9, 3.0)
        for k in range(500):
            assert 0.0 < momentum_coeff(sched, k) <= 1.0

    def test_validation(self):
        with pytest.raises(ValueError):
            ConstantC(0.0)
        with pytest.raises(ValueError):
            DecayingC(1.0, 0.0)
        with pytest.raises(ValueError):
            DecayingC(0.5, -1.0)


class TestCkLemma:
    def test_half_no_offset_large_horizon(self):
        assert check_ck_lemma(0.5, 0.0, 10_000)

    def test_half_with_offset(self):
        assert check_ck_lemma(0.5, 5.0, 1000)

    def test_near_one(self):
        # direct numeric evaluation of both sides is the oracle here
        assert check_ck_lemma(0.999, 0.0, 1000)

    def test_violation_nonpositive(self):
        # j=0 hits exact equality at k=1 (both sides zero)
        assert ck_lemma_violation(0.5, 0.0, 100) == 0.0
        assert ck_lemma_violation(0.5, 1.0, 100) < -1e-6

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            check_ck_lemma(0.0, 0.0, 10)
        with pytest.raises(ValueError):
            check_ck_lemma(0.5, -0.1, 10)
        with pytest.raises(ValueError):
            check_ck_lemma(0.5, 0.0, 0)


@given(st.floats(1e-4, 10.0), st.integers(0, 5000))
@settings(max_examples=300, deadline=None)
def test_step_sizes_always_positive(a, k):
    for sched in (Constant(a), SqrtDecay(a, 2.0), InverseSqrtWarmup(a, 100),
                  PolynomialDecay(a, 1000, 1.0), Stagewise(a, (50, 500), 0.1)):
        assert step_size(sched, k) > 0.0


@given(st.floats(0.01, 0.99), st.floats(0.0, 20.0), st.integers(0, 2000))
@settings(max_examples=300, deadline=None)
def test_momentum_coeff_in_unit_interval(r, j, k):
    c = momentum_coeff(DecayingC(r, j), k)
    assert 0.0 < c <= 1.0
