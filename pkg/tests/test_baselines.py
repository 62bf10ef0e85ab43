"""Comparison-controller building blocks."""

import math

import pytest

from rectsim.baselines import (BaselineGains, PiState, StaState, ItsmcState,
                               pi_pr_step, sta_step, itsmc_step)
from rectsim.voltctl import fpow


class TestPi:
    def test_zero_error(self):
        state = PiState()
        assert pi_pr_step(0.0, state, 0.01, 1.0, 1e-3) == 0.0
        assert state.integral == 0.0

    def test_constant_error_ramp(self):
        # output follows kp*e + ki*e*t for constant error
        kp, ki, e, dt = 0.01, 1.0, 2.5, 1e-3
        state = PiState()
        for k in range(1000):
            out = pi_pr_step(e, state, kp, ki, dt)
        t = 1000 * dt
        assert out == pytest.approx(kp * e + ki * e * t, rel=1e-12)

    def test_freeze(self):
        state = PiState(integral=1.0)
        pi_pr_step(5.0, state, 0.01, 1.0, 1e-3, frozen=True)
        assert state.integral == 1.0


class TestSta:
    def test_zero(self):
        assert sta_step(0.0, StaState(), 30.0, 2.0, 1e-3) == 0.0

    def test_instantaneous_term(self):
        assert sta_step(1.0, StaState(), 30.0, 2.0, 1e-3) == pytest.approx(
            -30.0, rel=1e-12)

    def test_integral_accumulates(self):
        state = StaState()
        sta_step(1.0, state, 30.0, 2.0, 1e-3)
        assert state.v == pytest.approx(-2e-3)


class TestItsmc:
    def test_zero_states(self):
        assert itsmc_step(0.0, ItsmcState(), 1.0, 1.0, 0.5, 5, 3, 1e-3) == 0.0

    def test_double_integrator_cross_implementation(self):
        # independent transcription of the same structure, integrated side
        # by side on a double-integrator error trajectory
        zeta, mu, sig, p, q, p1, q1 = 1.0, 1.0, 0.5, 5, 3, 1, 2
        dt = 1e-4
        state = ItsmcState()
        ref_int_e = 0.0
        ref_int_term = 0.0
        e, de = 1.0, 0.0
        for k in range(2000):
            out = itsmc_step(e, state, zeta, mu, sig, p, q, dt, p1, q1)
            # reference computation, written independently
            surf = e + zeta * ref_int_e + mu * ref_int_term
            sgn_e = (e > 0) - (e < 0)
            term = sgn_e * abs(e) ** (q1 / p1)
            expected = (zeta * e + mu * term
                        + sig * fpow(surf, q, p))
            assert out == pytest.approx(expected, rel=1e-12)
            ref_int_e += e * dt
            ref_int_term += term * dt
            # double integrator driven by the law
            dde = -out - 0.5 * de
            de += dde * dt
            e += de * dt

    def test_odd_extension_of_even_exponent(self):
        # |e|^(q1/p1) * sgn(e) with (p1, q1) = (1, 2) must be odd in e
        a = itsmc_step(0.5, ItsmcState(), 1.0, 1.0, 0.5, 5, 3, 1e-3)
        b = itsmc_step(-0.5, ItsmcState(), 1.0, 1.0, 0.5, 5, 3, 1e-3)
        assert a == pytest.approx(-b, rel=1e-12)


class TestBaselineGains:
    def test_defaults_match_benchmark_table(self):
        g = BaselineGains()
        assert (g.kp_v, g.ki_v) == (0.01, 1.0)
        assert (g.kp_c, g.ki_c) == (0.01, 1.0)
        assert (g.alpha1_v, g.alpha2_v) == (20.0, 4.0)
        assert (g.alpha1_c, g.alpha2_c) == (30.0, 2.0)
        assert (g.zeta_c, g.mu_c, g.sigma_c) == (1.0, 1.0, 0.5)
        assert (g.p_c, g.q_c, g.p1_c, g.q1_c) == (5, 3, 1, 2)

    def test_positive_gains_required(self):
        with pytest.raises(ValueError):
            BaselineGains(kp_v=0.0)

    def test_method_name_checked(self):
        with pytest.raises(ValueError):
            BaselineGains(method="other")
