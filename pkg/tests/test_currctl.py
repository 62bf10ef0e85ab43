"""Current regulator: references, feedforward, surface, times, sat, law."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from rectsim.plant import PlantParams
from rectsim.currctl import (CurrentGains, CurrentLoopState, current_refs,
                             psi_term, current_surface, terminal_time,
                             sat_vec, current_control, current_reaching_bound)


class TestCurrentRefs:
    def test_zero(self):
        assert current_refs(0.0, 326.6) == pytest.approx([0.0, 0.0])

    def test_power_interpretation(self):
        # commanded power 1000 W at v_d = 326.6 V
        refs = current_refs(0.2, 326.6, p_v_base=5000.0,
                            interpretation="power")
        assert refs[0] == pytest.approx(3.0618, rel=1e-4)
        assert refs[1] == 0.0

    def test_literal_interpretation(self):
        refs = current_refs(0.5, 326.6, interpretation="literal")
        assert refs[0] == pytest.approx(1.5309e-3, rel=1e-4)

    def test_zero_vd_rejected(self):
        with pytest.raises(ZeroDivisionError):
            current_refs(0.5, 0.0)


class TestPsiTerm:
    def setup_method(self):
        self.params = PlantParams()

    def test_pure_source(self):
        psi = psi_term((0, 0), (0, 0), (326.6, 0.0), self.params)
        assert psi == pytest.approx([326.6, 0.0])

    def test_d_axis_reference(self):
        psi = psi_term((1.0, 0.0), (0, 0), (326.6, 0.0), self.params)
        assert psi[0] == pytest.approx(326.58, abs=1e-3)
        assert psi[1] == pytest.approx(-0.18850, abs=1e-5)

    def test_q_axis_reference(self):
        psi = psi_term((0.0, 1.0), (0, 0), (0.0, 0.0), self.params)
        assert psi[0] == pytest.approx(0.18850, abs=1e-5)
        assert psi[1] == pytest.approx(-0.02, abs=1e-12)


class TestCurrentSurface:
    def test_zero(self):
        assert current_surface((0, 0), (0, 0), 0.5) == pytest.approx([0, 0])

    def test_arithmetic(self):
        s = current_surface((1.0, 0.0), (2.0, 0.0), 0.5)
        assert s == pytest.approx([2.0, 0.0])


class TestTerminalTime:
    def test_zero(self):
        assert terminal_time(0.0, 0.5, 5, 3) == 0.0

    def test_unit(self):
        assert terminal_time(1.0, 0.5, 5, 3) == pytest.approx(5.0)

    def test_power_of_two(self):
        assert terminal_time(32.0, 0.5, 5, 3) == pytest.approx(20.0)

    @pytest.mark.parametrize("beta,p,q,e0", [(0.5, 5, 3, 1.0),
                                             (1.5, 7, 5, 0.5)])
    def test_against_ode_oracle(self, beta, p, q, e0):
        analytic = terminal_time(e0, beta, p, q)
        b = 1e-10 * e0

        def rhs(t, y):
            return [-beta * math.copysign(abs(y[0]) ** (q / p), y[0])]

        def hit(t, y):
            return abs(y[0]) - b
        hit.terminal = True
        hit.direction = -1

        sol = solve_ivp(rhs, (0.0, 3.0 * analytic), [e0], events=hit,
                        rtol=1e-12, atol=1e-14, max_step=analytic / 50)
        t_num = float(sol.t_events[0][0]) + terminal_time(b, beta, p, q)
        assert t_num == pytest.approx(analytic, rel=5e-3)


class TestSatVec:
    def test_inside_layer(self):
        assert sat_vec([0.5], 1.0) == pytest.approx([0.5])

    def test_clipped(self):
        assert sat_vec([2.0, -3.0], 1.0) == pytest.approx([1.0, -1.0])

    def test_identity_randomized(self):
        # s . sat(s/eps) == sum min(s_i^2/eps, |s_i|) exactly
        rng = np.random.default_rng(0)
        for eps in (0.5, 1.0, 2.0):
            s = rng.uniform(-3.0, 3.0, size=(100000, 2))
            lhs = np.sum(s * np.clip(s / eps, -1, 1), axis=1)
            rhs = np.sum(np.minimum(s * s / eps, np.abs(s)), axis=1)
            assert float(np.max(np.abs(lhs - rhs))) <= 1e-12

    def test_printed_lower_bound_counterexample(self):
        # the claimed bound s.sat(s/eps) >= sqrt(n)||s|| fails near the
        # origin: n = 1, eps = 1, s = 0.5 gives 0.25 < 0.5
        s = np.array([0.5])
        lhs = float(s @ sat_vec(s, 1.0))
        assert lhs == pytest.approx(0.25)
        assert lhs < math.sqrt(1) * float(np.linalg.norm(s))

    def test_eps_positive(self):
        with pytest.raises(ValueError):
            sat_vec([1.0], 0.0)


class TestCurrentControl:
    def setup_method(self):
        self.params = PlantParams()
        self.gains = CurrentGains()

    def test_feedforward_only(self):
        loop = CurrentLoopState(i_ref=np.zeros(2))
        u, clamped = current_control(loop, (0.0, 0.0), (326.6, 0.0), 520.0,
                                     self.gains, self.params,
                                     psi=np.array([326.6, 0.0]))
        assert u[0] == pytest.approx(0.62808, abs=1e-5)
        assert u[1] == pytest.approx(0.0, abs=1e-12)
        assert clamped == 0

    def test_saturated_branch(self):
        loop = CurrentLoopState(i_ref=np.zeros(2),
                                integral_acc=np.array([4.0, 0.0]))
        # itilde = 0 but s = beta * acc = (2, 0): sat saturates at +1
        u, _ = current_control(loop, (0.0, 0.0), (326.6, 0.0), 520.0,
                               self.gains, self.params,
                               psi=np.array([326.6, 0.0]))
        assert u[0] == pytest.approx((326.6 + 3.0) / 520.0, rel=1e-6)

    def test_all_zero(self):
        loop = CurrentLoopState()
        u, _ = current_control(loop, (0.0, 0.0), (0.0, 0.0), 520.0,
                               self.gains, self.params)
        assert u == pytest.approx([0.0, 0.0], abs=1e-15)

    def test_vdc_guard(self):
        with pytest.raises(ValueError):
            current_control(CurrentLoopState(), (0, 0), (0, 0), 0.0,
                            self.gains, self.params)

    def test_modulation_clamp(self):
        loop = CurrentLoopState(i_ref=np.zeros(2))
        u, clamped = current_control(loop, (0.0, 0.0), (8000.0, 0.0), 520.0,
                                     self.gains, self.params,
                                     psi=np.array([8000.0, 0.0]))
        assert u[0] == 1.0
        assert clamped == 1


class TestReachingBound:
    def test_zero(self):
        proof, displayed = current_reaching_bound(0.0, CurrentGains(),
                                                  PlantParams())
        assert proof == 0.0
        assert displayed == pytest.approx(0.5e-3)

    def test_proof_form(self):
        proof, _ = current_reaching_bound(1.0, CurrentGains(), PlantParams())
        assert proof == pytest.approx(3.5355e-4, rel=1e-4)

    def test_floor_radius(self):
        g = CurrentGains()
        assert g.reaching_floor == pytest.approx(math.sqrt(2.0) / 3.0,
                                                 rel=1e-12)


class TestCurrentGainValidation:
    def test_defaults(self):
        g = CurrentGains()
        assert (g.p, g.q, g.delta, g.eta, g.beta, g.eps_bl) == (5, 3, 2.0,
                                                                1.0, 0.5, 1.0)

    @pytest.mark.parametrize("kwargs", [dict(p=4), dict(p=9, q=3),
                                        dict(beta=0.0), dict(eps_bl=0.0)])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            CurrentGains(**kwargs)
