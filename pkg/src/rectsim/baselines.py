"""Comparison controllers: PI/cascaded PR, adaptive super-twisting, and
finite-time integral terminal SMC.

Only the gain values are fixed by the benchmark table; the structures are
reconstructed from standard literature forms and are not authoritative:

  pi_pr        voltage: P = kp*zt2 + ki*int(zt2)      current: U = kp*e + ki*int(e)
               (the resonant branch is omitted in dq, where references are DC)
  adaptive_sta voltage: P = a1*sqrt|zt2|*sgn(zt2) + w, dw/dt = a2*sgn(zt2)
               current: U = l*(a1*sqrt|e|*sgn(e) + w), dw/dt = a2*sgn(e)
  itsmc        surface sig = e + zeta*int(e) + mu*int(|e|^(q1/p1) sgn e);
               U from zeta*e + mu*|e|^(q1/p1)*sgn(e) + sig_g*fpow(sig, q, p)
               (|e|^(q1/p1)*sgn(e) is the odd extension; (p1, q1) = (1, 2)
                would otherwise make the term sign-blind)

Voltage-loop outputs are commanded power in watts; current-loop outputs are
feedback volts added to the shared feedforward psi.  All outputs pass through
the same clamps and the same plant as the proposed method.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _engine
from .voltctl import fpow

METHODS = ("pi_pr", "adaptive_sta", "itsmc")


@dataclass
class BaselineGains:
    """Benchmark-table gain sets for the three comparison methods."""

    method: str = "pi_pr"
    # Method 1: PI / cascaded PR
    kp_v: float = 0.01
    ki_v: float = 1.0
    kp_c: float = 0.01
    ki_c: float = 1.0
    # Method 2: adaptive STA
    alpha1_v: float = 20.0
    alpha2_v: float = 4.0
    alpha1_c: float = 30.0
    alpha2_c: float = 2.0
    # Method 3: finite-time integral terminal SMC
    zeta_v: float = 1.0
    mu_v: float = 1.0
    sigma_v: float = 0.5
    p_v: int = 5
    q_v: int = 3
    zeta_c: float = 1.0
    mu_c: float = 1.0
    sigma_c: float = 0.5
    p_c: int = 5
    q_c: int = 3
    p1_c: int = 1
    q1_c: int = 2

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        positives = [self.kp_v, self.ki_v, self.kp_c, self.ki_c,
                     self.alpha1_v, self.alpha2_v, self.alpha1_c, self.alpha2_c,
                     self.zeta_v, self.mu_v, self.sigma_v,
                     self.zeta_c, self.mu_c, self.sigma_c]
        if any(g <= 0 for g in positives):
            raise ValueError("baseline gains must be positive")
        for p, q in ((self.p_v, self.q_v), (self.p_c, self.q_c)):
            if p % 2 == 0 or q % 2 == 0 or p <= q:
                raise ValueError("terminal exponents must be odd with p > q")

    def engine_params(self) -> np.ndarray:
        bp = np.zeros(_engine.N_BP)
        bp[_engine.BP_KP_V] = self.kp_v
        bp[_engine.BP_KI_V] = self.ki_v
        bp[_engine.BP_KP_C] = self.kp_c
        bp[_engine.BP_KI_C] = self.ki_c
        bp[_engine.BP_A1_V] = self.alpha1_v
        bp[_engine.BP_A2_V] = self.alpha2_v
        bp[_engine.BP_A1_C] = self.alpha1_c
        bp[_engine.BP_A2_C] = self.alpha2_c
        bp[_engine.BP_ZETA_V] = self.zeta_v
        bp[_engine.BP_MU_V] = self.mu_v
        bp[_engine.BP_SIG_V] = self.sigma_v
        bp[_engine.BP_ZETA_C] = self.zeta_c
        bp[_engine.BP_MU_C] = self.mu_c
        bp[_engine.BP_SIG_C] = self.sigma_c
        bp[_engine.BP_Q1P1_C] = self.q1_c / self.p1_c
        return bp


@dataclass
class PiState:
    integral: float = 0.0


def pi_pr_step(error: float, state: PiState, kp: float, ki: float,
               dt: float, frozen: bool = False) -> float:
    """Classic PI with external anti-windup freeze; returns the output."""
    if not frozen:
        state.integral += error * dt
    return kp * error + ki * state.integral


@dataclass
class StaState:
    v: float = 0.0


def sta_step(s: float, state: StaState, alpha1: float, alpha2: float,
             dt: float, frozen: bool = False) -> float:
    """Super-twisting law u = -a1*sqrt|s|*sgn(s) + v, dv/dt = -a2*sgn(s)."""
    out = -alpha1 * math.sqrt(abs(s)) * _engine.sgn(s) + state.v
    if not frozen:
        state.v -= alpha2 * _engine.sgn(s) * dt
    return out


@dataclass
class ItsmcState:
    int_e: float = 0.0
    int_term: float = 0.0


def itsmc_step(error: float, state: ItsmcState, zeta: float, mu: float,
               sigma_g: float, p: int, q: int, dt: float,
               p1: int = 1, q1: int = 2, frozen: bool = False) -> float:
    """Integral terminal SMC on a scalar channel; returns the output rate."""
    surf = error + zeta * state.int_e + mu * state.int_term
    out = (zeta * error
           + mu * _engine.sgn(error) * abs(error) ** (q1 / p1)
           + sigma_g * fpow(surf, q, p))
    if not frozen:
        state.int_e += error * dt
        state.int_term += _engine.sgn(error) * abs(error) ** (q1 / p1) * dt
    return out
