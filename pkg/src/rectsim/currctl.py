"""Inner-loop finite-time current regulator.

Integral terminal sliding manifold per axis:

    s = itilde + beta * integral of fpow(itilde, q, p)

with the saturation reaching law (delta + eta) * sat(s / eps).  On the
manifold the error obeys d(itilde)/dt = -beta * fpow(itilde, q, p), which
reaches zero in the terminal time p / (beta (p - q)) * |itilde(0)|^(1 - q/p).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _engine
from .plant import PlantParams
from .voltctl import fpow

IREF_INTERPRETATIONS = ("power", "literal")


@dataclass
class CurrentGains:
    """Current-loop gain set; defaults are the bench tuning."""

    p: int = 5
    q: int = 3
    beta: float = 0.5
    delta: float = 2.0     # grid-disturbance bound, V scale
    eta: float = 1.0       # reaching gain
    eps_bl: float = 1.0    # boundary-layer width, surface (A) units

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.p % 2 == 0 or self.q % 2 == 0 or self.p <= 0 or self.q <= 0:
            raise ValueError("p and q must be positive odd integers")
        if not (self.p > self.q and 1.0 < self.p / self.q < 2.0):
            raise ValueError("p/q must lie in (1, 2) with p > q")
        if self.beta <= 0 or self.eta <= 0 or self.eps_bl <= 0:
            raise ValueError("beta, eta, eps_bl must be positive")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")

    @property
    def reaching_floor(self) -> float:
        """Radius of the boundary-layer floor eta*sqrt(2)*eps/(delta+eta):
        outside it the energy decrease V' <= -eta sqrt(n) ||s|| is provable,
        inside it the sat term is linear and decay is exponential.  Measured
        surface-reaching times are taken against this radius."""
        return self.eta * math.sqrt(2.0) * self.eps_bl / (self.delta + self.eta)


@dataclass
class CurrentLoopState:
    """Reference, tracking error, and the terminal-integral accumulator."""

    i_ref: np.ndarray = field(default_factory=lambda: np.zeros(2))
    i_tilde: np.ndarray = field(default_factory=lambda: np.zeros(2))
    integral_acc: np.ndarray = field(default_factory=lambda: np.zeros(2))
    s: np.ndarray = field(default_factory=lambda: np.zeros(2))


def current_refs(u_voltage: float, v_d: float, p_v_base: float = 1.0,
                 interpretation: str = "power"):
    """dq current references from the voltage-loop output.

    "power": the voltage loop commands P* = u * p_v_base watts, so
    i_d* = P*/v_d.  "literal": i_d* = u/v_d as printed (micro-ampere scale).
    i_q* = 0 either way.
    """
    if v_d == 0.0:
        raise ZeroDivisionError("current_refs requires v_d != 0")
    if interpretation not in IREF_INTERPRETATIONS:
        raise ValueError(f"interpretation must be one of {IREF_INTERPRETATIONS}")
    if interpretation == "power":
        return np.array([u_voltage * p_v_base / v_d, 0.0])
    return np.array([u_voltage / v_d, 0.0])


def psi_term(i0, di0, v, params: PlantParams, omega_g: float | None = None):
    """Known feedforward psi = -r i0 + w_g l J i0 + v - l di0/dt."""
    i0 = np.asarray(i0, dtype=float)
    di0 = np.asarray(di0, dtype=float)
    v = np.asarray(v, dtype=float)
    w = params.omega_g if omega_g is None else omega_g
    j_i0 = np.array([i0[1], -i0[0]])
    return -params.r * i0 + w * params.l * j_i0 + v - params.l * di0


def current_surface(i_tilde, integral_acc, beta: float) -> np.ndarray:
    """s = itilde + beta * integral_acc (accumulator advanced by the engine)."""
    return np.asarray(i_tilde, dtype=float) + beta * np.asarray(integral_acc,
                                                                dtype=float)


def terminal_time(i_tilde0: float, beta: float, p: int, q: int) -> float:
    """On-surface time to the terminal attractor, per component."""
    if i_tilde0 == 0.0:
        return 0.0
    return p / (beta * (p - q)) * abs(i_tilde0) ** (1.0 - q / p)


def sat_vec(s, eps_bl: float) -> np.ndarray:
    """Componentwise sat(s_i/eps): identity inside |s_i| <= eps, sign outside."""
    if eps_bl <= 0.0:
        raise ValueError("eps_bl must be positive")
    s = np.asarray(s, dtype=float)
    return np.clip(s / eps_bl, -1.0, 1.0)


def current_control(loop: CurrentLoopState, i, v, v_dc: float,
                    gains: CurrentGains, params: PlantParams,
                    psi=None, omega_g: float | None = None):
    """Robust current law; components clamped to the modulation range [-1, 1].

    Returns (u, n_clamped).  `psi` defaults to psi_term with di0 = 0.
    """
    if v_dc <= 0.0:
        raise ValueError("current_control requires v_dc > 0")
    g = gains
    i = np.asarray(i, dtype=float)
    v = np.asarray(v, dtype=float)
    w = params.omega_g if omega_g is None else omega_g
    ti = i - loop.i_ref
    if psi is None:
        psi = psi_term(loop.i_ref, np.zeros(2), v, params, w)
    s = current_surface(ti, loop.integral_acc, g.beta)
    j_ti = np.array([ti[1], -ti[0]])
    tp = np.array([fpow(ti[0], g.q, g.p), fpow(ti[1], g.q, g.p)])
    raw = (-params.r * ti + w * params.l * j_ti + psi
           + params.l * g.beta * tp
           + (g.delta + g.eta) * sat_vec(s, g.eps_bl)) / v_dc
    u = np.clip(raw, -1.0, 1.0)
    return u, int(np.sum(u != raw))


def current_reaching_bound(s0_norm: float, gains: CurrentGains,
                           params: PlantParams, n: int = 2):
    """(proof-form bound l*||s0||/(eta sqrt(n)), displayed endpoint l*eps/eta)."""
    proof = params.l * s0_norm / (gains.eta * math.sqrt(n))
    displayed = params.l * gains.eps_bl / gains.eta
    return proof, displayed
