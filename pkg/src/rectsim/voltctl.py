"""Outer-loop finite-time voltage regulator.

Works on the transformed variable z = v_dc^2 / 2 with error states
ztilde2 = z* - z and d(ztilde1)/dt = ztilde2.  The terminal surface is

    s = k1 * ztilde2^(p/q) + ztilde1

with odd p > q, p/q in (1, 2); signed fractional powers are evaluated by
fpow.  Two control-law variants are provided: the printed `literal` form and
the algebraically `consistent` form (default) whose closed loop matches the
intended surface dynamics term for term.
"""

import math
from dataclasses import dataclass

from . import _engine
from .plant import PlantParams

LAW_VARIANTS = ("consistent", "literal")


def fpow(x: float, a: int, b: int) -> float:
    """Signed fractional power sgn(x)^a * |x|^(a/b), b odd positive.

    Continuous, fpow(x, b, b) = x, and even in x when a is even.
    """
    if b <= 0 or b % 2 == 0:
        raise ValueError("fpow denominator must be an odd positive integer")
    return _engine.fpow(float(x), a, b)


@dataclass
class VoltageGains:
    """Voltage-loop gain set; defaults are the bench tuning."""

    p: int = 5
    q: int = 3
    k1: float = 1.0
    gamma: float = 0.5       # disturbance-estimation adaptation gain
    delta: float = 2.0       # disturbance magnitude bound, W
    eta: float = 1.0         # reaching gain
    sigma: float = 2000.0    # derivative-filter gain, 1/s
    eps_rate: float = 1.0    # disturbance-rate bound, W/s
    boundary_layer: float = 0.0   # optional sat width for chattering studies
    law_variant: str = "consistent"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.p % 2 == 0 or self.q % 2 == 0 or self.p <= 0 or self.q <= 0:
            raise ValueError("p and q must be positive odd integers")
        if not (self.p > self.q and 1.0 < self.p / self.q < 2.0):
            raise ValueError("p/q must lie in (1, 2) with p > q")
        if self.k1 <= 0 or self.gamma <= 0 or self.eta <= 0 or self.sigma <= 0:
            raise ValueError("k1, gamma, eta, sigma must be positive")
        if self.delta < 0 or self.eps_rate < 0:
            raise ValueError("delta and eps_rate must be >= 0")
        if self.law_variant not in LAW_VARIANTS:
            raise ValueError(f"law_variant must be one of {LAW_VARIANTS}")


@dataclass
class VoltageLoopState:
    """Voltage-loop error states and normalization power."""

    z_tilde1: float = 0.0   # integral of the squared-voltage error
    z_tilde2: float = 0.0   # squared-voltage error, V^2/2
    s: float = 0.0          # surface value
    p_v: float = 1.0        # instantaneous power normalization, W


def voltage_surface(z_tilde1: float, z_tilde2: float, gains: VoltageGains) -> float:
    """Terminal sliding surface s = k1 * fpow(ztilde2, p, q) + ztilde1."""
    return gains.k1 * fpow(z_tilde2, gains.p, gains.q) + z_tilde1


def sliding_phase_time(z_tilde1_at_t0: float, gains: VoltageGains) -> float:
    """Time for ztilde1 to reach zero along the surface dynamics."""
    g = gains
    return (g.k1 ** (g.q / g.p) * g.p / (g.p - g.q)
            * abs(z_tilde1_at_t0) ** (1.0 - g.q / g.p))


def _switch(s: float, gains: VoltageGains) -> float:
    if gains.boundary_layer > 0.0:
        return _engine.sat1(s / gains.boundary_layer)
    return _engine.sgn(s)


def voltage_control(loop: VoltageLoopState, rho_hat: float,
                    gains: VoltageGains, params: PlantParams):
    """Voltage-loop control u (dimensionless, clamped to (0, 1)).

    Returns (u, clamped): `clamped` is True when the raw value left (0, 1).
    The `consistent` variant scales the whole law by 1/p_v; the `literal`
    variant adds rho_hat and the injected term unscaled, exactly as printed.
    """
    if loop.p_v == 0.0:
        raise ZeroDivisionError("voltage_control requires p_v != 0")
    g = gains
    zt2 = loop.z_tilde2
    sw = _switch(loop.s, g)
    if g.law_variant == "consistent":
        raw = ((params.c * g.q / (g.k1 * g.p)) * fpow(zt2, 2 * g.q - g.p, g.q)
               + rho_hat + (g.delta + g.eta) * sw) / loop.p_v
    else:
        u_in = (fpow(zt2, g.p - g.q, g.q) - 1.0) * (g.delta + g.eta) * sw
        raw = ((params.c * g.q / (g.k1 * g.p * loop.p_v))
               * (fpow(zt2, 2 * g.q - g.p, g.q) + (g.delta + g.eta) * sw)
               + rho_hat + u_in)
    u = min(max(raw, 0.0), 1.0)
    return u, not (0.0 < raw < 1.0)


def reaching_time_bound(s0: float, rho_tilde0: float, gains: VoltageGains) -> float:
    """Finite reaching-time bound for the voltage surface."""
    g = gains
    norm = math.hypot(abs(s0), abs(rho_tilde0))
    num = max(g.gamma, 1.0)
    den = (math.sqrt(2.0) * min(g.gamma * (g.delta + g.eta), 1.0)
           * min(math.sqrt(g.gamma), 1.0))
    return num / den * norm
