"""Disturbance estimation: derivative filter, adaptive law, and the ESO baseline.

The derivative filter estimates dz/dt without differentiation:

    deta_f/dt = -sigma eta_f - sigma^2 z,      y = eta_f + sigma z

For sup|d2z/dt2| <= eps the steady filter error is bounded by eps/sigma.

The adaptive law integrates

    drho_hat/dt = gamma (k1 p / c q) s fpow(ztilde2, p-q, q)
                  + (eps_rate + 1) sgn(rho_tilde_est)

and is frozen while an update would push deeper into an active control clamp.
"""

import math
from dataclasses import dataclass

from . import _engine
from .plant import PlantParams
from .voltctl import VoltageGains, fpow


@dataclass
class EstimatorState:
    """Filter state, filtered derivative, and disturbance estimate."""

    eta_f: float = 0.0
    y: float = 0.0
    rho_hat: float = 0.0

    @classmethod
    def initial(cls, z0: float, sigma: float, rho_hat0: float = 0.0):
        """Start with y(0) = 0 so a nonzero z(0) causes no derivative kick."""
        return cls(eta_f=-sigma * z0, y=0.0, rho_hat=rho_hat0)


def derivative_filter_step(state: EstimatorState, z: float, sigma: float,
                           dt: float) -> EstimatorState:
    """Advance the filter one RK4 step with z held constant over the step."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if not (math.isfinite(z) and math.isfinite(state.eta_f)):
        raise ValueError("non-finite input to derivative_filter_step")

    def f(eta):
        return -sigma * eta - sigma * sigma * z

    e = state.eta_f
    k1 = f(e)
    k2 = f(e + 0.5 * dt * k1)
    k3 = f(e + 0.5 * dt * k2)
    k4 = f(e + dt * k3)
    eta_new = e + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return EstimatorState(eta_f=eta_new, y=eta_new + sigma * z,
                          rho_hat=state.rho_hat)


def filter_error_bound(eps_rate: float, sigma: float) -> float:
    """Steady bound eps/sigma on |dz/dt - y|."""
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    return eps_rate / sigma


def rho_tilde_estimate(y: float, u: float, p_v: float, rho_hat: float,
                       params: PlantParams, literal_sign: bool = False) -> float:
    """Estimate of rho - rho_hat from the filtered derivative y.

    Default sign convention returns u*p_v - c*y - rho_hat, which matches
    rho_tilde = rho - rho_hat when y tracks dz/dt.  literal_sign=True returns
    the opposite-sign form c*y - u*p_v + rho_hat.
    """
    if literal_sign:
        return params.c * y - u * p_v + rho_hat
    return u * p_v - params.c * y - rho_hat


def adapt_rho_step(rho_hat: float, s: float, z_tilde2: float,
                   rho_tilde_est: float, gains: VoltageGains,
                   params: PlantParams, dt: float,
                   frozen: bool = False) -> float:
    """One integration step of the adaptation law (rate-independent of
    rho_hat itself, so any Runge-Kutta scheme reduces to Euler here)."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if frozen:
        return rho_hat
    g = gains
    rate = (g.gamma * (g.k1 * g.p / (params.c * g.q)) * s
            * fpow(z_tilde2, g.p - g.q, g.q)
            + (g.eps_rate + 1.0) * _engine.sgn(rho_tilde_est))
    return rho_hat + rate * dt


@dataclass
class EsoState:
    """Two-state extended observer with gains (2 w_o, w_o^2)."""

    z1_hat: float = 0.0
    z2_hat: float = 0.0
    bandwidth: float = 500.0   # observer pole location w_o, 1/s

    def __post_init__(self):
        if self.bandwidth <= 0.0:
            raise ValueError("observer bandwidth must be positive")

    def disturbance_estimate(self, c: float) -> float:
        """Estimated load power in watts (the observer tracks -rho/c)."""
        return -c * self.z2_hat


def eso_step(state: EsoState, z: float, w: float, dt: float) -> EsoState:
    """Advance the observer one RK4 step.

    `z` is the measured transformed voltage v_dc^2/2 and `w` the known input
    u*p_v/c.  The extended state converges to the lumped disturbance -rho/c.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    wo = state.bandwidth

    def f(z1, z2):
        e = z - z1
        return z2 + w + 2.0 * wo * e, wo * wo * e

    z1, z2 = state.z1_hat, state.z2_hat
    k1a, k1b = f(z1, z2)
    k2a, k2b = f(z1 + 0.5 * dt * k1a, z2 + 0.5 * dt * k1b)
    k3a, k3b = f(z1 + 0.5 * dt * k2a, z2 + 0.5 * dt * k2b)
    k4a, k4b = f(z1 + dt * k3a, z2 + dt * k3b)
    return EsoState(
        z1_hat=z1 + dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a),
        z2_hat=z2 + dt / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b),
        bandwidth=wo,
    )
