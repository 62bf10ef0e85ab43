"""Averaged dq-frame rectifier dynamics, frame transforms, and load/grid profiles.

Model (amplitude-invariant dq frame, balanced grid):

    l di/dt = -r i + w_g l J i + v - u v_dc        J = [[0, 1], [-1, 0]]
    c dv_dc/dt = u . i - i_l

The load enters through i_l.  Power-style profiles specify rho(t) in watts and
the implied load current is i_l = rho / v_dc; a current-segments kind drives
i_l directly (for checking the literal i_l^2 r reading of the load term).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _engine

TWO_PI = 2.0 * math.pi

#: phase-peak amplitude per volt of line-to-line RMS (amplitude-invariant dq)
LL_RMS_TO_PEAK = math.sqrt(2.0 / 3.0)


@dataclass
class PlantParams:
    """Rectifier constants; defaults are the nominal bench values."""

    l: float = 0.5e-3        # line inductance, H
    r: float = 0.02          # line resistance, ohm
    c: float = 3300e-6       # DC-link capacitance, F
    f_grid: float = 60.0     # grid frequency, Hz
    v_ll_rms: float = 400.0  # line-to-line RMS voltage, V
    v_dc_ref: float = 520.0  # DC-link reference voltage, V

    def __post_init__(self):
        self.validate()

    @property
    def omega_g(self) -> float:
        """Grid angular frequency, rad/s (always 2*pi*f_grid)."""
        return TWO_PI * self.f_grid

    @property
    def v_d(self) -> float:
        """d-axis grid voltage for the aligned frame (v_q = 0)."""
        return LL_RMS_TO_PEAK * self.v_ll_rms

    def validate(self):
        if not (self.l > 0 and self.c > 0 and self.f_grid > 0):
            raise ValueError("plant params require l > 0, c > 0, f_grid > 0")
        if self.r < 0:
            raise ValueError("plant resistance must be >= 0")
        if self.v_ll_rms <= 0 or self.v_dc_ref <= 0:
            raise ValueError("plant voltages must be positive")


@dataclass
class PlantState:
    """Electrical state: dq currents (A) and DC-link voltage (V)."""

    i_d: float = 0.0
    i_q: float = 0.0
    v_dc: float = 520.0

    def validate(self):
        for name in ("i_d", "i_q", "v_dc"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"non-finite plant state: {name}")
        if self.v_dc <= 0:
            raise ValueError("v_dc must stay positive (current law divides by it)")


def plant_derivative(state: PlantState, u, v_dq, i_l: float,
                     params: PlantParams) -> np.ndarray:
    """State derivative (di_d/dt, di_q/dt, dv_dc/dt) of the averaged model.

    `u` is the dimensionless modulation vector, `v_dq` the grid voltage in the
    dq frame, `i_l` the DC-side load current.
    """
    u = np.asarray(u, dtype=float)
    v_dq = np.asarray(v_dq, dtype=float)
    vals = np.concatenate(([state.i_d, state.i_q, state.v_dc, i_l], u, v_dq))
    if not np.all(np.isfinite(vals)):
        raise ValueError("non-finite input to plant_derivative")
    state.validate()
    w = params.omega_g
    di_d = (-params.r * state.i_d + w * params.l * state.i_q
            + v_dq[0] - u[0] * state.v_dc) / params.l
    di_q = (-params.r * state.i_q - w * params.l * state.i_d
            + v_dq[1] - u[1] * state.v_dc) / params.l
    dv_dc = (u[0] * state.i_d + u[1] * state.i_q - i_l) / params.c
    return np.array([di_d, di_q, dv_dc])


def abc_to_dq(x_abc, theta: float) -> np.ndarray:
    """Amplitude-invariant abc -> dq transform at grid angle theta.

    A balanced unit cosine set aligned with phase A maps to (1, 0).
    """
    a, b, c = np.asarray(x_abc, dtype=float)
    k = 2.0 / 3.0
    d = k * (a * math.cos(theta)
             + b * math.cos(theta - TWO_PI / 3.0)
             + c * math.cos(theta + TWO_PI / 3.0))
    q = -k * (a * math.sin(theta)
              + b * math.sin(theta - TWO_PI / 3.0)
              + c * math.sin(theta + TWO_PI / 3.0))
    return np.array([d, q])


def dq_to_abc(x_dq, theta: float) -> np.ndarray:
    """Inverse of abc_to_dq; the reconstructed phases sum to zero."""
    d, q = np.asarray(x_dq, dtype=float)
    a = d * math.cos(theta) - q * math.sin(theta)
    b = d * math.cos(theta - TWO_PI / 3.0) - q * math.sin(theta - TWO_PI / 3.0)
    c = d * math.cos(theta + TWO_PI / 3.0) - q * math.sin(theta + TWO_PI / 3.0)
    return np.array([a, b, c])


LOAD_KINDS = ("power-segments", "sinusoidal-power", "constant-resistance",
              "current-segments")

_KIND_CODE = {
    "power-segments": _engine.LOAD_POWER_SEGMENTS,
    "sinusoidal-power": _engine.LOAD_SIN_POWER,
    "constant-resistance": _engine.LOAD_CONST_R,
    "current-segments": _engine.LOAD_CURRENT_SEGMENTS,
}


@dataclass
class LoadProfile:
    """Time-scheduled DC-side load.

    kind = "power-segments":     segments [(t_start_s, power_W), ...]
    kind = "sinusoidal-power":   offset_W + amplitude_W * sin(2 pi frequency_hz t)
    kind = "constant-resistance": resistance_ohm across the DC link
    kind = "current-segments":   segments [(t_start_s, i_l_A), ...]
    """

    kind: str = "power-segments"
    segments: list = field(default_factory=lambda: [(0.0, 0.0)])
    amplitude: float = 0.0
    frequency: float = 0.0
    offset: float = 0.0
    resistance: float = 1e9
    declared_delta: float = 0.0   # Assumption-3 magnitude bound, W
    declared_eps: float = 0.0     # Assumption-3 rate bound, W/s
    horizon: float = 1.0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.kind not in LOAD_KINDS:
            raise ValueError(f"unknown load kind {self.kind!r}")
        if self.kind in ("power-segments", "current-segments"):
            times = [t for t, _ in self.segments]
            if not self.segments or times[0] > 0.0:
                raise ValueError("segments must start at or before t = 0")
            if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
                raise ValueError("segments must be time-ordered without overlap")
        if self.kind == "constant-resistance" and self.resistance <= 0:
            raise ValueError("resistance must be positive")
        if self.kind == "sinusoidal-power" and self.frequency < 0:
            raise ValueError("frequency must be >= 0")

    @property
    def kind_code(self) -> int:
        return _KIND_CODE[self.kind]

    def engine_arrays(self, v_nominal: float):
        """(kind, p0, p1, p2, seg_t, seg_v) for the jitted evaluator."""
        seg_t = np.array([0.0])
        seg_v = np.array([0.0])
        p0 = p1 = p2 = 0.0
        if self.kind in ("power-segments", "current-segments"):
            seg_t = np.array([float(t) for t, _ in self.segments])
            seg_v = np.array([float(v) for _, v in self.segments])
        elif self.kind == "sinusoidal-power":
            p0, p1, p2 = self.offset, self.amplitude, self.frequency
        else:
            p0 = self.resistance
        return self.kind_code, p0, p1, p2, seg_t, seg_v

    def check_bounds(self, v_nominal: float, n_samples: int = 10000):
        """Dense-sample rho(t) and its within-segment rate against the
        declared Assumption-3 bounds; raises on violation."""
        ts = np.linspace(0.0, self.horizon, n_samples)
        rho = np.array([self.power_at(t, v_nominal) for t in ts])
        if np.any(np.abs(rho) > self.declared_delta + 1e-9):
            raise ValueError(
                f"load exceeds declared delta = {self.declared_delta} W "
                f"(max |rho| = {np.abs(rho).max():.3f} W)")
        if self.kind == "sinusoidal-power":
            rate_max = abs(self.amplitude) * TWO_PI * self.frequency
            if rate_max > self.declared_eps + 1e-9:
                raise ValueError(
                    f"load rate {rate_max:.3f} W/s exceeds declared eps "
                    f"= {self.declared_eps} W/s")
        # piecewise kinds are flat within segments; steps are excluded from
        # the rate bound (the disturbance is piecewise constant by assumption)

    def power_at(self, t: float, v_nominal: float) -> float:
        """rho(t) evaluated with the DC link at v_nominal (module-level view;
        the engine uses the instantaneous v_dc for voltage-dependent kinds)."""
        if t < -1e-12 or t > self.horizon + 1e-12:
            raise ValueError(f"t = {t} outside scenario horizon {self.horizon}")
        if self.kind == "sinusoidal-power":
            return self.offset + self.amplitude * math.sin(TWO_PI * self.frequency * t)
        if self.kind == "constant-resistance":
            return v_nominal ** 2 / self.resistance
        value = self.segments[0][1]
        for t0, v in self.segments:
            if t0 <= t:
                value = v
        if self.kind == "current-segments":
            return v_nominal * value
        return value


def load_disturbance(t: float, profile: LoadProfile,
                     v_nominal: float = 520.0) -> float:
    """rho(t) in watts for the given profile (piecewise evaluation)."""
    return profile.power_at(t, v_nominal)


@dataclass
class GridProfile:
    """Grid-side schedules and parameter perturbations.

    freq_breakpoints: piecewise-linear (t_s, hz) pairs.
    amplitude_breakpoints: piecewise-constant (t_s, v_ll_rms) pairs.
    l_factor/r_factor: multiplicative perturbations applied to the true plant
    only (the controller keeps nominal parameters).
    """

    freq_breakpoints: list = field(default_factory=lambda: [(0.0, 60.0)])
    amplitude_breakpoints: list = field(default_factory=lambda: [(0.0, 400.0)])
    l_factor: float = 1.0
    r_factor: float = 1.0

    def __post_init__(self):
        self.validate()

    def validate(self):
        times = [t for t, _ in self.freq_breakpoints]
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ValueError("frequency schedule must be monotone in time")
        if not (0.5 <= self.l_factor <= 1.5 and 0.5 <= self.r_factor <= 1.5):
            raise ValueError("perturbation factors must lie in [0.5, 1.5]")

    def engine_arrays(self):
        f_bt = np.array([float(t) for t, _ in self.freq_breakpoints])
        f_bf = np.array([float(f) for _, f in self.freq_breakpoints])
        # cumulative grid angle at breakpoints (trapezoid over linear segments)
        f_bth = np.zeros_like(f_bt)
        for i in range(1, f_bt.size):
            dt = f_bt[i] - f_bt[i - 1]
            f_bth[i] = f_bth[i - 1] + TWO_PI * 0.5 * (f_bf[i] + f_bf[i - 1]) * dt
        a_bt = np.array([float(t) for t, _ in self.amplitude_breakpoints])
        a_bv = np.array([float(v) for _, v in self.amplitude_breakpoints])
        return f_bt, f_bf, f_bth, a_bt, a_bv

    def theta_at(self, t: float) -> float:
        f_bt, f_bf, f_bth, _, _ = self.engine_arrays()
        return _engine.grid_theta(t, f_bt, f_bf, f_bth)

    def freq_at(self, t: float) -> float:
        f_bt, f_bf, _, _, _ = self.engine_arrays()
        return _engine.grid_freq(t, f_bt, f_bf)
