"""Deterministic fixed-step engine wrapper: scenarios, logging, metrics,
and log-based bound reports.

A scenario fully determines a run; two runs of the same scenario produce
byte-identical logs.  The integrator is classical RK4 at a fixed step with
controller outputs held over each step (see _engine).
"""

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from . import _engine
from .plant import PlantParams, LoadProfile, GridProfile, dq_to_abc
from .voltctl import VoltageGains, reaching_time_bound
from .currctl import CurrentGains, current_reaching_bound
from .baselines import BaselineGains

CONTROLLERS = ("proposed", "pi_pr", "adaptive_sta", "itsmc")
ESTIMATORS = ("adaptive", "eso")
MODES = ("cascade", "current")

_CTRL_CODE = {"proposed": _engine.CTRL_PROPOSED, "pi_pr": _engine.CTRL_PI_PR,
              "adaptive_sta": _engine.CTRL_STA, "itsmc": _engine.CTRL_ITSMC}
_EST_CODE = {"adaptive": _engine.EST_ADAPTIVE, "eso": _engine.EST_ESO}
_MODE_CODE = {"cascade": _engine.MODE_CASCADE, "current": _engine.MODE_CURRENT}
_LAW_CODE = {"consistent": _engine.LAW_CONSISTENT, "literal": _engine.LAW_LITERAL}
_IREF_CODE = {"power": _engine.IREF_POWER, "literal": _engine.IREF_LITERAL}

#: fixed CSV column order; units are part of the names
LOG_COLUMNS = (
    "t_s", "v_dc_V", "ztilde1_V2s", "ztilde2_V2", "s_volt", "rho_W",
    "rho_hat_W", "i_d_A", "i_q_A", "i_d_ref_A", "u_volt", "u_d", "u_q",
    "s_d_A", "s_q_A", "i_a_A", "clamp_volt", "clamp_curr",
)


class ScenarioError(ValueError):
    """Scenario validation failure; collects per-field diagnostics."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class SimulationAbort(RuntimeError):
    """Engine abort (DC-link collapse or non-finite state); carries the
    partial log."""

    def __init__(self, message, log):
        super().__init__(message)
        self.log = log


@dataclass
class Scenario:
    """Full description of one deterministic run."""

    name: str = "unnamed"
    horizon: float = 0.1
    dt: float = 1e-6
    log_period: float = 1e-5
    mode: str = "cascade"
    controller: str = "proposed"
    estimator: str = "adaptive"
    current_ref_interpretation: str = "power"
    p_v_base: float = 5000.0
    eso_bandwidth: float = 500.0
    plant: PlantParams = field(default_factory=PlantParams)
    grid: GridProfile = field(default_factory=GridProfile)
    load: LoadProfile = field(default_factory=LoadProfile)
    voltage_gains: VoltageGains = field(default_factory=VoltageGains)
    current_gains: CurrentGains = field(default_factory=CurrentGains)
    baseline_gains: BaselineGains = field(default_factory=BaselineGains)
    vref_schedule: list = field(default_factory=list)   # [(t_s, V), ...]
    iref_schedule: list = field(default_factory=list)   # [(t_s, i_d, i_q), ...]
    init_v_dc: float | None = None
    init_i_d: float = 0.0
    init_i_q: float = 0.0
    init_ztilde1: float = 0.0
    init_rho_hat: float = 0.0
    control_period: float | None = None   # None: controller runs every step
    tol_s: float = 1e-4      # surface-hit tolerance, surface units
    band_frac: float = 0.01  # convergence band as a fraction of the reference
    steady_frac: float = 0.2  # trailing window fraction for steady metrics

    def validate(self):
        problems = []
        if self.dt <= 0:
            problems.append("scenario.dt: must be positive")
        if self.horizon < 10 * self.dt:
            problems.append("scenario.horizon: must be at least 10*dt")
        if self.mode not in MODES:
            problems.append(f"scenario.mode: unknown {self.mode!r}")
        if self.controller not in CONTROLLERS:
            problems.append(f"controller.type: unknown {self.controller!r}")
        if self.estimator not in ESTIMATORS:
            problems.append(f"controller.estimator: unknown {self.estimator!r}")
        if self.p_v_base <= 0:
            problems.append("controller.p_v_base: must be positive")
        if self.eso_bandwidth <= 0:
            problems.append("controller.eso_bandwidth: must be positive")
        n = round(self.horizon / self.dt)
        if abs(n * self.dt - self.horizon) > 1e-9 * max(1.0, self.horizon):
            problems.append("scenario.horizon: must be an integer number of dt steps")
        le = round(self.log_period / self.dt)
        if le < 1 or abs(le * self.dt - self.log_period) > 1e-9:
            problems.append("scenario.log_period: must be a positive multiple of dt")
        elif n % le != 0:
            problems.append("scenario.horizon: must be a multiple of log_period")
        ce = self.ctrl_every
        if ce < 1 or abs(ce * self.dt - self.effective_control_period) > 1e-12:
            problems.append(
                "scenario.control_period: must be a positive multiple of dt")
        elif le % ce != 0:
            problems.append(
                "scenario.log_period: must be a multiple of control_period")
        for sched, label, width in ((self.vref_schedule, "references.v_dc", 2),
                                    (self.iref_schedule, "references.current", 3)):
            times = [row[0] for row in sched]
            if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
                problems.append(f"{label}: switch times must increase")
            if any(len(row) != width for row in sched):
                problems.append(f"{label}: rows must have {width} entries")
        if self.mode == "cascade" and not self.vref_schedule:
            problems.append("references.v_dc: required in cascade mode")
        if self.mode == "current" and not self.iref_schedule:
            problems.append("references.current: required in current mode")
        for validatable, label in ((self.plant, "plant"), (self.grid, "grid"),
                                   (self.load, "load"),
                                   (self.voltage_gains, "controller.voltage_gains"),
                                   (self.current_gains, "controller.current_gains"),
                                   (self.baseline_gains, "controller.baseline_gains")):
            try:
                validatable.validate()
            except ValueError as exc:
                problems.append(f"{label}: {exc}")
        try:
            self.load.check_bounds(self.plant.v_dc_ref)
        except ValueError as exc:
            problems.append(f"load: {exc}")
        if problems:
            raise ScenarioError(problems)

    @property
    def n_steps(self) -> int:
        return round(self.horizon / self.dt)

    @property
    def log_every(self) -> int:
        return round(self.log_period / self.dt)

    @property
    def effective_control_period(self) -> float:
        return self.dt if self.control_period is None else self.control_period

    @property
    def ctrl_every(self) -> int:
        return round(self.effective_control_period / self.dt)

    def initial_state(self) -> np.ndarray:
        x = np.zeros(_engine.N_STATE)
        vref0 = self.vref_schedule[0][1] if self.vref_schedule else self.plant.v_dc_ref
        v0 = self.init_v_dc if self.init_v_dc is not None else vref0
        x[0] = self.init_i_d
        x[1] = self.init_i_q
        x[2] = v0
        x[3] = self.init_ztilde1
        x[4] = -self.voltage_gains.sigma * 0.5 * v0 * v0  # y(0) = 0, no kick
        x[5] = self.init_rho_hat
        return x

    def engine_args(self):
        g = self.voltage_gains
        cg = self.current_gains
        f_bt, f_bf, f_bth, a_bt, a_bv = self.grid.engine_arrays()
        if self.vref_schedule:
            vr_bt = np.array([float(t) for t, _ in self.vref_schedule])
            vr_bv = np.array([float(v) for _, v in self.vref_schedule])
        else:
            vr_bt = np.array([0.0])
            vr_bv = np.array([self.plant.v_dc_ref])
        if self.iref_schedule:
            ir_bt = np.array([float(r[0]) for r in self.iref_schedule])
            ir_bid = np.array([float(r[1]) for r in self.iref_schedule])
            ir_biq = np.array([float(r[2]) for r in self.iref_schedule])
        else:
            ir_bt = np.array([0.0])
            ir_bid = np.array([0.0])
            ir_biq = np.array([0.0])
        kind, p0, p1, p2, ls_t, ls_v = self.load.engine_arrays(self.plant.v_dc_ref)
        bg = self.baseline_gains
        return dict(
            mode=_MODE_CODE[self.mode], ctrl=_CTRL_CODE[self.controller],
            est=_EST_CODE[self.estimator], law=_LAW_CODE[g.law_variant],
            iref_mode=_IREF_CODE[self.current_ref_interpretation],
            l_t=self.plant.l * self.grid.l_factor,
            r_t=self.plant.r * self.grid.r_factor,
            c_f=self.plant.c, l_n=self.plant.l, r_n=self.plant.r,
            pv=g.p, qv=g.q, k1=g.k1, gamma=g.gamma, eta_v=g.eta,
            delta_v=g.delta, sigma_f=g.sigma, eps_rate=g.eps_rate,
            bl_v=g.boundary_layer,
            pc=cg.p, qc=cg.q, beta=cg.beta, delta_c=cg.delta, eta_c=cg.eta,
            eps_bl=cg.eps_bl,
            p_v_base=self.p_v_base, omega_o=self.eso_bandwidth,
            bp=bg.engine_params(),
            pv2=bg.p_v, qv2=bg.q_v, pc2=bg.p_c, qc2=bg.q_c,
            f_bt=f_bt, f_bf=f_bf, f_bth=f_bth, a_bt=a_bt, a_bv=a_bv,
            vr_bt=vr_bt, vr_bv=vr_bv,
            ir_bt=ir_bt, ir_bid=ir_bid, ir_biq=ir_biq,
            load_kind=kind, lp0=p0, lp1=p1, lp2=p2, ls_t=ls_t, ls_v=ls_v,
        )


@dataclass
class RunLog:
    """Uniformly sampled run record (columns per LOG_COLUMNS) plus metadata."""

    data: np.ndarray
    scenario: Scenario
    status: int = _engine.STATUS_OK
    steps_done: int = 0

    def col(self, name: str) -> np.ndarray:
        return self.data[:, LOG_COLUMNS.index(name)]

    @property
    def t(self) -> np.ndarray:
        return self.data[:, 0]

    @property
    def sample_period(self) -> float:
        return self.scenario.log_period

    def vref_at(self, t: np.ndarray) -> np.ndarray:
        sched = self.scenario.vref_schedule or [(0.0, self.scenario.plant.v_dc_ref)]
        bt = np.array([row[0] for row in sched])
        bv = np.array([row[1] for row in sched])
        idx = np.clip(np.searchsorted(bt, t, side="right") - 1, 0, len(bv) - 1)
        return bv[idx]

    def iref_q_at(self, t: np.ndarray) -> np.ndarray:
        if self.scenario.mode == "cascade" or not self.scenario.iref_schedule:
            return np.zeros_like(t)
        sched = self.scenario.iref_schedule
        bt = np.array([row[0] for row in sched])
        bq = np.array([row[2] for row in sched])
        idx = np.clip(np.searchsorted(bt, t, side="right") - 1, 0, len(bq) - 1)
        return bq[idx]

    def theta_at(self, t: np.ndarray) -> np.ndarray:
        return np.array([self.scenario.grid.theta_at(float(ti)) for ti in t])

    def phase_a_ref(self) -> np.ndarray:
        """Reconstruct the phase-A reference from logged dq references."""
        th = self.theta_at(self.t)
        i_d_ref = self.col("i_d_ref_A")
        i_q_ref = self.iref_q_at(self.t)
        return i_d_ref * np.cos(th) - i_q_ref * np.sin(th)


@dataclass
class Metrics:
    """Derived performance figures; None marks 'never reached' entries."""

    convergence_time: float | None = None
    rise_time: float | None = None
    ripple_pp: float = 0.0
    steady_state_error: float = 0.0
    chattering_amplitude: float = 0.0
    control_energy: float = 0.0
    overshoot_frac: float = 0.0
    clamp_fraction: float = 0.0

    def to_dict(self):
        return asdict(self)


def rk4_step(f, t: float, x, dt: float):
    """One classical Runge-Kutta step of dx/dt = f(t, x)."""
    x = np.asarray(x, dtype=float)
    k1 = np.asarray(f(t, x))
    k2 = np.asarray(f(t + 0.5 * dt, x + 0.5 * dt * k1))
    k3 = np.asarray(f(t + 0.5 * dt, x + 0.5 * dt * k2))
    k4 = np.asarray(f(t + dt, x + dt * k3))
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_step(state: np.ndarray, scenario: Scenario, t: float,
                   dt: float | None = None) -> np.ndarray:
    """Advance the full coupled state bundle one engine step from time t."""
    dt = scenario.dt if dt is None else dt
    x = np.array(state, dtype=float)
    log = np.zeros((2, _engine.N_COLS))
    status, _, _ = _engine.run_kernel(x, t, dt, 1, 1, 1, log=log,
                                      **scenario.engine_args())
    if status != _engine.STATUS_OK:
        raise SimulationAbort(f"engine abort (status {status})", None)
    return x


def run_scenario(scenario: Scenario) -> tuple:
    """Validate, run, and post-process one scenario; returns (RunLog, Metrics).

    Raises ScenarioError on validation failure and SimulationAbort (with the
    partial log attached) when the DC link collapses or a state goes
    non-finite.
    """
    scenario.validate()
    x = scenario.initial_state()
    n_rows = scenario.n_steps // scenario.log_every + 1
    log = np.zeros((n_rows, _engine.N_COLS))
    status, rows, steps = _engine.run_kernel(
        x, 0.0, scenario.dt, scenario.n_steps, scenario.log_every,
        scenario.ctrl_every, log=log, **scenario.engine_args())
    run = RunLog(data=log[:rows], scenario=scenario, status=status,
                 steps_done=steps)
    if status != _engine.STATUS_OK:
        reason = ("DC-link voltage collapsed to zero"
                  if status == _engine.STATUS_VDC_COLLAPSE
                  else "non-finite state")
        raise SimulationAbort(
            f"scenario {scenario.name!r} aborted at step {steps}: {reason}", run)
    return run, compute_metrics(run)


def _first_stay_index(err: np.ndarray, band: np.ndarray):
    outside = np.abs(err) > band
    if not outside.any():
        return 0
    last_out = int(np.nonzero(outside)[0][-1])
    if last_out == len(err) - 1:
        return None
    return last_out + 1


def compute_metrics(log: RunLog, band_frac: float | None = None,
                    steady_frac: float | None = None) -> Metrics:
    """Performance figures for a run.

    Cascade runs are scored on v_dc against the reference schedule; current
    runs on i_d against its reference.  The convergence band is
    band_frac * |reference|; steady windows are the trailing steady_frac of
    the horizon.  Chattering is the peak-to-peak of the phase-A tracking
    residual normalized by the reference amplitude over the steady window.
    """
    sc = log.scenario
    band_frac = sc.band_frac if band_frac is None else band_frac
    steady_frac = sc.steady_frac if steady_frac is None else steady_frac
    t = log.t
    m = Metrics()
    if sc.mode == "cascade":
        signal = log.col("v_dc_V")
        ref = log.vref_at(t)
    else:
        signal = log.col("i_d_A")
        ref = log.col("i_d_ref_A")
    err = signal - ref
    band = band_frac * np.maximum(np.abs(ref), 1e-12)

    idx = _first_stay_index(err, band)
    m.convergence_time = None if idx is None else float(t[idx])

    x0 = signal[0]
    xf = ref[-1]
    step = xf - x0
    if abs(step) > 1e-12:
        lo = x0 + 0.1 * step
        hi = x0 + 0.9 * step
        direction = 1.0 if step > 0 else -1.0
        t_lo = _first_crossing(t, signal, lo, direction)
        t_hi = _first_crossing(t, signal, hi, direction)
        if t_lo is not None and t_hi is not None:
            m.rise_time = float(t_hi - t_lo)
        peak = direction * np.max(direction * (signal - xf))
        m.overshoot_frac = float(max(0.0, direction * peak) / abs(step))

    steady = t >= t[-1] - steady_frac * (t[-1] - t[0])
    m.ripple_pp = float(np.ptp(signal[steady]))
    m.steady_state_error = float(np.mean(np.abs(err[steady])))

    ia = log.col("i_a_A")
    ia_ref = log.phase_a_ref()
    amp = float(np.max(np.abs(ia_ref[steady])))
    if amp < 1e-9:
        amp = max(float(np.max(np.abs(ia[steady]))), 1e-9)
    m.chattering_amplitude = float(np.ptp((ia - ia_ref)[steady]) / amp)

    dt_s = log.sample_period
    if sc.mode == "cascade":
        u = log.col("u_volt")
        m.control_energy = float(math.sqrt(np.sum(u * u) * dt_s))
        m.clamp_fraction = float(np.mean(log.col("clamp_volt") > 0))
    else:
        ud = log.col("u_d")
        uq = log.col("u_q")
        m.control_energy = float(math.sqrt(np.sum(ud * ud + uq * uq) * dt_s))
        m.clamp_fraction = float(np.mean(log.col("clamp_curr") > 0))
    return m


def _first_crossing(t, x, level, direction):
    above = direction * (x - level) >= 0
    if not above.any():
        return None
    i = int(np.nonzero(above)[0][0])
    if i == 0:
        return float(t[0])
    x0, x1 = x[i - 1], x[i]
    if x1 == x0:
        return float(t[i])
    frac = (level - x0) / (x1 - x0)
    return float(t[i - 1] + frac * (t[i] - t[i - 1]))


def verify_bounds(log: RunLog) -> list:
    """Log-based bound report: (name, measured, bound, passed, info) records."""
    sc = log.scenario
    t = log.t
    records = []

    if sc.mode == "cascade" and sc.controller == "proposed":
        s_v = log.col("s_volt")
        rho = log.col("rho_W")
        rho_hat = log.col("rho_hat_W")
        s0 = float(s_v[0])
        rt0 = float(rho[0] - rho_hat[0])
        bound = reaching_time_bound(s0, rt0, sc.voltage_gains)
        measured = _hit_or_flip_time(t, s_v, sc.tol_s)
        records.append(_record("theorem1_voltage_reaching", measured, bound,
                               required=True))
        # Lyapunov monotonicity outside the sgn-dither dead band
        g = sc.voltage_gains
        v_lyap = 0.5 * s_v ** 2 + (rho - rho_hat) ** 2 / (2.0 * g.gamma)
        s_floor = 100.0 * sc.tol_s
        rho_floor = 2.0 * (g.delta + g.eta + g.eps_rate + 1.0)
        v_dead = 0.5 * s_floor ** 2 + rho_floor ** 2 / (2.0 * g.gamma)
        dv = np.diff(v_lyap)
        monitored = v_lyap[:-1] > v_dead
        slack = 1e-9 * np.maximum(v_lyap[:-1], 1.0)
        violations = int(np.sum((dv > slack) & monitored))
        n_mon = int(monitored.sum())
        frac = violations / n_mon if n_mon else 0.0
        records.append({
            "name": "lyapunov_monotonicity", "measured": frac,
            "bound": 1e-3, "passed": bool(frac <= 1e-3), "required": True,
            "info": f"{violations}/{n_mon} monitored samples increased",
        })

    if sc.controller == "proposed":
        s_d = log.col("s_d_A")
        s_q = log.col("s_q_A")
        sn = np.hypot(s_d, s_q)
        cg = sc.current_gains
        s0n = float(sn[0])
        proof, displayed = current_reaching_bound(s0n, cg, sc.plant)
        if s0n <= cg.eps_bl * math.sqrt(2.0) + 1e-12:
            floor = cg.reaching_floor
            hit = np.nonzero(sn <= floor)[0]
            measured = float(t[hit[0]]) if hit.size else None
            records.append(_record("theorem2_current_reaching", measured,
                                   proof + 2 * sc.dt, required=True,
                                   info=f"displayed endpoint {displayed:.6g} s, "
                                        f"floor radius {floor:.6g} A"))
        else:
            records.append({
                "name": "theorem2_current_reaching", "measured": None,
                "bound": proof, "passed": True, "required": False,
                "info": f"hypothesis ||s(0)|| <= eps*sqrt(2) not met "
                        f"(||s(0)|| = {s0n:.3g})",
            })

    records.append({
        "name": "lemma2_printed_bound", "measured": 0.25, "bound": 0.5,
        "passed": False, "required": False,
        "info": "INFORMATIONAL: printed bound s.sat(s/eps) >= sqrt(n)||s|| "
                "fails at n=1, eps=1, s=0.5 (0.25 < 0.5); the exact identity "
                "s.sat(s/eps) = sum min(s_i^2/eps, |s_i|) holds instead",
    })
    return records


def _hit_or_flip_time(t, s, tol):
    hit = np.abs(s) <= tol
    flip = np.zeros_like(hit)
    flip[1:] = s[:-1] * s[1:] < 0
    any_hit = hit | flip
    idx = np.nonzero(any_hit)[0]
    return float(t[idx[0]]) if idx.size else None


def _record(name, measured, bound, required=True, info=""):
    passed = measured is not None and measured <= bound
    return {"name": name, "measured": measured, "bound": float(bound),
            "passed": bool(passed), "required": required, "info": info}


def write_timeseries_csv(log: RunLog, path):
    """CSV with the fixed column order; %.17g keeps runs byte-identical."""
    header = ",".join(LOG_COLUMNS)
    np.savetxt(path, log.data, delimiter=",", header=header, comments="",
               fmt="%.17g")


def metrics_payload(log: RunLog, metrics: Metrics) -> dict:
    sc = log.scenario
    return {
        "scenario": sc.name,
        "controller": sc.controller,
        "estimator": sc.estimator,
        "mode": sc.mode,
        "dt_s": sc.dt,
        "horizon_s": sc.horizon,
        "metrics": metrics.to_dict(),
        "bounds": verify_bounds(log),
    }
