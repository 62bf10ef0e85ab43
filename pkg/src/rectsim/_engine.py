"""Jitted fixed-step simulation core.

Everything in here is deterministic float64 arithmetic: a classical 4-stage
Runge-Kutta step over the coupled plant / filter / adaptation / surface
integrator ODEs, with controller outputs held constant within each step
(zero-order hold at the engine rate).  Discontinuous sgn/sat terms inside the
integrand are evaluated at the stage states; the held controller outputs are
not.

The state vector layout (16 slots, unused slots stay zero):

    0 i_d      1 i_q      2 v_dc     3 ztil1    4 eta_f    5 rho_hat
    6 acc_d    7 acc_q    8 eso_z1   9 eso_z2
    10 bv1     11 bv2     12 bc1d    13 bc1q    14 bc2d    15 bc2q

bv*/bc* are baseline integrator states (PI integral, STA w, terminal-surface
integrals), shared across methods since only one controller runs per run.
"""

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi
SQ23 = math.sqrt(2.0 / 3.0)

# controller selection
CTRL_PROPOSED = 0
CTRL_PI_PR = 1
CTRL_STA = 2
CTRL_ITSMC = 3

# estimator selection (proposed controller only)
EST_ADAPTIVE = 0
EST_ESO = 1

# voltage-law variant
LAW_CONSISTENT = 0
LAW_LITERAL = 1

# load profile kinds
LOAD_POWER_SEGMENTS = 0
LOAD_SIN_POWER = 1
LOAD_CONST_R = 2
LOAD_CURRENT_SEGMENTS = 3

# loop mode
MODE_CASCADE = 0
MODE_CURRENT = 1

# current-reference interpretation
IREF_POWER = 0
IREF_LITERAL = 1

# run termination status
STATUS_OK = 0
STATUS_VDC_COLLAPSE = 3
STATUS_NONFINITE = 4

N_STATE = 16
N_COLS = 18

# log columns, fixed order (units in the CSV header; see simcore.LOG_COLUMNS)
COL_T = 0
COL_VDC = 1
COL_ZT1 = 2
COL_ZT2 = 3
COL_SV = 4
COL_RHO = 5
COL_RHOHAT = 6
COL_ID = 7
COL_IQ = 8
COL_IDREF = 9
COL_UV = 10
COL_UD = 11
COL_UQ = 12
COL_SD = 13
COL_SQ = 14
COL_IA = 15
COL_CLAMPV = 16
COL_CLAMPI = 17

# baseline parameter vector layout
BP_KP_V = 0
BP_KI_V = 1
BP_KP_C = 2
BP_KI_C = 3
BP_A1_V = 4
BP_A2_V = 5
BP_A1_C = 6
BP_A2_C = 7
BP_ZETA_V = 8
BP_MU_V = 9
BP_SIG_V = 10
BP_ZETA_C = 11
BP_MU_C = 12
BP_SIG_C = 13
BP_Q1P1_C = 14
N_BP = 15


@njit(cache=True, nogil=True)
def fpow(x, a, b):
    """sgn(x)^a * |x|^(a/b) with b odd positive; fpow(0, a, b) = 0 for a > 0."""
    if x == 0.0:
        return 0.0
    m = math.pow(abs(x), a / b)
    if x < 0.0 and (a & 1) == 1:
        return -m
    return m


@njit(cache=True, nogil=True)
def sgn(x):
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


@njit(cache=True, nogil=True)
def sat1(x):
    """Unit saturation: identity on [-1, 1], sign outside."""
    if x > 1.0:
        return 1.0
    if x < -1.0:
        return -1.0
    return x


@njit(cache=True, nogil=True)
def piecewise_const(t, bt, bv):
    """Value of the last breakpoint with bt <= t (bt sorted, bt[0] <= t0)."""
    i = bt.size - 1
    while i > 0 and bt[i] > t:
        i -= 1
    return bv[i]


@njit(cache=True, nogil=True)
def grid_freq(t, bt, bf):
    """Piecewise-linear frequency schedule (Hz)."""
    n = bt.size
    if t <= bt[0]:
        return bf[0]
    if t >= bt[n - 1]:
        return bf[n - 1]
    i = 0
    while i < n - 2 and bt[i + 1] <= t:
        i += 1
    w = (t - bt[i]) / (bt[i + 1] - bt[i])
    return bf[i] + w * (bf[i + 1] - bf[i])


@njit(cache=True, nogil=True)
def grid_theta(t, bt, bf, bth):
    """Grid angle theta(t) = 2*pi*int f dt; bth holds the angle at breakpoints."""
    n = bt.size
    if t <= bt[0]:
        return bth[0] + TWO_PI * bf[0] * (t - bt[0])
    i = n - 1
    while i > 0 and bt[i] > t:
        i -= 1
    if i >= n - 1:
        return bth[n - 1] + TWO_PI * bf[n - 1] * (t - bt[n - 1])
    dt_seg = t - bt[i]
    slope = (bf[i + 1] - bf[i]) / (bt[i + 1] - bt[i])
    return bth[i] + TWO_PI * (bf[i] * dt_seg + 0.5 * slope * dt_seg * dt_seg)


@njit(cache=True, nogil=True)
def load_eval(t, v_dc, kind, p0, p1, p2, seg_t, seg_v):
    """Return (rho_W, i_l_A): effective DC-side load power and load current."""
    if kind == LOAD_SIN_POWER:
        rho = p0 + p1 * math.sin(TWO_PI * p2 * t)
        return rho, rho / v_dc
    if kind == LOAD_POWER_SEGMENTS:
        rho = piecewise_const(t, seg_t, seg_v)
        return rho, rho / v_dc
    if kind == LOAD_CONST_R:
        return v_dc * v_dc / p0, v_dc / p0
    # LOAD_CURRENT_SEGMENTS: segments hold i_l in amps
    i_l = piecewise_const(t, seg_t, seg_v)
    return v_dc * i_l, i_l


@njit(cache=True, nogil=True)
def _deriv(t, x, dx, held,
           mode, ctrl, est, law,
           l_t, r_t, c_f, l_n, r_n,
           pv, qv, k1, gamma, eta_v, delta_v, sigma_f, eps_rate,
           pc, qc, beta,
           omega_o, bp, pv2, qv2, pc2, qc2,
           f_bt, f_bf, a_bt, a_bv, vr_bt, vr_bv,
           load_kind, lp0, lp1, lp2, ls_t, ls_v):
    """Coupled ODE right-hand side; held controller outputs in `held`."""
    i_d = x[0]
    i_q = x[1]
    v_dc = x[2]
    ztil1 = x[3]
    eta_f = x[4]
    rho_h = x[5]

    u_d = held[0]
    u_q = held[1]
    p_cmd = held[2]
    iref_d = held[3]
    iref_q = held[4]
    frozen = held[5]
    fz_bv = held[6]
    fz_bcd = held[7]
    fz_bcq = held[8]

    w_g = TWO_PI * grid_freq(t, f_bt, f_bf)
    v_d = SQ23 * piecewise_const(t, a_bt, a_bv)
    rho, i_l = load_eval(t, v_dc, load_kind, lp0, lp1, lp2, ls_t, ls_v)

    # plant (true, possibly perturbed, parameters)
    dx[0] = (-r_t * i_d + w_g * l_t * i_q + v_d - u_d * v_dc) / l_t
    dx[1] = (-r_t * i_q - w_g * l_t * i_d - u_q * v_dc) / l_t
    dx[2] = (u_d * i_d + u_q * i_q - i_l) / c_f

    for j in range(3, N_STATE):
        dx[j] = 0.0

    ti_d = i_d - iref_d
    ti_q = i_q - iref_q

    if mode == MODE_CASCADE:
        z = 0.5 * v_dc * v_dc
        vref = piecewise_const(t, vr_bt, vr_bv)
        ztil2 = 0.5 * vref * vref - z
        dx[3] = ztil2
        dx[4] = -sigma_f * eta_f - sigma_f * sigma_f * z
        if ctrl == CTRL_PROPOSED:
            if est == EST_ADAPTIVE:
                if frozen < 0.5:
                    s_v = k1 * fpow(ztil2, pv, qv) + ztil1
                    y = eta_f + sigma_f * z
                    rte = p_cmd - c_f * y - rho_h
                    dx[5] = (gamma * (k1 * pv / (c_f * qv)) * s_v
                             * fpow(ztil2, pv - qv, qv)
                             + (eps_rate + 1.0) * sgn(rte))
            else:
                e = z - x[8]
                dx[8] = x[9] + p_cmd / c_f + 2.0 * omega_o * e
                dx[9] = omega_o * omega_o * e
        elif ctrl == CTRL_PI_PR:
            if fz_bv < 0.5:
                dx[10] = ztil2
        elif ctrl == CTRL_STA:
            if fz_bv < 0.5:
                dx[10] = bp[BP_A2_V] * sgn(ztil2)
        else:  # ITSMC
            if fz_bv < 0.5:
                dx[10] = ztil2
                dx[11] = fpow(ztil2, qv2, pv2)

    # current-loop integrators
    if ctrl == CTRL_PROPOSED:
        dx[6] = fpow(ti_d, qc, pc)
        dx[7] = fpow(ti_q, qc, pc)
    elif ctrl == CTRL_PI_PR:
        if fz_bcd < 0.5:
            dx[12] = ti_d
        if fz_bcq < 0.5:
            dx[13] = ti_q
    elif ctrl == CTRL_STA:
        if fz_bcd < 0.5:
            dx[12] = bp[BP_A2_C] * sgn(ti_d)
        if fz_bcq < 0.5:
            dx[13] = bp[BP_A2_C] * sgn(ti_q)
    else:  # ITSMC
        ex = bp[BP_Q1P1_C]
        if fz_bcd < 0.5:
            dx[12] = ti_d
            dx[14] = sgn(ti_d) * math.pow(abs(ti_d), ex)
        if fz_bcq < 0.5:
            dx[13] = ti_q
            dx[15] = sgn(ti_q) * math.pow(abs(ti_q), ex)


@njit(cache=True, nogil=True)
def _control_eval(t, x, dt, held, out,
                  mode, ctrl, est, law, iref_mode,
                  l_n, r_n, c_f,
                  pv, qv, k1, gamma, eta_v, delta_v, sigma_f, eps_rate, bl_v,
                  pc, qc, beta, delta_c, eta_c, eps_bl,
                  p_v_base, omega_o, bp, pv2, qv2, pc2, qc2,
                  f_bt, f_bf, f_bth, a_bt, a_bv, vr_bt, vr_bv,
                  ir_bt, ir_bid, ir_biq,
                  load_kind, lp0, lp1, lp2, ls_t, ls_v,
                  prev_iref, first_step):
    """Evaluate both loops once; fill `held` (ZOH inputs to the integrator)
    and `out` (log row excluding state columns)."""
    i_d = x[0]
    i_q = x[1]
    v_dc = x[2]
    ztil1 = x[3]
    eta_f = x[4]
    rho_ad = x[5]

    w_g = TWO_PI * grid_freq(t, f_bt, f_bf)
    v_d = SQ23 * piecewise_const(t, a_bt, a_bv)
    theta = grid_theta(t, f_bt, f_bf, f_bth)
    rho, i_l = load_eval(t, v_dc, load_kind, lp0, lp1, lp2, ls_t, ls_v)

    z = 0.5 * v_dc * v_dc
    vref = piecewise_const(t, vr_bt, vr_bv)
    ztil2 = 0.5 * vref * vref - z
    y = eta_f + sigma_f * z

    rho_used = rho_ad
    if est == EST_ESO:
        rho_used = -c_f * x[9]

    u_v = 0.0
    p_cmd = 0.0
    clamp_v = 0.0
    s_v = 0.0
    frozen = 0.0
    fz_bv = 0.0

    if mode == MODE_CASCADE:
        s_v = k1 * fpow(ztil2, pv, qv) + ztil1
        if bl_v > 0.0:
            sw = sat1(s_v / bl_v)
        else:
            sw = sgn(s_v)
        if ctrl == CTRL_PROPOSED:
            if law == LAW_CONSISTENT:
                p_raw = ((c_f * qv / (k1 * pv)) * fpow(ztil2, 2 * qv - pv, qv)
                         + rho_used + (delta_v + eta_v) * sw)
                u_raw = p_raw / p_v_base
            else:
                u_in = (fpow(ztil2, pv - qv, qv) - 1.0) * (delta_v + eta_v) * sw
                u_raw = ((c_f * qv / (k1 * pv * p_v_base))
                         * (fpow(ztil2, 2 * qv - pv, qv) + (delta_v + eta_v) * sw)
                         + rho_used + u_in)
        elif ctrl == CTRL_PI_PR:
            u_raw = (bp[BP_KP_V] * ztil2 + bp[BP_KI_V] * x[10]) / p_v_base
        elif ctrl == CTRL_STA:
            u_raw = (bp[BP_A1_V] * math.sqrt(abs(ztil2)) * sgn(ztil2)
                     + x[10]) / p_v_base
        else:  # ITSMC
            sig_s = ztil2 + bp[BP_ZETA_V] * x[10] + bp[BP_MU_V] * x[11]
            u_raw = (bp[BP_ZETA_V] * ztil2
                     + bp[BP_MU_V] * fpow(ztil2, qv2, pv2)
                     + bp[BP_SIG_V] * fpow(sig_s, qv2, pv2)) / p_v_base
        u_v = u_raw
        if u_v >= 1.0:
            u_v = 1.0
            clamp_v = 2.0
        elif u_v <= 0.0:
            u_v = 0.0
            clamp_v = 1.0
        p_cmd = u_v * p_v_base

        # anti-windup: freeze integrators pushing deeper into an active clamp
        if ctrl == CTRL_PROPOSED and est == EST_ADAPTIVE:
            rte0 = p_cmd - c_f * y - rho_ad
            drho = (gamma * (k1 * pv / (c_f * qv)) * s_v
                    * fpow(ztil2, pv - qv, qv) + (eps_rate + 1.0) * sgn(rte0))
            if (clamp_v == 2.0 and drho > 0.0) or (clamp_v == 1.0 and drho < 0.0):
                frozen = 1.0
        elif ctrl == CTRL_PI_PR or ctrl == CTRL_ITSMC:
            if (clamp_v == 2.0 and ztil2 > 0.0) or (clamp_v == 1.0 and ztil2 < 0.0):
                fz_bv = 1.0
        elif ctrl == CTRL_STA:
            dw = bp[BP_A2_V] * sgn(ztil2)
            if (clamp_v == 2.0 and dw > 0.0) or (clamp_v == 1.0 and dw < 0.0):
                fz_bv = 1.0

        if iref_mode == IREF_LITERAL:
            iref_d = u_v / v_d
        else:
            iref_d = p_cmd / v_d
        iref_q = 0.0
    else:
        iref_d = piecewise_const(t, ir_bt, ir_bid)
        iref_q = piecewise_const(t, ir_bt, ir_biq)

    # reference-rate feedforward: backward difference, one-step memory
    if first_step:
        di0_d = 0.0
        di0_q = 0.0
    else:
        di0_d = (iref_d - prev_iref[0]) / dt
        di0_q = (iref_q - prev_iref[1]) / dt
    prev_iref[0] = iref_d
    prev_iref[1] = iref_q

    psi_d = -r_n * iref_d + w_g * l_n * iref_q + v_d - l_n * di0_d
    psi_q = -r_n * iref_q - w_g * l_n * iref_d - l_n * di0_q

    ti_d = i_d - iref_d
    ti_q = i_q - iref_q

    if ctrl == CTRL_PROPOSED:
        s_d = ti_d + beta * x[6]
        s_q = ti_q + beta * x[7]
        u_d = (-r_n * ti_d + w_g * l_n * ti_q + psi_d
               + l_n * beta * fpow(ti_d, qc, pc)
               + (delta_c + eta_c) * sat1(s_d / eps_bl)) / v_dc
        u_q = (-r_n * ti_q - w_g * l_n * ti_d + psi_q
               + l_n * beta * fpow(ti_q, qc, pc)
               + (delta_c + eta_c) * sat1(s_q / eps_bl)) / v_dc
    elif ctrl == CTRL_PI_PR:
        s_d = ti_d
        s_q = ti_q
        u_d = (psi_d + bp[BP_KP_C] * ti_d + bp[BP_KI_C] * x[12]) / v_dc
        u_q = (psi_q + bp[BP_KP_C] * ti_q + bp[BP_KI_C] * x[13]) / v_dc
    elif ctrl == CTRL_STA:
        # exact-model SMC family: cancel the error dynamics, impose STA rates
        s_d = ti_d
        s_q = ti_q
        u_d = (-r_n * ti_d + w_g * l_n * ti_q + psi_d
               + l_n * (bp[BP_A1_C] * math.sqrt(abs(ti_d)) * sgn(ti_d)
                        + x[12])) / v_dc
        u_q = (-r_n * ti_q - w_g * l_n * ti_d + psi_q
               + l_n * (bp[BP_A1_C] * math.sqrt(abs(ti_q)) * sgn(ti_q)
                        + x[13])) / v_dc
    else:  # ITSMC, equivalent-control form on the terminal surface
        ex = bp[BP_Q1P1_C]
        s_d = ti_d + bp[BP_ZETA_C] * x[12] + bp[BP_MU_C] * x[14]
        s_q = ti_q + bp[BP_ZETA_C] * x[13] + bp[BP_MU_C] * x[15]
        u_d = (-r_n * ti_d + w_g * l_n * ti_q + psi_d
               + l_n * (bp[BP_ZETA_C] * ti_d
                        + bp[BP_MU_C] * sgn(ti_d) * math.pow(abs(ti_d), ex)
                        + bp[BP_SIG_C] * fpow(s_d, qc2, pc2))) / v_dc
        u_q = (-r_n * ti_q - w_g * l_n * ti_d + psi_q
               + l_n * (bp[BP_ZETA_C] * ti_q
                        + bp[BP_MU_C] * sgn(ti_q) * math.pow(abs(ti_q), ex)
                        + bp[BP_SIG_C] * fpow(s_q, qc2, pc2))) / v_dc

    clamp_i = 0.0
    fz_bcd = 0.0
    fz_bcq = 0.0
    if u_d > 1.0 or u_d < -1.0:
        clamp_i += 1.0
        side = 1.0 if u_d > 1.0 else -1.0
        u_d = side
        if ctrl == CTRL_PI_PR or ctrl == CTRL_ITSMC:
            if side * ti_d > 0.0:
                fz_bcd = 1.0
        elif ctrl == CTRL_STA:
            if side * bp[BP_A2_C] * sgn(ti_d) > 0.0:
                fz_bcd = 1.0
    if u_q > 1.0 or u_q < -1.0:
        clamp_i += 1.0
        side = 1.0 if u_q > 1.0 else -1.0
        u_q = side
        if ctrl == CTRL_PI_PR or ctrl == CTRL_ITSMC:
            if side * ti_q > 0.0:
                fz_bcq = 1.0
        elif ctrl == CTRL_STA:
            if side * bp[BP_A2_C] * sgn(ti_q) > 0.0:
                fz_bcq = 1.0

    held[0] = u_d
    held[1] = u_q
    held[2] = p_cmd
    held[3] = iref_d
    held[4] = iref_q
    held[5] = frozen
    held[6] = fz_bv
    held[7] = fz_bcd
    held[8] = fz_bcq

    out[COL_T] = t
    out[COL_VDC] = v_dc
    out[COL_ZT1] = ztil1
    out[COL_ZT2] = ztil2
    out[COL_SV] = s_v
    out[COL_RHO] = rho
    out[COL_RHOHAT] = rho_used
    out[COL_ID] = i_d
    out[COL_IQ] = i_q
    out[COL_IDREF] = iref_d
    out[COL_UV] = u_v
    out[COL_UD] = u_d
    out[COL_UQ] = u_q
    out[COL_SD] = s_d
    out[COL_SQ] = s_q
    out[COL_IA] = i_d * math.cos(theta) - i_q * math.sin(theta)
    out[COL_CLAMPV] = clamp_v
    out[COL_CLAMPI] = clamp_i


@njit(cache=True, nogil=True)
def run_kernel(x, t0, dt, n_steps, log_every, ctrl_every,
               mode, ctrl, est, law, iref_mode,
               l_t, r_t, c_f, l_n, r_n,
               pv, qv, k1, gamma, eta_v, delta_v, sigma_f, eps_rate, bl_v,
               pc, qc, beta, delta_c, eta_c, eps_bl,
               p_v_base, omega_o, bp, pv2, qv2, pc2, qc2,
               f_bt, f_bf, f_bth, a_bt, a_bv, vr_bt, vr_bv,
               ir_bt, ir_bid, ir_biq,
               load_kind, lp0, lp1, lp2, ls_t, ls_v,
               log):
    """Run the fixed-step loop; returns (status, rows_written, steps_done)."""
    held = np.zeros(9)
    out = np.zeros(N_COLS)
    dx1 = np.zeros(N_STATE)
    dx2 = np.zeros(N_STATE)
    dx3 = np.zeros(N_STATE)
    dx4 = np.zeros(N_STATE)
    xs = np.zeros(N_STATE)
    prev_iref = np.zeros(2)

    rows = 0
    half = 0.5 * dt
    sixth = dt / 6.0

    for k in range(n_steps + 1):
        t = t0 + k * dt
        if k % ctrl_every == 0:
            # controller executes at its own (possibly divided) rate; between
            # executions the outputs stay held
            _control_eval(t, x, ctrl_every * dt, held, out,
                          mode, ctrl, est, law, iref_mode,
                          l_n, r_n, c_f,
                          pv, qv, k1, gamma, eta_v, delta_v, sigma_f,
                          eps_rate, bl_v,
                          pc, qc, beta, delta_c, eta_c, eps_bl,
                          p_v_base, omega_o, bp, pv2, qv2, pc2, qc2,
                          f_bt, f_bf, f_bth, a_bt, a_bv, vr_bt, vr_bv,
                          ir_bt, ir_bid, ir_biq,
                          load_kind, lp0, lp1, lp2, ls_t, ls_v,
                          prev_iref, k == 0)

        if k % log_every == 0:
            ok = True
            for j in range(N_STATE):
                if not math.isfinite(x[j]):
                    ok = False
            if not ok:
                return STATUS_NONFINITE, rows, k
            for j in range(N_COLS):
                log[rows, j] = out[j]
            rows += 1

        if k == n_steps:
            break

        _deriv(t, x, dx1, held, mode, ctrl, est, law,
               l_t, r_t, c_f, l_n, r_n,
               pv, qv, k1, gamma, eta_v, delta_v, sigma_f, eps_rate,
               pc, qc, beta, omega_o, bp, pv2, qv2, pc2, qc2,
               f_bt, f_bf, a_bt, a_bv, vr_bt, vr_bv,
               load_kind, lp0, lp1, lp2, ls_t, ls_v)
        for j in range(N_STATE):
            xs[j] = x[j] + half * dx1[j]
        _deriv(t + half, xs, dx2, held, mode, ctrl, est, law,
               l_t, r_t, c_f, l_n, r_n,
               pv, qv, k1, gamma, eta_v, delta_v, sigma_f, eps_rate,
               pc, qc, beta, omega_o, bp, pv2, qv2, pc2, qc2,
               f_bt, f_bf, a_bt, a_bv, vr_bt, vr_bv,
               load_kind, lp0, lp1, lp2, ls_t, ls_v)
        for j in range(N_STATE):
            xs[j] = x[j] + half * dx2[j]
        _deriv(t + half, xs, dx3, held, mode, ctrl, est, law,
               l_t, r_t, c_f, l_n, r_n,
               pv, qv, k1, gamma, eta_v, delta_v, sigma_f, eps_rate,
               pc, qc, beta, omega_o, bp, pv2, qv2, pc2, qc2,
               f_bt, f_bf, a_bt, a_bv, vr_bt, vr_bv,
               load_kind, lp0, lp1, lp2, ls_t, ls_v)
        for j in range(N_STATE):
            xs[j] = x[j] + dt * dx3[j]
        _deriv(t + dt, xs, dx4, held, mode, ctrl, est, law,
               l_t, r_t, c_f, l_n, r_n,
               pv, qv, k1, gamma, eta_v, delta_v, sigma_f, eps_rate,
               pc, qc, beta, omega_o, bp, pv2, qv2, pc2, qc2,
               f_bt, f_bf, a_bt, a_bv, vr_bt, vr_bv,
               load_kind, lp0, lp1, lp2, ls_t, ls_v)
        for j in range(N_STATE):
            x[j] += sixth * (dx1[j] + 2.0 * dx2[j] + 2.0 * dx3[j] + dx4[j])

        if not math.isfinite(x[2]):
            return STATUS_NONFINITE, rows, k + 1
        if x[2] <= 0.0:
            return STATUS_VDC_COLLAPSE, rows, k + 1

    return STATUS_OK, rows, n_steps
