"""Fully explicit SSP-RK2 finite-volume solver for the complete system."""
import numpy as np

from .core_state import (
    IA, IE, IM1, IM2, IMX, IMY, IWX, IWY, NVAR, Field, apply_bc, check_state, kinetic_energy,
)
from .eos import eval_thermo
from .explicit_stage import RUSANOV_FACTOR, b_times, face_states, nonconservative_D
from .implicit_stage import relax_alpha


def _thermo(q, eos):
    m1, m2 = q[IM1], q[IM2]
    a1 = q[IA]
    rho = m1 + m2
    T = (q[IE] - kinetic_energy(q)) / (m1 * eos.phase1.cv + m2 * eos.phase2.cv)
    return rho, eval_thermo(m1 / a1, m2 / (1.0 - a1), T, eos, a1)


def full_flux(q, axis, eos):
    """Conservative flux of the complete model along coordinate ``axis``."""
    rho, th = _thermo(q, eos)
    m1, m2 = q[IM1], q[IM2]
    y1, y2 = m1 / rho, m2 / rho
    v = q[IMX:IMY + 1] / rho
    w = q[IWX:IWY + 1]
    vn, wn = v[axis], w[axis]
    p = th.p_mix
    mu = th.mu1 - th.mu2
    pot = np.sum(w * v, axis=0) + mu + (1.0 - 2.0 * y1) * 0.5 * np.sum(w * w, axis=0)
    F = np.zeros_like(q)
    F[IM1] = m1 * (vn + y2 * wn)
    F[IM2] = m2 * (vn - y1 * wn)
    for k in range(2):
        F[IMX + k] = rho * v[k] * vn + rho * y1 * y2 * w[k] * wn
    F[IMX + axis] += p
    F[IWX + axis] = pot
    F[IE] = vn * (q[IE] + p) + rho * pot * y1 * y2 * wn
    return F


def full_wave_speed(q, axis, eos):
    """Upper bound max_l(|v_l.n| + a_l) + |w.n| of the characteristic speeds."""
    rho, th = _thermo(q, eos)
    y1 = q[IM1] / rho
    vn = q[IMX + axis] / rho
    wn = q[IWX + axis]
    v1n = vn + (1.0 - y1) * wn
    v2n = vn - y1 * wn
    return np.maximum(np.abs(v1n) + np.sqrt(th.a1_sq), np.abs(v2n) + np.sqrt(th.a2_sq)) + np.abs(wn)


def max_wave_speed(f, eos):
    q = f.interior
    s = float(np.max(full_wave_speed(q, 0, eos)))
    if f.grid.dims == 2:
        s = max(s, float(np.max(full_wave_speed(q, 1, eos))))
    return s


def reference_dt(f, eos, nu):
    g = f.grid
    h = g.dx if g.dims == 1 else min(g.dx, g.dy)
    return nu * h / max_wave_speed(f, eos)


def full_rhs(f, eos, order=2):
    """-div F - B grad q with Rusanov fluxes of the complete system."""
    grid = f.grid
    out = np.zeros((NVAR, grid.ny, grid.nx))
    centre = f.interior
    for axis in range(grid.dims):
        h = grid.dx if axis == 0 else grid.dy
        qL, qR, qm, qp = face_states(f.data, grid, axis, order, eos)
        s = np.maximum(full_wave_speed(qL, axis, eos), full_wave_speed(qR, axis, eos))
        F = 0.5 * (full_flux(qL, axis, eos) + full_flux(qR, axis, eos)) - RUSANOV_FACTOR * s * (qR - qL)
        D = nonconservative_D(qL, qR, axis)
        if axis == 0:
            div = F[..., 1:] - F[..., :-1]
            nc = D[..., 1:] + D[..., :-1]
        else:
            div = F[:, 1:, :] - F[:, :-1, :]
            nc = D[:, 1:, :] + D[:, :-1, :]
        if order == 2:
            nc = nc + b_times(centre, qp - qm, axis)
        out -= (div + nc) / h
    return out


def _relax(q, dt, eos):
    """First-order split relaxation: implicit friction on w, then alpha."""
    if np.isfinite(eos.tau_w):
        rho = q[IM1] + q[IM2]
        y1y2 = q[IM1] * q[IM2] / rho ** 2
        q[IWX:IWY + 1] *= eos.tau_w / (eos.tau_w + dt * y1y2)
    q[IA] = relax_alpha(q, dt, eos)
    return q


def ssprk2_step(f, dt, eos, order=2, exact=None, t=0.0, check=True):
    """Heun-type SSP-RK2 step; relaxation sources split after each stage."""
    q0 = f.interior.copy()
    sources = np.isfinite(eos.tau_w) or np.isfinite(eos.tau_alpha)
    q1 = q0 + dt * full_rhs(f, eos, order)
    if sources:
        q1 = _relax(q1, dt, eos)
    if check:
        check_state(q1, eos, "reference stage 1")
    f1 = Field.from_interior(f.grid, q1)
    apply_bc(f1, exact, t + dt)
    q2 = 0.5 * q0 + 0.5 * (q1 + dt * full_rhs(f1, eos, order))
    if sources:
        q2 = _relax(q2, 0.5 * dt, eos)
    if check:
        check_state(q2, eos, "reference stage 2")
    out = Field.from_interior(f.grid, q2)
    apply_bc(out, exact, t + dt)
    return out


def run_reference(spec, nu=0.2, order=2, t_final=None, callback=None):
    """Integrate a case with the explicit reference scheme."""
    eos = spec.eos
    f = spec.initial.copy()
    apply_bc(f, spec.exact)
    t_end = spec.t_final if t_final is None else t_final
    t, step = 0.0, 0
    while t < t_end * (1.0 - 1e-14):
        dt = min(reference_dt(f, eos, nu), t_end - t)
        f = ssprk2_step(f, dt, eos, order, spec.exact, t)
        t += dt
        step += 1
        if callback is not None:
            callback(t, step, f)
    return f, t, step
