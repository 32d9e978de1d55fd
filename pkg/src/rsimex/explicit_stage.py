"""Explicit (material-wave) subsystem: fluxes, wave speeds, Rusanov flux,
the nonconservative product and minmod-MUSCL reconstruction."""
from dataclasses import dataclass

import numpy as np

from .core_state import (
    IA, IE, IM1, IM2, IMX, IMY, IWX, IWY, NVAR,
    check_state, conserved_from_primitive_values,
)

RUSANOV_FACTOR = 0.5


@dataclass
class WaveSpeeds:
    lam0: np.ndarray
    lam_v: np.ndarray
    lam_w: np.ndarray

    def max_abs(self):
        return np.maximum(np.abs(self.lam_v), np.abs(self.lam_w))


def _mix(q):
    rho = q[IM1] + q[IM2]
    y1 = q[IM1] / rho
    v = q[IMX:IMY + 1] / rho
    w = q[IWX:IWY + 1]
    return rho, y1, v, w


def flux_ex(q, axis):
    """Flux of the explicit subsystem projected on coordinate ``axis``."""
    rho, y1, v, w = _mix(q)
    y2 = 1.0 - y1
    vn = v[axis]
    wn = w[axis]
    phi = np.sum(w * v, axis=0) + (1.0 - 2.0 * y1) * 0.5 * np.sum(w * w, axis=0)
    F = np.zeros_like(q)
    F[IM1] = q[IM1] * (vn + y2 * wn)
    F[IM2] = q[IM2] * (vn - y1 * wn)
    F[IMX] = q[IMX] * vn
    F[IMY] = q[IMY] * vn
    F[IWX + axis] = phi
    F[IE] = rho * phi * y1 * y2 * wn
    return F


def wave_speeds(q, n):
    """Characteristic speeds along the unit vector ``n`` (length-2 sequence)."""
    _, y1, v, w = _mix(q)
    vn = n[0] * v[0] + n[1] * v[1]
    wn = n[0] * w[0] + n[1] * w[1]
    return WaveSpeeds(np.zeros_like(vn), vn, vn + (1.0 - 2.0 * y1) * wn)


def _axis_normal(axis):
    return (1.0, 0.0) if axis == 0 else (0.0, 1.0)


def max_speed(q, axis):
    return wave_speeds(q, _axis_normal(axis)).max_abs()


def dissipation_speed(q, axis):
    """Characteristic speeds bounded below by the phase transport speeds.

    The phase masses travel with v_l = v +- y w, which can exceed both
    characteristic speeds; including them keeps the partial densities
    positive under the usual CFL bound.
    """
    _, y1, v, w = _mix(q)
    v1 = v[axis] + (1.0 - y1) * w[axis]
    v2 = v[axis] - y1 * w[axis]
    return np.maximum(max_speed(q, axis), np.maximum(np.abs(v1), np.abs(v2)))


def rusanov_flux(qL, qR, axis, factor=RUSANOV_FACTOR, alpha_dissipation=True, speed=None):
    """Rusanov flux across a face with normal along ``axis``.

    ``speed`` overrides the local speed estimate (used by the reference
    solver); ``factor`` scales the dissipation term.
    """
    if speed is None:
        s = np.maximum(dissipation_speed(qL, axis), dissipation_speed(qR, axis))
    else:
        s = speed
    F = 0.5 * (flux_ex(qL, axis) + flux_ex(qR, axis)) - factor * s * (qR - qL)
    if not alpha_dissipation:
        F[IA] = 0.0
    return F


def b_times(qbar, dq, axis):
    """B(qbar) applied to the jump ``dq`` across a face normal to ``axis``."""
    rho = qbar[IM1] + qbar[IM2]
    vx = qbar[IMX] / rho
    vy = qbar[IMY] / rho
    out = np.zeros_like(dq)
    vn = vx if axis == 0 else vy
    out[IA] = vn * dq[IA]
    if axis == 0:
        # (curl w) x v with curl w = d_x w_y - d_y w_x
        out[IWX] = -vy * dq[IWY]
        out[IWY] = vx * dq[IWY]
    else:
        out[IWX] = vy * dq[IWX]
        out[IWY] = -vx * dq[IWX]
    return out


def nonconservative_B(q, grad_q):
    """B(q) grad q for cell states ``q`` and gradients ``grad_q`` (axis-major)."""
    out = b_times(q, grad_q[0], 0)
    if len(grad_q) > 1:
        out = out + b_times(q, grad_q[1], 1)
    return out


def nonconservative_D(qL, qR, axis):
    """Half of B at the arithmetic mean state times the jump."""
    return 0.5 * b_times(0.5 * (qL + qR), qR - qL, axis)


def minmod(a, b):
    return np.where(a * b > 0.0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def minmod_reconstruct(um, u0, up):
    """Left and right face values of the middle cell of a three-cell stencil."""
    slope = minmod(np.asarray(u0) - um, np.asarray(up) - u0)
    return u0 - 0.5 * slope, u0 + 0.5 * slope


def conserved_to_recon(q, eos):
    """Reconstruction variables (alpha1, rho1, rho2, v, w, T)."""
    rho, y1, v, w = _mix(q)
    a1 = q[IA]
    ek = 0.5 * np.sum(v * v, axis=0) + 0.5 * y1 * (1.0 - y1) * np.sum(w * w, axis=0)
    T = (q[IE] - rho * ek) / (q[IM1] * eos.phase1.cv + q[IM2] * eos.phase2.cv)
    P = np.empty_like(q)
    P[0] = a1
    P[1] = q[IM1] / a1
    P[2] = q[IM2] / (1.0 - a1)
    P[3:5] = v
    P[5:7] = w
    P[7] = T
    return P


def recon_to_conserved(P, eos):
    a1, r1, r2 = P[0], P[1], P[2]
    v, w = P[3:5], P[5:7]
    m1 = a1 * r1
    m2 = (1.0 - a1) * r2
    rho = m1 + m2
    y1 = m1 / rho
    y2 = m2 / rho
    return conserved_from_primitive_values(a1, r1, r2, v + y2 * w, v - y1 * w, P[7], eos)


def face_states(data, grid, axis, order, eos):
    """Left/right states at all faces normal to ``axis`` bounding interior cells.

    Returns ``(qL, qR, qm, qp)`` where ``qL``/``qR`` are the states on the two
    sides of each face and ``qm``/``qp`` are the left/right face values of each
    interior cell (used by the in-cell nonconservative term).
    """
    gx, gy, nx, ny = grid.gx, grid.gy, grid.nx, grid.ny
    if axis == 0:
        rows = slice(gy, gy + ny)
        strip = data[:, rows, gx - 2:gx + nx + 2]
    else:
        cols = slice(gx, gx + nx)
        strip = np.swapaxes(data[:, gy - 2:gy + ny + 2, cols], 1, 2)
    # strip has the face-normal direction last; cells 0..n+3 with n+1 faces
    # between strip cells 1..n+2
    n = strip.shape[-1] - 4
    if order == 1:
        qL = strip[..., 1:n + 2]
        qR = strip[..., 2:n + 3]
        qm = qp = strip[..., 2:n + 2]
    else:
        P = conserved_to_recon(strip, eos)
        lo, hi = minmod_reconstruct(P[..., :-2], P[..., 1:-1], P[..., 2:])
        # lo/hi index k refers to strip cell k+1
        Qlo = recon_to_conserved(lo, eos)
        Qhi = recon_to_conserved(hi, eos)
        qL = Qhi[..., 0:n + 1]
        qR = Qlo[..., 1:n + 2]
        qm = Qlo[..., 1:n + 1]
        qp = Qhi[..., 1:n + 1]
        if axis == 1:
            qm = np.swapaxes(qm, 1, 2)
            qp = np.swapaxes(qp, 1, 2)
    if axis == 1:
        qL = np.swapaxes(qL, 1, 2)
        qR = np.swapaxes(qR, 1, 2)
        if order == 1:
            qm = qp = data[:, gy:gy + ny, gx:gx + nx]
    return qL, qR, qm, qp


def explicit_rhs(f, eos, order=1, alpha_dissipation=True, rusanov_factor=RUSANOV_FACTOR):
    """Explicit residual -div F - B grad q on interior cells (ghosts must be set)."""
    grid = f.grid
    data = f.data
    out = np.zeros((NVAR, grid.ny, grid.nx))
    centre = f.interior
    for axis in range(grid.dims):
        h = grid.dx if axis == 0 else grid.dy
        qL, qR, qm, qp = face_states(data, grid, axis, order, eos)
        F = rusanov_flux(qL, qR, axis, rusanov_factor, alpha_dissipation)
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


def explicit_update(f, dt, eos, order=1, check=True, **kw):
    """Forward-Euler step of the explicit subsystem; returns a new field."""
    g = f.copy()
    g.interior[...] += dt * explicit_rhs(f, eos, order, **kw)
    if check:
        check_state(g.interior, eos, "explicit stage")
    return g
