"""Linearly implicit acoustic/chemical-potential subsystem.

The total energy is obtained from a weighted-Laplacian system; relative
velocity and momentum follow explicitly from it, and the pressure relaxation
of the volume fraction is solved cell by cell.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core_state import (
    BC, IA, IE, IM1, IM2, IMX, IMY, IWX, IWY, Field, check_state, kinetic_energy,
)
from .eos import (
    ReferenceState, dmu_dE, eval_thermo, linearize_mu_prim, mu_difference, phi_p,
)
from .errors import ConsistencyError, SolverError


@dataclass
class SolverOptions:
    method: str = "gmres"
    rtol: float = 1e-10
    atol: float = 1e-14
    restart: int = 30
    max_iter: int = 500
    check_dominance: bool = True
    # "old" takes the kinetic energy in p at the coefficient state, "star" at
    # the post-explicit state
    kinetic: str = "old"
    # state at which the chemical-potential split is evaluated: "hat" uses
    # the post-explicit masses at the frozen temperature, "coef" the frozen
    # state throughout
    mu_state: str = "hat"


@dataclass
class StageCoefficients:
    g1: np.ndarray
    h1: np.ndarray
    g2: np.ndarray
    h2: np.ndarray
    mu_hat_rs: np.ndarray
    mu_bar: np.ndarray
    friction: np.ndarray
    rhoEkin: np.ndarray


@dataclass
class EllipticSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    shape: tuple
    options: SolverOptions = field(default_factory=SolverOptions)
    x0: np.ndarray = None


@dataclass
class SolveInfo:
    iterations: int = 0
    residual: float = 0.0
    residuals: list = field(default_factory=list)


def reference_state_from_field(f, eos):
    """Phase-volume weighted averages of rho_l and rho_l e_l over the interior."""
    q = f.interior
    a1 = q[IA]
    a2 = 1.0 - a1
    rho1 = q[IM1] / a1
    rho2 = q[IM2] / a2
    T = (q[IE] - kinetic_energy(q)) / (q[IM1] * eos.phase1.cv + q[IM2] * eos.phase2.cv)
    r1 = np.sum(a1 * rho1) / np.sum(a1)
    r2 = np.sum(a2 * rho2) / np.sum(a2)
    e1 = np.sum(a1 * rho1 * eos.phase1.cv * T) / np.sum(a1)
    e2 = np.sum(a2 * rho2 * eos.phase2.cv * T) / np.sum(a2)
    return ReferenceState(float(r1), float(r2), float(e1), float(e2))


# centered operators on padded arrays; the outermost ghost layer is left 0

def grad_c(u, grid):
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    gx[..., :, 1:-1] = (u[..., :, 2:] - u[..., :, :-2]) / (2.0 * grid.dx)
    if grid.dims == 2:
        gy[..., 1:-1, :] = (u[..., 2:, :] - u[..., :-2, :]) / (2.0 * grid.dy)
    return gx, gy


def div_c(Fx, Fy, grid):
    d = np.zeros_like(Fx)
    d[..., :, 1:-1] = (Fx[..., :, 2:] - Fx[..., :, :-2]) / (2.0 * grid.dx)
    if grid.dims == 2:
        d[..., 1:-1, :] += (Fy[..., 2:, :] - Fy[..., :-2, :]) / (2.0 * grid.dy)
    return d


def fill_scalar_ghosts(u, grid):
    """Periodic wrap or mirror (homogeneous Neumann) ghost values, in place."""
    gx, gy, nx, ny = grid.gx, grid.gy, grid.nx, grid.ny
    for k in range(gx):
        if grid.bc["left"] is BC.PERIODIC:
            u[:, gx - 1 - k] = u[:, nx + gx - 1 - k]
            u[:, nx + gx + k] = u[:, gx + k]
        else:
            u[:, gx - 1 - k] = u[:, gx + k]
            u[:, nx + gx + k] = u[:, nx + gx - 1 - k]
    for k in range(gy):
        if grid.bc["bottom"] is BC.PERIODIC:
            u[gy - 1 - k, :] = u[ny + gy - 1 - k, :]
            u[ny + gy + k, :] = u[gy + k, :]
        else:
            u[gy - 1 - k, :] = u[gy + k, :]
            u[ny + gy + k, :] = u[ny + gy - 1 - k, :]
    return u


def _face_coeffs(g, grid):
    """Arithmetic face means of interior values ``g`` (shape ny, nx).

    Returns ``(Gx, Gy)`` where ``Gx[j, i]`` sits on the face between cells i
    and i+1 (wrapping), zeroed on non-periodic boundary faces.
    """
    Gx = 0.5 * (g + np.roll(g, -1, axis=1))
    if grid.bc["left"] is not BC.PERIODIC:
        Gx[:, -1] = 0.0
    Gy = None
    if grid.dims == 2:
        Gy = 0.5 * (g + np.roll(g, -1, axis=0))
        if grid.bc["bottom"] is not BC.PERIODIC:
            Gy[-1, :] = 0.0
    return Gx, Gy


def weighted_laplacian(G, u, grid):
    """sum_K G_IK (u_K - u_I)/h^2 over interior cells with face weights ``G``."""
    Gx, Gy = G
    h2 = grid.dx ** 2
    fx = Gx * (np.roll(u, -1, axis=1) - u) / h2
    out = fx - np.roll(fx, 1, axis=1)
    if grid.dims == 2:
        fy = Gy * (np.roll(u, -1, axis=0) - u) / grid.dy ** 2
        out = out + fy - np.roll(fy, 1, axis=0)
    return out


def stage_coefficients(q_hat, q_coef, dt, rs, eos, mu_state="hat"):
    """Per-cell coefficients on padded arrays (ghost values included)."""
    m1, m2 = q_hat[IM1], q_hat[IM2]
    rho_new = m1 + m2
    y1y2_new = m1 * m2 / rho_new ** 2
    a1 = q_coef[IA]
    rho_c = q_coef[IM1] + q_coef[IM2]
    rho1 = q_coef[IM1] / a1
    rho2 = q_coef[IM2] / (1.0 - a1)
    rhoEkin = kinetic_energy(q_coef)
    T = (q_coef[IE] - rhoEkin) / (q_coef[IM1] * eos.phase1.cv + q_coef[IM2] * eos.phase2.cv)
    th = eval_thermo(rho1, rho2, T, eos, a1)
    p = th.p_mix
    phip = phi_p(a1, 1.0 - a1, rho1, rho2, eos)
    mu = mu_difference(th, eos)
    if mu_state == "coef":
        mu_hat, h2, mu_bar = linearize_mu_prim(a1, rho1, rho2, T, q_coef[IE], rhoEkin / rho_c, rs, eos)
    elif mu_state == "hat":
        # updated masses and volume fraction at the frozen temperature; the
        # post-explicit total energy is not yet transported, so its
        # temperature is not meaningful
        ah = q_hat[IA]
        ekh = kinetic_energy(q_hat)
        rhoE_h = (m1 * eos.phase1.cv + m2 * eos.phase2.cv) * T + ekh
        mu_hat, h2, mu_bar = linearize_mu_prim(ah, m1 / ah, m2 / (1.0 - ah), T, rhoE_h, ekh / rho_new, rs, eos)
    else:
        raise ValueError(f"unknown chemical-potential state {mu_state!r}")
    if np.isinf(eos.tau_w):
        fr = np.ones_like(y1y2_new)
    else:
        fr = eos.tau_w / (eos.tau_w + dt * y1y2_new)
    g1 = (q_coef[IE] + p) / rho_new
    g2 = mu * rho_new * y1y2_new * fr
    return StageCoefficients(g1, phip - 1.0, g2, h2, mu_hat, mu_bar, fr, rhoEkin)


def assemble_energy_system(f_star, f_old, dt, rs, eos, options=None, coeffs=None):
    """Build the linear system for the new total energy on interior cells.

    ``f_star`` is the post-explicit field and ``f_old`` the field at which
    the time-frozen coefficients are evaluated; both need filled ghosts.
    """
    options = options or SolverOptions()
    grid = f_star.grid
    qs, qo = f_star.data, f_old.data
    c = coeffs or stage_coefficients(qs, qo, dt, rs, eos, options.mu_state)
    ins = grid.interior
    rho_new = qs[IM1] + qs[IM2]
    y1y2_new = qs[IM1] * qs[IM2] / rho_new ** 2

    # momentum including the explicit relative-velocity stress
    wx, wy = qo[IWX], qo[IWY]
    ryy = rho_new * y1y2_new
    mx = qs[IMX] - dt * div_c(ryy * wx * wx, ryy * wx * wy, grid)
    my = qs[IMY] - dt * div_c(ryy * wy * wx, ryy * wy * wy, grid)
    flux_div = div_c(c.g1 * mx, c.g1 * my, grid)[ins]
    flux_div += div_c(c.g2 * qs[IWX], c.g2 * qs[IWY], grid)[ins]

    g1, h1 = c.g1[ins], c.h1[ins]
    g2, h2 = c.g2[ins], c.h2[ins]
    G1 = _face_coeffs(g1, grid)
    G2 = _face_coeffs(g2, grid)
    ekin = _kinetic_for_pressure(qs, c, options)[ins]
    rhs = (qs[IE][ins] - dt * flux_div
           - dt ** 2 * weighted_laplacian(G1, h1 * ekin, grid)
           + dt ** 2 * weighted_laplacian(G2, c.mu_hat_rs[ins] + c.mu_bar[ins], grid))

    A = _matrix(G1, h1, G2, h2, dt, grid)
    if options.check_dominance:
        _assert_dominance(G1, h1, G2, h2, dt, grid)
    return EllipticSystem(A, rhs.ravel(), g1.shape, options, qs[IE][ins].ravel().copy())


def _kinetic_for_pressure(qs, c, options):
    if options.kinetic == "old":
        return c.rhoEkin
    if options.kinetic == "star":
        return kinetic_energy(qs)
    raise ValueError(f"unknown kinetic-energy convention {options.kinetic!r}")


def _face_pairs(grid):
    ny, nx = grid.ny, grid.nx
    idx = np.arange(nx * ny).reshape(ny, nx)
    pairs = [(idx, np.roll(idx, -1, axis=1), 0, grid.dx)]
    if grid.dims == 2:
        pairs.append((idx, np.roll(idx, -1, axis=0), 1, grid.dy))
    return pairs


def _matrix(G1, h1, G2, h2, dt, grid):
    n = h1.size
    h1f, h2f = h1.ravel(), h2.ravel()
    rows, cols, vals = [np.arange(n)], [np.arange(n)], [np.ones(n)]
    for I, K, ax, h in _face_pairs(grid):
        a = (dt / h) ** 2 * G1[ax].ravel()
        b = (dt / h) ** 2 * G2[ax].ravel()
        I, K = I.ravel(), K.ravel()
        # flux a*(h1 u_K - h1 u_I) enters row I with +, row K with -
        for r, s in ((I, K), (K, I)):
            rows += [r, r]
            cols += [r, s]
            vals += [a * h1f[r] + b * h2f[r], -(a * h1f[s] + b * h2f[s])]
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return A.tocsr()


def _assert_dominance(G1, h1, G2, h2, dt, grid):
    """Strict column diagonal dominance, checked without cancellation.

    For column K every face contributes a_f = dt^2/h^2 (G1 h1_K + G2 h2_K) to
    the diagonal and -a_f off the diagonal, so the margin is
    1 + sum_f (a_f - |a_f|).
    """
    margin = np.ones(h1.size)
    for I, K, ax, h in _face_pairs(grid):
        I, K = I.ravel(), K.ravel()
        G1f, G2f = G1[ax].ravel(), G2[ax].ravel()
        for col in (I, K):
            a = (dt / h) ** 2 * (G1f * h1.ravel()[col] + G2f * h2.ravel()[col])
            np.add.at(margin, col, a - np.abs(a))
    if not np.all(margin > 0.0):
        k = int(np.argmin(margin))
        j, i = divmod(k, grid.nx)
        raise ConsistencyError(
            f"energy matrix not strictly diagonally dominant at cell {(i, j)} (margin {margin[k]:.3e})")
    return margin


def solve_energy(sys):
    """Solve the energy system; returns ``(solution, SolveInfo)``."""
    A, b, opt = sys.matrix, sys.rhs, sys.options
    info = SolveInfo()
    bnorm = np.linalg.norm(b)
    tol = max(opt.rtol * bnorm, opt.atol)
    if opt.method == "direct":
        x = spla.spsolve(A.tocsc(), b)
    elif opt.method == "gmres":
        d = A.diagonal()
        M = spla.LinearOperator(A.shape, matvec=lambda v: v / d)
        x0 = sys.x0 if sys.x0 is not None else b / d
        if np.linalg.norm(b - A @ x0) <= tol:
            x = x0
        else:
            def cb(r):
                info.residuals.append(float(r))

            x, flag = spla.gmres(A, b, x0=x0, rtol=opt.rtol, atol=opt.atol, restart=opt.restart,
                                 maxiter=opt.max_iter, M=M, callback=cb, callback_type="pr_norm")
        info.iterations = len(info.residuals)
    else:
        raise ValueError(f"unknown linear solver {opt.method!r}")
    info.residual = float(np.linalg.norm(b - A @ x))
    if not (info.residual <= tol * (1.0 + 1e-6)) and opt.method == "gmres":
        # Jacobi-preconditioned residuals can stall slightly above the true
        # tolerance; one refinement pass usually suffices
        r = b - A @ x
        dx_, _ = spla.gmres(A, r, rtol=1e-3, atol=0.0, restart=opt.restart, maxiter=opt.max_iter,
                            M=spla.LinearOperator(A.shape, matvec=lambda v: v / A.diagonal()))
        x = x + dx_
        info.residual = float(np.linalg.norm(b - A @ x))
    if opt.method == "gmres":
        # every column of A sums to one, so a uniform shift by the mean
        # residual makes the total energy exact to roundoff
        x = x + np.sum(b - A @ x) / x.size
        info.residual = float(np.linalg.norm(b - A @ x))
    if not np.all(np.isfinite(x)) or info.residual > tol * (1.0 + 1e-6) + 1e-14 * bnorm:
        raise SolverError(
            f"energy solve did not converge: residual {info.residual:.3e} > {tol:.3e}", info.residuals)
    return x, info


def update_w(q_hat, rhoE_new, dt, coeffs, grid):
    """New relative velocity on padded arrays (valid inside one ghost ring)."""
    mu_new = coeffs.h2 * rhoE_new + coeffs.mu_hat_rs + coeffs.mu_bar
    gx, gy = grad_c(mu_new, grid)
    wx = coeffs.friction * (q_hat[IWX] - dt * gx)
    wy = coeffs.friction * (q_hat[IWY] - dt * gy)
    if grid.dims == 1:
        wy = coeffs.friction * q_hat[IWY]
    return wx, wy


def update_momentum(q_hat, rhoE_new, w_new, dt, coeffs, grid, options=None):
    """New momentum on padded arrays (valid on interior cells)."""
    options = options or SolverOptions()
    ekin = _kinetic_for_pressure(q_hat, coeffs, options)
    p_new = coeffs.h1 * (rhoE_new - ekin)
    rho = q_hat[IM1] + q_hat[IM2]
    ryy = q_hat[IM1] * q_hat[IM2] / rho
    wx, wy = w_new
    px, py = grad_c(p_new, grid)
    mx = q_hat[IMX] - dt * px - dt * div_c(ryy * wx * wx, ryy * wx * wy, grid)
    my = q_hat[IMY] - dt * py - dt * div_c(ryy * wy * wx, ryy * wy * wy, grid)
    return mx, my


def relax_alpha(q, dt, eos, tol=1e-12, max_iter=200):
    """Backward-Euler pressure relaxation of alpha1 at fixed partial densities.

    Solves ``alpha - alpha_old - c (A/alpha - B/(1-alpha)) = 0`` with
    ``c = dt T / tau_alpha``, ``A = (gamma1-1) cv1 y1``, ``B = (gamma2-1) cv2 y2``
    by Newton iteration safeguarded with bisection.  The left-hand side is
    strictly increasing in alpha, so the root is unique.
    """
    a_old = np.asarray(q[IA], dtype=float)
    if np.isinf(eos.tau_alpha) or dt == 0.0:
        return a_old.copy()
    m1, m2 = q[IM1], q[IM2]
    rho = m1 + m2
    T = (q[IE] - kinetic_energy(q)) / (m1 * eos.phase1.cv + m2 * eos.phase2.cv)
    A = eos.phase1.kappa * m1 / rho
    B = eos.phase2.kappa * m2 / rho
    c = dt * T / eos.tau_alpha
    lo = np.full_like(a_old, 1e-8)
    hi = np.full_like(a_old, 1.0 - 1e-8)
    scale = 1.0 + c * (A + B)

    def resid(a):
        return (a - a_old - c * (A / a - B / (1.0 - a))) / scale

    r_lo, r_hi = resid(lo), resid(hi)
    if np.any(r_lo > 0.0) or np.any(r_hi < 0.0):
        raise SolverError("pressure relaxation root lies outside (1e-8, 1-1e-8)")
    # start from the equilibrium when relaxation dominates, else from the old value
    eq = A / (A + B)
    a = np.where(c * (A + B) > 1.0, eq, a_old)
    a = np.clip(a, lo, hi)
    for _ in range(max_iter):
        r = resid(a)
        done = np.abs(r) <= tol
        if np.all(done):
            return a
        lo = np.where(r < 0.0, a, lo)
        hi = np.where(r > 0.0, a, hi)
        dr = (1.0 + c * (A / a ** 2 + B / (1.0 - a) ** 2)) / scale
        step = a - r / dr
        bad = ~((step > lo) & (step < hi))
        nxt = np.where(bad, 0.5 * (lo + hi), step)
        converged_bracket = (hi - lo) <= 4e-16 * np.maximum(np.abs(a), 1.0)
        a = np.where(done | converged_bracket, a, nxt)
        if np.all(done | converged_bracket):
            return a
    raise SolverError("pressure relaxation Newton iteration did not converge")


def implicit_stage(f_hat, f_coef, dt, rs, eos, options=None, check=True):
    """Apply the implicit subsystem over ``dt`` to ``f_hat``.

    Coefficients frozen in time are evaluated on ``f_coef``.  Both fields
    need filled ghosts.  Returns ``(new_field, SolveInfo)``; ghosts of the
    result are stale.
    """
    options = options or SolverOptions()
    grid = f_hat.grid
    qh = f_hat.data
    out = f_hat.copy()
    if dt == 0.0:
        return out, SolveInfo()
    coeffs = stage_coefficients(qh, f_coef.data, dt, rs, eos, options.mu_state)
    sys_ = assemble_energy_system(f_hat, f_coef, dt, rs, eos, options, coeffs)
    x, info = solve_energy(sys_)
    ins = grid.interior
    rhoE = np.zeros(grid.shape)
    rhoE[ins] = x.reshape(sys_.shape)
    fill_scalar_ghosts(rhoE, grid)
    wx, wy = update_w(qh, rhoE, dt, coeffs, grid)
    mx, my = update_momentum(qh, rhoE, (wx, wy), dt, coeffs, grid, options)
    d = out.data
    d[IE][ins] = rhoE[ins]
    d[IWX][ins] = wx[ins]
    d[IWY][ins] = wy[ins]
    d[IMX][ins] = mx[ins]
    if grid.dims == 2:
        d[IMY][ins] = my[ins]
    qi = out.interior
    qi[IA] = relax_alpha(qi, dt, eos)
    if check:
        check_state(qi, eos, "implicit stage")
    return out, info
