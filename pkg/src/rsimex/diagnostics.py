"""Error norms, convergence orders, divergence and entropy diagnostics."""
from dataclasses import dataclass, field, asdict
import math

import numpy as np

from .core_state import (
    IE, IM1, IM2, IMX, IMY, Field, check_state, conservation_sums, mach_numbers, to_primitives,
)
from .eos import eval_thermo
from .errors import AdmissibilityError, ConfigError

ERROR_VARS = ("alpha1", "rho1", "rho2", "v1x", "v2x", "v1y", "v2y", "T")


def _vars(q, eos):
    pr = to_primitives(q, eos, check=False)
    return {
        "alpha1": q[0], "rho1": pr.rho1, "rho2": pr.rho2,
        "v1x": pr.v1[0], "v2x": pr.v2[0], "v1y": pr.v1[1], "v2y": pr.v2[1], "T": pr.T,
    }


def l1_error(f, ref, eos, t=0.0, variables=ERROR_VARS):
    """Sum over cells of |u - u_ref| |Omega_I| for the listed variables.

    ``ref`` is a :class:`Field` on the same grid or a sampler
    ``(X, Y, t) -> conserved array`` evaluated at cell centres.
    """
    g = f.grid
    if isinstance(ref, Field):
        if ref.grid.n != g.n or ref.grid.extent != g.extent:
            raise ConfigError("l1_error needs matching grids or a pointwise sampler")
        qr = ref.interior
    elif callable(ref):
        X, Y = g.centers()
        qr = np.asarray(ref(X, Y, t))
    else:
        raise ConfigError("reference must be a Field or a sampler")
    a, b = _vars(f.interior, eos), _vars(qr, eos)
    vol = g.cell_volume
    return {k: float(np.sum(np.abs(a[k] - b[k])) * vol) for k in variables}


def coarsen(f, factor):
    """Cell averages of ``f`` on a grid ``factor`` times coarser per axis.

    Conserved variables are averaged, so the coarse field carries the same
    totals; ghosts of the result are left unfilled.
    """
    from .core_state import Grid

    g = f.grid
    factor = int(factor)
    if factor < 1 or g.nx % factor or (g.dims == 2 and g.ny % factor):
        raise ConfigError(f"cannot coarsen {g.nx}x{g.ny} cells by {factor}")
    fy = factor if g.dims == 2 else 1
    q = f.interior
    nv, ny, nx = q.shape
    qc = q.reshape(nv, ny // fy, fy, nx // factor, factor).mean(axis=(2, 4))
    gc = Grid(g.dims, (nx // factor, ny // fy), g.extent, g.bc, g.ghost)
    return Field.from_interior(gc, qc)


def eoc(errors):
    """Orders log2(e_k / e_{k+1}) for errors on successively doubled grids.

    Entries with a nonpositive error yield ``nan``.
    """
    errors = list(errors)
    if len(errors) < 2:
        raise ValueError("need at least two errors")
    out = []
    for e0, e1 in zip(errors[:-1], errors[1:]):
        out.append(math.log2(e0 / e1) if e0 > 0.0 and e1 > 0.0 else float("nan"))
    return out


def discrete_divergence(f):
    """Centered divergence of the mixture velocity on interior cells.

    Ghosts must be filled.  Returns ``(div, max_abs, l1)``.
    """
    g = f.grid
    d = f.data
    rho = d[IM1] + d[IM2]
    vx = d[IMX] / rho
    vy = d[IMY] / rho
    gy0, gx0 = g.gy, g.gx
    J = slice(gy0, gy0 + g.ny)
    I = slice(gx0, gx0 + g.nx)
    div = (vx[J, gx0 + 1:gx0 + g.nx + 1] - vx[J, gx0 - 1:gx0 + g.nx - 1]) / (2.0 * g.dx)
    if g.dims == 2:
        div = div + (vy[gy0 + 1:gy0 + g.ny + 1, I] - vy[gy0 - 1:gy0 + g.ny - 1, I]) / (2.0 * g.dy)
    return div, float(np.max(np.abs(div))), float(np.sum(np.abs(div)) * g.cell_volume)


def entropy_production(q, eos):
    """Pointwise entropy production of the relaxation sources."""
    a1 = q[0]
    m1, m2 = q[IM1], q[IM2]
    pr = to_primitives(q, eos, check=False)
    T = pr.T
    if np.any(~(T > 0.0)):
        raise AdmissibilityError("T > 0")
    rho = pr.rho
    th = eval_thermo(pr.rho1, pr.rho2, T, eos, a1)
    w2 = np.sum(pr.w ** 2, axis=0)
    pi = np.zeros_like(T)
    if np.isfinite(eos.tau_alpha):
        pi = pi + (th.p1 - th.p2) ** 2 / (T * eos.tau_alpha * rho ** 2)
    if np.isfinite(eos.tau_w):
        pi = pi + (pr.y1 * pr.y2) ** 2 * w2 / (T * eos.tau_w * rho ** 2)
    return pi


def entropy_report(f, eos):
    """(total mixture entropy sum rho S |Omega|, min Pi, max Pi)."""
    q = f.interior
    check_state(q, eos, "entropy report")
    pr = to_primitives(q, eos, check=False)
    th = eval_thermo(pr.rho1, pr.rho2, pr.T, eos, q[0])
    rhoS = q[IM1] * th.s1 + q[IM2] * th.s2
    pi = entropy_production(q, eos)
    return math.fsum(rhoS.ravel()) * f.grid.cell_volume, float(pi.min()), float(pi.max())


def mach_extrema(f, eos):
    pr = to_primitives(f.interior, eos, check=False)
    M1, M2, M = mach_numbers(pr, eos)
    return float(M1.max()), float(M2.max()), float(M.max())


@dataclass
class FieldReport:
    t: float
    step: int
    dt: float
    totals: list
    div_max: float
    div_l1: float
    mach1: float
    mach2: float
    mach_mix: float
    entropy: float
    pi_min: float
    pi_max: float
    linear_iterations: int = 0
    errors: dict = field(default_factory=dict)

    HEADER = ("t", "step", "dt", "sum_m1", "sum_m2", "sum_momx", "sum_momy", "sum_rhoE",
              "div_max", "div_l1", "mach1", "mach2", "mach_mix", "entropy", "pi_min", "pi_max",
              "linear_iterations")

    def row(self):
        return [self.t, self.step, self.dt, *self.totals, self.div_max, self.div_l1, self.mach1,
                self.mach2, self.mach_mix, self.entropy, self.pi_min, self.pi_max, self.linear_iterations]


def field_report(f, eos, t=0.0, step=0, dt=0.0, iterations=0, exact=None):
    _, dmax, dl1 = discrete_divergence(f)
    m1, m2, m = mach_extrema(f, eos)
    S, pmin, pmax = entropy_report(f, eos)
    errs = l1_error(f, exact, eos, t) if exact is not None else {}
    return FieldReport(t, step, dt, list(conservation_sums(f)), dmax, dl1, m1, m2, m, S, pmin, pmax,
                       iterations, errs)


def relative_drift(totals0, totals1, scale=None):
    """Per-quantity drift |S1 - S0| / max(|S0|, scale)."""
    t0 = np.asarray(totals0, dtype=float)
    t1 = np.asarray(totals1, dtype=float)
    ref = np.maximum(np.abs(t0), scale if scale is not None else 1e-300)
    return np.abs(t1 - t0) / ref


def profile_columns(f, eos):
    """1D cell-centre coordinate and primitive profiles (alpha1, rho1, rho2, v, w, T)."""
    q = f.interior[:, 0, :]
    pr = to_primitives(q, eos, check=False)
    X, _ = f.grid.centers()
    return X[0], {"alpha1": q[0], "rho1": pr.rho1, "rho2": pr.rho2, "v": pr.v[0],
                  "w": pr.w[0], "T": pr.T}


def detect_waves(x, columns, slope=1.0, gap=None):
    """Intervals ``(x_lo, x_hi)`` where any profile varies.

    A face is active when the jump of some variable, scaled by that
    variable's range, exceeds ``slope * dx``; active faces closer than
    ``gap`` cells are merged into one wave.
    """
    x = np.asarray(x, dtype=float)
    dx = x[1] - x[0]
    gap = max(3, int(0.005 / dx)) if gap is None else gap
    active = np.zeros(x.size - 1, dtype=bool)
    for u in columns.values():
        u = np.asarray(u, dtype=float)
        rng = u.max() - u.min()
        if rng > 0.0:
            active |= np.abs(np.diff(u)) / rng > slope * dx
    idx = np.flatnonzero(active)
    if idx.size == 0:
        return []
    waves = []
    start = prev = idx[0]
    for k in idx[1:]:
        if k - prev > gap:
            waves.append((float(x[start]), float(x[prev + 1])))
            start = k
        prev = k
    waves.append((float(x[start]), float(x[prev + 1])))
    return waves


def jump_position(x, u, lo, hi):
    """Centroid of |du| over faces inside ``[lo, hi]`` (a sharp-wave locator)."""
    x = np.asarray(x, dtype=float)
    xf = 0.5 * (x[1:] + x[:-1])
    du = np.abs(np.diff(np.asarray(u, dtype=float)))
    m = (xf >= lo) & (xf <= hi)
    if not np.any(du[m] > 0.0):
        raise ValueError(f"no variation of the profile inside [{lo}, {hi}]")
    return float(np.sum(xf[m] * du[m]) / np.sum(du[m]))
