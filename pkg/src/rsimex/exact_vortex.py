"""Stationary two-fluid vortex: radial ODE integration and grid sampling."""
from dataclasses import dataclass, field
import csv
import math
import os

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .core_state import conserved_from_primitive_values
from .eos import MixtureEOS, PhaseParams
from .errors import AccuracyError, DomainError, ExtrapolationError

# volume-fraction amplitude giving alpha1 in [0.4, 0.6]
DEFAULT_ALPHA_C = 0.2 * math.exp(-10.0)


@dataclass(frozen=True)
class VortexParams:
    phase1: PhaseParams
    phase2: PhaseParams
    c_alpha: float = 0.4
    alpha_c: float = DEFAULT_ALPHA_C
    nu_alpha: float = 10.0
    v_c1: float = 2e-5
    v_c2: float = 2.5e-5
    nu_v1: float = 15.0
    nu_v2: float = 14.0
    c_rho: float = 1.0
    rho1_0: float = 1.0
    T_0: float = 2.0

    def alpha(self, r):
        return self.c_alpha + self.alpha_c * np.exp(self.nu_alpha * (1.0 - r * r))

    def dalpha(self, r):
        return -2.0 * self.nu_alpha * r * self.alpha_c * np.exp(self.nu_alpha * (1.0 - r * r))

    def omega(self, r):
        """Angular velocities v_theta,l / r of both phases."""
        return (self.v_c1 * np.exp(self.nu_v1 * (1.0 - r * r)),
                self.v_c2 * np.exp(self.nu_v2 * (1.0 - r * r)))

    def eos(self):
        return MixtureEOS(self.phase1, self.phase2)


def compressible_params(**kw):
    return VortexParams(PhaseParams(7.0 / 5.0, 1.0), PhaseParams(5.0 / 3.0, 1.0), **kw)


def weakly_compressible_params(**kw):
    return VortexParams(PhaseParams(2.0, 20.0), PhaseParams(2.8, 20.0), **kw)


def _make_rhs(params):
    p = params
    g1, g2 = p.phase1.gamma, p.phase2.gamma
    k1, k2 = p.phase1.kappa, p.phase2.kappa
    cv1, cv2 = p.phase1.cv, p.phase2.cv
    t01, t02 = p.phase1.t0, p.phase2.t0
    cr = p.c_rho
    c_alpha, alpha_c, nu_a = p.c_alpha, p.alpha_c, p.nu_alpha
    vc1, vc2, nv1, nv2 = p.v_c1, p.v_c2, p.nu_v1, p.nu_v2
    exp, log = math.exp, math.log

    def rhs(r, rho1, T):
        if rho1 <= 0.0 or T <= 0.0:
            raise DomainError("rho1/T", f"nonpositive value at r={r}")
        rho2 = cr * rho1
        q = 1.0 - r * r
        ea = alpha_c * exp(nu_a * q)
        a1 = c_alpha + ea
        a2 = 1.0 - a1
        da = -2.0 * nu_a * r * ea
        o1 = vc1 * exp(nv1 * q)
        o2 = vc2 * exp(nv2 * q)
        v1, v2 = r * o1, r * o2
        dv1 = o1 * (1.0 - 2.0 * nv1 * r * r)
        dv2 = o2 * (1.0 - 2.0 * nv2 * r * r)
        s1 = cv1 * log(T / t01 * rho1 ** (1.0 - g1))
        s2 = cv2 * log(T / t02 * rho2 ** (1.0 - g2))
        p1 = k1 * rho1 * T
        p2 = k2 * rho2 * T
        m1, m2 = a1 * rho1, a2 * rho2
        y1 = m1 / (m1 + m2)
        v = y1 * v1 + (1.0 - y1) * v2
        # (1/r) d(r w)/dr with w = r (o1 - o2)
        curl = (o1 - o2) + (dv1 - dv2)
        a11 = a1 * k1 * T + a2 * cr * k2 * T
        a12 = a1 * k1 * rho1 + a2 * k2 * rho2
        a21 = k1 * T / rho1 - cr * k2 * T / rho2
        a22 = (k1 - s1) - (k2 - s2)
        b1 = r * (m1 * o1 * o1 + m2 * o2 * o2) - (p1 - p2) * da
        b2 = -(v1 * dv1 - v2 * dv2) + v * curl
        det = a11 * a22 - a12 * a21
        if abs(det) <= 1e-14 * (abs(a11 * a22) + abs(a12 * a21)):
            raise DomainError("vortex_rhs", f"singular system at r={r} (coincident phases)")
        return (b1 * a22 - a12 * b2) / det, (a11 * b2 - a21 * b1) / det

    return rhs


def vortex_rhs(r, rho1, T, params):
    """Radial derivatives (d rho1/dr, dT/dr) of the stationary vortex."""
    return _make_rhs(params)(r, rho1, T)


@dataclass
class VortexProfile:
    params: VortexParams
    r: np.ndarray
    rho1: np.ndarray
    T: np.ndarray
    drho1: np.ndarray
    dT: np.ndarray
    _splines: tuple = field(default=None, repr=False)

    @property
    def rho2(self):
        return self.params.c_rho * self.rho1

    @property
    def alpha1(self):
        return self.params.alpha(self.r)

    @property
    def v_theta(self):
        o1, o2 = self.params.omega(self.r)
        return self.r * o1, self.r * o2

    def interpolate(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r > self.r[-1] * (1 + 1e-12)) or np.any(r < 0.0):
            raise ExtrapolationError(f"radius {r.max():.6g} outside profile table [0, {self.r[-1]:.6g}]")
        if self._splines is None:
            self._splines = (CubicHermiteSpline(self.r, self.rho1, self.drho1),
                             CubicHermiteSpline(self.r, self.T, self.dT))
        return self._splines[0](r), self._splines[1](r)

    def to_csv(self, path):
        v1, v2 = self.v_theta
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["r", "rho1", "rho2", "T", "v_theta1", "v_theta2", "alpha1"])
            for row in zip(self.r, self.rho1, self.rho2, self.T, v1, v2, self.alpha1):
                wr.writerow([f"{x:.17g}" for x in row])


def _integrate(params, r_max, dr):
    n = int(round(r_max / dr))
    h = r_max / n
    f = _make_rhs(params)
    y0, y1 = params.rho1_0, params.T_0
    ys, dys = [(y0, y1)], []
    for i in range(n):
        ri = i * h
        k1 = f(ri, y0, y1)
        dys.append(k1)
        k2 = f(ri + 0.5 * h, y0 + 0.5 * h * k1[0], y1 + 0.5 * h * k1[1])
        k3 = f(ri + 0.5 * h, y0 + 0.5 * h * k2[0], y1 + 0.5 * h * k2[1])
        k4 = f(ri + h, y0 + h * k3[0], y1 + h * k3[1])
        y0 += h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        y1 += h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        ys.append((y0, y1))
    dys.append(f(n * h, y0, y1))
    return np.arange(n + 1) * h, np.array(ys), np.array(dys)


_CACHE = {}


def build_profile(params, r_max=1.6, dr=1e-4, verify=True, tol=1e-10):
    """RK4 table of (rho1, T) from r=0 to ``r_max``.

    With ``verify`` the integration is repeated at ``dr/2`` and an
    :class:`AccuracyError` is raised if T(r_max) moves by more than ``tol``.
    """
    key = (params, r_max, dr, verify)
    if key in _CACHE:
        return _CACHE[key]
    a = params.alpha(np.linspace(0.0, r_max, 64))
    if np.any(a <= 0.0) or np.any(a >= 1.0):
        raise DomainError("alpha1", "volume-fraction profile leaves (0, 1)")
    r, y, dy = _integrate(params, r_max, dr)
    if verify:
        _, yh, _ = _integrate(params, r_max, dr / 2)
        diff = abs(yh[-1, 1] - y[-1, 1])
        if not diff < tol:
            raise AccuracyError(f"step refinement changes T(r_max) by {diff:.3e} >= {tol:.1e}")
    prof = VortexProfile(params, r, y[:, 0], y[:, 1], dy[:, 0], dy[:, 1])
    _CACHE[key] = prof
    return prof


def sample_primitives(profile, X, Y):
    """(alpha1, rho1, rho2, v1, v2, T) at points; centre of the vortex at the origin."""
    p = profile.params
    r = np.hypot(X, Y)
    rho1, T = profile.interpolate(r)
    o1, o2 = p.omega(r)
    v1 = np.stack([-o1 * Y, o1 * X])
    v2 = np.stack([-o2 * Y, o2 * X])
    return p.alpha(r), rho1, p.c_rho * rho1, v1, v2, T


def sampler(profile):
    """Callable ``(X, Y, t) -> conserved array`` (the vortex is stationary)."""
    eos = profile.params.eos()

    def f(X, Y, t=0.0):
        a, r1, r2, v1, v2, T = sample_primitives(profile, X, Y)
        return conserved_from_primitive_values(a, r1, r2, v1, v2, T, eos)

    return f


def sample_field(profile, grid, eos=None):
    from .core_state import Field

    X, Y = grid.centers(with_ghosts=True)
    f = Field(grid, sampler(profile)(X, Y))
    return f


def mach_extrema(profile):
    """Maximum phase and mixture Mach numbers over the radial table."""
    p = profile.params
    v1, v2 = profile.v_theta
    T = profile.T
    a1 = profile.alpha1
    m1 = a1 * profile.rho1
    m2 = (1 - a1) * profile.rho2
    y1 = m1 / (m1 + m2)
    v = y1 * v1 + (1 - y1) * v2
    c1 = p.phase1.gamma * p.phase1.kappa * T
    c2 = p.phase2.gamma * p.phase2.kappa * T
    return (float(np.max(np.abs(v1) / np.sqrt(c1))), float(np.max(np.abs(v2) / np.sqrt(c2))),
            float(np.max(np.abs(v) / np.sqrt(y1 * c1 + (1 - y1) * c2))))
