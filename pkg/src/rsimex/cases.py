"""Initial-condition library."""
from dataclasses import dataclass, field
import math
from typing import Callable, Optional

import numpy as np

from .core_state import BC, Field, Grid, apply_bc, conserved_from_primitive_values
from .eos import MixtureEOS, PhaseParams
from . import exact_vortex as ev


@dataclass
class CaseSpec:
    name: str
    grid: Grid
    eos: MixtureEOS
    t_final: float
    initial: Field
    exact: Optional[Callable] = None
    ref_speed: Optional[float] = None
    meta: dict = field(default_factory=dict)


def _periodic(dims=2):
    return {s: BC.PERIODIC for s in ("left", "right", "bottom", "top")}


def _build(name, grid, eos, t_final, prim_fn, exact=None, ref_speed=None, meta=None):
    X, Y = grid.centers(with_ghosts=True)
    a, r1, r2, v1, v2, T = prim_fn(X, Y)
    q = conserved_from_primitive_values(a, r1, r2, v1, v2, T, eos)
    f = Field(grid, q)
    apply_bc(f, exact)
    return CaseSpec(name, grid, eos, t_final, f, exact, ref_speed, meta or {})


RIEMANN_STATES = {
    # (alpha1, rho1, rho2, v_{1,1}, v_{2,1}, T)
    "rp1": ((0.3, 2.0, 1.2, 0.0, 0.0, 1.2), (0.3, 2.0, 2.0, 0.0, 0.0, 1.0)),
    "rp2": ((0.7, 1.0, 2.0, -1.0, -1.0, 1.0), (0.3, 1.0, 2.0, 1.0, 1.0, 1.0)),
}


def riemann_eos():
    return MixtureEOS(PhaseParams(1.4, 1.0), PhaseParams(2.0, 1.0))


def riemann_case(case_id, n_cells, x_jump=0.5, ref_speed=1.0):
    """Homogeneous 1D Riemann problem on [0, 1] with transmissive ends.

    The time step is tied to ``ref_speed`` so that dt = nu dx.
    """
    case_id = case_id.lower()
    left, right = RIEMANN_STATES[case_id]
    grid = Grid(1, (n_cells,), (0.0, 1.0), {"left": BC.TRANSMISSIVE, "right": BC.TRANSMISSIVE})
    eos = riemann_eos()

    def prim(X, Y):
        L = X < x_jump
        a, r1, r2, u1, u2, T = (np.where(L, l, r) for l, r in zip(left, right))
        z = np.zeros_like(X)
        return a, r1, r2, np.stack([u1, z]), np.stack([u2, z]), T

    return _build(case_id, grid, eos, 0.2, prim, ref_speed=ref_speed)


def cv_from_mach_ratio(gamma1, gamma2, cv1, C):
    """Phase-2 heat capacity that fixes the phase Mach-number ratio to C."""
    return gamma1 * (gamma1 - 1.0) * cv1 / (gamma2 * (gamma2 - 1.0)) * C ** 2


def equilibrium_rho2(ph1, ph2, rho1):
    """Phase-2 density in pressure equilibrium with phase 1 at equal T."""
    return ph1.kappa / ph2.kappa * rho1


def bubble_case(C, n, alpha_L=0.9, alpha_R=0.1, theta=2000.0, r0=0.2, centre=(0.5, 0.5)):
    g1, g2, cv1 = 1.4, 2.0, 1.0
    ph1 = PhaseParams(g1, cv1)
    ph2 = PhaseParams(g2, cv_from_mach_ratio(g1, g2, cv1, C))
    tau_w = {10.0: 1e-8, 50.0: 1e-12}.get(float(C), 1e-8)
    eos = MixtureEOS(ph1, ph2, 1.0, 1e-16, tau_w)
    rho1 = 2.0
    rho2 = equilibrium_rho2(ph1, ph2, rho1)
    grid = Grid(2, (n, n), (0.0, 1.0, 0.0, 1.0), _periodic())

    def alpha(X, Y):
        r = np.hypot(X - centre[0], Y - centre[1])
        return (alpha_L - alpha_R) * np.arctan(-theta * (r - r0)) / math.pi + 0.5 * (alpha_L + alpha_R)

    def prim(X, Y):
        one = np.ones_like(X)
        vel = np.stack([one, one])
        return alpha(X, Y), rho1 * one, rho2 * one, vel, vel, 2.0 * one

    spec = _build(f"bubble-C{C:g}", grid, eos, 1.0, prim, meta={"C": C, "alpha": alpha})
    return spec


def kh_profile(y, left, right, m, L=0.025):
    """Piecewise-exponential shear-layer profile on [0, 1]."""
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    b1 = y < 0.25
    b2 = (y >= 0.25) & (y < 0.5)
    b3 = (y >= 0.5) & (y < 0.75)
    b4 = y >= 0.75
    out[b1] = left - m * np.exp((y[b1] - 0.25) / L)
    out[b2] = right + m * np.exp(-(y[b2] - 0.25) / L)
    out[b3] = right + m * np.exp((y[b3] - 0.75) / L)
    out[b4] = left - m * np.exp(-(y[b4] - 0.75) / L)
    return out


def kh_eps_for_mach(M):
    """Scaling giving maximal initial Mach number M (T = 12.5, |v| <= 0.5)."""
    return M / 0.1


def kelvin_helmholtz_case(eps, n, T0=12.5, t_final=3.0):
    g1, g2 = 2.0, 1.4
    cv1 = 1.0 / eps ** 2
    ph1 = PhaseParams(g1, cv1)
    ph2 = PhaseParams(g2, cv_from_mach_ratio(g1, g2, cv1, 1.0))
    vL, vR = 0.5, -0.5
    vm = (vL - vR) / 2.0
    aL, aR = 0.9, 0.2
    am = (aR - aL) / 8.0
    M = max(abs(vL), abs(vR)) / math.sqrt(g1 * ph1.kappa * T0)
    eos = MixtureEOS(ph1, ph2, 1.0, 1e-16, M ** 2)
    rho1 = 1.0
    rho2 = equilibrium_rho2(ph1, ph2, rho1)
    grid = Grid(2, (n, n), (0.0, 1.0, 0.0, 1.0), _periodic())

    def prim(X, Y):
        # ghost cells lie outside [0, 1]; evaluate the periodic profile
        Yp = np.mod(Y, 1.0)
        vx = kh_profile(Yp, vL, vR, vm)
        vy = 1e-2 * np.sin(4.0 * math.pi * X)
        vel = np.stack([vx, vy])
        one = np.ones_like(X)
        return kh_profile(Yp, aL, aR, am), rho1 * one, rho2 * one, vel, vel, T0 * one

    return _build(f"kh-eps{eps:g}", grid, eos, t_final, prim, meta={"eps": eps, "M": M})


def well_prepared_case(M, alpha_profile="constant", n=64, t_final=0.1, alpha0=0.5):
    """Low-Mach data: constant phase pressures, divergence-free v, w = 0.

    Heat capacities scale like 1/M^2 so the maximal phase Mach numbers equal M.
    """
    g1, g2 = 1.4, 2.0
    cv1 = 1.0 / (g1 * (g1 - 1.0) * M ** 2)
    ph1 = PhaseParams(g1, cv1)
    ph2 = PhaseParams(g2, cv_from_mach_ratio(g1, g2, cv1, 1.0))
    tau_alpha = np.inf if alpha_profile == "constant" else 1e-16
    eos = MixtureEOS(ph1, ph2, 1.0, tau_alpha, M ** 2)
    rho1 = 1.0
    rho2 = equilibrium_rho2(ph1, ph2, rho1)
    grid = Grid(2, (n, n), (0.0, 1.0, 0.0, 1.0), _periodic())

    def prim(X, Y):
        s, c = np.sin, np.cos
        tp = 2.0 * math.pi
        vel = np.stack([s(tp * X) * c(tp * Y), -c(tp * X) * s(tp * Y)])
        one = np.ones_like(X)
        if alpha_profile == "constant":
            a = alpha0 * one
        elif alpha_profile == "smooth":
            a = alpha0 + 0.2 * s(tp * X) * s(tp * Y)
        else:
            raise ValueError(f"unknown alpha profile {alpha_profile!r}")
        return a, rho1 * one, rho2 * one, vel, vel, one

    return _build(f"well-prepared-M{M:g}", grid, eos, t_final, prim,
                  meta={"M": M, "alpha_profile": alpha_profile})


VORTEX_T_FINAL = 0.1


def vortex_case(kind, n, t_final=VORTEX_T_FINAL, **params):
    """Stationary vortex on [-1, 1]^2 with exact Dirichlet ghosts."""
    if kind in ("compressible", "vortex-compressible"):
        vp = ev.compressible_params(**params)
    elif kind in ("weakly-compressible", "vortex-weakly-compressible"):
        vp = ev.weakly_compressible_params(**params)
    else:
        raise ValueError(f"unknown vortex kind {kind!r}")
    grid = Grid(2, (n, n), (-1.0, 1.0, -1.0, 1.0), {s: BC.DIRICHLET for s in ("left", "right", "bottom", "top")})
    # the table must reach the corner ghost centers; rounded up so profiles are shared
    r_ghost = np.sqrt(2.0) * (1.0 + (grid.ghost - 0.5) * grid.dx)
    r_max = max(1.6, np.ceil(10.0 * r_ghost) / 10.0)
    prof = ev.build_profile(vp, r_max=float(r_max))
    eos = vp.eos()
    exact = ev.sampler(prof)

    def prim(X, Y):
        return ev.sample_primitives(prof, X, Y)

    spec = _build(f"vortex-{kind.replace('vortex-', '')}", grid, eos, t_final, prim, exact=exact,
                  meta={"profile": prof})
    return spec


CASES = {
    "rp1": lambda n, **kw: riemann_case("rp1", n, **kw),
    "rp2": lambda n, **kw: riemann_case("rp2", n, **kw),
    "bubble": lambda n, C=10.0, **kw: bubble_case(C, n, **kw),
    "kh": lambda n, eps=1.0, **kw: kelvin_helmholtz_case(eps, n, **kw),
    "well-prepared": lambda n, M=0.1, **kw: well_prepared_case(M, n=n, **kw),
    "vortex-compressible": lambda n, **kw: vortex_case("compressible", n, **kw),
    "vortex-weakly-compressible": lambda n, **kw: vortex_case("weakly-compressible", n, **kw),
}


def build_case(name, n, **params):
    try:
        factory = CASES[name]
    except KeyError:
        raise ValueError(f"unknown case {name!r}; choose from {sorted(CASES)}") from None
    return factory(n, **params)


def _reconserve(q, old, new):
    from .core_state import to_primitives

    pr = to_primitives(q, old, check=False)
    return conserved_from_primitive_values(q[0], pr.rho1, pr.rho2, pr.v1, pr.v2, pr.T, new)


def with_physics(spec, gamma1=None, gamma2=None, cv1=None, cv2=None, tau_alpha=None, tau_w=None,
                 mach_ratio_C=None, mach_scaling=None):
    """Copy of ``spec`` with replaced closure constants.

    The initial field (and the exact sampler, if any) keep their primitive
    values (alpha1, rho_l, v_l, T) and are re-expressed in conserved form for
    the new closure.  ``mach_scaling = M`` divides both c_v by M^2.
    """
    old = spec.eos
    g1 = old.phase1.gamma if gamma1 is None else gamma1
    g2 = old.phase2.gamma if gamma2 is None else gamma2
    c1 = old.phase1.cv if cv1 is None else cv1
    c2 = old.phase2.cv if cv2 is None else cv2
    if mach_scaling is not None:
        if not mach_scaling > 0.0:
            raise ValueError(f"mach_scaling must be positive, got {mach_scaling}")
        c1, c2 = c1 / mach_scaling ** 2, c2 / mach_scaling ** 2
    new = MixtureEOS(
        PhaseParams(g1, c1), PhaseParams(g2, c2),
        old.mach_ratio_C if mach_ratio_C is None else mach_ratio_C,
        old.tau_alpha if tau_alpha is None else tau_alpha,
        old.tau_w if tau_w is None else tau_w,
    )
    if new == old:
        return spec
    exact = None
    if spec.exact is not None:
        old_exact = spec.exact

        def exact(X, Y, t=0.0):
            return _reconserve(np.asarray(old_exact(X, Y, t)), old, new)

    f = Field(spec.grid, _reconserve(spec.initial.data, old, new))
    apply_bc(f, exact)
    return CaseSpec(spec.name, spec.grid, new, spec.t_final, f, exact, spec.ref_speed, dict(spec.meta))
