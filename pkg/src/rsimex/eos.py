"""Ideal-gas closures for the two-fluid single-temperature mixture.

All functions broadcast over numpy arrays so they can be applied to whole
fields at once.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class PhaseParams:
    gamma: float
    cv: float
    t0: float = field(init=False)

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise DomainError("gamma", f"must exceed 1, got {self.gamma}")
        if not self.cv > 0.0:
            raise DomainError("cv", f"must be positive, got {self.cv}")
        object.__setattr__(self, "t0", 1.0 / ((self.gamma - 1.0) * self.cv))

    @property
    def kappa(self):
        """(gamma - 1) * cv, the factor in p = kappa * rho * T."""
        return (self.gamma - 1.0) * self.cv


@dataclass(frozen=True)
class MixtureEOS:
    """Closure constants of the mixture.

    ``tau_alpha`` and ``tau_w`` may be ``inf`` to switch the corresponding
    relaxation source off.
    """

    phase1: PhaseParams
    phase2: PhaseParams
    mach_ratio_C: float = 1.0
    tau_alpha: float = np.inf
    tau_w: float = np.inf

    def __post_init__(self):
        for name in ("mach_ratio_C", "tau_alpha", "tau_w"):
            val = getattr(self, name)
            if not val > 0.0:
                raise DomainError(name, f"must be positive, got {val}")

    def with_taus(self, tau_alpha=None, tau_w=None):
        return MixtureEOS(
            self.phase1,
            self.phase2,
            self.mach_ratio_C,
            self.tau_alpha if tau_alpha is None else tau_alpha,
            self.tau_w if tau_w is None else tau_w,
        )


@dataclass
class ThermoEval:
    p1: np.ndarray
    p2: np.ndarray
    p_mix: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    mu1: np.ndarray
    mu2: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    a1_sq: np.ndarray
    a2_sq: np.ndarray
    a_mix_sq: np.ndarray
    T: np.ndarray


def _check_positive(name, x):
    x = np.asarray(x, dtype=float)
    bad = ~(x > LOG_FLOOR)
    if np.any(bad):
        idx = np.argwhere(bad)[0] if x.ndim else ()
        val = x[tuple(idx)] if x.ndim else float(x)
        raise DomainError(name, f"must be positive, got {val} at index {tuple(idx)}")
    return x


def phase_entropy(rho, T, ph):
    return ph.cv * np.log((T / ph.t0) * rho ** (-(ph.gamma - 1.0)))


def eval_thermo(rho1, rho2, T, eos, alpha1=None):
    """Evaluate all phase and mixture thermodynamic quantities.

    ``p_mix`` and ``a_mix_sq`` need the volume fraction; when ``alpha1`` is
    omitted an equal split is assumed for those two fields only.
    """
    rho1 = _check_positive("rho1", rho1)
    rho2 = _check_positive("rho2", rho2)
    T = _check_positive("T", T)
    ph1, ph2 = eos.phase1, eos.phase2
    p1 = ph1.kappa * rho1 * T
    p2 = ph2.kappa * rho2 * T
    e1 = ph1.cv * T
    e2 = ph2.cv * T
    s1 = phase_entropy(rho1, T, ph1)
    s2 = phase_entropy(rho2, T, ph2)
    mu1 = e1 + p1 / rho1 - s1 * T
    mu2 = e2 + p2 / rho2 - s2 * T
    a1_sq = ph1.gamma * ph1.kappa * T
    a2_sq = ph2.gamma * ph2.kappa * T
    a1 = 0.5 if alpha1 is None else np.asarray(alpha1, dtype=float)
    a2 = 1.0 - a1
    p_mix = a1 * p1 + a2 * p2
    rho = a1 * rho1 + a2 * rho2
    y1 = a1 * rho1 / rho
    a_mix_sq = y1 * a1_sq + (1.0 - y1) * a2_sq
    return ThermoEval(p1, p2, p_mix, s1, s2, mu1, mu2, e1, e2, a1_sq, a2_sq, a_mix_sq, T)


def _weights(alpha1, alpha2, rho1, rho2, eos, c2=1.0):
    w1 = alpha1 * rho1 * eos.phase1.cv
    w2 = alpha2 * rho2 * eos.phase2.cv
    den = w1 + c2 * w2
    if np.any(~(np.asarray(den) > 0.0)):
        raise DomainError("denominator", "weighted heat capacity must be positive")
    return w1, w2, den


def phi_p(alpha1, alpha2, rho1, rho2, eos):
    """Heat-capacity weighted mean of gamma; p = (phi_p - 1)(rhoE - rhoE_kin)."""
    w1, w2, den = _weights(alpha1, alpha2, rho1, rho2, eos)
    return (eos.phase1.gamma * w1 + eos.phase2.gamma * w2) / den


def phi_mu(thermo, alpha1, alpha2, rho1, rho2, eos):
    c2 = eos.mach_ratio_C ** 2
    _, _, den = _weights(alpha1, alpha2, rho1, rho2, eos, c2)
    ph1, ph2 = eos.phase1, eos.phase2
    num = ph1.gamma * ph1.cv - thermo.s1 - c2 * (ph2.gamma * ph2.cv - thermo.s2)
    return num / den


def dmu_dE(thermo, alpha1, alpha2, rho1, rho2, eos):
    """Derivative of mu1 - C^2 mu2 w.r.t. rhoE at fixed masses and velocities."""
    c2 = eos.mach_ratio_C ** 2
    _, _, den = _weights(alpha1, alpha2, rho1, rho2, eos, c2)
    ph1, ph2 = eos.phase1, eos.phase2
    num = ph1.kappa - thermo.s1 - c2 * (ph2.kappa - thermo.s2)
    return num / den


def mu_difference(thermo, eos):
    return thermo.mu1 - eos.mach_ratio_C ** 2 * thermo.mu2


@dataclass(frozen=True)
class ReferenceState:
    """Constant leading-order phase densities and internal energy densities."""

    rho1_rs: float
    rho2_rs: float
    rhoe1_rs: float
    rhoe2_rs: float

    def __post_init__(self):
        for name in ("rho1_rs", "rho2_rs", "rhoe1_rs", "rhoe2_rs"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0.0):
                raise DomainError(name, f"reference constant must be positive, got {val}")

    def temperature(self, alpha1, eos):
        a2 = 1.0 - alpha1
        num = alpha1 * self.rhoe1_rs + a2 * self.rhoe2_rs
        den = alpha1 * self.rho1_rs * eos.phase1.cv + a2 * self.rho2_rs * eos.phase2.cv
        return num / den

    def rhoE(self, alpha1, Ekin):
        """Per-cell reference total energy for specific kinetic content ``Ekin``."""
        a2 = 1.0 - alpha1
        rho0 = alpha1 * self.rho1_rs + a2 * self.rho2_rs
        return alpha1 * self.rhoe1_rs + a2 * self.rhoe2_rs + rho0 * Ekin


def linearize_mu_prim(alpha1, rho1, rho2, T, rhoE, Ekin, rs, eos):
    """Split of mu about the reference state, in terms of primitive inputs.

    ``Ekin`` is the specific kinetic content |v|^2/2 + y1 y2 |w|^2/2 of the
    current state; the reference state shares alpha, v and w with it.
    Returns ``(mu_hat_rs, dmu_rs, mu_bar)``.
    """
    alpha1 = np.asarray(alpha1, dtype=float)
    a2 = 1.0 - alpha1
    T_rs = rs.temperature(alpha1, eos)
    th_rs = eval_thermo(rs.rho1_rs + 0 * alpha1, rs.rho2_rs + 0 * alpha1, T_rs, eos, alpha1)
    dmu_rs = dmu_dE(th_rs, alpha1, a2, rs.rho1_rs, rs.rho2_rs, eos)
    # the reference state carries its own mass fractions, so Ekin differs slightly
    rhoE_rs = rs.rhoE(alpha1, Ekin)
    mu_rs = mu_difference(th_rs, eos)
    mu_hat_rs = mu_rs - dmu_rs * rhoE_rs
    th = eval_thermo(rho1, rho2, T, eos, alpha1)
    mu = mu_difference(th, eos)
    mu_bar = mu - mu_hat_rs - dmu_rs * rhoE
    return mu_hat_rs, dmu_rs, mu_bar


def linearize_mu(q, rs, eos):
    """Split of mu about the reference state for a :class:`State`."""
    from .core_state import to_primitives

    pr = to_primitives(q, eos)
    Ekin = pr.Ekin
    return linearize_mu_prim(q.alpha1, pr.rho1, pr.rho2, pr.T, q.rhoE, Ekin, rs, eos)
