import numpy as np
import pytest
import scipy.optimize as so
import scipy.sparse as sp

from conftest import random_conserved
from rsimex.core_state import (
    IA, IE, IM1, IM2, IMX, IMY, IWX, IWY, NVAR, Field, Grid, apply_bc, conservation_sums,
    conserved_from_primitive_values,
)
from rsimex.eos import MixtureEOS, PhaseParams, ReferenceState, eval_thermo
from rsimex.errors import ConsistencyError
from rsimex.implicit_stage import (
    EllipticSystem, SolverOptions, StageCoefficients, _face_coeffs, _matrix,
    assemble_energy_system, implicit_stage, reference_state_from_field, relax_alpha,
    solve_energy, stage_coefficients, update_momentum, update_w,
)


def _field(grid, q):
    f = Field.from_interior(grid, q)
    apply_bc(f)
    return f


def _uniform(grid, eos, a=0.4, r1=1.3, r2=None, v=(0.3, -0.1), T=1.1):
    if r2 is None:
        # pressure equilibrium at equal temperature
        r2 = eos.phase1.kappa * r1 / eos.phase2.kappa
    shape = (grid.ny, grid.nx)
    one = np.ones(shape)
    vel = np.stack([v[0] * one, v[1] * one])
    return _field(grid, conserved_from_primitive_values(a * one, r1 * one, r2 * one, vel, vel,
                                                        T * one, eos))


def _smooth_field(grid, eos, w_amp=0.05, dims=1):
    X, Y = grid.centers()
    s = np.sin(2 * np.pi * X) + (np.cos(2 * np.pi * Y) if dims == 2 else 0.0)
    a = 0.5 + 0.1 * s
    r1 = 1.0 + 0.2 * s
    r2 = 1.5 - 0.1 * s
    v = np.stack([0.2 + 0.1 * s, 0.05 * s if dims == 2 else 0 * s])
    w = np.stack([w_amp * np.cos(2 * np.pi * X), w_amp * s if dims == 2 else 0 * s])
    m1, m2 = a * r1, (1 - a) * r2
    y1, y2 = m1 / (m1 + m2), m2 / (m1 + m2)
    T = 1.0 + 0.1 * s
    return _field(grid, conserved_from_primitive_values(a, r1, r2, v + y2 * w, v - y1 * w, T, eos))


def test_reference_state_averages(generic_eos):
    g = Grid(1, (8,), (0, 1))
    f = _uniform(g, generic_eos, r1=1.3, r2=0.9, T=1.1)
    rs = reference_state_from_field(f, generic_eos)
    assert rs.rho1_rs == pytest.approx(1.3) and rs.rho2_rs == pytest.approx(0.9)
    assert rs.rhoe1_rs == pytest.approx(1.3 * generic_eos.phase1.cv * 1.1)
    assert rs.rhoe2_rs == pytest.approx(0.9 * generic_eos.phase2.cv * 1.1)


def test_dt_zero_gives_identity(generic_eos):
    g = Grid(1, (16,), (0, 1))
    f = _smooth_field(g, generic_eos)
    rs = reference_state_from_field(f, generic_eos)
    sys_ = assemble_energy_system(f, f, 0.0, rs, generic_eos)
    assert abs(sys_.matrix - sp.identity(16)).max() == 0.0
    np.testing.assert_array_equal(sys_.rhs, f.interior[IE].ravel())
    x, info = solve_energy(sys_)
    np.testing.assert_allclose(x, sys_.rhs, rtol=1e-14)
    assert info.iterations <= 1


@pytest.mark.parametrize("dims", [1, 2])
def test_uniform_state_is_fixed_point_of_system(generic_eos, dims):
    g = Grid(dims, (12, 10) if dims == 2 else (12,), (0, 1, 0, 1))
    f = _uniform(g, generic_eos, r2=0.8)
    rs = ReferenceState(1.0, 0.9, 1.5, 1.2)
    sys_ = assemble_energy_system(f, f, 0.01, rs, generic_eos)
    x, _ = solve_energy(sys_)
    np.testing.assert_allclose(x, f.interior[IE].ravel(), rtol=1e-12)
    np.testing.assert_allclose(sys_.rhs, f.interior[IE].ravel(), rtol=1e-13)


def test_matrix_matches_hand_assembled_stencil():
    n = 6
    g = Grid(1, (n,), (0.0, 1.2))
    x = np.arange(n)
    g1 = 1.0 + 0.3 * x
    h1 = 0.4 + 0.01 * x ** 2
    g2 = 0.2 - 0.05 * x
    h2 = 0.1 + 0.02 * x
    dt = 0.03
    A = _matrix(_face_coeffs(g1[None], g), h1[None], _face_coeffs(g2[None], g), h2[None], dt, g)
    c = dt ** 2 / g.dx ** 2
    expect = np.eye(n)
    for i in range(n):
        for k in ((i - 1) % n, (i + 1) % n):
            G1 = 0.5 * (g1[i] + g1[k])
            G2 = 0.5 * (g2[i] + g2[k])
            expect[i, i] += c * (G1 * h1[i] + G2 * h2[i])
            expect[i, k] -= c * (G1 * h1[k] + G2 * h2[k])
    np.testing.assert_allclose(A.toarray(), expect, rtol=1e-14, atol=1e-16)


def test_matrix_neumann_closure_drops_boundary_faces():
    n = 5
    g = Grid(1, (n,), (0.0, 1.0), {"left": "transmissive", "right": "transmissive"})
    one = np.ones((1, n))
    A = _matrix(_face_coeffs(one, g), one, _face_coeffs(0 * one, g), one, 0.1, g).toarray()
    c = 0.1 ** 2 / g.dx ** 2
    assert A[0, n - 1] == 0.0 and A[n - 1, 0] == 0.0
    assert A[0, 0] == pytest.approx(1 + c) and A[2, 2] == pytest.approx(1 + 2 * c)
    np.testing.assert_allclose(A.sum(axis=0), np.ones(n), rtol=1e-14)


def test_solve_matches_dense(rng):
    n = 60
    M = rng.normal(size=(n, n)) * (rng.random((n, n)) < 0.1)
    np.fill_diagonal(M, 0.0)
    M += np.diag(np.abs(M).sum(axis=1) + 1.0)
    b = rng.normal(size=n)
    x, info = solve_energy(EllipticSystem(sp.csr_matrix(M), b, (1, n)))
    ref = np.linalg.solve(M, b)
    assert np.linalg.norm(x - ref) <= 1e-9 * np.linalg.norm(ref)
    assert info.iterations > 0
    xd, _ = solve_energy(EllipticSystem(sp.csr_matrix(M), b, (1, n), SolverOptions(method="direct")))
    np.testing.assert_allclose(xd, np.linalg.solve(M, b), rtol=1e-12, atol=1e-14)


def test_energy_total_exact_at_loose_tolerance(generic_eos):
    g = Grid(2, (16, 12), (0, 1, 0, 1))
    f = _smooth_field(g, generic_eos, dims=2)
    rs = reference_state_from_field(f, generic_eos)
    sys = assemble_energy_system(f, f, 5e-3, rs, generic_eos, SolverOptions(rtol=1e-6))
    x, info = solve_energy(sys)
    assert info.residual <= 1e-6 * np.linalg.norm(sys.rhs)
    assert abs(np.sum(x) - np.sum(sys.rhs)) <= 1e-14 * np.sum(np.abs(sys.rhs))


def _coeffs(shape, h2=0.0, mu=0.0, fr=1.0, h1=1.0):
    z = np.zeros(shape)
    return StageCoefficients(z + 1, z + h1, z, z + h2, z + mu, z, z + fr, z)


def test_update_w_friction_halves():
    g = Grid(1, (8,), (0, 1))
    q = np.zeros((NVAR,) + g.shape)
    q[IM1], q[IM2] = 1.0, 3.0
    q[IWX] = 0.4
    y1y2 = 0.75 * 0.25
    dt = 0.01
    eos = MixtureEOS(PhaseParams(1.4, 1.0), PhaseParams(2.0, 1.0), tau_w=dt * y1y2)
    c = stage_coefficients(q + _pad_admissible(q), q + _pad_admissible(q), dt,
                           ReferenceState(1, 1, 1, 1), eos)
    np.testing.assert_allclose(c.friction, 0.5, rtol=1e-14)
    wx, _ = update_w(q, np.zeros(g.shape), dt, _coeffs(g.shape, fr=c.friction), g)
    np.testing.assert_allclose(wx, 0.2, rtol=1e-14)
    wx, _ = update_w(q, np.zeros(g.shape), dt, _coeffs(g.shape), g)
    np.testing.assert_array_equal(wx, q[IWX])


def _pad_admissible(q):
    # alpha and energy so that the coefficient evaluation is well defined
    d = np.zeros_like(q)
    d[IA] = 0.5
    d[IE] = 10.0
    return d


def test_update_w_uses_centered_mu_gradient():
    g = Grid(1, (8,), (0, 1))
    X, _ = g.centers(with_ghosts=True)
    q = np.zeros((NVAR,) + g.shape)
    rhoE = 3.0 * X
    wx, _ = update_w(q, rhoE, 0.1, _coeffs(g.shape, h2=2.0, mu=1.0), g)
    np.testing.assert_allclose(wx[g.interior], -0.1 * 6.0, rtol=1e-12)


@pytest.mark.parametrize("tau", [1e-4, 1e-6, 1e-8])
def test_stiff_friction_limit(generic_eos, tau):
    g = Grid(1, (16,), (0, 1))
    f = _smooth_field(g, generic_eos, w_amp=0.1)
    rs = reference_state_from_field(f, generic_eos)
    dt = 1e-3
    out, _ = implicit_stage(f, f, dt, rs, generic_eos.with_taus(tau_w=tau))
    q = f.interior
    y1y2 = q[IM1] * q[IM2] / (q[IM1] + q[IM2]) ** 2
    bound = tau / (dt * y1y2) * (np.abs(q[IWX]) + 1.0)
    assert np.all(np.abs(out.interior[IWX]) <= bound)


def test_stiff_friction_linear_in_tau(generic_eos):
    g = Grid(1, (16,), (0, 1))
    f = _smooth_field(g, generic_eos, w_amp=0.1)
    rs = reference_state_from_field(f, generic_eos)
    norms = [np.abs(implicit_stage(f, f, 1e-3, rs, generic_eos.with_taus(tau_w=t))[0].interior[IWX]).max()
             for t in (1e-7, 1e-8)]
    assert norms[0] / norms[1] == pytest.approx(10.0, rel=1e-3)


def test_update_momentum_linear_pressure():
    g = Grid(1, (8,), (0, 1))
    X, _ = g.centers(with_ghosts=True)
    q = np.zeros((NVAR,) + g.shape)
    q[IM1], q[IM2] = 1.0, 1.0
    q[IMX] = 0.7
    rhoE = 2.0 + 5.0 * X
    c = _coeffs(g.shape, h1=0.4)
    mx, my = update_momentum(q, rhoE, (0 * X, 0 * X), 0.01, c, g)
    np.testing.assert_allclose(mx[g.interior], 0.7 - 0.01 * 0.4 * 5.0, rtol=1e-12)


@pytest.mark.parametrize("dims", [1, 2])
def test_equilibrium_uniform_state_fixed_point(generic_eos, dims):
    g = Grid(dims, (10, 8) if dims == 2 else (10,), (0, 1, 0, 1))
    f = _uniform(g, generic_eos.with_taus(1e-3, 1e-2))
    rs = reference_state_from_field(f, generic_eos)
    out, _ = implicit_stage(f, f, 0.05, rs, generic_eos.with_taus(1e-3, 1e-2))
    np.testing.assert_allclose(out.interior, f.interior, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("dims", [1, 2])
def test_implicit_stage_conserves_and_keeps_masses(generic_eos, dims):
    g = Grid(dims, (16, 12) if dims == 2 else (16,), (0, 1, 0, 1))
    f = _smooth_field(g, generic_eos, dims=dims)
    rs = reference_state_from_field(f, generic_eos)
    eos = generic_eos.with_taus(1e-2, np.inf)
    out, _ = implicit_stage(f, f, 2e-3, rs, eos)
    np.testing.assert_array_equal(out.interior[[IM1, IM2]], f.interior[[IM1, IM2]])
    s0, s1 = conservation_sums(f), conservation_sums(out)
    np.testing.assert_allclose(s1[2:], s0[2:], rtol=1e-9, atol=1e-10 * np.abs(s0).max())


def test_dominance_random_states(rng, generic_eos):
    g = Grid(2, (9, 7), (0, 1, 0, 1))
    for _ in range(20):
        q = random_conserved(rng, (7, 9), generic_eos, w_scale=0.2)
        f = _field(g, q)
        rs = reference_state_from_field(f, generic_eos)
        dt = rng.uniform(1e-4, 1e-1) * g.dx
        assemble_energy_system(f, f, dt, rs, generic_eos)


def test_dominance_failure_is_reported():
    g = Grid(1, (6,), (0, 1))
    one = np.ones((1, 6))
    from rsimex.implicit_stage import _assert_dominance
    G = _face_coeffs(one, g)
    with pytest.raises(ConsistencyError):
        _assert_dominance(G, -one, G, 0 * one, 1.0, g)


def _pressures(q, eos):
    a = q[IA]
    m1, m2 = q[IM1], q[IM2]
    T = (q[IE] - 0.5 * (q[IMX] ** 2 + q[IMY] ** 2) / (m1 + m2)) / (m1 * eos.phase1.cv + m2 * eos.phase2.cv)
    th = eval_thermo(m1 / a, m2 / (1 - a), T, eos, a)
    return th.p1, th.p2


def _no_w(q):
    q = q.copy()
    q[IWX:IWY + 1] = 0.0
    return q


def test_relax_alpha_equilibrium_unchanged(generic_eos):
    g = Grid(1, (6,), (0, 1))
    f = _uniform(g, generic_eos)
    a = relax_alpha(f.interior, 0.1, generic_eos.with_taus(tau_alpha=1e-3))
    np.testing.assert_allclose(a, f.interior[IA], rtol=1e-12)


def test_relax_alpha_instantaneous_matches_root_find(rng, generic_eos):
    eos = generic_eos.with_taus(tau_alpha=1e-16)
    q = _no_w(random_conserved(rng, (25,), eos))
    a = relax_alpha(q, 1e-3, eos)
    qn = q.copy()
    qn[IA] = a
    p1, p2 = _pressures(qn, eos)
    np.testing.assert_allclose(p1, p2, rtol=1e-10)
    for k in range(25):
        qk = q[:, k]

        def dp(al):
            qq = qk.copy()
            qq[IA] = al
            p1_, p2_ = _pressures(qq, eos)
            return p1_ - p2_

        root = so.brentq(dp, 1e-8, 1 - 1e-8, xtol=1e-15, rtol=1e-14)
        assert a[k] == pytest.approx(root, rel=1e-10)


def test_relax_alpha_slow_matches_explicit_euler(rng, generic_eos):
    tau = 10.0
    eos = generic_eos.with_taus(tau_alpha=tau)
    q = _no_w(random_conserved(rng, (15,), eos))
    dt = 1e-3
    a = relax_alpha(q, dt, eos)
    p1, p2 = _pressures(q, eos)
    rho = q[IM1] + q[IM2]
    euler = q[IA] + dt * (p1 - p2) / (rho * tau)
    change = np.abs(euler - q[IA])
    assert np.all(np.abs(a - euler) <= 10 * (dt / tau) * change + 1e-15)
    assert np.all(np.sign(a - q[IA]) == np.sign(p1 - p2))


def test_relax_alpha_keeps_masses_and_bounds(rng, generic_eos):
    eos = generic_eos.with_taus(tau_alpha=1e-6)
    q = random_conserved(rng, (40,), eos)
    before = q.copy()
    a = relax_alpha(q, 0.5, eos)
    np.testing.assert_array_equal(q, before)
    assert np.all((a > 1e-8) & (a < 1 - 1e-8))
