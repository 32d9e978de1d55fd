import math

import numpy as np
import pytest

from rsimex import exact_vortex as ev
from rsimex.core_state import IWX, Grid, check_state, to_primitives
from rsimex.diagnostics import coarsen, l1_error
from rsimex.eos import PhaseParams
from rsimex.errors import DomainError, ExtrapolationError


@pytest.fixture(scope="module")
def comp():
    return ev.build_profile(ev.compressible_params())


def test_alpha_closed_form():
    p = ev.compressible_params()
    assert p.alpha(0.0) == pytest.approx(p.c_alpha + p.alpha_c * math.exp(p.nu_alpha), rel=1e-15)
    r = np.linspace(0, 1.6, 50)
    assert np.all((p.alpha(r) > 0.0) & (p.alpha(r) < 1.0))


def test_rhs_finite_at_origin():
    d = ev.vortex_rhs(0.0, 1.0, 2.0, ev.compressible_params())
    assert all(np.isfinite(d))
    # v_theta ~ r and the alpha slope vanish at r = 0
    assert d == pytest.approx((0.0, 0.0), abs=1e-15)


def test_rhs_identical_phases_singular():
    ph = PhaseParams(1.4, 1.0)
    with pytest.raises(DomainError):
        ev.vortex_rhs(0.5, 1.0, 2.0, ev.VortexParams(ph, ph))


def test_rhs_matches_fine_table_slope():
    p = ev.compressible_params()
    prof = ev.build_profile(p, r_max=1.0, dr=1e-5, verify=False)
    i = int(round(0.5 / 1e-5))
    h = prof.r[1] - prof.r[0]
    fd_rho = (prof.rho1[i + 1] - prof.rho1[i - 1]) / (2 * h)
    fd_T = (prof.T[i + 1] - prof.T[i - 1]) / (2 * h)
    d = ev.vortex_rhs(0.5, prof.rho1[i], prof.T[i], p)
    assert d[0] == pytest.approx(fd_rho, rel=1e-7)
    assert d[1] == pytest.approx(fd_T, rel=1e-7)


def test_rk4_fourth_order():
    p = ev.compressible_params()
    T = [ev.build_profile(p, r_max=1.0, dr=dr, verify=False).T[-1] for dr in (0.04, 0.02, 0.01)]
    order = math.log2(abs(T[0] - T[1]) / abs(T[1] - T[2]))
    assert order == pytest.approx(4.0, abs=0.3)


def test_radial_momentum_balance(comp):
    # dp/dr = (m1 v1^2 + m2 v2^2) / r, checked by differencing the table
    p = comp.params
    a = comp.alpha1
    pm = a * p.phase1.kappa * comp.rho1 * comp.T + (1 - a) * p.phase2.kappa * comp.rho2 * comp.T
    v1, v2 = comp.v_theta
    r = comp.r
    h = r[1] - r[0]
    i = np.arange(100, len(r) - 1, 500)
    dp = (pm[i + 1] - pm[i - 1]) / (2 * h)
    cent = (a[i] * comp.rho1[i] * v1[i] ** 2 + (1 - a[i]) * comp.rho2[i] * v2[i] ** 2) / r[i]
    np.testing.assert_allclose(dp, cent, rtol=2e-5, atol=1e-9 * np.abs(cent).max())


def test_profile_covers_domain_and_refines(comp):
    assert comp.r[-1] >= math.sqrt(2.0)
    assert np.all(np.diff(comp.r) > 0)
    with pytest.raises(ExtrapolationError):
        comp.interpolate(np.array([comp.r[-1] + 0.1]))


def test_sample_at_origin_is_at_rest(comp):
    a, r1, r2, v1, v2, T = ev.sample_primitives(comp, np.array([0.0]), np.array([0.0]))
    assert np.all(v1 == 0.0) and np.all(v2 == 0.0)
    assert r1[0] == pytest.approx(1.0) and T[0] == pytest.approx(2.0)


def test_sampled_field_admissible_and_tangential():
    # the ghost corners of a 16x16 grid lie beyond r = 1.6
    comp = ev.build_profile(ev.compressible_params(), r_max=1.7)
    g = Grid(2, (16, 16), (-1, 1, -1, 1), {s: "dirichlet" for s in ("left", "right", "bottom", "top")})
    f = ev.sample_field(comp, g)
    check_state(f.data, comp.params.eos())
    X, Y = g.centers(with_ghosts=True)
    pr = to_primitives(f.data, comp.params.eos(), check=False)
    np.testing.assert_allclose(pr.v1[0] * X + pr.v1[1] * Y, 0.0, atol=1e-14)
    np.testing.assert_allclose(f.data[IWX], pr.v1[0] - pr.v2[0], atol=1e-14)


def test_sampling_refinement_second_order():
    bc = {s: "dirichlet" for s in ("left", "right", "bottom", "top")}
    dists = []
    comp = ev.build_profile(ev.compressible_params(), r_max=1.7)
    eos = comp.params.eos()
    for n in (32, 64, 128):
        fc = ev.sample_field(comp, Grid(2, (n, n), (-1, 1, -1, 1), bc))
        ff = ev.sample_field(comp, Grid(2, (2 * n, 2 * n), (-1, 1, -1, 1), bc))
        dists.append(l1_error(fc, coarsen(ff, 2), eos)["rho1"])
    assert math.log2(dists[-2] / dists[-1]) >= 1.8


def test_profile_csv(tmp_path, comp):
    path = tmp_path / "sub" / "profile.csv"
    small = ev.build_profile(ev.compressible_params(), r_max=0.1, dr=1e-2, verify=False)
    small.to_csv(str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "r,rho1,rho2,T,v_theta1,v_theta2,alpha1"
    assert len(lines) == 1 + len(small.r)
    assert float(lines[-1].split(",")[0]) == pytest.approx(0.1)
