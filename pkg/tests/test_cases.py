import numpy as np
import pytest

from rsimex.cases import (
    CASES, bubble_case, build_case, cv_from_mach_ratio, kelvin_helmholtz_case, kh_eps_for_mach,
    kh_profile, riemann_case, vortex_case, well_prepared_case, with_physics,
)
from rsimex.core_state import IA, IWX, IWY, apply_bc, check_state, to_primitives
from rsimex.diagnostics import discrete_divergence, mach_extrema
from rsimex.eos import eval_thermo


def _pressures(spec):
    q = spec.initial.interior
    pr = to_primitives(q, spec.eos)
    th = eval_thermo(pr.rho1, pr.rho2, pr.T, spec.eos, q[IA])
    return th.p1, th.p2


def test_rp1_states():
    spec = riemann_case("rp1", 8)
    q = spec.initial.interior
    pr = to_primitives(q, spec.eos)
    np.testing.assert_array_equal(q[IWX], 0.0)
    p1, _ = _pressures(spec)
    assert p1[0, 0] == pytest.approx(0.4 * 2.0 * 1.2, rel=1e-14)
    assert pr.rho2[0, 0] == pytest.approx(1.2) and pr.rho2[0, -1] == pytest.approx(2.0)
    assert pr.T[0, 0] == pytest.approx(1.2) and pr.T[0, -1] == pytest.approx(1.0)
    assert spec.t_final == 0.2
    assert np.isinf(spec.eos.tau_alpha) and np.isinf(spec.eos.tau_w)


def test_rp2_states():
    spec = riemann_case("rp2", 8)
    pr = to_primitives(spec.initial.interior, spec.eos)
    assert pr.v1[0, 0, 0] == pytest.approx(-1.0) and pr.v2[0, 0, -1] == pytest.approx(1.0)
    assert spec.initial.interior[IA, 0, 0] == pytest.approx(0.7)
    np.testing.assert_allclose(spec.initial.interior[IWX], 0.0, atol=1e-15)


def test_bubble_c10_constants():
    spec = bubble_case(10.0, 32)
    assert spec.eos.phase2.cv == pytest.approx(28.0, rel=1e-14)
    rho2 = to_primitives(spec.initial.interior, spec.eos).rho2
    np.testing.assert_allclose(rho2, 2.0 / 70.0, rtol=1e-14)
    p1, p2 = _pressures(spec)
    np.testing.assert_allclose(p1, p2, rtol=1e-12)
    assert spec.eos.tau_alpha == 1e-16 and spec.eos.tau_w == 1e-8
    assert bubble_case(50.0, 16).eos.tau_w == 1e-12


def test_bubble_mach_numbers():
    m1, m2, _ = mach_extrema(bubble_case(10.0, 32).initial, bubble_case(10.0, 32).eos)
    assert m1 == pytest.approx(1.336, rel=1e-3)
    assert m2 == pytest.approx(0.1336, rel=1e-3)


def test_bubble_alpha_midpoint():
    spec = bubble_case(10.0, 32)
    assert spec.meta["alpha"](np.array(0.7), np.array(0.5)) == pytest.approx(0.5)


def test_mach_ratio_heat_capacity():
    g1, g2, cv1, C = 1.4, 2.0, 1.0, 10.0
    cv2 = cv_from_mach_ratio(g1, g2, cv1, C)
    # equal-temperature sound speeds differ by the factor C
    assert np.sqrt(g2 * (g2 - 1) * cv2) / np.sqrt(g1 * (g1 - 1) * cv1) == pytest.approx(C)


def test_kh_profile_continuity():
    for y in (0.25, 0.5, 0.75):
        lo, hi = kh_profile(np.array([y - 1e-12, y]), 0.5, -0.5, 0.5)
        assert lo == pytest.approx(hi, abs=1e-9)
    assert kh_profile(np.array([0.25]), 0.5, -0.5, 0.5)[0] == pytest.approx(0.0)


@pytest.mark.parametrize("eps,mach", [(1.0, 0.1), (kh_eps_for_mach(3e-2), 3e-2)])
def test_kh_setup(eps, mach):
    spec = kelvin_helmholtz_case(eps, 32)
    f = spec.initial
    assert spec.meta["M"] == pytest.approx(mach, rel=1e-12)
    assert spec.eos.tau_w == pytest.approx(mach ** 2)
    assert spec.eos.tau_alpha == 1e-16
    np.testing.assert_allclose(f.interior[IWX:IWY + 1], 0.0, atol=1e-15)
    p1, p2 = _pressures(spec)
    np.testing.assert_allclose(p1, p2, rtol=1e-12)
    _, dmax, _ = discrete_divergence(f)
    assert dmax <= 1e-12
    m1, _, _ = mach_extrema(f, spec.eos)
    # the vertical perturbation adds at most 2e-4 relative
    assert m1 == pytest.approx(mach, rel=1e-3)


@pytest.mark.parametrize("profile", ["constant", "smooth"])
def test_well_prepared(profile):
    spec = well_prepared_case(0.1, profile, n=32)
    f = spec.initial
    _, dmax, _ = discrete_divergence(f)
    assert dmax <= 1e-12
    p1, p2 = _pressures(spec)
    np.testing.assert_allclose(p1, p1.flat[0], rtol=1e-13)
    np.testing.assert_allclose(p2, p1.flat[0], rtol=1e-13)
    np.testing.assert_allclose(f.interior[IWX:IWY + 1], 0.0, atol=1e-15)
    m1, m2, _ = mach_extrema(f, spec.eos)
    assert m1 == pytest.approx(0.1, rel=1e-2) and m2 == pytest.approx(0.1, rel=1e-2)
    assert spec.eos.tau_w == pytest.approx(0.01)


@pytest.mark.parametrize("name", sorted(CASES))
@pytest.mark.parametrize("n", [32, 128])
def test_every_case_admissible(name, n):
    spec = build_case(name, n)
    check_state(spec.initial.data, spec.eos)


def test_every_riemann_case_admissible_fine():
    for cid in ("rp1", "rp2"):
        spec = riemann_case(cid, 1024)
        check_state(spec.initial.data, spec.eos)


def test_unknown_case():
    with pytest.raises(ValueError):
        build_case("nope", 8)


def test_vortex_dirichlet_ghosts_match_sampler():
    spec = vortex_case("compressible", 16)
    f = spec.initial.copy()
    apply_bc(f, spec.exact)
    np.testing.assert_array_equal(f.data, spec.initial.data)


def test_with_physics_keeps_primitives():
    spec = riemann_case("rp1", 16)
    new = with_physics(spec, mach_scaling=0.1, tau_w=1e-3)
    assert new.eos.phase1.cv == pytest.approx(100.0) and new.eos.tau_w == 1e-3
    a = to_primitives(spec.initial.interior, spec.eos)
    b = to_primitives(new.initial.interior, new.eos)
    np.testing.assert_allclose(b.T, a.T, rtol=1e-13)
    np.testing.assert_allclose(b.rho1, a.rho1, rtol=1e-13)
    assert with_physics(spec) is spec
