import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgue.elliptic import (
    Matrix2,
    abel_map,
    c_constant,
    curve_data,
    f_prime_formula,
    f_value,
    gamma_value,
    outer_parametrix,
    q_value,
    theta,
    theta_with_bound,
    verify_outer,
)
from sgue.equilibrium import solve_branch_points
from sgue.precision import InputError, PrecisionContext, Segment, integrate_adaptive

C128 = PrecisionContext(192)


@pytest.fixture(scope="module")
def cd():
    return curve_data(solve_branch_points(1, C128), C128)


def test_theta_examples():
    with mp.workprec(192):
        assert abs(theta(0, 1j, C128) - mp.nsum(lambda m: mp.exp(-mp.pi * m * m), [-mp.inf, mp.inf])) < 1e-35
        assert mp.nstr(mp.re(theta(0, 1j, C128)), 11) == "1.0864348112"
        s = mp.mpc("0.3", "0.1")
        assert abs(theta(s, 1j, C128) - theta(-s, 1j, C128)) < 1e-35
        assert abs(theta(mp.mpf("1.2"), 1j, C128) - theta(mp.mpf("0.2"), 1j, C128)) < 1e-35


@settings(max_examples=25, deadline=None)
@given(
    st.floats(-1, 1),
    st.floats(-0.5, 0.5),
    st.floats(0.3, 3),
)
def test_theta_quasi_periodicity(a, b, p):
    with mp.workprec(192):
        Pi = mp.mpc(0, p)
        s = mp.mpc(a, b)
        lhs = theta(s + Pi, Pi, C128)
        rhs = mp.expj(-mp.pi * Pi - 2 * mp.pi * s) * theta(s, Pi, C128)
        assert abs(lhs - rhs) <= 1e-25 * max(1, abs(rhs))


def test_theta_bound_and_rejects():
    with mp.workprec(192):
        val, tail = theta_with_bound(mp.mpc(0.1, 0.2), 1j, C128)
        assert tail < C128.rel_tol * abs(val)
        with pytest.raises(InputError):
            theta(0, mp.mpc(0.5, 0), C128)


def test_curve_invariants(cd):
    with mp.workprec(192):
        eq = cd.eq
        assert mp.im(cd.Pi) > 0 and mp.re(cd.Pi) == 0
        assert abs(cd.xi + 2j * mp.pi / (cd.K0 * eq.lambda2 * eq.lambda3)) < 1e-35
        assert cd.d == mp.mpf(-1) / 4
        # the curve is even, which pins u(inf) at a quarter period
        assert abs(cd.u_inf - mp.mpf(1) / 4) < 1e-25
        assert cd.to_json()["d"] == "-0.25"


def test_a_period_along_complex_path(cd):
    # 2 int_{l2}^{-l2} omega = 1, here on a path through the upper half-plane
    with mp.workprec(192):
        l2 = cd.eq.lambda2
        top = mp.mpc(0, l2)
        path = [Segment(mp.mpc(l2, 0), top, (True, False)), Segment(top, mp.mpc(-l2, 0), (False, True))]
        I = integrate_adaptive(lambda s: 1 / q_value(s, cd.eq), path, C128).value
        assert abs(2 * I / cd.K0 - 1) < 1e-25


def test_abel_map_boundary_values(cd):
    with mp.workprec(192):
        eq = cd.eq
        l2, l3 = eq.lambda2, eq.lambda3
        # the quarter shift d = -1/4 comes from u_+(0) = 1/4 + Pi/2
        assert abs(abel_map(0, cd, C128, "+") - (mp.mpf(1) / 4 + cd.Pi / 2)) < 1e-25
        x2, x1, xg = (l2 + l3) / 2, -(l2 + l3) / 2, l2 / 3
        up, um = abel_map(x2, cd, C128, "+"), abel_map(x2, cd, C128, "-")
        assert abs(up + um) < 1e-25
        up, um = abel_map(x1, cd, C128, "+"), abel_map(x1, cd, C128, "-")
        assert abs(up + um - 1) < 1e-25
        up, um = abel_map(xg, cd, C128, "+"), abel_map(xg, cd, C128, "-")
        assert abs(up - um - cd.Pi) < 1e-25
        # real-axis assembly agrees with the complex path just above the axis
        for x in (x2, x1, xg, -3 * l3):
            near = abel_map(mp.mpc(x, "1e-25"), cd, C128)
            assert abs(near - abel_map(x, cd, C128, "+")) < 1e-20
        with pytest.raises(InputError):
            abel_map(xg, cd, C128)


def test_small_v2_curve_laws():
    with mp.workprec(192):
        devs = []
        for v2 in ("1e-4", "1e-6"):
            eq = solve_branch_points(mp.mpf(v2), C128)
            c = curve_data(eq, C128)
            if v2 == "1e-6":
                assert abs(c.K0 * eq.lambda3 / (2 * mp.pi) - 1) < 1e-2
                assert abs(c.u_inf - 0.25) < 1e-2
            # leading log law for the b-period, with constant log 4 lambda3
            law = mp.log(4 * eq.lambda3 / eq.lambda2) / mp.pi
            assert abs(mp.im(c.Pi) / law - 1) < 1e-4
            wide = mp.im((mp.log(eq.lambda2) - mp.log(16 * eq.lambda3**2)) / (mp.pi * 1j))
            devs.append(abs(mp.im(c.Pi) / wide - 1))
        assert devs[1] < devs[0]


def test_gamma_branches(cd):
    with mp.workprec(192):
        eq = cd.eq
        l2, l3 = eq.lambda2, eq.lambda3
        y = mp.mpc("0.7", "0.3")
        g = gamma_value(y, eq)
        assert abs(g**4 - (y - l2) * (y + l3) / ((y + l2) * (y - l3))) < 1e-25
        for x in ((l2 + l3) / 2, -(l2 + l3) / 2):
            assert abs(gamma_value(x, eq, "+") + 1j * gamma_value(x, eq, "-")) < 1e-25
        for x in (l2 / 2, -2 * l3):
            assert abs(gamma_value(x, eq, "+") - gamma_value(x, eq, "-")) < 1e-25
            assert abs(gamma_value(mp.mpc(x, "1e-30"), eq) - gamma_value(x, eq, "+")) < 1e-25
        assert abs(gamma_value(mp.mpc(0, 1e8), eq) - 1) < 1e-7


def test_f_decay_and_jumps(cd):
    with mp.workprec(192):
        eq = cd.eq
        v1 = mp.mpf("0.3")
        r = abs(f_value(mp.mpc(0, 100), v1, cd, C128)) / abs(f_value(mp.mpc(0, 1000), v1, cd, C128))
        assert abs(r - 10) < 0.1
        x = (eq.lambda2 + eq.lambda3) / 2
        fp, fm = f_value(x, v1, cd, C128, "+"), f_value(x, v1, cd, C128, "-")
        assert abs(fp + fm - v1 / x) < 1e-8
        assert abs(f_value(mp.mpc(x, "1e-20"), v1, cd, C128) - fp) < 1e-15
        xg = eq.lambda2 / 2
        fp, fm = f_value(xg, v1, cd, C128, "+"), f_value(xg, v1, cd, C128, "-")
        assert abs(fp - fm - cd.xi * v1) < 1e-8
        assert f_value(mp.mpc(1, 1), 0, cd, C128) == 0


def test_f_prime_closed_form(cd):
    # F' involves the constant C; a numerical derivative of F checks both
    with mp.workprec(192):
        v1 = mp.mpf("0.2")
        y = mp.mpc("0.7", "0.4")
        h = mp.mpf("1e-12")
        num = (f_value(y + h, v1, cd, C128) - f_value(y - h, v1, cd, C128)) / (2 * h)
        assert abs(num - f_prime_formula(y, v1, cd, C128)) < 1e-15
        assert c_constant(0, cd, C128) == 0
        assert abs(c_constant(2 * v1, cd, C128) - 2 * c_constant(v1, cd, C128)) < 1e-25


def test_outer_examples(cd):
    with mp.workprec(192):
        I = Matrix2.identity()
        assert outer_parametrix(mp.mpc(0, 1000), 8, 0, cd, C128).max_diff(I) < 1e-2
        assert outer_parametrix(mp.mpc(0, 10000), 8, 0, cd, C128).max_diff(I) < 1e-3
        assert abs(outer_parametrix(mp.mpc(1, 1), 8, 0, cd, C128).det() - 1) < 1e-10
        x = (cd.eq.lambda2 + cd.eq.lambda3) / 2
        sp = outer_parametrix(x, 8, 0, cd, C128, "+")
        sm = outer_parametrix(x, 8, 0, cd, C128, "-")
        assert sp.max_diff(sm @ Matrix2(0, 1, -1, 0)) < 1e-8
        with pytest.raises(InputError):
            outer_parametrix(cd.eq.lambda2 * (1 + mp.mpf("1e-8")), 8, 0, cd, C128, "+")


def test_outer_real_on_real_axis(cd):
    # u real beyond lambda3 and real shifts: every entry of S_inf is real there
    with mp.workprec(192):
        s = outer_parametrix(3 * cd.eq.lambda3, 8, mp.mpf("0.2"), cd, C128)
        for e in (s.a, s.d):
            assert abs(mp.im(e)) <= 1e-10 * abs(e)


@pytest.mark.parametrize("N,v1", [(8, "0"), (9, "0"), (8, "0.2")])
def test_verify_outer(cd, N, v1):
    with mp.workprec(192):
        r = verify_outer(N, mp.mpf(v1), cd, C128, n=4)
        assert r["sigma_jump"] < 1e-8 and r["gap_jump"] < 1e-8
        assert r["det_residual"] < 1e-10
        assert abs(r["decay_ratio"] - 10) < 2


@settings(max_examples=8, deadline=None)
@given(st.floats(min_value=1e-3, max_value=50))
def test_u_inf_is_quarter_for_all_v2(v2):
    # s -> l2 l3 / s maps (l3, inf) onto (0, l2), so u(inf) = K0/4 / K0
    c = PrecisionContext(128)
    cd = curve_data(solve_branch_points(mp.mpf(v2), c), c)
    assert abs(cd.u_inf - mp.mpf(1) / 4) < 1e-18
