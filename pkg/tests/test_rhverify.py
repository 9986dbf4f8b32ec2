import mpmath as mp
import pytest

from sgue.elliptic import Matrix2
from sgue.moments import ModelParams
from sgue.precision import InputError, PrecisionContext, Segment, integrate_adaptive
from sgue.rhverify import (
    check_identities,
    contour_radius,
    kernel_diagonal,
    kernel_grid,
    kernel_value,
    scaled_system,
    weight_scaled,
    y_matrix,
)

C = PrecisionContext(128)


@pytest.fixture(scope="module")
def sys4():
    p = ModelParams(4, 1, 0)
    return p, scaled_system(p, C)


def test_det_at_2i(sys4):
    p, s = sys4
    with mp.workprec(128):
        assert abs(y_matrix(mp.mpc(0, 2), None, p, s, C).det() - 1) < 1e-10


def test_det_grid_n8():
    p = ModelParams(8, "1.5", "0.4")
    s = scaled_system(p, C)
    with mp.workprec(128):
        pts = [mp.mpc(x, y) for x in ("-2", "-0.6", "0.4", "1.1", "2.5") for y in ("-1.5", "-0.3", "0.2", "0.9")]
        worst = max(abs(y_matrix(y, None, p, s, C).det() - 1) for y in pts)
    assert worst < 1e-10


def test_normalization_at_infinity():
    p = ModelParams(2, 1, 0)
    s = scaled_system(p, C)
    I = Matrix2.identity()
    with mp.workprec(128):

        def dev(R):
            y = mp.mpc(0, R)
            Y = y_matrix(y, None, p, s, C)
            return (Y @ Matrix2(y**-2, 0, 0, y**2)).max_diff(I)

        ratio = dev(100) / dev(1000)
    assert abs(ratio - 10) < 2


def test_jump_on_real_axis():
    p = ModelParams(3, 1, 0)
    s = scaled_system(p, C)
    with mp.workprec(128):
        x = mp.mpf("0.5")
        Yp, Ym = y_matrix(x, "+", p, s, C), y_matrix(x, "-", p, s, C)
        assert Yp.max_diff(Ym @ Matrix2(1, weight_scaled(x, p), 0, 1)) < 1e-8
        with pytest.raises(InputError):
            y_matrix(x, None, p, s, C)
        with pytest.raises(InputError):
            y_matrix(mp.mpf("0.001"), "+", p, s, C)


def test_near_axis_matches_boundary_value():
    p = ModelParams(3, 1, "0.2")
    s = scaled_system(p, C)
    with mp.workprec(128):
        x = mp.mpf("0.8")
        a = y_matrix(mp.mpc(x, "1e-25"), None, p, s, C)
        assert a.max_diff(y_matrix(x, "+", p, s, C)) < 1e-20


def test_kernel_symmetry_and_routes(sys4):
    p, s = sys4
    with mp.workprec(128):
        a = kernel_value("0.3", "0.7", p, s, C)
        b = kernel_value("0.7", "0.3", p, s, C)
        assert abs(a[0] - b[0]) < 1e-30
        assert a[2] < 1e-8 and b[2] < 1e-8
        sq, lim = kernel_diagonal("0.5", p, s, C)
        assert abs(sq - lim) < 1e-8
        with pytest.raises(InputError):
            kernel_value("0.5", "0.5", p, s, C)


def test_kernel_grid(sys4):
    p, s = sys4
    assert kernel_grid(["-1.2", "-0.4", "0.3", "0.9", "1.6"], p, s, C) < 1e-8


def test_reproducing_trace(sys4):
    p, s = sys4
    with mp.workprec(128):

        def kk(x):
            return weight_scaled(x, p) * mp.fsum(s.poly(j, x) ** 2 / s.norms[j] for j in range(p.N))

        xc = s.cutoff
        tot = integrate_adaptive(kk, [Segment(-mp.inf, -xc), Segment(xc, mp.inf)], C).value
    assert abs(tot - 4) < 1e-6


def test_contour_radius_small_weight():
    p = ModelParams(4, 1, "0.3")
    with mp.workprec(256):
        r = contour_radius(p, 128)
        assert weight_scaled(r, p) < mp.mpf(2) ** -128
        assert weight_scaled(-r, p) < mp.mpf(2) ** -128


def test_identities_parity():
    r = check_identities(ModelParams(4, 1, 0), C, points=16)
    assert abs(r.id_v1["contour"]) < 1e-20
    assert r.id_v2["rel_err"] < 1e-5
    assert r.jump_residual_max < 1e-8 and r.det_residual_max < 1e-10
    assert set(r.to_json()) == {"params", "jump_residual_max", "det_residual_max", "id_v1", "id_v2"}


def test_identities_n6():
    r = check_identities(ModelParams(6, "0.8", "0.2"), C, points=16)
    assert r.id_v1["rel_err"] < 1e-5
    assert r.id_v2["rel_err"] < 1e-5
