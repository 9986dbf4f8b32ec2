import csv
import io

import mpmath as mp
import pytest

from sgue.asymptotics import (
    asym_derivatives,
    convergence_csv,
    corollary_coeff,
    corollary_for_order,
    curve_for,
    predict,
    small_v2_report,
    theorem1_factor,
    theta_correction,
)
from sgue.elliptic import theta
from sgue.hankel import partition_exact, partition_series
from sgue.moments import ModelParams
from sgue.precision import InputError, PrecisionContext


def test_leading_factor_examples(ctx):
    with mp.workprec(512):
        assert abs(theorem1_factor(1, 1, 0, ctx) / mp.exp(mp.mpf(1) / 4) - 1) < 1e-100
        want = mp.exp(mp.mpf(1) / 4 - 9 / mp.mpf(2) ** (mp.mpf(10) / 3) * 15)
        assert abs(theorem1_factor(64, 1, 0, ctx) / want - 1) < 1e-100
        r = theorem1_factor(16, "0.7", "0.4", ctx) / theorem1_factor(16, "0.7", 0, ctx)
        z = mp.mpf("0.7")
        assert abs(r / mp.exp(mp.mpf("0.4") ** 2 * mp.cbrt(16) / (mp.mpf(2) ** (mp.mpf(5) / 3) * z ** (mp.mpf(4) / 3))) - 1) < 1e-100
        with pytest.raises(InputError):
            theorem1_factor(4, 0, 0, ctx)


def test_leading_factor_log_additive(ctx):
    with mp.workprec(512):
        N, z = 16, mp.mpf("0.9")
        terms = [z * z / 4, -9 / mp.mpf(2) ** (mp.mpf(10) / 3) * (mp.mpf(N) ** (mp.mpf(2) / 3) * z ** (mp.mpf(4) / 3) - 1)]
        prod = mp.exp(terms[0]) * mp.exp(terms[1])
        assert abs(theorem1_factor(N, z, 0, ctx) / prod - 1) < 1e-140


C256 = PrecisionContext(256)


@pytest.fixture(scope="module")
def cd32():
    return curve_for(32, "0.5", C256)


def test_theta_correction_properties(cd32):
    with mp.workprec(256):
        t0 = theta_correction(32, "0.5", 0, cd32, C256)
        assert abs(t0 - mp.re(theta(cd32.u_inf - 16 - mp.mpf(1) / 4, cd32.Pi, C256))) < 1e-60
        assert abs(t0 - 1) < 0.05
        # N -> N + 2 at fixed v1 = t/sqrt(N) shifts both arguments by -1
        v1 = mp.mpf("0.05")
        a = theta_correction(34, "0.5", v1 * mp.sqrt(34), cd32, C256)
        assert abs(a - theta_correction(32, "0.5", v1 * mp.sqrt(32), cd32, C256)) < 1e-60
        assert theta_correction(32, "0.5", "0.3", cd32, C256) > 0


def test_predict_regime_flags():
    c = PrecisionContext(256)
    r = predict(ModelParams(16, 1, 0), c)
    assert r.regime_ok
    assert r.exact > 0 and r.b_n > 0 and r.leading_factor > 0 and r.theta_factor > 0
    with mp.workprec(256):
        assert abs(r.ratio * r.prediction - r.exact) < 1e-60 * r.exact
    assert not predict(ModelParams(4, 3, 0), c).regime_ok
    assert r.to_json()["regime_ok"] is True


def test_predict_precision_stable():
    a = predict(ModelParams(8, 1, "0.5"), PrecisionContext(256))
    b = predict(ModelParams(8, 1, "0.5"), PrecisionContext(512))
    assert abs(a.ratio - b.ratio) < 1e-30


def test_corollary_coeff(ctx):
    with mp.workprec(512):
        bn = mp.mpf("0.36")
        c0 = corollary_coeff(16, 1, 0, ctx, bn=bn)
        assert abs(c0 - bn * theorem1_factor(16, 1, 0, ctx)) < 1e-100 * c0
        r = corollary_coeff(16, "0.8", 1, ctx, bn=bn) / corollary_coeff(16, "0.8", 0, ctx, bn=bn)
        want = mp.cbrt(16) / (mp.mpf(2) ** (mp.mpf(5) / 3) * mp.mpf("0.8") ** (mp.mpf(4) / 3))
        assert abs(r / want - 1) < 1e-100
        assert corollary_for_order(16, 1, 2, ctx, bn=bn) == corollary_coeff(16, 1, 1, ctx, bn=bn)
        with pytest.raises(InputError):
            corollary_for_order(16, 1, 3, ctx, bn=bn)
        with pytest.raises(InputError):
            corollary_coeff(16, 0, 1, ctx, bn=bn)


def test_corollary_ratio_against_exact_taylor(ctx):
    errs = []
    for N in (16, 32):
        s = partition_series(N, 1, 2, ctx)
        with mp.workprec(512):
            errs.append(abs(s[2] / s[0] / (mp.cbrt(N) / mp.mpf(2) ** (mp.mpf(5) / 3)) - 1))
    assert errs[0] < 0.25 and errs[1] < errs[0]


@pytest.fixture(scope="module")
def curve_v2_one():
    return {N: curve_for(N, N, C256) for N in (8, 16)}


def test_asym_derivative_v1_parity(curve_v2_one):
    dv1, _ = asym_derivatives(8, 0, curve_v2_one[8], C256)
    assert abs(dv1) < 1e-40


def test_asym_derivative_v2_against_exact(curve_v2_one):
    errs = []
    with mp.workprec(256):
        for N in (8, 16):
            h = mp.mpf("1e-4")
            lG = lambda v2: partition_exact(ModelParams(N, N * mp.sqrt(v2), 0), C256).log_G_N
            fd = (lG(1 + h) - lG(1 - h)) / (2 * h) / N
            _, dv2 = asym_derivatives(N, 0, curve_v2_one[N], C256)
            errs.append(abs(dv2 / fd - 1))
    assert errs[0] < 0.15 and errs[1] < errs[0]


def test_asym_derivative_v1_against_exact(curve_v2_one):
    with mp.workprec(256):
        N, v1 = 16, mp.mpf("0.3")
        h = mp.mpf("1e-20")
        lG = lambda v: partition_exact(ModelParams(N, N, v * 4), C256).log_G_N
        fd = (lG(v1 + h) - lG(v1 - h)) / (2 * h)
        dv1, _ = asym_derivatives(N, v1, curve_v2_one[N], C256)
        assert abs(dv1 / fd - 1) < 1e-3


def test_small_v2_report():
    rep = small_v2_report(["1e-3", "1e-6", "1e-9"], C256)
    assert all(rep["monotone"][c] for c in ("lambda", "K0", "Pi", "Pi_fit"))
    # u(inf) = 1/4 holds exactly (the map s -> l2 l3 / s sends (l3, inf) onto
    # (0, l2)), so that column sits at rounding level for every v2
    assert all(r["u_inf"] < 1e-35 for r in rep["rows"])
    row = rep["rows"][1]
    assert row["K0"] < 1e-2 and row["u_inf"] < 1e-2
    with pytest.raises(InputError):
        small_v2_report(["0.5"], C256)


def test_convergence_csv_sorted():
    c = PrecisionContext(256)
    reps = [predict(ModelParams(N, 1, "0.5"), c) for N in (8, 4)]
    rows = list(csv.reader(io.StringIO(convergence_csv(reps))))
    assert rows[0] == ["N", "z", "t", "exact", "prediction", "ratio", "abs_ratio_minus_1"]
    assert [r[0] for r in rows[1:]] == ["4", "8"]
    with mp.workprec(256):
        assert abs(mp.mpf(rows[2][5]) - reps[0].ratio) < 1e-30
