import numpy as np
import pytest

from util import random_density
from vdilution.channels import LossNoise
from vdilution.distill import extract_error_component
from vdilution.pipeline import DilutionPlan, run
from vdilution.theory import (
    LossAverages,
    SpectrumModel,
    TwoDesignContext,
    avg_purity_exact,
    cluster_spectrum,
    error_spectrum,
    estimate_loss_averages,
    estimate_loss_averages_all_M,
    estimate_pauli_averages,
    hellinger,
    hellinger_loss_product,
    hellinger_loss_product_exact,
    loss_product_spectrum,
    mse_loss_closed_M1,
    mse_loss_general,
    mse_pauli_closed_M1,
    mse_pauli_Mge2,
    mse_pauli_Mge2_stderr,
    pauli_a1_closed,
    pauli_average_samples,
    special_case_gradient,
    special_case_mse,
    special_case_mse_of_a,
    steepest_descent,
    swap_operator,
    twodesign_avg1,
    twodesign_avg2,
    twodesign_avg3,
)
from vdilution.unitaries import RngStream, haar_batch, product_haar

DEP = (0.02 / 3,) * 3


def test_swap_operator_properties():
    for d in (2, 3, 4):
        s = swap_operator(d)
        assert np.array_equal(s @ s, np.eye(d * d))
        assert np.trace(s) == d
    rng = np.random.default_rng(0)
    a, b = rng.standard_normal(3), rng.standard_normal(3)
    assert np.allclose(swap_operator(3) @ np.kron(a, b), np.kron(b, a))
    assert np.array_equal(TwoDesignContext(3).swap, swap_operator(3))


def test_avg1_examples():
    Z = np.diag([1.0, -1.0])
    assert np.allclose(twodesign_avg1(Z, 2), 0)
    assert np.allclose(twodesign_avg1(np.eye(5), 5), np.eye(5))
    with pytest.raises(ValueError):
        twodesign_avg1(np.eye(3), 2)


def test_avg2_fixes_identity_and_swap():
    ctx = TwoDesignContext(3)
    assert np.allclose(twodesign_avg2(np.eye(9), ctx), np.eye(9))
    assert np.allclose(twodesign_avg2(ctx.swap, ctx), ctx.swap)
    with pytest.raises(ValueError):
        twodesign_avg2(np.eye(3), ctx)


def test_avg3_projector_against_haar_mc():
    d, samples = 4, 100_000
    P = np.zeros((d, d))
    P[0, 0] = 1.0
    v = haar_batch(d, samples, RngStream(1))[:, :, 0]
    # V P V^dagger P V P V^dagger = |v_0|^2 |v><v|
    vals = (np.abs(v[:, 0]) ** 2)[:, None, None] * np.einsum("sa,sb->sab", v, v.conj())
    mean = vals.mean(axis=0)
    se = np.sqrt(vals.real.var(axis=0, ddof=1) / samples) + np.sqrt(vals.imag.var(axis=0, ddof=1) / samples)
    exact = twodesign_avg3(P, P, P, TwoDesignContext(d))
    assert np.all(np.abs(mean - exact) <= 3 * se + 1e-12)
    # E|v_0|^4 = 2/(d(d+1))
    assert exact[0, 0].real == pytest.approx(2 / (d * (d + 1)))


def test_loss_closed_form_examples():
    assert mse_loss_closed_M1(2, 0.02, 1) == pytest.approx(2.24e-3)
    assert mse_loss_closed_M1(2, 0.02, 2) == pytest.approx(5.6e-4)
    assert mse_loss_closed_M1(3, 0.0, 1) == 0.0
    assert avg_purity_exact(2) == pytest.approx(0.8)


def test_loss_general_examples():
    exact = LossAverages(2, 1, 4 / 5, 4.0)
    assert abs(mse_loss_general(2, 0.02, 1, 1, exact) - mse_loss_closed_M1(2, 0.02, 1)) <= 1e-14
    for n in (2, 3, 4):
        avgs = LossAverages(n, 1, avg_purity_exact(n), float(n * n))
        assert abs(mse_loss_general(n, 0.03, 2, 1, avgs) - mse_loss_closed_M1(n, 0.03, 2)) <= 1e-14
    table = LossAverages(4, 3, 0.1356, 2.3935)
    assert mse_loss_general(4, 0.1, 1, 3, table) == pytest.approx(0.1**6 * (4 * 0.1356 + 2.3935))
    ratio = mse_loss_general(4, 0.1, 1, 3, table) / mse_loss_general(4, 0.1, 2, 3, table)
    assert ratio == pytest.approx(2**6)
    with pytest.raises(ValueError):
        mse_loss_general(3, 0.1, 1, 3, table)


def test_estimate_loss_averages_examples():
    a = estimate_loss_averages(2, 1, 10_000, RngStream(2))
    assert abs(a.avg_ptr_power - 0.8) <= 3 * a.stderr_ptr_power
    assert 0 < a.avg_ptr_power <= 6 and 0 < a.avg_sum_sq <= 6
    b = estimate_loss_averages(3, 2, 10_000, RngStream(3))
    assert b.avg_ptr_power == pytest.approx(0.3934, abs=0.01)
    c = estimate_loss_averages(2, 2, 10_000, RngStream(4))
    assert c.avg_sum_sq == pytest.approx(2.6278, abs=0.03)
    with pytest.raises(ValueError):
        estimate_loss_averages(1, 1, 10, 0)


def test_loss_averages_all_M_matches_single_M():
    many = estimate_loss_averages_all_M(3, (1, 2), 500, RngStream(5))
    one = estimate_loss_averages(3, 2, 500, RngStream(5))
    assert many[2].avg_ptr_power == pytest.approx(one.avg_ptr_power, rel=1e-12)
    assert many[2].avg_sum_sq == pytest.approx(one.avg_sum_sq, rel=1e-12)


def test_pauli_closed_form_examples():
    assert mse_pauli_closed_M1(2, DEP, 1) == pytest.approx(1.4933e-3, rel=1e-4)
    assert mse_pauli_closed_M1(2, (0, 0, 0), 1) == 0.0
    n, e = 10, np.array(DEP)
    limit = (n * e.sum()) ** 2 + n * np.sum(e**2)
    assert mse_pauli_closed_M1(n, e, 1) == pytest.approx(limit, rel=0.01)


def test_pauli_a1_closed_and_mc():
    assert pauli_a1_closed(2, 2) == pytest.approx(0.48)
    avgs = estimate_pauli_averages(2, 2, 2000, RngStream(6))
    assert abs(avgs.rhoTT_same_l_same_j - 0.48) <= 3 * avgs.stderr["rhoTT_same_l_same_j"]


def test_pauli_average_examples():
    rhoT = pauli_average_samples(2, 3, 2000, RngStream(7))[0][:, 6]
    assert abs(rhoT.mean() - 0.6) <= 3 * rhoT.std(ddof=1) / np.sqrt(rhoT.size)
    a = estimate_pauli_averages(2, 1, 2000, RngStream(8))
    assert a.rhoTT_diff_l_same_j == pytest.approx(0.0, abs=1e-12)
    assert a.imag_max > 1e-3  # the cross terms are imaginary rather than zero
    assert abs(a.rhoT_rhoT_same_same - 0.0867) <= 3 * a.stderr["rhoT_rhoT_same_same"]
    a = estimate_pauli_averages(3, 2, 2000, RngStream(9))
    assert a.rhoTT_diff_l_same_j == pytest.approx(0.0246, abs=0.003)
    a = estimate_pauli_averages(2, 4, 2000, RngStream(10))
    assert a.rhoT_rhoT_diff_j == pytest.approx(0.6821, abs=0.02)
    for f in ("rhoTT_same_l_same_j", "rhoTT_diff_j", "rhoT_rhoT_diff_j"):
        assert getattr(a, f) >= -3 * a.stderr[f]


def test_pauli_Mge2_index_case_weights():
    n, L = 3, 2
    avgs = estimate_pauli_averages(n, L, 200, RngStream(11))
    a = np.array([avgs.rhoTT_same_l_same_j, avgs.rhoTT_diff_l_same_j, avgs.rhoTT_diff_j])
    b = np.array([avgs.rhoT_rhoT_same_same, avgs.rhoT_rhoT_diff_l_same_j, avgs.rhoT_rhoT_diff_j])
    w = np.array([3 * n, 6 * n, 9 * n * (n - 1)])
    expected = 2 * (0.02 / (3 * L)) ** 2 * (w @ (a - b))
    assert mse_pauli_Mge2(n, DEP, L, avgs) == pytest.approx(expected, rel=1e-12)
    assert mse_pauli_Mge2_stderr(n, DEP, L, avgs) > 0
    exact = mse_pauli_Mge2(n, DEP, L, avgs, exact_a1=True)
    assert exact - mse_pauli_Mge2(n, DEP, L, avgs) == pytest.approx(
        2 * (0.02 / (3 * L)) ** 2 * 3 * n * (pauli_a1_closed(n, L) - a[0]), rel=1e-9)
    with pytest.raises(ValueError):
        mse_pauli_Mge2(2, DEP, L, avgs)


def test_hellinger_examples():
    assert hellinger(np.full(4, 0.25), 4) == pytest.approx(0.0, abs=1e-15)
    assert hellinger([1.0], 2) == pytest.approx(np.sqrt(1 - 1 / np.sqrt(2)))
    assert hellinger([1.0], 2) == pytest.approx(0.5412, abs=1e-4)
    rng = np.random.default_rng(12)
    for _ in range(20):
        h = hellinger(rng.dirichlet(np.ones(6)), 9)
        assert 0 <= h <= 1
    with pytest.raises(ValueError):
        hellinger([0.5, 0.6], 2)
    with pytest.raises(ValueError):
        hellinger([0.25] * 4, 3)


def test_hellinger_product_closed_forms():
    assert hellinger_loss_product(1, 0.5) == pytest.approx(np.sqrt(7 / 6 - 1 / np.sqrt(3)))
    assert hellinger_loss_product(1, 0.5) == pytest.approx(0.7677, abs=1e-4)
    # the printed form exceeds the squared distance of the actual spectrum by 1/(2 * 3**n)
    for n in (1, 2, 3):
        for x in (0.01, 0.2, 0.5):
            gap = hellinger_loss_product(n, x) ** 2 - hellinger_loss_product_exact(n, x) ** 2
            assert gap == pytest.approx(1 / (2 * 3**n), rel=1e-10)
    with pytest.raises(ValueError):
        hellinger_loss_product(2, 0.0)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_hellinger_exact_form_matches_pipeline_spectrum(n):
    for L in (1, 2):
        eps = 0.1 * L
        W = [product_haar(n, RngStream(13, (n, L, k))).data for k in range(L)]
        err = extract_error_component(run(DilutionPlan(W, LossNoise(eps))), "loss")
        h = hellinger(error_spectrum(err), 3**n)
        assert abs(h - hellinger_loss_product_exact(n, eps / L)) <= 1e-10


def test_loss_product_spectrum_sums_to_one():
    for n in (1, 2, 3):
        pairs = loss_product_spectrum(n, 0.2)
        assert sum(v * m for v, m in pairs) == pytest.approx(1.0)
        assert sum(m for _, m in pairs) == 3**n


def test_hellinger_increases_with_L():
    eps = 0.1
    for n in (2, 3, 4):
        for form in (hellinger_loss_product, hellinger_loss_product_exact):
            h = [form(n, eps / L) for L in (1, 2, 4, 8)]
            assert all(b > a for a, b in zip(h, h[1:]))
    # a single qubit always loses into the one vacuum state
    assert hellinger_loss_product_exact(1, 0.1) == pytest.approx(hellinger_loss_product_exact(1, 0.01))


def test_error_spectrum_and_clusters():
    lam = error_spectrum(np.diag([0.5, 1e-14, 0.5, -1e-15]))
    assert np.array_equal(lam, [0.5, 0.5, 0.0, 0.0])
    assert cluster_spectrum([0.3, 0.1, 0.3 + 1e-12, 0.3]) == [(0.1, 1), (pytest.approx(0.3), 3)]


def test_special_case_examples():
    assert special_case_mse(SpectrumModel(2, 0.5, 1, np.array([1.0]))) == pytest.approx(0.5)
    rng = np.random.default_rng(14)
    for M in (1, 2, 3):
        assert special_case_mse(SpectrumModel(6, 0.0, M, rng.dirichlet(np.ones(5)))) == 0.0
    with pytest.raises(ValueError):
        SpectrumModel(3, 0.1, 1, np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        SpectrumModel(3, 0.1, 1, np.array([1.0]))


def test_uniform_spectrum_minimizes_mse():
    rng = np.random.default_rng(15)
    d, eps0, M = 8, 0.1, 2
    best = special_case_mse(SpectrumModel.uniform(d, eps0, M))
    for _ in range(100):
        assert special_case_mse(SpectrumModel(d, eps0, M, rng.dirichlet(np.ones(d - 1)))) >= best


def test_gradient_vanishes_at_uniform():
    for d, eps0, M in ((3, 0.1, 2), (8, 0.3, 3), (5, 0.2, 1)):
        assert np.abs(special_case_gradient(SpectrumModel.uniform(d, eps0, M))).max() <= 1e-10


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(16)
    for M in (1, 2, 3):
        m = SpectrumModel(5, 0.3, M, rng.dirichlet(np.ones(4)))
        a = np.sqrt(m.p)
        h = 1e-6
        fd = np.array([
            (special_case_mse_of_a(m, a + h * e) - special_case_mse_of_a(m, a - h * e)) / (2 * h)
            for e in np.eye(4)
        ])
        g = special_case_gradient(m)
        assert np.abs(fd - g).max() <= 1e-6 * max(np.abs(g).max(), 1e-300)


def test_steepest_descent_reaches_uniform():
    rng = np.random.default_rng(17)
    for M in (2, 3):
        m = SpectrumModel(5, 0.3, M, rng.dirichlet(np.ones(4)))
        p, iters = steepest_descent(m)
        assert np.abs(p - 0.25).max() <= 1e-6
        assert iters > 0
    p, iters = steepest_descent(SpectrumModel(4, 0.0, 2, np.array([0.5, 0.3, 0.2])))
    assert iters == 0


def test_random_density_helper_is_valid():
    rho = random_density(4, np.random.default_rng(18))
    assert np.trace(rho).real == pytest.approx(1.0)
