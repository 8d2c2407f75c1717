import warnings

import numpy as np
import pytest

from homwalk.decomp import FlagPoint, iwasawa_cocycle
from homwalk.exceptions import DegenerateQuotient, NoContraction
from homwalk.group import RandomStream, make_measure, point_mass, sample_indices
from homwalk.lyapunov import (
    boundary_point,
    clt_diagnostics,
    cocycle_totals,
    estimate_covariance,
    estimate_lyapunov,
    generic_flag,
    late_oscillation,
    sigma_kappa_gap,
)
from homwalk.subgroup import SubgroupSpec
from oracles import cocycle_oracle, naive_product, orthogonal, rotation

SL2_TRIVIAL = SubgroupSpec(2, np.zeros((0, 2)))


def test_point_mass_diagonal_exact():
    mu = point_mass(np.diag([np.e, 1 / np.e]))
    for n in (1, 7, 100):
        est = estimate_lyapunov(mu, n, 3, 0)
        assert np.allclose(est.mean.coords, [1.0, -1.0], atol=1e-12)
        assert np.allclose(est.stderr, 0, atol=1e-12)


def test_single_trajectory_stderr():
    assert np.all(estimate_lyapunov(point_mass(np.eye(2)), 10, 1, 0).stderr == 0)
    mu = make_measure([(0.5, np.diag([2.0, 0.5])), (0.5, rotation(1.0))])
    assert np.all(np.isinf(estimate_lyapunov(mu, 10, 1, 0).stderr))


def test_compact_support_has_zero_drift():
    rng = np.random.default_rng(2)
    rots = []
    for _ in range(3):
        q = orthogonal(rng, 3)
        if np.linalg.det(q) < 0:
            q[:, 0] = -q[:, 0]
        rots.append(q)
    est = estimate_lyapunov(make_measure([(1 / 3, q) for q in rots]), 10_000, 20, 0)
    assert est.mean.norm() <= 5 * np.linalg.norm(est.stderr) + 1e-12


def test_dense_sl2_positive(sl2_dense):
    est = estimate_lyapunov(sl2_dense, 2000, 50, 0)
    assert est.mean.coords[0] > 4 * est.stderr[0]


def test_mean_zero_sum_and_chamber(sl3_symmetric):
    est = estimate_lyapunov(sl3_symmetric, 4000, 40, 1)
    c = est.mean.coords
    assert abs(c.sum()) < 1e-9
    assert np.all(np.diff(c) <= 3 * est.stderr[:-1] + 3 * est.stderr[1:])


def test_mean_independent_of_start_flag(sl3_symmetric):
    a = estimate_lyapunov(sl3_symmetric, 4000, 40, 3)
    b = estimate_lyapunov(sl3_symmetric, 4000, 40, 3, eta0=generic_flag(3))
    assert np.all(np.abs(a.mean.coords - b.mean.coords) <= 2 * np.maximum(a.stderr, b.stderr))


@pytest.mark.parametrize("n", [10, 100, 1000])
def test_incremental_matches_full_product_d2(sl2_dense, n):
    # first coordinate of sigma at the base flag is log ||p_n e_1||
    idx = sample_indices(sl2_dense, RandomStream(4, 0), n)
    p = naive_product([sl2_dense.matrices[i].tolist() for i in idx])
    direct = np.log(np.linalg.norm(p[:, 0]))
    inc = cocycle_totals(sl2_dense, n, 1, 4)[0]
    assert abs(inc[0] - direct) < 1e-6 * max(1.0, abs(direct))


@pytest.mark.parametrize("n", [10, 60])
def test_incremental_matches_full_product_d3(sl3_symmetric, n):
    eta = generic_flag(3)
    idx = sample_indices(sl3_symmetric, RandomStream(4, 0), n)
    p = naive_product([sl3_symmetric.matrices[i].tolist() for i in idx])
    direct, _ = cocycle_oracle(p, eta.frame)
    inc = cocycle_totals(sl3_symmetric, n, 1, 4, eta0=eta)[0]
    assert np.allclose(inc, direct - direct.mean(), atol=1e-6)


def test_workers_do_not_change_results(sl3_symmetric):
    a = cocycle_totals(sl3_symmetric, 500, 6, 9, workers=1)
    b = cocycle_totals(sl3_symmetric, 500, 6, 9, workers=2)
    assert np.array_equal(a, b)
    assert np.array_equal(
        estimate_lyapunov(sl3_symmetric, 500, 6, 9, workers=2).mean.coords,
        estimate_lyapunov(sl3_symmetric, 500, 6, 9).mean.coords,
    )


def test_covariance_point_mass_zero():
    cov = estimate_covariance(point_mass(np.diag([2.0, 0.5])), SL2_TRIVIAL, 100, 20, 0)
    assert np.allclose(cov.matrix, 0, atol=1e-20)


def test_covariance_requires_quotient():
    with pytest.raises(DegenerateQuotient):
        estimate_covariance(point_mass(np.eye(2)), SubgroupSpec(2, np.array([[1.0, -1.0]])), 10, 10, 0)


def test_covariance_stable_across_horizons(sl2_dense):
    v = [estimate_covariance(sl2_dense, SL2_TRIVIAL, n, 4000, 0).matrix[0, 0] for n in (500, 1000, 2000)]
    assert max(v) / min(v) - 1 < 0.15


def test_covariance_deterministic_and_psd(sl3_symmetric):
    spec = SubgroupSpec(3, np.zeros((0, 3)))
    a = estimate_covariance(sl3_symmetric, spec, 200, 100, 5)
    b = estimate_covariance(sl3_symmetric, spec, 200, 100, 5)
    assert np.array_equal(a.matrix, b.matrix)
    assert np.allclose(a.matrix, a.matrix.T, atol=1e-9)
    assert np.linalg.eigvalsh(a.matrix).min() >= -1e-9


def test_clt_deterministic_flags_degenerate():
    rep = clt_diagnostics(point_mass(np.diag([2.0, 0.5])), SL2_TRIVIAL, 50, 30, 0)
    assert rep["degenerate"]


def test_clt_report_structure(sl2_hyperbolic):
    rep = clt_diagnostics(sl2_hyperbolic, SL2_TRIVIAL, 200, 400, 0)
    for key in ("eta0", "eta1"):
        for stat in ("skewness", "excess_kurtosis", "ks_statistic", "variance"):
            assert len(rep[key][stat]) == 1
    assert rep["ks_band"] == pytest.approx(1.6276 / np.sqrt(400), rel=1e-3)
    assert not rep["degenerate"]


def test_sigma_kappa_point_mass_zero():
    gap = sigma_kappa_gap(point_mass(np.diag([2.0, 0.5])), FlagPoint.base(2), 50, 0)
    assert np.allclose(gap, 0, atol=1e-12)


def test_sigma_kappa_cauchy_tail(sl2_dense):
    osc = [late_oscillation(sigma_kappa_gap(sl2_dense, None, 1000, 0, t)) for t in range(20)]
    assert np.mean(np.array(osc) < 1e-3) >= 0.9


def test_sigma_kappa_two_flag_difference_converges(sl3_symmetric):
    a = sigma_kappa_gap(sl3_symmetric, FlagPoint.base(3), 600, 2, return_vectors=True)
    b = sigma_kappa_gap(sl3_symmetric, generic_flag(3), 600, 2, return_vectors=True)
    assert late_oscillation(a - b) < 1e-3


def test_boundary_point_hyperbolic():
    est = boundary_point(point_mass(np.diag([2.0, 0.5])), 60, 0)
    assert est.certificate < 1e-12
    assert abs(est.flag.angle) < 1e-12 or abs(est.flag.angle - np.pi) < 1e-12


def test_boundary_point_rotations_warn():
    mu = make_measure([(0.5, rotation(0.4)), (0.5, rotation(1.3))])
    with pytest.warns(NoContraction):
        est = boundary_point(mu, 200, 0)
    assert est.certificate > 0.1


def test_boundary_point_dense_contracts(sl2_dense):
    with warnings.catch_warnings():
        warnings.simplefilter("error", NoContraction)
        certs = [boundary_point(sl2_dense, 200, 0, t).certificate for t in range(20)]
    assert max(certs) < 1e-6


def test_late_oscillation():
    assert late_oscillation(np.array([5.0, 1.0, 2.0, 2.5])) == pytest.approx(0.5)
    assert late_oscillation(np.zeros((4, 2))) == 0.0
