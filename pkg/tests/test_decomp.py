import numpy as np
import pytest

from homwalk.decomp import (
    AVector,
    FlagPoint,
    cartan_projection,
    flag_distance,
    iwasawa_cocycle,
    iwasawa_decompose,
    project_cocycle,
)
from homwalk.exceptions import DimensionMismatch, NumericalBreakdown
from homwalk.subgroup import SubgroupSpec
from oracles import cocycle_oracle, iwasawa_oracle, orthogonal, principal_angle_distance, rotation, sl_matrix

PHI = (1 + np.sqrt(5)) / 2


def test_iwasawa_identity():
    t = iwasawa_decompose(np.eye(3))
    assert np.allclose(t.k, np.eye(3)) and np.allclose(t.sigma.coords, 0) and np.allclose(t.n, np.eye(3))


def test_iwasawa_diagonal():
    t = iwasawa_decompose(np.diag([2.0, 0.5]))
    assert np.allclose(t.k, np.eye(2))
    assert np.allclose(t.sigma.coords, [np.log(2), -np.log(2)])
    assert np.allclose(t.n, np.eye(2))


def test_iwasawa_unipotent():
    u = np.array([[1.0, 1.0], [0.0, 1.0]])
    t = iwasawa_decompose(u)
    assert np.allclose(t.k, np.eye(2)) and np.allclose(t.sigma.coords, 0) and np.allclose(t.n, u)


@pytest.mark.parametrize("d", [2, 3, 5, 8])
def test_iwasawa_matches_gram_schmidt(rng, d):
    for _ in range(20):
        g = sl_matrix(rng, d, -1, 1)
        t = iwasawa_decompose(g)
        k, s, n = iwasawa_oracle(g)
        assert np.linalg.norm(t.reconstruct() - g) < 1e-12 * max(1.0, np.linalg.norm(g))
        assert np.allclose(t.k, k, atol=1e-9)
        assert np.allclose(t.sigma.coords, s, atol=1e-9)
        assert np.allclose(t.n, n, atol=1e-8)
        assert np.allclose(np.tril(t.n, -1), 0) and np.allclose(np.diag(t.n), 1)
        assert np.allclose(t.k.T @ t.k, np.eye(d), atol=1e-12)


def test_iwasawa_breakdown_on_singular():
    with pytest.raises(NumericalBreakdown):
        iwasawa_decompose(np.zeros((2, 2)))


def test_cartan_examples():
    assert np.allclose(cartan_projection(np.eye(3)).coords, 0)
    assert np.allclose(cartan_projection(np.diag([3.0, 1 / 3])).coords, [np.log(3), -np.log(3)])
    assert np.allclose(cartan_projection([[1.0, 1.0], [0.0, 1.0]]).coords, [np.log(PHI), -np.log(PHI)], atol=1e-12)


def test_cartan_sorted_and_zero_sum(rng):
    for d in (2, 3, 4):
        k = cartan_projection(sl_matrix(rng, d)).coords
        assert np.all(np.diff(k) <= 0) and abs(k.sum()) < 1e-9


def test_cocycle_rotation(rng):
    for d in (2, 3):
        g = orthogonal(rng, d)
        if np.linalg.det(g) < 0:
            g[:, 0] = -g[:, 0]
        eta = FlagPoint.random(d, rng)
        s, geta = iwasawa_cocycle(g, eta)
        assert np.allclose(s.coords, 0, atol=1e-12)
        assert flag_distance(geta, FlagPoint(g @ eta.frame)) < 1e-12


def test_cocycle_diagonal_base_flag():
    a = np.array([0.3, 0.1, -0.4])
    s, _ = iwasawa_cocycle(np.diag(np.exp(a)), FlagPoint.base(3))
    assert np.allclose(s.coords, a)


def test_cocycle_hand_qr():
    s, _ = iwasawa_cocycle([[1.0, 0.0], [1.0, 1.0]], FlagPoint.base(2))
    assert np.allclose(s.coords, [0.5 * np.log(2), -0.5 * np.log(2)], atol=1e-15)


def test_cocycle_matches_oracle(rng):
    for d in (2, 3, 4):
        g = sl_matrix(rng, d)
        eta = FlagPoint.random(d, rng)
        s, geta = iwasawa_cocycle(g, eta)
        s_ref, q = cocycle_oracle(g, eta.frame)
        assert np.allclose(s.coords, s_ref, atol=1e-9)
        assert principal_angle_distance(geta.frame, q) < 1e-9


def test_cocycle_sign_representative_invariance(rng):
    # eta and eta * eps (eps a diagonal sign matrix) are the same flag
    g = sl_matrix(rng, 3)
    eta = FlagPoint.random(3, rng)
    eps = np.diag([1.0, -1.0, -1.0])
    s1, f1 = iwasawa_cocycle(g, eta)
    s2, f2 = iwasawa_cocycle(g, FlagPoint(eta.frame @ eps))
    assert np.allclose(s1.coords, s2.coords, atol=1e-12)
    assert flag_distance(f1, f2) < 1e-12


def test_cocycle_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        iwasawa_cocycle(np.eye(3), FlagPoint.base(2))


def test_highest_weight_bridge_d2(rng):
    for _ in range(50):
        g = sl_matrix(rng, 2)
        v = rng.standard_normal(2)
        s, _ = iwasawa_cocycle(g, FlagPoint.from_vectors(v))
        assert abs(s.coords[0] - np.log(np.linalg.norm(g @ v) / np.linalg.norm(v))) < 1e-9


def test_project_cocycle_cases():
    sigma = AVector(np.array([0.5, 0.2, -0.7]))
    full = SubgroupSpec(3, np.array([[1, -1, 0], [0, 1, -1]], dtype=float))
    assert project_cocycle(sigma, full).shape == (0,)
    trivial = SubgroupSpec(3, np.zeros((0, 3)))
    assert abs(np.linalg.norm(project_cocycle(sigma, trivial)) - sigma.norm()) < 1e-12
    line = SubgroupSpec(3, np.array([[1.0, 0.0, -1.0]]))
    assert np.allclose(project_cocycle(AVector(np.array([2.0, 0.0, -2.0])), line), 0, atol=1e-12)


def test_project_cocycle_is_orthogonal_projection(rng):
    spec = SubgroupSpec(4, np.array([[1.0, -1.0, 0.0, 0.0]]))
    v = rng.standard_normal(4)
    v -= v.mean()
    coords = project_cocycle(AVector(v), spec)
    # reconstruct in a and compare with the projector onto the complement of a'
    a = np.array([1.0, -1.0, 0.0, 0.0]) / np.sqrt(2)
    expected = v - a * (a @ v)
    assert np.allclose(coords @ spec.quotient_basis, expected, atol=1e-12)


def test_flag_distance_examples(rng):
    eta = FlagPoint.random(3, rng)
    assert flag_distance(eta, eta) < 1e-12
    assert abs(flag_distance(FlagPoint.base(2), FlagPoint(rotation(np.pi / 2))) - 1) < 1e-12


def test_flag_distance_matches_principal_angles(rng):
    for d in (2, 3, 4, 6):
        for _ in range(10):
            a, b = FlagPoint.random(d, rng), FlagPoint.random(d, rng)
            assert abs(flag_distance(a, b) - principal_angle_distance(a.frame, b.frame)) < 1e-10


def test_flag_distance_sign_invariant(rng):
    a, b = FlagPoint.random(3, rng), FlagPoint.random(3, rng)
    eps = np.diag([-1.0, 1.0, -1.0])
    assert abs(flag_distance(a, b) - flag_distance(FlagPoint(a.frame @ eps), b)) < 1e-12


def test_avector_zero_sum():
    with pytest.raises(ValueError):
        AVector(np.array([1.0, 0.0]))


def test_flag_point_orthogonality():
    with pytest.raises(ValueError):
        FlagPoint(np.array([[1.0, 1.0], [0.0, 1.0]]))
