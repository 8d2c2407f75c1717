import numpy as np
import pytest

from homwalk.exceptions import DependentBasis
from homwalk.subgroup import SubgroupSpec, UnipotentPart


def test_quotient_basis_orthonormal_and_orthogonal():
    spec = SubgroupSpec(4, np.array([[1.0, 1.0, -1.0, -1.0]]))
    q = spec.quotient_basis
    assert q.shape == (2, 4)
    assert np.allclose(q @ q.T, np.eye(2), atol=1e-12)
    assert np.allclose(q @ np.array([1.0, 1.0, -1.0, -1.0]), 0, atol=1e-12)
    assert np.allclose(q.sum(axis=1), 0, atol=1e-12)


def test_codim_and_sl3_basis():
    spec = SubgroupSpec(3, np.array([[1.0, 0.0, -1.0]]))
    assert spec.codim == 1 and spec.dim_a == 2 and spec.dim_a_prime == 1
    assert np.allclose(np.abs(spec.quotient_basis[0]), np.abs(np.array([1, -2, 1]) / np.sqrt(6)))


def test_sl2_trivial_basis():
    spec = SubgroupSpec(2, np.zeros((0, 2)))
    assert np.allclose(np.abs(spec.quotient_basis), [[2**-0.5, 2**-0.5]])


def test_dependent_basis_rejected():
    with pytest.raises(DependentBasis):
        SubgroupSpec(3, np.array([[1.0, 0.0, -1.0], [2.0, 0.0, -2.0]]))


def test_non_zero_sum_rejected():
    with pytest.raises(ValueError):
        SubgroupSpec(3, np.array([[1.0, 0.0, 0.0]]))


def test_unipotent_part_parse():
    assert UnipotentPart("proper") is UnipotentPart.PROPER
    spec = SubgroupSpec(3, np.zeros((0, 3)), UnipotentPart.PROPER)
    assert spec.to_dict()["unipotent_part"] == "proper"


def test_basis_deterministic():
    a = SubgroupSpec(5, np.array([[1.0, -1.0, 0.0, 0.0, 0.0]])).quotient_basis
    b = SubgroupSpec(5, np.array([[1.0, -1.0, 0.0, 0.0, 0.0]])).quotient_basis
    assert np.array_equal(a, b)
