"""Normal form A'N' of a closed subgroup H of SL(d, R)."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import DependentBasis

BASIS_TOL = 1e-9


class UnipotentPart(str, enum.Enum):
    FULL = "full"
    PROPER = "proper"


def zero_sum_seed_basis(d: int) -> np.ndarray:
    """Rows e_i - e_{i+1}, i = 1..d-1: a fixed basis of the traceless diagonals."""
    basis = np.zeros((d - 1, d))
    for i in range(d - 1):
        basis[i, i] = 1.0
        basis[i, i + 1] = -1.0
    return basis


def _gram_schmidt_rows(rows: np.ndarray, against: np.ndarray, tol: float) -> np.ndarray:
    # Pivoted: each round keeps the remaining row with the largest residual.
    d = rows.shape[1] if len(rows) else against.shape[1]
    out = [np.asarray(r, dtype=float) for r in against]
    remaining = [np.array(r, dtype=float) for r in rows]
    kept = []
    while remaining:
        residuals = []
        for r in remaining:
            v = r.copy()
            for _ in range(2):
                for q in out:
                    v = v - (q @ v) * q
            residuals.append(v)
        norms = [np.linalg.norm(v) for v in residuals]
        j = int(np.argmax(norms))
        if norms[j] <= tol:
            break
        v = residuals[j] / norms[j]
        out.append(v)
        kept.append(v)
        del remaining[j]
    return np.array(kept).reshape(-1, d)


@dataclass(frozen=True, eq=False)
class SubgroupSpec:
    """H in standard position: a' spanned by ``a_prime_basis`` and N' = N or N' < N.

    Parameters
    ----------
    dim : int
        The d of SL(d, R).
    a_prime_basis : array-like, shape (k, d)
        Linearly independent zero-sum vectors spanning a'.  May be empty.
    unipotent_part : {"full", "proper"}
        Whether H contains the whole unipotent group N.
    """

    dim: int
    a_prime_basis: np.ndarray
    unipotent_part: UnipotentPart = UnipotentPart.FULL

    def __post_init__(self):
        d = int(self.dim)
        basis = np.array(self.a_prime_basis, dtype=float).reshape(-1, d)
        if basis.shape[0] > d - 1:
            raise DependentBasis(f"a' has at most {d - 1} dimensions, got {basis.shape[0]} vectors")
        if basis.shape[0]:
            if np.max(np.abs(basis.sum(axis=1))) > BASIS_TOL * max(1.0, np.abs(basis).max()):
                raise ValueError("a' basis vectors must sum to zero")
            sv = np.linalg.svd(basis, compute_uv=False)
            if sv[-1] <= BASIS_TOL * max(1.0, sv[0]):
                raise DependentBasis("a' basis vectors are linearly dependent")
        basis.setflags(write=False)
        object.__setattr__(self, "dim", d)
        object.__setattr__(self, "a_prime_basis", basis)
        object.__setattr__(self, "unipotent_part", UnipotentPart(self.unipotent_part))

    @classmethod
    def full(cls, dim: int, a_prime_basis=()) -> "SubgroupSpec":
        return cls(dim, np.array(a_prime_basis, dtype=float).reshape(-1, dim), UnipotentPart.FULL)

    @property
    def dim_a(self) -> int:
        return self.dim - 1

    @property
    def dim_a_prime(self) -> int:
        return self.a_prime_basis.shape[0]

    @property
    def codim(self) -> int:
        """Dimension of E = a / a'."""
        return self.dim_a - self.dim_a_prime

    @cached_property
    def a_prime_orthonormal(self) -> np.ndarray:
        return _gram_schmidt_rows(self.a_prime_basis, np.zeros((0, self.dim)), BASIS_TOL)

    @cached_property
    def quotient_basis(self) -> np.ndarray:
        """Orthonormal rows spanning the orthogonal complement of a' in a.

        Deterministic: Gram-Schmidt of the seed basis e_i - e_{i+1} against a'.
        This complement is the model of E used throughout.
        """
        q = _gram_schmidt_rows(zero_sum_seed_basis(self.dim), self.a_prime_orthonormal, 1e-7)
        assert q.shape[0] == self.codim
        q.setflags(write=False)
        return q

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "a_prime_basis": self.a_prime_basis.tolist(),
            "unipotent_part": self.unipotent_part.value,
        }
