"""Iwasawa and Cartan decompositions of SL(d, R), flags and the Iwasawa cocycle.

Conventions
-----------
* ``g = k @ diag(exp(sigma)) @ n`` with ``k`` orthogonal, ``sigma`` zero-sum and
  ``n`` unit upper triangular.  The triangular factor always has a positive
  diagonal, which makes the triple unique.
* A full flag is stored as an orthogonal frame whose first ``j`` columns span
  the ``j``-th subspace.  Frames differing by column signs are the same flag.
* ``sigma(g, eta)`` is the log-diagonal of the triangular factor of
  ``g @ frame(eta)``; the orthogonal factor is the frame of ``g . eta``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .exceptions import DimensionMismatch, NumericalBreakdown, SvdFailure
from .group import GroupElement
from .subgroup import SubgroupSpec

ZERO_SUM_TOL = 1e-9
ORTHO_TOL = 1e-9

MatrixLike = Union[GroupElement, np.ndarray]


def _as_matrix(g: MatrixLike) -> np.ndarray:
    if isinstance(g, GroupElement):
        return g.matrix
    m = np.asarray(g, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    return m


@dataclass(frozen=True, eq=False)
class AVector:
    """Element of the Cartan subalgebra a: a zero-sum real vector (nepers)."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=float).reshape(-1)
        if abs(c.sum()) > ZERO_SUM_TOL * max(1.0, np.abs(c).max(initial=0.0)):
            raise ValueError(f"AVector coordinates must sum to zero (sum={c.sum()!r})")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @classmethod
    def project(cls, coords) -> "AVector":
        """Orthogonal projection of an arbitrary vector onto a."""
        c = np.asarray(coords, dtype=float)
        return cls(c - c.mean())

    @classmethod
    def zero(cls, dim: int) -> "AVector":
        return cls(np.zeros(dim))

    @property
    def dim(self) -> int:
        return self.coords.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)

    def __add__(self, other):
        return AVector(self.coords + np.asarray(other))

    def __sub__(self, other):
        return AVector(self.coords - np.asarray(other))

    def __neg__(self):
        return AVector(-self.coords)

    def __mul__(self, s):
        return AVector(self.coords * float(s))

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))

    def tolist(self) -> list:
        return self.coords.tolist()

    def __repr__(self):
        return f"AVector({self.coords.tolist()!r})"


@dataclass(frozen=True, eq=False)
class FlagPoint:
    """A full flag in R^d, stored as an orthogonal frame modulo column signs.

    Compare flags with :func:`flag_distance`, never entrywise.
    """

    frame: np.ndarray

    def __post_init__(self):
        f = np.array(self.frame, dtype=float)
        if f.ndim != 2 or f.shape[0] != f.shape[1]:
            raise DimensionMismatch(f"frame must be square, got shape {f.shape}")
        err = np.abs(f.T @ f - np.eye(f.shape[0])).max()
        if err > ORTHO_TOL:
            raise ValueError(f"frame is not orthogonal (error {err:.2e})")
        f.setflags(write=False)
        object.__setattr__(self, "frame", f)

    @classmethod
    def base(cls, dim: int) -> "FlagPoint":
        """The standard flag span(e_1) < span(e_1, e_2) < ..."""
        return cls(np.eye(dim))

    @classmethod
    def from_vectors(cls, vectors) -> "FlagPoint":
        """Flag whose j-th subspace is spanned by the first j columns of ``vectors``.

        Fewer than d columns are completed with standard basis vectors.
        """
        m = np.asarray(vectors, dtype=float)
        if m.ndim == 1:
            m = m[:, None]
        d = m.shape[0]
        q, _ = _positive_qr(_complete(np.hstack([m, np.eye(d)])))
        return cls(q)

    @classmethod
    def from_angle(cls, angle: float) -> "FlagPoint":
        """Flag of R^2 given by the line at ``angle`` (radians, mod pi)."""
        c, s = np.cos(angle), np.sin(angle)
        return cls(np.array([[c, -s], [s, c]]))

    @classmethod
    def random(cls, dim: int, rng: np.random.Generator) -> "FlagPoint":
        q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
        return cls(q * np.sign(np.diag(r)))

    @property
    def dim(self) -> int:
        return self.frame.shape[0]

    @property
    def angle(self) -> float:
        """For d = 2: angle of the line in [0, pi)."""
        if self.dim != 2:
            raise DimensionMismatch("angle is only defined for flags of R^2")
        return float(np.arctan2(self.frame[1, 0], self.frame[0, 0]) % np.pi)

    def act(self, g: MatrixLike) -> "FlagPoint":
        """g . eta."""
        return iwasawa_cocycle(g, self)[1]

    def tolist(self) -> list:
        return self.frame.tolist()

    def __repr__(self):
        return f"FlagPoint({self.frame.tolist()!r})"


def _complete(m: np.ndarray) -> np.ndarray:
    d = m.shape[0]
    cols = []
    for c in m.T:
        cand = np.array(cols + [c]).T
        if np.linalg.matrix_rank(cand) == len(cols) + 1:
            cols.append(c)
        if len(cols) == d:
            break
    return np.array(cols).T


@dataclass(frozen=True, eq=False)
class IwasawaTriple:
    k: np.ndarray
    sigma: AVector
    n: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.k @ np.diag(np.exp(self.sigma.coords)) @ self.n


def _positive_qr(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    q, r = np.linalg.qr(m)
    diag = np.diag(r)
    if not np.all(np.isfinite(diag)) or np.abs(diag).min() < 1e-290:
        raise NumericalBreakdown("triangular pivot underflow; the input is not invertible")
    s = np.sign(diag)
    return q * s, s[:, None] * r


def iwasawa_decompose(g: MatrixLike) -> IwasawaTriple:
    """Decompose ``g = k exp(sigma) n``.

    Examples
    --------
    >>> t = iwasawa_decompose(np.diag([2.0, 0.5]))
    >>> np.allclose(t.sigma.coords, [np.log(2), -np.log(2)])
    True
    """
    m = _as_matrix(g)
    k, r = _positive_qr(m)
    diag = np.diag(r)
    n = r / diag[:, None]
    return IwasawaTriple(k, AVector.project(np.log(diag)), n)


def cartan_projection(g: MatrixLike) -> AVector:
    """kappa(g): log singular values sorted in decreasing order."""
    m = _as_matrix(g)
    try:
        sv = np.linalg.svd(m, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise SvdFailure(str(exc)) from exc
    if np.any(sv <= 0) or not np.all(np.isfinite(sv)):
        raise SvdFailure("degenerate singular values")
    return AVector.project(np.sort(np.log(sv))[::-1])


def iwasawa_cocycle(g: MatrixLike, eta: FlagPoint) -> tuple[AVector, FlagPoint]:
    """Return ``(sigma(g, eta), g . eta)``."""
    m = _as_matrix(g)
    if m.shape[0] != eta.dim:
        raise DimensionMismatch(f"element of dim {m.shape[0]} acting on flag of dim {eta.dim}")
    k, r = _positive_qr(m @ eta.frame)
    return AVector.project(np.log(np.diag(r))), FlagPoint(k)


def project_cocycle(sigma, spec: SubgroupSpec) -> np.ndarray:
    """Coordinates of the image of ``sigma`` in E = a / a'.

    E is modelled by the orthogonal complement of a' with the fixed orthonormal
    basis ``spec.quotient_basis``; the result has length ``spec.codim``.
    """
    coords = np.asarray(sigma, dtype=float)
    if coords.shape[-1] != spec.dim:
        raise DimensionMismatch(f"sigma of dim {coords.shape[-1]} vs subgroup of dim {spec.dim}")
    return coords @ spec.quotient_basis.T


def flag_distance(eta1: FlagPoint, eta2: FlagPoint) -> float:
    """Max over j of the sine of the largest principal angle between the j-th subspaces."""
    if eta1.dim != eta2.dim:
        raise DimensionMismatch("flags of different dimensions")
    u, v = eta1.frame, eta2.frame
    best = 0.0
    for j in range(1, eta1.dim):
        uj, vj = u[:, :j], v[:, :j]
        resid = vj - uj @ (uj.T @ vj)
        best = max(best, float(np.linalg.norm(resid, 2)))
    return min(best, 1.0)
