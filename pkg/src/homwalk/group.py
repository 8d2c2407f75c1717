"""Elements of SL(d, R), finitely supported measures and seeded increment streams.

A walk increment is a :class:`GroupElement`; the law of the increments is a
:class:`FiniteMeasure`.  Randomness is organised per trajectory: the stream of
trajectory ``t`` under master seed ``s`` is a pure function of ``(s, t)``, so
results do not depend on how trajectories are distributed over workers.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .exceptions import (
    BadDeterminant,
    DimensionMismatch,
    EmptySupport,
    NegativeWeight,
    NonSquare,
    NumericalBreakdown,
    ZariskiDensityWarning,
)

MIN_DIM = 2
MAX_DIM = 8
DET_INPUT_TOL = 1e-6
DET_TOL = 1e-9
WEIGHT_TOL = 1e-12


def _renormalize_det(matrix: np.ndarray, tol: float) -> tuple[np.ndarray, float]:
    d = matrix.shape[0]
    det = float(np.linalg.det(matrix))
    if not np.isfinite(det) or det <= 0 or abs(det - 1.0) > tol:
        raise BadDeterminant(f"determinant {det!r} is not within {tol:g} of 1")
    return matrix / det ** (1.0 / d), det


@dataclass(frozen=True, eq=False)
class GroupElement:
    """A d x d real matrix of determinant one.

    Use :meth:`from_matrix` to build one from user data; the determinant is
    renormalized to one and the original value kept in ``det_correction``.
    """

    matrix: np.ndarray
    det_correction: float = 1.0

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise NonSquare(f"expected a square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix entries must be finite")
        if abs(np.linalg.det(m) - 1.0) > DET_TOL:
            raise BadDeterminant("GroupElement requires |det - 1| <= 1e-9; use from_matrix")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_matrix(cls, matrix, tol: float = DET_INPUT_TOL) -> "GroupElement":
        m = np.array(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise NonSquare(f"expected a square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix entries must be finite")
        m, det = _renormalize_det(m, tol)
        return cls(m, det_correction=det)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def inverse(self) -> "GroupElement":
        return GroupElement(np.linalg.inv(self.matrix))

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return left_product([other, self])

    def __repr__(self):
        return f"GroupElement(dim={self.dim}, matrix={self.matrix.tolist()!r})"


@dataclass(frozen=True, eq=False)
class FiniteMeasure:
    """Finitely supported probability measure on SL(d, R)."""

    weights: np.ndarray
    elements: tuple[GroupElement, ...]

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if len(self.elements) == 0:
            raise EmptySupport("a measure needs at least one atom")
        if w.shape != (len(self.elements),):
            raise ValueError("one weight per atom is required")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise NegativeWeight("weights must be positive and finite")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        dims = {g.dim for g in self.elements}
        if len(dims) != 1:
            raise DimensionMismatch(f"atoms have different dimensions {sorted(dims)}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "elements", tuple(self.elements))

    @property
    def dim(self) -> int:
        return self.elements[0].dim

    @property
    def n_atoms(self) -> int:
        return len(self.elements)

    @cached_property
    def matrices(self) -> np.ndarray:
        """Atoms stacked into an array of shape (n_atoms, d, d)."""
        out = np.stack([g.matrix for g in self.elements])
        out.setflags(write=False)
        return out

    @cached_property
    def cumulative_weights(self) -> np.ndarray:
        c = np.cumsum(self.weights)
        c[-1] = 1.0
        return c

    @property
    def is_deterministic(self) -> bool:
        return self.n_atoms == 1

    def atoms(self) -> list[tuple[float, GroupElement]]:
        return list(zip(self.weights.tolist(), self.elements))

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "atoms": [
                {"weight": w, "matrix": g.matrix.tolist()} for w, g in self.atoms()
            ],
        }


def make_measure(atoms: Iterable[tuple[float, object]]) -> FiniteMeasure:
    """Build a :class:`FiniteMeasure` from ``(weight, matrix)`` pairs.

    Weights are normalized to sum to one and every matrix is rescaled to
    determinant one.  Matrices must already have determinant within 1e-6 of
    one.

    Examples
    --------
    >>> mu = make_measure([(2, np.eye(2)), (2, np.diag([2.0, 0.5]))])
    >>> mu.weights.tolist()
    [0.5, 0.5]
    """
    atoms = list(atoms)
    if not atoms:
        raise EmptySupport("a measure needs at least one atom")
    weights = []
    elements = []
    for weight, matrix in atoms:
        weight = float(weight)
        if not np.isfinite(weight) or weight <= 0:
            raise NegativeWeight(f"weight {weight!r} is not positive")
        g = matrix if isinstance(matrix, GroupElement) else GroupElement.from_matrix(matrix)
        weights.append(weight)
        elements.append(g)
    dims = {g.dim for g in elements}
    if len(dims) != 1:
        raise DimensionMismatch(f"atoms have different dimensions {sorted(dims)}")
    weights = np.asarray(weights)
    return FiniteMeasure(weights / weights.sum(), tuple(elements))


def point_mass(matrix) -> FiniteMeasure:
    return make_measure([(1.0, matrix)])


@dataclass(frozen=True)
class RandomStream:
    """Identifies the i.i.d. increment sequence of one trajectory.

    The generator is derived from a keyed hash of ``(master_seed,
    trajectory_index)`` (numpy's ``SeedSequence``) feeding a counter-based
    Philox bit generator.  ``channel`` selects independent auxiliary
    sequences of the same trajectory (e.g. random signs).
    """

    master_seed: int
    trajectory_index: int = 0

    def __post_init__(self):
        if self.trajectory_index < 0:
            raise ValueError("trajectory_index must be nonnegative")
        object.__setattr__(self, "master_seed", int(self.master_seed) & 0xFFFFFFFFFFFFFFFF)

    def generator(self, channel: int = 0) -> np.random.Generator:
        seq = np.random.SeedSequence(
            entropy=self.master_seed, spawn_key=(int(self.trajectory_index), int(channel))
        )
        return np.random.Generator(np.random.Philox(seq))


def sample_indices(measure: FiniteMeasure, stream: RandomStream, n: int) -> np.ndarray:
    """Atom indices of the first ``n`` increments of ``stream``.

    Prefix-consistent: the first ``k`` indices do not depend on ``n >= k``.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if measure.is_deterministic:
        return np.zeros(n, dtype=np.intp)
    u = stream.generator().random(n)
    idx = np.searchsorted(measure.cumulative_weights, u, side="right")
    return np.minimum(idx, measure.n_atoms - 1)


def sample_signs(stream: RandomStream, n: int) -> np.ndarray:
    """Independent Rademacher signs attached to a trajectory."""
    bits = stream.generator(channel=1).integers(0, 2, size=n)
    return (2 * bits - 1).astype(float)


def sample_word(measure: FiniteMeasure, stream: RandomStream, n: int) -> list[GroupElement]:
    """The first ``n`` increments ``b_1, ..., b_n`` of a trajectory."""
    return [measure.elements[i] for i in sample_indices(measure, stream, n)]


def left_product(word: Sequence[GroupElement]) -> GroupElement:
    """Return ``b_n ... b_1`` for ``word = [b_1, ..., b_n]``.

    The determinant is renormalized to one after every multiplication.
    """
    if len(word) == 0:
        raise ValueError("left_product needs a nonempty word")
    d = word[0].dim
    p = np.array(word[0].matrix)
    for b in word[1:]:
        if b.dim != d:
            raise DimensionMismatch(f"dimension {b.dim} != {d}")
        p = b.matrix @ p
        det = np.linalg.det(p)
        if det <= 0 or not np.isfinite(det):
            raise NumericalBreakdown(
                f"running product too ill-conditioned to renormalize (det {det!r}); "
                "use the incremental cocycle for long products"
            )
        p /= det ** (1.0 / d)
    return GroupElement(p)


def random_sl(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """A random matrix of SL(d, R) with Gaussian entries before normalization."""
    while True:
        m = scale * rng.standard_normal((d, d))
        det = np.linalg.det(m)
        if abs(det) > 1e-3:
            break
    if det < 0:
        m[:, 0] = -m[:, 0]
        det = -det
    return m / det ** (1.0 / d)


def _shared_invariant_line(measure: FiniteMeasure, tol: float = 1e-8) -> bool:
    first = measure.elements[0].matrix
    vals, vecs = np.linalg.eig(first)
    for j in range(len(vals)):
        if abs(vals[j].imag) > tol:
            continue
        v = np.real(vecs[:, j])
        v /= np.linalg.norm(v)
        if all(
            np.linalg.norm(g.matrix @ v - (v @ g.matrix @ v) * v) < tol * max(1.0, np.linalg.norm(g.matrix))
            for g in measure.elements
        ):
            return True
    return False


def density_warnings(
    measure: FiniteMeasure, n_products: int = 1000, master_seed: int = 0, kappa_bound: float = 1.0
) -> list[str]:
    """Heuristic, non-binding checks that the support of ``measure`` is not Zariski-dense.

    Two symptoms are reported: the top singular value of sampled products
    staying bounded (a compact group), and a line invariant under every atom.
    An empty list is no proof of density.
    """
    messages = []
    idx = sample_indices(measure, RandomStream(master_seed, 0), n_products)
    p = np.eye(measure.dim)
    log_norm = 0.0
    top = 0.0
    for i in idx:
        p = measure.matrices[i] @ p
        s = np.linalg.norm(p, 2)
        log_norm += float(np.log(s))
        p /= s
        top = max(top, log_norm)
    if top < kappa_bound:
        messages.append(
            f"sampled products stay bounded (max log-norm {top:.3g} over {n_products} steps); "
            "the support may lie in a compact subgroup"
        )
    if _shared_invariant_line(measure):
        messages.append("all atoms share a common invariant line")
    for m in messages:
        warnings.warn(m, ZariskiDensityWarning, stacklevel=2)
    return messages
