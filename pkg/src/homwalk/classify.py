"""Recurrence criterion for walks on SL(d, R) / H with H in normal form A'N'.

The walk is uniformly recurrent exactly when H contains the full unipotent
group N, a' has codimension at most two, and a' contains the Lyapunov vector.
Otherwise it is transient.  The Lyapunov vector is only estimated, so
membership in a' is a statistical test with an explicit ambiguity band.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .exceptions import DependentBasis, DimensionMismatch
from .lyapunov import LyapunovEstimate
from .subgroup import SubgroupSpec, UnipotentPart

DEFAULT_Z = 4.0
THRESHOLD_FLOOR = 1e-9


class VerdictKind(str, enum.Enum):
    RECURRENT = "Recurrent"
    TRANSIENT = "Transient"
    INDETERMINATE = "Indeterminate"


class Reason(str, enum.Enum):
    PROPER_UNIPOTENT = "ProperUnipotent"
    DRIFT_OFF_APRIME = "DriftOffAprime"
    CODIM_AT_LEAST_3 = "CodimAtLeast3"
    CRITERION_MET = "CriterionMet"
    STATISTICALLY_AMBIGUOUS = "StatisticallyAmbiguous"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    reason: Reason
    distance_to_aprime: float
    threshold: float
    codim: int
    note: str = ""

    def __post_init__(self):
        if self.kind is VerdictKind.RECURRENT and self.reason is not Reason.CRITERION_MET:
            raise ValueError("a Recurrent verdict must have reason CriterionMet")
        if (self.kind is VerdictKind.INDETERMINATE) != (self.reason is Reason.STATISTICALLY_AMBIGUOUS):
            raise ValueError("Indeterminate verdicts go with StatisticallyAmbiguous and only those")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "reason": self.reason.value,
            "distance_to_aprime": self.distance_to_aprime,
            "threshold": self.threshold,
            "codim": self.codim,
            "note": self.note,
        }


def distance_to_subspace(v, basis) -> float:
    """Euclidean distance from ``v`` to the span of the rows of ``basis``."""
    v = np.asarray(v, dtype=float)
    basis = np.asarray(basis, dtype=float).reshape(-1, v.shape[0])
    if basis.shape[0] == 0:
        return float(np.linalg.norm(v))
    q, r = np.linalg.qr(basis.T)
    diag = np.abs(np.diag(r))
    if diag.min() <= 1e-12 * max(1.0, diag.max()):
        raise DependentBasis("basis vectors are linearly dependent")
    return float(np.linalg.norm(v - q @ (q.T @ v)))


def classify(spec: SubgroupSpec, lyap: LyapunovEstimate, z: float = DEFAULT_Z) -> Verdict:
    """Decide Recurrent / Transient / Indeterminate for the walk on G / H.

    Let D be the distance from the estimated Lyapunov vector to a' and
    T = z * ||stderr|| + 1e-9.  With the full unipotent group and
    codim(a') in {1, 2}: D <= T is Recurrent, T < D <= 2T Indeterminate and
    D > 2T Transient.  Codimension three or more is Transient whatever D.
    Codimension zero is Recurrent.
    """
    if z <= 0:
        raise ValueError("z must be positive")
    if spec.dim != lyap.dim:
        raise DimensionMismatch(f"subgroup of SL({spec.dim}) vs Lyapunov vector of dim {lyap.dim}")
    dist = distance_to_subspace(lyap.mean.coords, spec.a_prime_basis)
    thr = z * float(np.linalg.norm(lyap.stderr)) + THRESHOLD_FLOOR
    codim = spec.codim

    def verdict(kind, reason, note=""):
        return Verdict(VerdictKind(kind), Reason(reason), dist, thr, codim, note)

    if spec.unipotent_part is UnipotentPart.PROPER:
        return verdict(VerdictKind.TRANSIENT, Reason.PROPER_UNIPOTENT, "H contains no conjugate of N")
    if codim == 0:
        return verdict(VerdictKind.RECURRENT, Reason.CRITERION_MET, "codimension 0: E = 0, compact fibres")
    if codim >= 3:
        if dist > 2 * thr:
            return verdict(VerdictKind.TRANSIENT, Reason.DRIFT_OFF_APRIME, f"codimension {codim} with drift")
        return verdict(VerdictKind.TRANSIENT, Reason.CODIM_AT_LEAST_3, f"codimension {codim}")
    if dist <= thr:
        return verdict(VerdictKind.RECURRENT, Reason.CRITERION_MET)
    if dist <= 2 * thr:
        return verdict(VerdictKind.INDETERMINATE, Reason.STATISTICALLY_AMBIGUOUS, "distance within (T, 2T]")
    return verdict(VerdictKind.TRANSIENT, Reason.DRIFT_OFF_APRIME)
