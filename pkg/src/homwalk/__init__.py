"""Random walks on homogeneous spaces SL(d, R) / H with H = A'N'.

Numerical toolkit for the Iwasawa cocycle of random matrix products: Lyapunov
vectors, the recurrence criterion for quotients by subgroups of AN, walk
simulation with empirical Green functions, and grid transfer operators on the
projective line.
"""

from .classify import Reason, Verdict, VerdictKind, classify
from .decomp import (
    AVector,
    FlagPoint,
    IwasawaTriple,
    cartan_projection,
    flag_distance,
    iwasawa_cocycle,
    iwasawa_decompose,
    project_cocycle,
)
from .estimators import (
    CartanProjector,
    CocycleCovariance,
    IwasawaTransformer,
    LyapunovEstimator,
    RecurrenceClassifier,
    TransferSpectrum,
)
from .exceptions import *  # noqa: F401,F403
from .group import FiniteMeasure, GroupElement, RandomStream, make_measure, point_mass
from .io import load_experiment, load_matrix, load_measure, load_spec
from .lyapunov import LyapunovEstimate, estimate_covariance, estimate_lyapunov
from .subgroup import SubgroupSpec, UnipotentPart

__version__ = "0.1.0"
