"""Independent reference computations used as test oracles.

Each oracle follows a different route from the package code: explicit loops,
classical (not modified) Gram-Schmidt, full products, normal equations.
"""

import math

import numpy as np


def sl_matrix(rng, d, low=-10.0, high=10.0):
    """Uniform entries in [low, high], sign-fixed and scaled to determinant one."""
    while True:
        m = rng.uniform(low, high, size=(d, d))
        det = np.linalg.det(m)
        if abs(det) > 1e-2:
            break
    if det < 0:
        m[0] = -m[0]
        det = -det
    return m / det ** (1.0 / d)


def orthogonal(rng, d):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def cgs_qr(m):
    """Classical Gram-Schmidt on the columns: m = q r with r upper triangular, diag(r) > 0."""
    m = np.asarray(m, dtype=float)
    d = m.shape[0]
    q = np.zeros((d, d))
    r = np.zeros((d, d))
    for j in range(d):
        v = m[:, j].copy()
        for i in range(j):
            r[i, j] = sum(q[k, i] * m[k, j] for k in range(d))
            v = v - r[i, j] * q[:, i]
        r[j, j] = math.sqrt(sum(x * x for x in v))
        q[:, j] = v / r[j, j]
    return q, r


def iwasawa_oracle(g):
    q, r = cgs_qr(g)
    diag = np.diag(r)
    return q, np.log(diag), r / diag[:, None]


def cocycle_oracle(g, frame):
    q, r = cgs_qr(np.asarray(g) @ frame)
    return np.log(np.diag(r)), q


def principal_angle_distance(f1, f2):
    """max_j sin(largest principal angle) between first-j-column spans, via block Gram SVDs."""
    d = f1.shape[0]
    worst = 0.0
    for j in range(1, d):
        s = np.linalg.svd(f1[:, :j].T @ f2[:, :j], compute_uv=False)
        cos_min = min(1.0, float(s.min()))
        worst = max(worst, math.sqrt(max(0.0, 1.0 - cos_min**2)))
    return worst


def naive_product(mats):
    """mats[n-1] @ ... @ mats[0] with explicit triple loops."""
    d = len(mats[0])
    p = [[float(i == j) for j in range(d)] for i in range(d)]
    for m in mats:
        p = [[sum(m[i][k] * p[k][j] for k in range(d)) for j in range(d)] for i in range(d)]
    return np.array(p)


def lstsq_residual(v, basis):
    """Distance from v to span(rows of basis) by the normal equations."""
    b = np.asarray(basis, dtype=float).T
    coef = np.linalg.solve(b.T @ b, b.T @ v)
    return float(np.linalg.norm(v - b @ coef))


def rotation(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])
