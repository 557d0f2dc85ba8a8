"""Small 3x3 tensor algebra used by every energy evaluation.

A ``Mat3`` is a ``numpy.ndarray`` of shape ``(3, 3)`` (row-major, C order).
All functions also accept stacks of shape ``(..., 3, 3)`` so the samplers can
evaluate whole batches at once.
"""

from __future__ import annotations

import numpy as np

IDENTITY = np.eye(3)


def as_mat3(m) -> np.ndarray:
    """Coerce ``m`` to a float array with trailing shape (3, 3).

    A flat 9-vector is read in row-major order. Non-finite entries are rejected.
    """
    a = np.asarray(m, dtype=float)
    if a.shape == (9,):
        a = a.reshape(3, 3)
    if a.shape[-2:] != (3, 3):
        raise ValueError(f"expected trailing shape (3, 3), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def det3(m) -> np.ndarray | float:
    """Determinant by cofactor expansion along the first row."""
    m = as_mat3(m)
    d = (
        m[..., 0, 0] * (m[..., 1, 1] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 1])
        - m[..., 0, 1] * (m[..., 1, 0] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 0])
        + m[..., 0, 2] * (m[..., 1, 0] * m[..., 2, 1] - m[..., 1, 1] * m[..., 2, 0])
    )
    return float(d) if np.ndim(d) == 0 else d


def right_cauchy_green(f) -> np.ndarray:
    """C = F^T F."""
    f = as_mat3(f)
    return np.swapaxes(f, -1, -2) @ f


def cofactor3(m) -> np.ndarray:
    """Cofactor matrix, so that ``m @ cofactor3(m).T == det3(m) * I``."""
    m = as_mat3(m)
    c = np.empty_like(m)
    c[..., 0, 0] = m[..., 1, 1] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 1]
    c[..., 0, 1] = m[..., 1, 2] * m[..., 2, 0] - m[..., 1, 0] * m[..., 2, 2]
    c[..., 0, 2] = m[..., 1, 0] * m[..., 2, 1] - m[..., 1, 1] * m[..., 2, 0]
    c[..., 1, 0] = m[..., 0, 2] * m[..., 2, 1] - m[..., 0, 1] * m[..., 2, 2]
    c[..., 1, 1] = m[..., 0, 0] * m[..., 2, 2] - m[..., 0, 2] * m[..., 2, 0]
    c[..., 1, 2] = m[..., 0, 1] * m[..., 2, 0] - m[..., 0, 0] * m[..., 2, 1]
    c[..., 2, 0] = m[..., 0, 1] * m[..., 1, 2] - m[..., 0, 2] * m[..., 1, 1]
    c[..., 2, 1] = m[..., 0, 2] * m[..., 1, 0] - m[..., 0, 0] * m[..., 1, 2]
    c[..., 2, 2] = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    return c


def det_along_rank_one(f, a, b) -> tuple:
    """Coefficients ``(c0, c1)`` with ``det(f + s * outer(a, b)) == c0 + c1 * s``.

    The determinant is affine along rank-one lines (matrix determinant lemma):
    ``c0 = det(f)`` and ``c1 = a . cof(f) b``.
    """
    f = as_mat3(f)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c0 = det3(f)
    c1 = np.einsum("...i,...ij,...j->...", a, cofactor3(f), b)
    if np.ndim(c1) == 0:
        c1 = float(c1)
    return c0, c1


def frobenius_sq(m) -> np.ndarray | float:
    m = as_mat3(m)
    r = np.sum(m * m, axis=(-2, -1))
    return float(r) if np.ndim(r) == 0 else r


def is_rotation(q, tol: float = 1e-10) -> bool:
    q = as_mat3(q)
    if q.shape != (3, 3):
        return False
    orth = np.max(np.abs(q.T @ q - IDENTITY))
    return bool(orth <= tol and abs(det3(q) - 1.0) <= tol)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform rotation from a normalized Gaussian quaternion."""
    w, x, y, z = rng.standard_normal(4)
    n = np.sqrt(w * w + x * x + y * y + z * z)
    w, x, y, z = w / n, x / n, y / n, z / n
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )
