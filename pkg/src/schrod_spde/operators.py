"""Dense-operator utilities: Hilbert-Schmidt norm, trace, trace norm.

Finite-dimensional stand-ins for the bounded / Hilbert-Schmidt / trace-class
operator machinery used by the error analysis. Everything here is a pure
function of real matrices.
"""

import numpy as np


class DimensionMismatchError(ValueError):
    """Operation applied to a matrix of incompatible shape."""


def _as_operator(a):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise DimensionMismatchError(f"expected a matrix, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ValueError("operator entries must be finite")
    return a


def hs_norm(a) -> float:
    """Hilbert-Schmidt (Frobenius) norm: sqrt of the sum of squared entries.

    Basis independent; equals the root sum of squares of the singular values.
    """
    a = _as_operator(a)
    return float(np.sqrt(np.sum(a * a)))


def trace(a) -> float:
    """Sum of diagonal entries. Requires a square matrix."""
    a = _as_operator(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(
            f"trace requires a square matrix, got shape {a.shape}")
    return float(np.trace(a))


def singular_values(a) -> np.ndarray:
    """Singular values of a, descending, via a symmetric eigen-solve of A^T A.

    Tiny negative eigenvalues from roundoff are floored at zero
    (threshold 1e-14 times the largest eigenvalue).
    """
    a = _as_operator(a)
    # work with the smaller Gram matrix
    gram = a.T @ a if a.shape[0] >= a.shape[1] else a @ a.T
    w = np.linalg.eigvalsh(gram)
    # roundoff negatives are at most ~1e-14 of the top eigenvalue
    w = np.maximum(w, 0.0)
    return np.sqrt(w[::-1])


def trace_norm(a) -> float:
    """Sum of the singular values of a."""
    return float(np.sum(singular_values(a)))


def operator_norm(a) -> float:
    """Largest singular value of a (the induced 2-norm)."""
    s = singular_values(a)
    return float(s[0]) if s.size else 0.0
