"""Dense symmetric-matrix algebra used by every other module.

Conventions fixed here, once, for the whole package:

* ``vec`` stacks columns (Fortran order), so ``vec([[1, 2], [3, 4]])`` is
  ``(1, 3, 2, 4)``.  All d^2-indexed objects (Fisher matrices, weights,
  estimator outputs) share this convention.
* ``symmetriser(d)`` is the d^2 x d^2 matrix Z with Z vec(A) = vec(A + A^T);
  equivalently the covariance of vec(Z Z^T) for a standard normal vector.
  It is PSD, singular for d >= 2, and commutes with every A (x) A.

Dimensions stay small (d <= ~10), so everything is dense; no sparse paths.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "vec",
    "mat",
    "kron",
    "symmetriser",
    "commutation",
    "psd_sqrt",
    "inner_weighted",
    "check_symmetric",
    "is_positive_definite",
    "symmetrize",
]

#: relative eigenvalue clamp used by :func:`psd_sqrt`
SQRT_CLAMP_REL = 1e-12


def vec(m: np.ndarray) -> np.ndarray:
    """Column-stacking vectorisation of a matrix."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"vec expects a matrix, got ndim={m.ndim}")
    return m.flatten(order="F")


def mat(v: np.ndarray, d: int | None = None) -> np.ndarray:
    """Inverse of :func:`vec`; ``d`` may be omitted for square outputs."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"mat expects a vector, got ndim={v.ndim}")
    if d is None:
        d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise ValueError(f"cannot reshape length-{v.size} vector into {d}x{d}")
    return v.reshape((d, d), order="F")


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; satisfies vec(A B C) = (C^T (x) A) vec(B)."""
    return np.kron(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def commutation(d: int) -> np.ndarray:
    """The d^2 x d^2 permutation K with K vec(A) = vec(A^T)."""
    k = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            k[i + j * d, j + i * d] = 1.0
    return k


def symmetriser(d: int) -> np.ndarray:
    """Return Z with Z vec(A) = vec(A + A^T), i.e. Cov(vec(ZZ^T)), Z ~ N(0, I_d)."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return np.eye(d * d) + commutation(d)


def psd_sqrt(s: np.ndarray, tol_clamp: float | None = None) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues in ``[-tol, tol]`` are clamped to 0; anything below ``-tol``
    raises, since the input is then not PSD to working precision.  The
    default tolerance is ``1e-12`` relative to the largest eigenvalue.
    """
    s = check_symmetric(s)
    w, q = np.linalg.eigh(s)
    tol = tol_clamp if tol_clamp is not None else SQRT_CLAMP_REL * max(w[-1], 0.0)
    if w[0] < -tol:
        raise ValueError(f"matrix is not PSD: min eigenvalue {w[0]:.3e} < -{tol:.3e}")
    w = np.clip(w, 0.0, None)
    root = (q * np.sqrt(w)) @ q.T
    return 0.5 * (root + root.T)


def inner_weighted(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> float:
    """Weighted matrix inner product vec(A)^T C vec(B)."""
    va, vb = vec(a), vec(b)
    c = np.asarray(c, dtype=float)
    if c.shape != (va.size, vb.size):
        raise ValueError(f"weight matrix shape {c.shape} does not match vec sizes")
    return float(va @ c @ vb)


def check_symmetric(s: np.ndarray, atol: float = 0.0) -> np.ndarray:
    """Validate (and return) a square symmetric matrix."""
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {s.shape}")
    if not np.allclose(s, s.T, rtol=0.0, atol=atol):
        raise ValueError("matrix is not symmetric")
    return s


def symmetrize(s: np.ndarray) -> np.ndarray:
    """Project onto the symmetric part, (S + S^T) / 2."""
    s = np.asarray(s, dtype=float)
    return 0.5 * (s + s.T)


def is_positive_definite(s: np.ndarray, tol: float = 0.0) -> bool:
    """True when all eigenvalues of the symmetric matrix exceed ``tol``."""
    s = check_symmetric(s, atol=1e-12 * (1.0 + float(np.abs(s).max(initial=0.0))))
    w = np.linalg.eigvalsh(symmetrize(s))
    return bool(w[0] > tol)
