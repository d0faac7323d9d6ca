"""Dense matrix primitives: exponential, pivoted solves, spectral abscissa.

Matrices are plain 2-D numpy arrays. The exponential is the degree-adaptive
scaling-and-squaring Pade scheme of Higham (2005).
"""

import warnings

import numpy as np
from scipy import linalg as sla

from .errors import DimensionError, NumericalError, SingularMatrixError

__all__ = [
    "as_matrix",
    "mat_exp",
    "solve_linear",
    "spectral_abscissa",
    "LUSolver",
    "SINGULAR_RTOL",
]

SINGULAR_RTOL = 1e-14

_PADE_COEFFS = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0, 960960.0,
         16380.0, 182.0, 1.0),
}
# 1-norm bounds below which the degree-m approximant is accurate to unit roundoff
_THETA = ((3, 1.495585217958292e-2), (5, 2.539398330063230e-1),
          (7, 9.504178996162932e-1), (9, 2.097847961257068e0))
_THETA13 = 5.371920351148152e0


def as_matrix(a, name="matrix", square=False):
    """Coerce ``a`` to a finite 2-D float (or complex) array."""
    m = np.asarray(a)
    if m.dtype.kind not in "fc":
        m = m.astype(float)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    elif m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DimensionError(f"{name} has non-finite entries")
    return m


def _pade(A, m):
    b = _PADE_COEFFS[m]
    n = A.shape[0]
    ident = np.eye(n, dtype=A.dtype)
    A2 = A @ A
    if m == 13:
        A4 = A2 @ A2
        A6 = A4 @ A2
        U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
                 + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
        V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
             + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
    else:
        powers = [ident, A2]
        for _ in range(2, (m + 1) // 2):
            powers.append(powers[-1] @ A2)
        U = sum(b[2 * j + 1] * powers[j] for j in range((m + 1) // 2))
        U = A @ U
        V = sum(b[2 * j] * powers[j] for j in range((m + 1) // 2))
    return np.linalg.solve(V - U, V + U)


def mat_exp(A):
    """Matrix exponential by scaling and squaring with a Pade approximant.

    Parameters
    ----------
    A : array_like, shape (n, n)
        Real or complex square matrix.

    Returns
    -------
    ndarray
        ``exp(A)``, same dtype family as ``A``.
    """
    A = as_matrix(A, "A", square=True)
    norm1 = np.linalg.norm(A, 1)
    for m, theta in _THETA:
        if norm1 <= theta:
            return _pade(A, m)
    s = 0
    if norm1 > _THETA13:
        s = max(0, int(np.ceil(np.log2(norm1 / _THETA13))))
    R = _pade(A / 2.0 ** s, 13)
    for _ in range(s):
        R = R @ R
    return R


class LUSolver:
    """Partial-pivot LU factorization reused across many right-hand sides.

    ``solve(B)`` returns ``A^{-1} B``; ``solve_left(b)`` returns ``b A^{-1}``
    for row vectors (or stacks of rows). The matrix is rejected as singular
    when a pivot falls below ``rtol * scale`` (``scale`` defaults to
    ``||A||_inf``).
    """

    def __init__(self, A, rtol=SINGULAR_RTOL, scale=None):
        A = as_matrix(A, "A", square=True)
        self.shape = A.shape
        with warnings.catch_warnings():
            # exact singularity is reported below as SingularMatrixError
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            self._lu = sla.lu_factor(A, check_finite=False)
        pivots = np.abs(np.diag(self._lu[0]))
        if scale is None:
            scale = np.linalg.norm(A, np.inf)
        if scale == 0.0 or pivots.min() < rtol * scale:
            raise SingularMatrixError(
                f"matrix is numerically singular (min pivot {pivots.min():.3e}, "
                f"norm {scale:.3e})")

    def solve(self, B):
        B = np.asarray(B)
        if B.shape[0] != self.shape[0]:
            raise DimensionError(f"right-hand side has {B.shape[0]} rows, "
                                 f"expected {self.shape[0]}")
        return sla.lu_solve(self._lu, B, check_finite=False)

    def solve_left(self, b):
        b = np.asarray(b)
        if b.shape[-1] != self.shape[0]:
            raise DimensionError(f"row vector has {b.shape[-1]} columns, "
                                 f"expected {self.shape[0]}")
        return sla.lu_solve(self._lu, b.T, trans=1, check_finite=False).T


def solve_linear(A, B):
    """Solve ``A X = B`` with a pivoted LU factorization.

    Raises
    ------
    SingularMatrixError
        If a pivot falls below ``1e-14 * ||A||_inf``.
    """
    B = np.asarray(B)
    vector = B.ndim == 1
    X = LUSolver(A).solve(B.reshape(-1, 1) if vector else B)
    return X.ravel() if vector else X


def spectral_abscissa(A):
    """Largest real part over the eigenvalues of ``A``."""
    A = as_matrix(A, "A", square=True)
    try:
        ev = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration failed: {exc}") from exc
    return float(np.max(ev.real))
