"""Dense spectral primitives on a single block.

Everything here is double precision LAPACK via numpy.  Tolerances scale with
``eps * dim * ||A||`` in the usual rank-decision way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .family import EPS, BlockMatrix, as_block, numerically_zero

# largest power norm considered representable before declaring divergence
OVERFLOW = 1e300


class KernelError(ArithmeticError):
    """A dense factorization failed to converge."""

    def __init__(self, message, index=None):
        self.index = index
        if index is not None:
            message = f"block {index}: {message}"
        super().__init__(message)


class Diverged(ArithmeticError):
    """Matrix powers (or a polynomial) left the representable range.

    ``index`` is the first power ``m`` whose norm is not representable;
    ``norms`` holds the norms computed before it.
    """

    def __init__(self, index, norms=()):
        self.index = index
        self.norms = list(norms)
        super().__init__(f"norm of power {index} exceeds the representable range")


@dataclass(frozen=True)
class EigenSet:
    values: np.ndarray
    residual: float

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class SingularList:
    values: np.ndarray

    def __len__(self):
        return len(self.values)

    @property
    def smax(self):
        return float(self.values[0])

    @property
    def smin(self):
        return float(self.values[-1])


@dataclass(frozen=True)
class Polynomial:
    """``a_0 + a_1 z + ... + a_q z^q``; the degree is the declared length minus one."""

    coefficients: tuple

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coefficients)
        if not coeffs:
            raise ValueError("polynomial needs at least one coefficient")
        if not all(math.isfinite(c.real) and math.isfinite(c.imag) for c in coeffs):
            raise ValueError("polynomial coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def monomial(cls, m):
        return cls((0,) * m + (1,))

    @property
    def degree(self):
        return len(self.coefficients) - 1

    def __call__(self, z):
        # numpy.polyval wants the leading coefficient first
        return np.polyval(self.coefficients[::-1], z)


def _svd_values(a, index=None):
    try:
        return np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise KernelError(f"SVD did not converge: {exc}", index) from exc


def eigenvalues(A):
    """Eigenvalue multiset of a block with a backward-error estimate.

    Blocks carrying a validated ``nilpotency_order`` flag return exact
    zeros: their computed eigenvalues would otherwise scatter on a circle of
    radius ``~ eps^(1/k)`` around the origin.
    """
    A = as_block(A)
    if A.nilpotency_order is not None:
        return EigenSet(np.zeros(A.dim, dtype=complex), 0.0)
    a = A.data
    try:
        w, v = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        raise KernelError(f"eigensolver did not converge: {exc}") from exc
    if not np.all(np.isfinite(w)):
        raise KernelError("eigensolver returned non-finite values")
    scale = max(np.linalg.norm(a, "fro"), np.finfo(float).tiny)
    resid = np.linalg.norm(a @ v - v * w, axis=0) / (scale * np.linalg.norm(v, axis=0))
    return EigenSet(w, float(np.max(resid)))


def spectral_radius(A):
    return float(np.max(np.abs(eigenvalues(A).values)))


def singular_values(A):
    """Singular values, nonincreasing."""
    A = as_block(A)
    return SingularList(_svd_values(A.data))


def singular_tolerance(a):
    """Rank-decision threshold ``dim * eps * ||a||`` for a square array."""
    return a.shape[0] * EPS * float(np.linalg.norm(a, 2))


def resolvent_norm(A, tau):
    """``||(A - tau I)^{-1}|| = 1 / s_min(A - tau I)``.

    Returns ``math.inf`` (the singular signal) when ``s_min`` is below the
    rank-decision threshold of ``A - tau I``.
    """
    A = as_block(A)
    shifted = A.data - complex(tau) * np.eye(A.dim)
    s = _svd_values(shifted)
    if s[-1] <= A.dim * EPS * s[0]:
        return math.inf
    return float(1.0 / s[-1])


def iter_powers(A, M):
    """Yield ``(m, A^m)`` for ``m = 1..M`` by repeated multiplication."""
    a = as_block(A).data
    P = a
    with np.errstate(over="ignore", invalid="ignore"):
        for m in range(1, M + 1):
            if m > 1:
                P = P @ a
            yield m, P


def power_norms(A, M):
    """``||A^m||`` for ``m = 1..M`` (raises :class:`Diverged` on overflow)."""
    if M < 1:
        raise ValueError("M must be positive")
    norms = []
    for m, P in iter_powers(A, M):
        if not np.all(np.isfinite(P)):
            raise Diverged(m, norms)
        value = float(np.linalg.norm(P, 2))
        if not math.isfinite(value) or value > OVERFLOW:
            raise Diverged(m, norms)
        norms.append(value)
    return np.array(norms)


def apply_polynomial(A, p):
    """Horner evaluation of ``p(A)``; raises :class:`Diverged` on overflow."""
    A = as_block(A)
    if not isinstance(p, Polynomial):
        p = Polynomial(p)
    a = A.data
    eye = np.eye(A.dim, dtype=complex)
    coeffs = p.coefficients
    out = coeffs[-1] * eye
    with np.errstate(over="ignore", invalid="ignore"):
        for c in reversed(coeffs[:-1]):
            out = out @ a + c * eye
    if not np.all(np.isfinite(out)) or np.max(np.abs(out)) > OVERFLOW:
        raise Diverged(p.degree)
    return BlockMatrix(out)


def is_zero_power(P, A, m):
    """``A^m`` (given as ``P``) is zero up to rounding."""
    return numerically_zero(P, as_block(A).norm ** m)
