"""Spectrum of a direct sum from the spectra of its blocks.

With every index carrying positive mass, the point spectrum of the direct
sum is the union of the block point spectra, and the resolvent set is the
set of ``tau`` in every block resolvent set with ``sup_n ||R_tau(A_n)||``
finite.  When the supremum is infinite, ``tau`` is continuous spectrum.
Finite-dimensional blocks have no residual spectrum, hence neither does
the sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import sympy as sp

from .envelope import N as NSYM
from .family import truncate
from .kernel import KernelError, eigenvalues, resolvent_norm

EIG_RTOL = 1e-8


class PointSpectrumError(ValueError):
    """``tau`` is an eigenvalue of an inspected block."""

    def __init__(self, tau, index, eigenvalue):
        self.tau, self.index, self.eigenvalue = tau, index, eigenvalue
        super().__init__(f"tau={tau} is an eigenvalue of block {index} ({eigenvalue})")


class Kind(str, Enum):
    POINT = "point"
    CONTINUOUS = "continuous"
    RESIDUAL = "residual"
    RESOLVENT = "resolvent"
    UNKNOWN = "unknown"


class SupStatus(str, Enum):
    FINITE = "finite"
    DIVERGENT = "divergent"
    UNKNOWN = "unknown"


def eig_tolerance(block):
    return EIG_RTOL * max(1.0, block.norm)


def _block_eigs(index, block):
    try:
        return eigenvalues(block).values
    except KernelError as exc:
        raise KernelError(str(exc), index) from exc


@dataclass
class SpectralValue:
    value: complex
    sources: list  # (block index, multiplicity)

    @property
    def indices(self):
        return [i for i, _ in self.sources]


@dataclass
class SpectrumReport:
    eigenvalues: list
    truncation_level: int
    complete: bool
    raw: dict = field(default_factory=dict, repr=False)  # index -> eigenvalue array

    def multiset(self):
        """All block eigenvalues with algebraic multiplicity."""
        if not self.raw:
            return np.zeros(0, dtype=complex)
        return np.concatenate([self.raw[i] for i in sorted(self.raw)])

    def values(self):
        return np.array([e.value for e in self.eigenvalues])

    def clusters_of(self, index):
        return {k for k, e in enumerate(self.eigenvalues) if index in e.indices}


def point_spectrum(family, N):
    """Union of the eigenvalues of the first ``N`` blocks, deduplicated.

    Clustering is greedy in index order with the block-relative tolerance
    ``1e-8 * max(1, ||A_n||)``; the first occurrence is the representative.
    """
    blocks, _ = truncate(family, N)
    clusters, raw = [], {}
    for n, block in enumerate(blocks, start=1):
        w = _block_eigs(n, block)
        raw[n] = w
        tol = eig_tolerance(block)
        for lam in w:
            for c in clusters:
                if abs(c.value - lam) <= tol:
                    if c.sources[-1][0] == n:
                        c.sources[-1] = (n, c.sources[-1][1] + 1)
                    else:
                        c.sources.append((n, 1))
                    break
            else:
                clusters.append(SpectralValue(complex(lam), [(n, 1)]))
    return SpectrumReport(clusters, len(blocks), family.covered_by(N), raw)


def _point_witness(blocks, tau):
    for n, block in enumerate(blocks, start=1):
        w = _block_eigs(n, block)
        if w.size:
            k = int(np.argmin(np.abs(w - tau)))
            if abs(w[k] - tau) <= eig_tolerance(block):
                return n, complex(w[k])
    return None


@dataclass
class ResolventSup:
    status: SupStatus
    tau: complex
    lo: float = math.nan
    hi: float = math.nan
    prefix_max: float = math.nan
    truncation_level: int = 0
    witness: list = field(default_factory=list)  # (index, resolvent norm)
    detail: str = ""


def _record_setters(norms):
    out, best = [], -math.inf
    for n, v in enumerate(norms, start=1):
        if v > best:
            out.append((n, v))
            best = v
    return out


def _tail_zero(clearance, tau, first):
    """An integer ``n >= first`` where the declared clearance vanishes, if sympy finds one."""
    expr = clearance.bind(tau=tau)
    try:
        sols = sp.solveset(expr, NSYM, sp.Interval(first, sp.oo))
    except Exception:
        return None
    if not isinstance(sols, sp.FiniteSet):
        return None
    for s in sorted(sols, key=lambda x: float(sp.re(x))):
        v = complex(s)
        k = round(v.real)
        if abs(v.imag) < 1e-8 and abs(v.real - k) < 1e-8 and k >= first:
            return k
    return None


def resolvent_sup(family, tau, N):
    """Decide ``sup_n ||R_tau(A_n)||``.

    Explicit families covered by ``N`` give the exact maximum.  Generator
    families combine the prefix maximum with the tail certificate: a
    clearance ``dist(tau, sigma(A_n)) -> 0`` proves divergence because
    ``||R_tau(A_n)|| >= 1/dist``; an upper envelope with ``|tau| > b(N+1)``
    bounds every tail resolvent by ``1/(|tau| - b(N+1))`` (Neumann series).
    Anything else is ``unknown`` with the prefix maximum.

    Raises
    ------
    PointSpectrumError
        If ``tau`` is an eigenvalue of an inspected block.
    """
    tau = complex(tau)
    blocks, _ = truncate(family, N)
    hit = _point_witness(blocks, tau)
    if hit:
        raise PointSpectrumError(tau, *hit)
    norms = []
    for n, block in enumerate(blocks, start=1):
        r = resolvent_norm(block, tau)
        if math.isinf(r):
            raise PointSpectrumError(tau, n, tau)
        norms.append(r)
    pmax = max(norms)
    inspected = len(blocks)
    base = dict(tau=tau, prefix_max=pmax, truncation_level=inspected)
    if family.covered_by(N):
        return ResolventSup(SupStatus.FINITE, lo=pmax, hi=pmax, witness=[(int(np.argmax(norms)) + 1, pmax)],
                            detail="exact maximum over all blocks", **base)
    tail = family.tail
    first = inspected + 1
    if tail is None or first < tail.start:
        return ResolventSup(SupStatus.UNKNOWN, lo=pmax, hi=math.inf,
                            detail="no tail certificate covering index %d" % first, **base)
    if tail.clearance is not None:
        # an uninspected block may have tau as an eigenvalue
        zero = _tail_zero(tail.clearance, tau, first)
        if zero is not None:
            hit = _point_witness([family.block(zero)], tau)
            if hit:
                raise PointSpectrumError(tau, zero, hit[1])
        if tail.clearance.limit(tau=tau) == 0:
            return ResolventSup(SupStatus.DIVERGENT, lo=pmax, hi=math.inf, witness=_record_setters(norms),
                                detail="clearance dist(tau, sigma(A_n)) -> 0, so ||R_tau(A_n)|| >= 1/dist -> oo",
                                **base)
    if tail.upper is not None:
        b = tail.upper(first)
        if abs(tau) > b:
            bound = 1.0 / (abs(tau) - b)
            return ResolventSup(SupStatus.FINITE, lo=pmax, hi=max(pmax, bound),
                                witness=[(int(np.argmax(norms)) + 1, pmax)],
                                detail=f"tail resolvents <= 1/(|tau| - b({first})) = {bound:.17g}", **base)
    return ResolventSup(SupStatus.UNKNOWN, lo=pmax, hi=math.inf,
                        detail="tail certificate does not decide this tau", **base)


@dataclass
class PointClass:
    kind: Kind
    tau: complex
    truncation_level: int
    witness_index: int | None = None
    eigenvalue: complex | None = None
    bound: tuple | None = None  # (lo, hi) of the resolvent supremum
    witness: list = field(default_factory=list)
    detail: str = ""


def classify_point(family, tau, N):
    """Classify ``tau`` as point, continuous or resolvent (or unknown).

    Residual is never produced: finite-dimensional blocks have empty
    residual spectrum, so the direct sum has none either.
    """
    tau = complex(tau)
    blocks, _ = truncate(family, N)
    hit = _point_witness(blocks, tau)
    if hit:
        return PointClass(Kind.POINT, tau, len(blocks), witness_index=hit[0], eigenvalue=hit[1],
                          detail="eigenvalue of an inspected block")
    try:
        sup = resolvent_sup(family, tau, N)
    except PointSpectrumError as exc:
        return PointClass(Kind.POINT, tau, len(blocks), witness_index=exc.index, eigenvalue=exc.eigenvalue,
                          detail=str(exc))
    kind = {SupStatus.FINITE: Kind.RESOLVENT, SupStatus.DIVERGENT: Kind.CONTINUOUS,
            SupStatus.UNKNOWN: Kind.UNKNOWN}[sup.status]
    return PointClass(kind, tau, sup.truncation_level, bound=(sup.lo, sup.hi), witness=sup.witness,
                      detail=sup.detail)


def minimal_support(family, N):
    """Inclusion-minimal set of block indices whose spectra cover the union.

    Greedy in index order (keep a block iff it adds an uncovered
    eigenvalue), followed by one pruning pass that drops any kept block whose
    eigenvalues are covered by the other kept blocks.
    """
    report = point_spectrum(family, N)
    covered, kept = set(), []
    for n in range(1, report.truncation_level + 1):
        mine = report.clusters_of(n)
        if mine - covered:
            kept.append(n)
            covered |= mine
    for n in list(kept):
        others = set().union(*(report.clusters_of(m) for m in kept if m != n))
        if report.clusters_of(n) <= others:
            kept.remove(n)
    return kept
