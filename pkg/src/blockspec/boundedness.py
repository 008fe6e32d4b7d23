"""Power boundedness and polynomial boundedness of blocks and direct sums.

The power bound of a direct sum is the supremum of the block power bounds
(the two suprema over blocks and exponents commute), and likewise for the
polynomial bound, because ``p(A)`` acts blockwise.  Per-block bounds are
reported as intervals ``[lo, hi]``; ``lo`` always comes from an explicit
witness, ``hi`` from a certificate whose provenance is recorded in
``method``.  Verdicts relying on sampling rather than a proof carry
``heuristic=True``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .family import EPS, as_block, truncate
from .kernel import (OVERFLOW, Diverged, Polynomial, apply_polynomial, eigenvalues, iter_powers,
                     is_zero_power)

SPECTRAL_RTOL = 1e-8
RATIO_RUN = 5
RATIO_Q = 0.9
KREISS_RADII = 1.0 + np.logspace(-4, 0, 32)
KREISS_ANGLES = 64
CAUCHY_RADII = 8
CAUCHY_ANGLES = 256
NILPOTENT_GRID = 20001
MAX_RANDOM_DEGREE = 16


class Verdict(str, Enum):
    BOUNDED = "bounded"
    UNBOUNDED = "unbounded"
    UNKNOWN = "unknown"


@dataclass
class BlockBound:
    """Bracket ``[lo, hi]`` on ``M_w`` or ``M_p`` of one block (``hi = inf`` when absent)."""

    verdict: Verdict
    lo: float
    hi: float
    method: str
    witness: dict = field(default_factory=dict)
    heuristic: bool = False

    @property
    def exact(self):
        return self.verdict is Verdict.BOUNDED and self.lo == self.hi


def _unbounded(method, heuristic=False, **witness):
    return BlockBound(Verdict.UNBOUNDED, math.inf, math.inf, method, witness, heuristic)


def _tolerance(A):
    return SPECTRAL_RTOL * max(1.0, A.norm)


def _contraction_slack(A):
    # computed 2-norms carry O(dim * eps) relative error
    return 4 * A.dim * EPS


def _smin_batch(a, points):
    eye = np.eye(a.shape[0])
    stack = a[None, :, :] - points[:, None, None] * eye[None, :, :]
    return np.linalg.svd(stack, compute_uv=False)[:, -1]


def kreiss_constant(A):
    """Sampled Kreiss constant ``max (|z| - 1) ||R_z(A)||`` over ``1 < |z| <= 2``.

    A lower estimate of the true constant, which itself bounds ``sup ||A^m||``
    from below.  Returns ``(value, argmax z)``.
    """
    A = as_block(A)
    theta = 2 * np.pi * np.arange(KREISS_ANGLES) / KREISS_ANGLES
    z = (KREISS_RADII[:, None] * np.exp(1j * theta)[None, :]).ravel()
    smin = _smin_batch(A.data, z)
    with np.errstate(divide="ignore"):
        vals = (np.abs(z) - 1.0) / smin
    k = int(np.argmax(vals))
    return float(vals[k]), complex(z[k])


def _unimodular_defect(A, eigs, tol):
    """A defective eigenvalue on the unit circle, by a numerical rank test.

    Eigenvalues within ``1e-5 * max(1, ||A||)`` are clustered (defective
    eigenvalues split like ``eps^(1/k)``); the cluster is defective when
    ``A - lambda I`` has fewer near-zero singular values than the cluster size.
    """
    ctol = 1e-5 * max(1.0, A.norm)
    unused = list(eigs)
    while unused:
        lam = unused.pop(0)
        cluster = [lam] + [mu for mu in unused if abs(mu - lam) <= ctol]
        unused = [mu for mu in unused if abs(mu - lam) > ctol]
        centre = complex(np.mean(cluster))
        if abs(abs(centre) - 1.0) > tol + ctol:
            continue
        s = np.linalg.svd(A.data - centre * np.eye(A.dim), compute_uv=False)
        geometric = int(np.sum(s <= math.sqrt(EPS) * max(1.0, s[0])))
        if geometric < len(cluster):
            return centre, len(cluster), geometric
    return None


def power_bound_block(A, M_max=100):
    """Bracket the power bound ``M_w = max(1, sup_m ||A^m||)`` of one block.

    Regimes, in order: declared or detected nilpotency (exact); spectral
    radius above ``1 + tol`` (unbounded, eigenvalue witness); some
    ``||A^j|| <= 1`` within ``M_max`` powers (exact, since every higher power
    factors through ``A^j``); spectral radius below ``1 - tol`` (geometric
    tail rule, else Kreiss bracket); spectral radius within ``tol`` of 1
    (defective unimodular eigenvalue means unbounded, else Kreiss bracket
    ``[max(1, K), e * dim * K]``).
    """
    A = as_block(A)
    if M_max < 1:
        raise ValueError("M_max must be positive")
    k = A.nilpotency_order
    if k is not None:
        norms = [float(np.linalg.norm(P, 2)) for _, P in iter_powers(A, k - 1)] if k > 1 else []
        M = max([1.0] + norms)
        return BlockBound(Verdict.BOUNDED, M, M, "nilpotent", {"order": k, "norms": norms})

    tol = _tolerance(A)
    eigs = eigenvalues(A).values
    rho = float(np.max(np.abs(eigs)))
    if rho > 1 + tol:
        lam = complex(eigs[int(np.argmax(np.abs(eigs)))])
        return _unbounded("spectral-radius", eigenvalue=lam, spectral_radius=rho)

    one = 1.0 + _contraction_slack(A)
    norms, run, geometric_at = [], 0, None
    for m, P in iter_powers(A, M_max):
        if not np.all(np.isfinite(P)):
            return _unbounded("diverged", first_overflow=m, norms=norms)
        if m <= A.dim and is_zero_power(P, A, m):
            M = max([1.0] + norms)
            return BlockBound(Verdict.BOUNDED, M, M, "nilpotent", {"order": m, "norms": norms})
        v = float(np.linalg.norm(P, 2))
        if v > OVERFLOW:
            return _unbounded("diverged", first_overflow=m, norms=norms)
        if v <= one:
            M = max([1.0] + norms)
            return BlockBound(Verdict.BOUNDED, M, M, "power-certificate", {"power": m, "norm": v, "norms": norms})
        run = run + 1 if norms and v <= RATIO_Q * norms[-1] else 0
        norms.append(v)
        if run >= RATIO_RUN and geometric_at is None:
            geometric_at = m

    lo = max([1.0] + norms)
    if rho < 1 - tol:
        if geometric_at is not None:
            return BlockBound(Verdict.BOUNDED, lo, lo, "geometric",
                              {"ratio_run_end": geometric_at, "q": RATIO_Q, "norms": norms}, heuristic=True)
        K, z = kreiss_constant(A)
        lo = max(lo, K)
        return BlockBound(Verdict.BOUNDED, lo, max(lo, math.e * A.dim * K), "kreiss",
                          {"kreiss": K, "z": z, "norms": norms}, heuristic=True)

    defect = _unimodular_defect(A, eigs, tol)
    if defect is not None:
        lam, alg, geo = defect
        return _unbounded("defective-unimodular", heuristic=True, eigenvalue=lam,
                          algebraic=alg, geometric=geo, norms=norms)
    K, z = kreiss_constant(A)
    lo = max(lo, K)
    return BlockBound(Verdict.BOUNDED, lo, max(lo, math.e * A.dim * K), "kreiss",
                      {"kreiss": K, "z": z, "norms": norms}, heuristic=True)


def poly_sup_norm(p, grid):
    """Certified bracket on ``||p||_inf`` over the closed unit disk.

    By the maximum principle the supremum is attained on the circle; it is
    sampled at ``grid`` equispaced angles.  Bernstein's inequality
    ``|p'| <= q ||p||`` bounds the loss between samples, giving
    ``||p|| <= lo / (1 - pi q / grid)``.
    """
    if not isinstance(p, Polynomial):
        p = Polynomial(p)
    q = p.degree
    if grid < 4 * (q + 1):
        raise ValueError(f"grid must be at least 4*(degree+1) = {4 * (q + 1)}, got {grid}")
    theta = 2 * np.pi * np.arange(grid) / grid
    lo = float(np.max(np.abs(p(np.exp(1j * theta)))))
    return lo, lo / (1.0 - math.pi * q / grid)


def _nilpotent2_bound(s):
    """Certified upper bound on ``M_p`` of a nilpotent block of order 2 with norm ``s``.

    ``p(A) = a0 I + a1 A`` and ``|a1| <= 1 - |a0|^2`` (Schwarz-Pick), so
    ``M_p = max_a g(a)`` with ``g(a) = ||a I + (1 - a^2) A||`` which, from the
    2x2 reduction of such blocks, equals ``(c + sqrt(c^2 + 4a^2))/2`` with
    ``c = (1 - a^2) s``.  ``|g'| <= 1 + 2s`` bounds the grid error.
    """
    a = np.linspace(0.0, 1.0, NILPOTENT_GRID)
    c = (1 - a**2) * s
    g = (c + np.sqrt(c**2 + 4 * a**2)) / 2
    step = 1.0 / (NILPOTENT_GRID - 1)
    return min(1.0 + s, float(np.max(g)) + (1 + 2 * s) * step / 2)


def _cauchy_bound(A, rho):
    """``min_r r * max_{|z|=r} ||R_z(A)||`` over radii in ``(rho, 1]``.

    ``1/||R_z|| = s_min(A - zI)`` is 1-Lipschitz in ``z``, so the sampled
    minimum minus half the chord between samples is a certified lower bound.
    """
    theta = 2 * np.pi * np.arange(CAUCHY_ANGLES) / CAUCHY_ANGLES
    best = math.inf
    for r in rho + (1 - rho) * np.arange(1, CAUCHY_RADII + 1) / CAUCHY_RADII:
        smin = float(np.min(_smin_batch(A.data, r * np.exp(1j * theta))))
        margin = smin - r * math.sin(math.pi / CAUCHY_ANGLES)
        if margin > 0:
            best = min(best, r / margin)
    return best


def _monomial_norms(A, limit):
    """``[(m, ||A^m||)]`` for ``m <= limit``, stopping at a zero power or overflow."""
    out = []
    for m, P in iter_powers(A, limit):
        if not np.all(np.isfinite(P)):
            break
        v = float(np.linalg.norm(P, 2))
        if v > OVERFLOW:
            break
        out.append((m, v))
        if is_zero_power(P, A, m):
            break
    return out


def poly_bound_block(A, samples=32, seed=0):
    """Bracket the polynomial bound ``M_p`` of one block.

    ``lo`` is the best ratio ``||p(A)|| / ||p||_inf`` over monomials
    (``||z^m||_inf = 1``), the constant 1 and ``samples`` seeded random
    polynomials of degree at most 16 (their sup norms bracketed by
    :func:`poly_sup_norm`).  ``hi`` comes from the nilpotent-of-order-2
    closed form, the von Neumann inequality for contractions, or the Cauchy
    integral bound when the spectral radius is below 1; otherwise it is
    absent (``inf``).  A spectral radius above 1, or a power-unbounded
    block, is reported unbounded with monomial witnesses.
    """
    A = as_block(A)
    tol = _tolerance(A)
    nil = A.nilpotency_order
    if nil is None and is_zero_power(A.data @ A.data, A, 2):
        nil = 1 if is_zero_power(A.data, A, 1) else 2
    rho = 0.0 if nil is not None else float(np.max(np.abs(eigenvalues(A).values)))

    mono_limit = 4 * A.dim if nil is None else max(nil - 1, 1)
    monomials = _monomial_norms(A, mono_limit)
    if rho > 1 + tol:
        return _unbounded("spectral-radius", spectral_radius=rho, monomials=monomials, seed=seed)
    if nil is None and rho >= 1 - tol:
        power = power_bound_block(A)
        if power.verdict is Verdict.UNBOUNDED:
            return _unbounded(power.method, heuristic=power.heuristic, monomials=monomials, seed=seed)

    lo, witness = 1.0, {"kind": "constant"}
    for m, v in monomials:
        if v > lo:
            lo, witness = v, {"kind": "monomial", "degree": m}
    rng = np.random.default_rng(seed)
    for i in range(samples):
        deg = int(rng.integers(0, MAX_RANDOM_DEGREE + 1))
        coeffs = rng.standard_normal(deg + 1) + 1j * rng.standard_normal(deg + 1)
        p = Polynomial(coeffs)
        sup_hi = poly_sup_norm(p, max(64, 8 * (deg + 1)))[1]
        # powers at or beyond the nilpotency order vanish
        reduced = p if nil is None else Polynomial(coeffs[: max(nil, 1)])
        try:
            ratio = np.linalg.norm(apply_polynomial(A, reduced).data, 2) / sup_hi
        except Diverged:
            continue
        if ratio > lo:
            lo, witness = float(ratio), {"kind": "random", "sample": i, "degree": deg}
    witness["seed"] = seed

    if nil is not None and nil <= 2:
        hi, method = (1.0, "von-neumann") if nil == 1 else (_nilpotent2_bound(A.norm), "nilpotent-2")
    elif A.norm <= 1.0 + _contraction_slack(A):
        hi, method = 1.0, "von-neumann"
    elif rho < 1 - tol:
        hi, method = _cauchy_bound(A, rho), "cauchy"
    else:
        hi, method = math.inf, "none"
    if hi < 1.0:
        hi = 1.0
    # the witnesses are exact ratios, so lo > hi can only be rounding
    lo = min(lo, hi)
    verdict = Verdict.BOUNDED if math.isfinite(hi) else Verdict.UNKNOWN
    return BlockBound(verdict, lo, hi, method, witness)


@dataclass
class FamilyBoundReport:
    """Per-block brackets and the family verdict; ``kind`` is ``power`` or ``polynomial``."""

    kind: str
    per_block: dict
    verdict: Verdict
    lo: float
    hi: float
    truncation_level: int
    witness: dict = field(default_factory=dict)
    detail: str = ""
    seed: int | None = None


PowerBoundReport = FamilyBoundReport
PolyBoundReport = FamilyBoundReport


def _family_verdict(kind, family, N, per_block, seed=None):
    level = len(per_block)
    base = dict(kind=kind, per_block=per_block, truncation_level=level, seed=seed)
    bad = [n for n, b in per_block.items() if b.verdict is Verdict.UNBOUNDED]
    lo = max(b.lo for b in per_block.values())
    if bad:
        return FamilyBoundReport(verdict=Verdict.UNBOUNDED, lo=math.inf, hi=math.inf,
                                 witness={"unbounded_blocks": bad},
                                 detail="a block is unbounded, so the direct sum is", **base)
    tail = family.tail
    if not family.explicit and tail is not None and tail.lower is not None:
        low = tail.lower.limit_value()
        if low == math.inf:
            lows = [(n, b.lo) for n, b in per_block.items()]
            return FamilyBoundReport(verdict=Verdict.UNBOUNDED, lo=math.inf, hi=math.inf,
                                     witness={"polynomial": "z", "block_lower_bounds": lows,
                                              "envelope": tail.lower.text},
                                     detail=f"||A_n|| >= {tail.lower.text} -> oo bounds every block's "
                                            "power and polynomial bound from below", **base)
    hi = max(b.hi for b in per_block.values())
    if family.covered_by(N):
        verdict = Verdict.BOUNDED if math.isfinite(hi) else Verdict.UNKNOWN
        return FamilyBoundReport(verdict=verdict, lo=lo, hi=hi, detail="maximum over all blocks", **base)
    first = level + 1
    if (math.isfinite(hi) and tail is not None and tail.upper is not None and first >= tail.start
            and tail.upper(first) <= 1.0):
        return FamilyBoundReport(verdict=Verdict.BOUNDED, lo=lo, hi=max(hi, 1.0),
                                 detail=f"tail blocks are contractions (b({first}) <= 1)", **base)
    return FamilyBoundReport(verdict=Verdict.UNKNOWN, lo=lo, hi=math.inf,
                             detail="tail certificate does not decide", **base)


def power_bound_family(family, N, M_max=100):
    """Power bound of the direct sum: ``M_w(A) = sup_n M_w(A_n)``."""
    blocks, _ = truncate(family, N)
    per_block = {n: power_bound_block(b, M_max) for n, b in enumerate(blocks, start=1)}
    return _family_verdict("power", family, N, per_block)


def block_seed(seed, index):
    """Per-block seed derived from ``(seed, index)``; independent of evaluation order."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def poly_bound_family(family, N, samples=32, seed=0):
    """Polynomial bound of the direct sum: ``M_p(A) = sup_n M_p(A_n)``."""
    blocks, _ = truncate(family, N)
    per_block = {n: poly_bound_block(b, samples, block_seed(seed, n)) for n, b in enumerate(blocks, start=1)}
    return _family_verdict("polynomial", family, N, per_block, seed=seed)
