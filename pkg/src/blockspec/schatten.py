"""Compactness and Schatten-class membership of direct sums.

A direct sum of finite-dimensional blocks is compact iff the block norms
tend to zero.  Its singular values are the merged singular values of the
blocks, so membership in ``C_p`` is convergence of the double series
``sum_n sum_q s_q(A_n)^p``.  Infinite families are decided from the tail
certificate: limits of the closed-form envelopes, and integral-test bounds
on their tails.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from enum import Enum

from .family import truncate
from .kernel import singular_values


class Compactness(str, Enum):
    COMPACT = "compact"
    NOT_COMPACT = "not_compact"
    UNKNOWN = "unknown"


class Membership(str, Enum):
    MEMBER = "member"
    NOT_MEMBER = "not_member"
    UNKNOWN = "unknown"


@dataclass
class CompactnessVerdict:
    status: Compactness
    truncation_level: int
    prefix_norms: list = field(default_factory=list)
    witness: list = field(default_factory=list)  # indices with ||A_n|| >= bound
    bound: float | None = None
    detail: str = ""


def compactness_verdict(family, N):
    """Compact iff ``||A_n|| -> 0``, decided on the tail envelopes."""
    blocks, _ = truncate(family, N)
    norms = [b.norm for b in blocks]
    level = len(blocks)
    if family.explicit:
        return CompactnessVerdict(Compactness.COMPACT, level, norms,
                                  detail="finite direct sum of finite-dimensional blocks")
    tail = family.tail
    if tail is not None and tail.upper is not None and tail.upper.limit_value() == 0:
        return CompactnessVerdict(Compactness.COMPACT, level, norms,
                                  detail=f"upper envelope {tail.upper.text} -> 0")
    if tail is not None and tail.lower is not None:
        low = tail.lower.limit_value()
        if low is not None and low > 0:
            bound = low / 2 if math.isfinite(low) else 1.0
            witness = [n for n, v in enumerate(norms, start=1) if v >= bound]
            return CompactnessVerdict(Compactness.NOT_COMPACT, level, norms, witness, bound,
                                      detail=f"lower envelope {tail.lower.text} -> {low:g} > 0")
    return CompactnessVerdict(Compactness.UNKNOWN, level, norms, detail="tail certificate does not decide")


@dataclass
class SingularMerge:
    top_k: list  # (value, block index, rank within block)
    certified: bool
    truncation_level: int

    def values(self):
        return [v for v, _, _ in self.top_k]


def _stream(n, block):
    return [(-float(s), n, q) for q, s in enumerate(singular_values(block).values, start=1)]


def merged_singular_values(family, K, N):
    """Top ``K`` singular values of the direct sum over the first ``N`` blocks.

    ``certified`` means no uninspected block can contribute a value above
    the ``K``-th entry: either the family is fully covered, or the upper
    envelope satisfies ``b(N+1) < s_K``.
    """
    if K < 1:
        raise ValueError("K must be positive")
    blocks, _ = truncate(family, N)
    streams = [_stream(n, b) for n, b in enumerate(blocks, start=1)]
    top = [(-neg, n, q) for neg, n, q in itertools.islice(heapq.merge(*streams), K)]
    level = len(blocks)
    if family.covered_by(N):
        certified = True
    else:
        tail = family.tail
        certified = (len(top) == K and tail is not None and tail.upper is not None
                     and level + 1 >= tail.start and tail.upper(level + 1) < top[-1][0])
    return SingularMerge(top, certified, level)


@dataclass
class SchattenDecision:
    status: Membership
    p: float
    lo: float = math.nan  # bounds on sum_n sum_q s_q(A_n)^p
    hi: float = math.nan
    partial: float = math.nan
    truncation_level: int = 0
    excluded: tuple = ()
    witness: list = field(default_factory=list)
    detail: str = ""

    @property
    def norm(self):
        """Bracket on the Schatten ``p``-norm, ``(sum s^p)^(1/p)``."""
        return (self.lo ** (1 / self.p), self.hi ** (1 / self.p))

    @property
    def width(self):
        return self.hi - self.lo


def _block_power_sum(block, p):
    return math.fsum(float(s) ** p for s in singular_values(block).values)


def _tail_sum_bound(env, first, p, **values):
    """``sum_{n>=first} env(n)^p <= env(first)^p + int_first^oo env^p`` for nonincreasing ``env``."""
    integral = env.tail_integral(first, p, **values)
    if integral is None or math.isinf(integral):
        return integral
    return env(first, **values) ** p + integral


def schatten_decision(family, p, N, exclusions=()):
    """Decide membership of the direct sum (minus excluded indices) in ``C_p``.

    The partial sum over inspected, non-excluded blocks is an exactly
    rounded ``fsum`` so it does not depend on block order.  Tails are
    bounded above by the integral test on the singular-value envelope, or on
    ``dim_bound * b(n)^p`` from the norm envelope; divergence is certified by
    a lower norm envelope whose ``p``-th power has a divergent integral (or a
    positive limit).
    """
    p = float(p)
    if not p >= 1:
        raise ValueError(f"Schatten index must be >= 1, got {p}")
    excl = frozenset(int(i) for i in exclusions)
    if any(i < 1 for i in excl):
        raise ValueError("exclusion indices are 1-based")
    blocks, _ = truncate(family, N)
    level = len(blocks)
    terms = [(n, _block_power_sum(b, p)) for n, b in enumerate(blocks, start=1) if n not in excl]
    partial = math.fsum(t for _, t in terms)
    base = dict(p=p, partial=partial, truncation_level=level, excluded=tuple(sorted(excl)))
    if family.covered_by(N):
        return SchattenDecision(Membership.MEMBER, lo=partial, hi=partial,
                                detail="finite sum over all blocks", **base)

    compact = compactness_verdict(family, N)
    if compact.status is Compactness.NOT_COMPACT:
        return SchattenDecision(Membership.NOT_MEMBER, lo=partial, hi=math.inf, witness=compact.witness,
                                detail="not compact: " + compact.detail, **base)

    tail = family.tail
    first = level + 1
    if tail is None or first < tail.start:
        return SchattenDecision(Membership.UNKNOWN, lo=partial, hi=math.inf,
                                detail="no tail certificate covering index %d" % first, **base)

    if tail.lower is not None:
        low = tail.lower.limit_value()
        diverges = low is not None and low > 0
        if not diverges and tail.lower.is_nonincreasing(first):
            diverges = tail.lower.tail_integral(first, p) == math.inf
        if diverges:
            # partial sums at doubling checkpoints, for the record
            checkpoints = sorted({2**k for k in range(level.bit_length())} | {level})
            witness = [(k, math.fsum(t for n, t in terms if n <= k)) for k in checkpoints]
            return SchattenDecision(Membership.NOT_MEMBER, lo=partial, hi=math.inf, witness=witness,
                                    detail=f"sum of ({tail.lower.text})^p diverges (integral test)", **base)

    tail_bound = None
    if tail.singular is not None and tail.dim_bound is not None:
        per_q = []
        for q in range(1, tail.dim_bound + 1):
            if not tail.singular.is_nonincreasing(first, q=q):
                per_q = None
                break
            per_q.append(_tail_sum_bound(tail.singular, first, p, q=q))
        if per_q is not None and all(v is not None for v in per_q):
            tail_bound = math.fsum(per_q)
            how = "singular-value envelope"
    if tail_bound is None and tail.upper is not None and tail.dim_bound is not None:
        t = _tail_sum_bound(tail.upper, first, p)
        if t is not None:
            tail_bound = tail.dim_bound * t
            how = f"{tail.dim_bound} * ({tail.upper.text})^p"
    if tail_bound is not None and math.isfinite(tail_bound):
        return SchattenDecision(Membership.MEMBER, lo=partial, hi=partial + tail_bound,
                                detail=f"tail <= {tail_bound:.17g} by integral test on {how}", **base)
    return SchattenDecision(Membership.UNKNOWN, lo=partial, hi=math.inf,
                            detail="tail certificate does not decide", **base)
