"""Blocks, families of blocks, tail certificates and measure metadata.

A :class:`BlockFamily` is the indexed family ``(A_n)`` whose direct sum is
the operator under study.  Indices are 1-based.  Families are either an
explicit finite list of blocks or a generator ``n -> block`` declared
infinite, optionally accompanied by a :class:`TailCertificate` that makes
statements about the uninspected tail decidable.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, NamedTuple

import numpy as np

from .envelope import Envelope

EPS = float(np.finfo(float).eps)


class ConstructionError(ValueError):
    """Invalid block, family or certificate.  ``index`` is 1-based when known."""

    def __init__(self, message, index=None):
        self.index = index
        if index is not None:
            message = f"block {index}: {message}"
        super().__init__(message)


def numerically_zero(P, scale):
    """True when ``P`` vanishes up to rounding of a product of norm ``scale``."""
    dim = P.shape[0]
    return float(np.max(np.abs(P), initial=0.0)) <= dim * EPS * scale


@dataclass(frozen=True, eq=False)
class BlockMatrix:
    """One coordinate operator: a finite square complex matrix.

    Parameters
    ----------
    data : array_like
        Square matrix (a scalar is read as a 1x1 block).  Stored as a
        read-only ``complex128`` array.
    normal : bool, optional
        Declared normality, validated against ``||A*A - AA*||``.
    nilpotency_order : int, optional
        Declared ``k`` with ``A^k = 0`` and ``A^(k-1) != 0``.  Powers are
        compared with zero at rounding level, ``dim * eps * ||A||^k``.
    """

    data: np.ndarray
    normal: bool | None = None
    nilpotency_order: int | None = None

    def __post_init__(self):
        a = np.array(self.data, dtype=complex)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ConstructionError(f"block must be a nonempty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ConstructionError("block has non-finite entries")
        a.setflags(write=False)
        object.__setattr__(self, "data", a)
        if self.nilpotency_order is not None:
            self._check_nilpotent(int(self.nilpotency_order))
        if self.normal:
            comm = a.conj().T @ a - a @ a.conj().T
            if np.linalg.norm(comm, 2) > a.shape[0] * EPS * max(self.norm, 1e-300) ** 2 * 4:
                raise ConstructionError("block declared normal but A*A != AA*")

    def _check_nilpotent(self, k):
        if k < 1:
            raise ConstructionError("nilpotency order must be positive")
        a = self.data
        P = np.eye(a.shape[0], dtype=complex)
        for _ in range(k):
            prev = P
            P = P @ a
        if not numerically_zero(P, self.norm**k):
            raise ConstructionError(f"declared nilpotency order {k} but A^{k} != 0")
        if k > 1 and numerically_zero(prev, self.norm ** (k - 1)):
            raise ConstructionError(f"declared nilpotency order {k} but A^{k - 1} = 0")

    @property
    def dim(self):
        return self.data.shape[0]

    @cached_property
    def norm(self):
        """Operator 2-norm (largest singular value)."""
        return float(np.linalg.norm(self.data, 2))

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def __repr__(self):
        return f"BlockMatrix(dim={self.dim}, norm={self.norm:.6g})"


def as_block(value):
    return value if isinstance(value, BlockMatrix) else BlockMatrix(value)


@dataclass(frozen=True)
class MeasureSpec:
    """Point masses ``mu({n})``.  ``None`` weights mean the counting measure.

    Weights may be a finite sequence (explicit families) or an envelope in
    ``n`` (generator families).  They are validated strictly positive and
    otherwise never enter any computation.
    """

    weights: tuple | Envelope | None = None

    def __post_init__(self):
        w = self.weights
        if isinstance(w, str):
            w = Envelope(w)
        elif w is not None and not isinstance(w, Envelope):
            w = tuple(float(x) for x in w)
            if not w:
                raise ConstructionError("measure weights must be nonempty")
            bad = [i + 1 for i, x in enumerate(w) if not (math.isfinite(x) and x > 0)]
            if bad:
                raise ConstructionError("measure weights must be positive", index=bad[0])
        if isinstance(w, Envelope):
            positive = w.expr.is_positive
            # far samples may underflow to zero, so only near ones decide an undecided sign
            if positive is False or (positive is None and np.any(w.samples(1)[:64] <= 0)):
                raise ConstructionError("measure weight envelope must be positive")
        object.__setattr__(self, "weights", w)

    @property
    def counting(self):
        return self.weights is None

    def weight(self, n):
        if self.weights is None:
            return 1.0
        if isinstance(self.weights, Envelope):
            return self.weights(n)
        return self.weights[n - 1]

    def to_json(self):
        if self.weights is None:
            return "counting"
        if isinstance(self.weights, Envelope):
            return self.weights.text
        return list(self.weights)


COUNTING = MeasureSpec()


@dataclass(frozen=True)
class TailCertificate:
    """Closed-form facts about blocks ``n >= start``.

    upper
        ``b(n) >= ||A_n||``, nonincreasing on ``[start, oo)``.
    lower
        ``l(n) <= ||A_n||``.
    singular
        ``s(n, q) >= s_q(A_n)``, an envelope in ``n`` and ``q``.
    clearance
        ``dist(tau, sigma(A_n))`` as an expression in ``n`` and ``tau``.
    dim_bound
        Upper bound on block dimensions.
    monotone
        Declared monotonicity of ``upper``; checked, never trusted blindly.
    """

    start: int = 1
    upper: Envelope | None = None
    lower: Envelope | None = None
    singular: Envelope | None = None
    clearance: Envelope | None = None
    dim_bound: int | None = None
    monotone: bool = True

    def __post_init__(self):
        if int(self.start) < 1:
            raise ConstructionError("tail start index must be positive")
        object.__setattr__(self, "start", int(self.start))
        object.__setattr__(self, "upper", Envelope.coerce(self.upper))
        object.__setattr__(self, "lower", Envelope.coerce(self.lower))
        object.__setattr__(self, "singular", Envelope.coerce(self.singular, ("n", "q")))
        object.__setattr__(self, "clearance", Envelope.coerce(self.clearance, ("n", "tau")))
        if self.dim_bound is not None and int(self.dim_bound) < 1:
            raise ConstructionError("dim_bound must be positive")
        if self.upper is not None:
            if not self.monotone or not self.upper.is_nonincreasing(self.start):
                raise ConstructionError(f"upper envelope {self.upper.text!r} is not nonincreasing")
            if self.lower is not None:
                lo, up = self.lower.samples(self.start), self.upper.samples(self.start)
                if np.any(lo > up * (1 + 1e-12)):
                    raise ConstructionError("lower envelope exceeds upper envelope")

    def to_json(self):
        out = {"N0": self.start}
        for key, env in (("upper", self.upper), ("lower", self.lower),
                         ("singular", self.singular), ("clearance", self.clearance)):
            if env is not None:
                out[key] = env.text
        if self.dim_bound is not None:
            out["dim_bound"] = self.dim_bound
        return out


@dataclass(frozen=True, eq=False)
class BlockFamily:
    """The family ``(A_n)_{n>=1}``; build with :func:`make_explicit` or :func:`make_generator`."""

    blocks: tuple[BlockMatrix, ...] | None = None
    generator: Callable[[int], object] | None = None
    tail: TailCertificate | None = None
    measure: MeasureSpec = COUNTING
    name: str = ""
    description: dict = field(default_factory=dict, repr=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    @property
    def explicit(self):
        return self.blocks is not None

    @property
    def size(self):
        """Number of blocks, ``math.inf`` for generator families."""
        return len(self.blocks) if self.explicit else math.inf

    def block(self, n):
        """The ``n``-th block (1-based)."""
        if n < 1:
            raise IndexError("block indices start at 1")
        if self.explicit:
            return self.blocks[n - 1]
        cached = self._cache.get(n)
        if cached is None:
            try:
                cached = as_block(self.generator(n))
            except ConstructionError as exc:
                raise ConstructionError(str(exc), index=n) from exc
            with self._lock:
                cached = self._cache.setdefault(n, cached)
        return cached

    def covered_by(self, N):
        """True when the first ``N`` blocks are the whole family."""
        return self.explicit and N >= len(self.blocks)


def make_explicit(blocks, measure=COUNTING, *, name="explicit", tail=None):
    """Finite family from a list of blocks, in list order."""
    blocks = list(blocks)
    if not blocks:
        raise ConstructionError("explicit family needs at least one block")
    checked = []
    for i, b in enumerate(blocks, start=1):
        try:
            checked.append(as_block(b))
        except ConstructionError as exc:
            raise ConstructionError(str(exc), index=i) from exc
    if isinstance(measure, (list, tuple, str)):
        measure = MeasureSpec(measure)
    if isinstance(measure.weights, tuple) and len(measure.weights) != len(checked):
        raise ConstructionError("measure needs one weight per block")
    return BlockFamily(blocks=tuple(checked), tail=tail, measure=measure, name=name)


def make_generator(gen, tail=None, measure=COUNTING, *, name="generator", description=None):
    """Lazily evaluated infinite family ``n -> gen(n)``.

    ``gen`` must be pure: the same index always gives the same block.
    Blocks are cached after first evaluation.
    """
    if isinstance(measure, (list, tuple)):
        raise ConstructionError("generator families need the counting measure or a weight envelope")
    if isinstance(measure, str):
        measure = MeasureSpec(None if measure == "counting" else measure)
    return BlockFamily(generator=gen, tail=tail, measure=measure, name=name,
                       description=dict(description or {}))


class Truncation(NamedTuple):
    blocks: list
    clamped: bool


def truncate(family, N):
    """First ``N`` blocks in index order; explicit families clamp ``N`` to their size."""
    if N < 1:
        raise ValueError("truncation level must be positive")
    if family.explicit:
        clamped = N > len(family.blocks)
        return Truncation(list(family.blocks[:N]), clamped)
    return Truncation([family.block(n) for n in range(1, N + 1)], False)


def inspected(family, N):
    """``(index, block)`` pairs for the first ``N`` blocks."""
    blocks, _ = truncate(family, N)
    return list(enumerate(blocks, start=1))
