"""Example families and the dense block-diagonal oracle.

Fixtures
--------
scalar_ones
    Blocks ``[1]``: every block compact, the direct sum (the identity) not.
nilpotent2
    ``[[0, 0], [alpha_n, 0]]``: ``||A_n|| = |alpha_n|``, ``A_n^2 = 0``.
volterra
    Midpoint discretization of ``f -> alpha_n * int_{-x}^{x} f(t) dt`` on
    ``L^2(-1, 1)``; nilpotent of order 2, norm close to ``4|alpha_n|/pi``.
diag_accumulating
    ``[1 - 1/n]``: eigenvalues accumulate at 1, which is continuous spectrum.
harmonic_diag
    ``[1/n]``: compact, in ``C_p`` exactly for ``p > 1``.

``alpha`` is either a finite list (explicit family) or an expression in
``n`` (generator family).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .envelope import Envelope
from .family import BlockMatrix, ConstructionError, TailCertificate, make_explicit, make_generator, truncate
from .kernel import eigenvalues, power_norms, resolvent_norm, singular_values

FIXTURES = ("scalar_ones", "nilpotent2", "volterra", "diag_accumulating", "harmonic_diag")
DEFAULT_DIM_CAP = 2000
DEFAULT_NQ = 64


def dim_cap():
    return int(os.environ.get("BLOCKSPEC_DIM_CAP", DEFAULT_DIM_CAP))


class ResourceError(RuntimeError):
    def __init__(self, required, allowed):
        self.required, self.allowed = required, allowed
        super().__init__(f"assembled dimension {required} exceeds the cap {allowed}")


@dataclass(frozen=True)
class FixtureSpec:
    name: str
    alpha: tuple | str | None = None
    nq: int = DEFAULT_NQ
    count: int | None = None

    def __post_init__(self):
        if self.name not in FIXTURES:
            raise ConstructionError(f"unknown fixture {self.name!r}; choose from {', '.join(FIXTURES)}")
        alpha = self.alpha
        if isinstance(alpha, (int, float, complex)):
            alpha = (alpha,)
        if alpha is not None and not isinstance(alpha, str):
            alpha = tuple(float(a) for a in alpha)
            if not alpha or not all(math.isfinite(a) for a in alpha):
                raise ConstructionError("alpha must be a nonempty list of finite numbers")
        if self.name in ("nilpotent2", "volterra") and alpha is None:
            alpha = "n"
        object.__setattr__(self, "alpha", alpha)
        if self.name == "volterra" and (int(self.nq) < 2 or int(self.nq) % 2):
            raise ConstructionError(f"volterra needs an even grid size nq >= 2, got {self.nq}")
        if self.count is not None and int(self.count) < 1:
            raise ConstructionError("count must be positive")

    def to_json(self):
        out = {"name": self.name}
        if self.alpha is not None:
            out["alpha"] = self.alpha if isinstance(self.alpha, str) else list(self.alpha)
        if self.name == "volterra":
            out["nq"] = self.nq
        if self.count is not None:
            out["count"] = self.count
        return out


def volterra_matrix(alpha, nq):
    """Midpoint-rule matrix of ``f -> alpha * int_{-x}^{x} f(t) dt``.

    Grid ``x_i = -1 + (i - 1/2) h``, ``h = 2/nq``, and
    ``M_ij = alpha * h * sign(x_i) * [|x_j| < |x_i|]``.  The comparison of
    ``|x_j|`` with ``|x_i|`` is done on integer distance ranks ``|2i - 1 - nq|``
    so mirrored grid points compare exactly; floating ``|x|`` values do not.
    """
    if nq < 2 or nq % 2:
        raise ConstructionError(f"volterra needs an even grid size nq >= 2, got {nq}")
    h = 2.0 / nq
    i = np.arange(1, nq + 1)
    rank = np.abs(2 * i - 1 - nq)
    sign = np.where(2 * i - 1 < nq, -1.0, 1.0)
    return alpha * h * sign[:, None] * (rank[None, :] < rank[:, None])


@lru_cache(maxsize=None)
def volterra_unit_norm(nq):
    """``||volterra_matrix(1, nq)||``; norms scale linearly in ``|alpha|``."""
    return float(np.linalg.norm(volterra_matrix(1.0, nq), 2))


def _abs_env(alpha, factor=1.0):
    text = f"abs({alpha})" if factor == 1.0 else f"{factor!r}*abs({alpha})"
    return Envelope(text)


def _scaled_tail(alpha, unit_lo, unit_hi, dim):
    """Tail certificate for blocks with ``||A_n|| = unit * |alpha(n)|``."""
    lower = _abs_env(alpha, unit_lo)
    upper = _abs_env(alpha, unit_hi)
    return TailCertificate(start=1, lower=lower, dim_bound=dim,
                           upper=upper if upper.is_nonincreasing(1) else None)


def _alpha_values(spec):
    if isinstance(spec.alpha, str):
        env = Envelope(spec.alpha)
        return env, None
    return None, spec.alpha


def make_fixture(spec=None, **params):
    """Build a fixture family from a :class:`FixtureSpec` or keyword parameters."""
    if spec is None or isinstance(spec, str):
        spec = FixtureSpec(spec or params.pop("name"), **params)
    name = spec.name
    desc = spec.to_json()

    if name == "nilpotent2":
        env, values = _alpha_values(spec)

        def block(a):
            return BlockMatrix([[0, 0], [a, 0]], nilpotency_order=2 if a != 0 else 1)

        if values is not None:
            return make_explicit([block(a) for a in values], name=name)
        return make_generator(lambda n: block(env(n)), _scaled_tail(spec.alpha, 1.0, 1.0, 2),
                              name=name, description=desc)

    if name == "volterra":
        env, values = _alpha_values(spec)
        nq = int(spec.nq)
        base = volterra_matrix(1.0, nq)

        def block(a):
            return BlockMatrix(a * base, nilpotency_order=2 if a != 0 else 1)

        if values is not None:
            return make_explicit([block(a) for a in values], name=name)
        c = volterra_unit_norm(nq)
        tail = _scaled_tail(spec.alpha, c * (1 - 1e-12), c * (1 + 1e-12), nq)
        return make_generator(lambda n: block(env(n)), tail, name=name, description=desc)

    if name == "scalar_ones":
        gen = lambda n: BlockMatrix([[1.0]], normal=True)  # noqa: E731
        tail = TailCertificate(start=1, upper="1", lower="1", dim_bound=1)
    elif name == "diag_accumulating":
        gen = lambda n: BlockMatrix([[1.0 - 1.0 / n]], normal=True)  # noqa: E731
        tail = TailCertificate(start=1, upper="1", lower="1 - 1/n", clearance="abs(tau - 1 + 1/n)", dim_bound=1)
    else:  # harmonic_diag
        gen = lambda n: BlockMatrix([[1.0 / n]], normal=True)  # noqa: E731
        tail = TailCertificate(start=1, upper="1/n", lower="1/n", singular="1/n",
                               clearance="abs(tau - 1/n)", dim_bound=1)
    if spec.count is not None:
        return make_explicit([gen(n) for n in range(1, spec.count + 1)], name=name)
    return make_generator(gen, tail, name=name, description=desc)


def assemble(family, N, cap=None):
    """Dense block-diagonal matrix of the first ``N`` blocks.

    Nilpotency and normality flags shared by every block carry over (a
    direct sum of nilpotents of order at most ``k`` is nilpotent of order the
    largest ``k``); they are re-validated on the assembled matrix.
    """
    blocks, _ = truncate(family, N)
    cap = dim_cap() if cap is None else cap
    total = sum(b.dim for b in blocks)
    if total > cap:
        raise ResourceError(total, cap)
    out = np.zeros((total, total), dtype=complex)
    k = 0
    for b in blocks:
        out[k:k + b.dim, k:k + b.dim] = b.data
        k += b.dim
    orders = [b.nilpotency_order for b in blocks]
    order = max(orders) if all(o is not None for o in orders) else None
    normal = True if all(b.normal for b in blocks) else None
    return BlockMatrix(out, normal=normal, nilpotency_order=order)


def greedy_match(a, b):
    """Max distance of a greedy nearest-neighbour matching of two multisets (``inf`` if sizes differ)."""
    a, b = list(np.asarray(a).ravel()), list(np.asarray(b).ravel())
    if len(a) != len(b):
        return math.inf
    worst = 0.0
    remaining = np.array(b, dtype=complex)
    for x in a:
        d = np.abs(remaining - x)
        k = int(np.argmin(d))
        worst = max(worst, float(d[k]))
        remaining = np.delete(remaining, k)
    return worst


def probe_points(eigs, norm, ring=8, gaps=4):
    """Deterministic resolvent probes: a ring of radius ``2(1 + norm)`` plus spectral-gap midpoints.

    Gap points are midpoints of consecutive eigenvalues sorted by real part,
    kept only when at least ``1e-3 * max(1, norm)`` from every eigenvalue.
    """
    eigs = np.asarray(eigs, dtype=complex)
    R = 2.0 * (1.0 + norm)
    pts = [R * np.exp(2j * np.pi * (k + 0.5) / ring) for k in range(ring)]
    order = eigs[np.lexsort((eigs.imag, eigs.real))]
    mids = (order[:-1] + order[1:]) / 2 if len(order) > 1 else np.zeros(0)
    clear = 1e-3 * max(1.0, norm)
    mids = [m for m in mids if np.min(np.abs(eigs - m)) > clear]
    if mids:
        pick = np.unique(np.linspace(0, len(mids) - 1, min(gaps, len(mids))).round().astype(int))
        pts += [mids[i] for i in pick]
    return [complex(p) for p in pts]


@dataclass
class Check:
    name: str
    passed: bool
    deviation: float
    tolerance: float
    computed: object = None
    expected: object = None


@dataclass
class OracleReport:
    checks: list
    assembled_dim: int

    @property
    def passed(self):
        return all(c.passed for c in self.checks)


def _run(name, tolerance, fn):
    try:
        deviation, computed, expected = fn()
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        return Check(name, False, math.inf, tolerance, computed=f"error: {exc}")
    return Check(name, bool(deviation <= tolerance), float(deviation), tolerance, computed, expected)


def oracle_check(family, N, M_powers=10, rtol=1e-6, cap=None):
    """Cross-check blockwise results against the assembled dense matrix.

    Checks: eigenvalue union, merged singular values, resolvent maximum at
    probe points outside the spectrum, and the interchange of the suprema
    over powers and blocks.  Absolute tolerance ``1e-8 * max(1, ||A||)`` for
    the first two, relative ``rtol`` for the last two.  Kernel failures fail
    the affected check without aborting the others.
    """
    blocks, _ = truncate(family, N)
    big = assemble(family, N, cap)
    scale = max(1.0, big.norm)
    atol = 1e-8 * scale
    checks = []

    def eig_union():
        union = np.concatenate([eigenvalues(b).values for b in blocks])
        dense = eigenvalues(big).values
        order = lambda z: (z.real, z.imag)  # noqa: E731
        return greedy_match(union, dense), sorted(union, key=order), sorted(dense, key=order)

    def sv_merge():
        merged = np.sort(np.concatenate([singular_values(b).values for b in blocks]))[::-1]
        dense = singular_values(big).values
        dev = float(np.max(np.abs(merged - dense))) if len(merged) == len(dense) else math.inf
        return dev, merged.tolist(), dense.tolist()

    def resolvent_max():
        eigs = np.concatenate([eigenvalues(b).values for b in blocks])
        worst, rows, dense_rows = 0.0, [], []
        for tau in probe_points(eigs, big.norm):
            blockwise = max(resolvent_norm(b, tau) for b in blocks)
            dense = resolvent_norm(big, tau)
            if math.isinf(blockwise) or math.isinf(dense):
                continue
            worst = max(worst, abs(blockwise - dense) / dense)
            rows.append((tau, blockwise))
            dense_rows.append((tau, dense))
        return worst, rows, dense_rows

    def interchange():
        per_block = np.max([power_norms(b, M_powers) for b in blocks], axis=0)
        dense = power_norms(big, M_powers)
        # powers that vanish up to rounding are compared at the rounding floor
        floor = big.dim * np.finfo(float).eps * big.norm ** np.arange(1, M_powers + 1)
        dev = float(np.max(np.abs(per_block - dense) / np.maximum(dense, floor)))
        return dev, per_block.tolist(), dense.tolist()

    checks.append(_run("eigenvalue_union", atol, eig_union))
    checks.append(_run("singular_merge", atol, sv_merge))
    checks.append(_run("resolvent_max", rtol, resolvent_max))
    checks.append(_run("power_interchange", rtol, interchange))
    return OracleReport(checks, big.dim)
