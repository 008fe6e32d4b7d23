import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blockspec import (
    ConstructionError,
    FixtureSpec,
    ResourceError,
    assemble,
    make_explicit,
    make_fixture,
    oracle_check,
    resolvent_norm,
)
from blockspec.fixtures import dim_cap, greedy_match, probe_points, volterra_matrix, volterra_unit_norm
from conftest import random_blocks


def test_nilpotent2_blocks():
    fam = make_fixture("nilpotent2", alpha=(1, 2))
    assert np.array_equal(fam.blocks[0].data, [[0, 0], [1, 0]])
    assert np.array_equal(fam.blocks[1].data, [[0, 0], [2, 0]])
    assert all(b.nilpotency_order == 2 for b in fam.blocks)
    assert make_fixture("nilpotent2", alpha=(0,)).blocks[0].nilpotency_order == 1


def test_nilpotent2_generator_default_alpha():
    fam = make_fixture("nilpotent2")
    assert not fam.explicit
    assert fam.block(7).norm == 7
    assert fam.tail.lower.text == "abs(n)"


def test_volterra_block():
    M = make_fixture("volterra", alpha=(1,), nq=200).blocks[0]
    assert abs(M.norm - 4 / math.pi) <= 0.02 * 4 / math.pi
    assert np.max(np.abs(M.data @ M.data)) <= 200 * np.finfo(float).eps * M.norm**2


def test_volterra_square_cancels_exactly_in_rational_arithmetic():
    from fractions import Fraction

    nq = 10
    h = Fraction(2, nq)
    rank = [abs(2 * i - 1 - nq) for i in range(1, nq + 1)]
    sign = [-1 if 2 * i - 1 < nq else 1 for i in range(1, nq + 1)]
    M = [[h * sign[i] * (rank[j] < rank[i]) for j in range(nq)] for i in range(nq)]
    M2 = [[sum(M[i][k] * M[k][j] for k in range(nq)) for j in range(nq)] for i in range(nq)]
    assert all(v == 0 for row in M2 for v in row)
    assert np.array_equal(volterra_matrix(1.0, nq), np.array(M, dtype=float))


def test_volterra_validation():
    with pytest.raises(ConstructionError):
        FixtureSpec("volterra", nq=51)
    with pytest.raises(ConstructionError):
        FixtureSpec("volterra", nq=0)
    with pytest.raises(ConstructionError):
        FixtureSpec("nope")
    with pytest.raises(ConstructionError):
        FixtureSpec("nilpotent2", alpha=(1, math.nan))


def test_scalar_fixtures():
    ones = make_fixture("scalar_ones")
    assert [b.data[0, 0] for b in (ones.block(n) for n in range(1, 6))] == [1] * 5
    acc = make_fixture("diag_accumulating")
    assert acc.block(4).data[0, 0] == 0.75 and acc.block(4).normal
    assert make_fixture("harmonic_diag").block(8).data[0, 0] == 0.125
    assert make_fixture("harmonic_diag", count=3).size == 3


def test_assemble_examples():
    big = assemble(make_explicit([[[2]], [[3]]]), 2)
    assert np.array_equal(big.data, [[2, 0], [0, 3]])
    nil = assemble(make_fixture("nilpotent2", alpha=(1, 2)), 2)
    assert nil.dim == 4
    assert np.array_equal(nil.data[:2, 2:], np.zeros((2, 2)))
    assert nil.nilpotency_order == 2


def test_assemble_cap(monkeypatch):
    with pytest.raises(ResourceError) as info:
        assemble(make_fixture("volterra", nq=64), 10, cap=100)
    assert (info.value.required, info.value.allowed) == (640, 100)
    monkeypatch.setenv("BLOCKSPEC_DIM_CAP", "3")
    assert dim_cap() == 3
    with pytest.raises(ResourceError):
        assemble(make_explicit([np.eye(2), np.eye(2)]), 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_assembly_is_norm_faithful(seed):
    fam = make_explicit(random_blocks(np.random.default_rng(seed), 4))
    big = assemble(fam, 4)
    assert big.norm == pytest.approx(max(b.norm for b in fam.blocks), rel=1e-10)


def test_probe_points_avoid_spectrum():
    eigs = np.array([0, 1, 2, 5])
    pts = probe_points(eigs, 5.0)
    assert len(pts) >= 8
    assert all(np.min(np.abs(eigs - p)) > 1e-3 for p in pts)
    assert pts == probe_points(eigs, 5.0)


def test_greedy_match():
    assert greedy_match([1, 2], [2, 1]) == 0
    assert greedy_match([1], [1, 2]) == math.inf


def test_oracle_nilpotent():
    rep = oracle_check(make_fixture("nilpotent2", alpha=(1, 2, 3)), 3, 10)
    assert rep.passed
    assert [c.name for c in rep.checks] == ["eigenvalue_union", "singular_merge", "resolvent_max", "power_interchange"]
    assert rep.assembled_dim == 6


def test_oracle_scalars_resolvent_at_zero():
    fam = make_explicit([[[2]], [[3]]])
    rep = oracle_check(fam, 2)
    assert rep.passed
    assert max(resolvent_norm(b, 0) for b in fam.blocks) == 0.5
    assert resolvent_norm(assemble(fam, 2), 0) == pytest.approx(0.5, rel=1e-15)


def test_oracle_volterra():
    fam = make_fixture("volterra", alpha=(1,), nq=100)
    rep = oracle_check(fam, 1)
    assert rep.passed
    M = fam.blocks[0].data
    assert np.max(np.abs(M @ M)) <= 100 * np.finfo(float).eps * np.linalg.norm(M, 2) ** 2


def test_oracle_failure_lists_both_sides():
    rep = oracle_check(make_explicit([np.eye(2)]), 1, rtol=-1.0)
    failed = [c for c in rep.checks if not c.passed]
    assert failed
    assert all(c.computed is not None and c.expected is not None for c in failed)


def test_volterra_norm_convergence():
    errs = [abs(volterra_unit_norm(nq) - 4 / math.pi) for nq in (50, 100, 200, 400, 800)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(1.8 < r < 2.2 for r in ratios)
    assert errs[-1] < 0.01 * 4 / math.pi
