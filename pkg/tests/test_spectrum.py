import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from blockspec import (
    BlockMatrix,
    Kind,
    PointSpectrumError,
    SupStatus,
    TailCertificate,
    assemble,
    classify_point,
    make_explicit,
    make_fixture,
    make_generator,
    minimal_support,
    point_spectrum,
    resolvent_sup,
)
from blockspec.fixtures import greedy_match
from conftest import random_blocks


def test_union_of_scalars():
    rep = point_spectrum(make_explicit([[[2]], [[3]]]), 2)
    assert sorted(rep.values().real) == [2, 3]
    assert rep.complete
    assert [e.indices for e in rep.eigenvalues] == [[1], [2]]


def test_nilpotent_union_has_all_provenance():
    rep = point_spectrum(make_fixture("nilpotent2", alpha=(1, 2, 3, 4)), 4)
    assert len(rep.eigenvalues) == 1
    assert rep.eigenvalues[0].value == 0
    assert rep.eigenvalues[0].sources == [(1, 2), (2, 2), (3, 2), (4, 2)]


def test_generator_union_is_truncated():
    rep = point_spectrum(make_fixture("harmonic_diag"), 5)
    assert not rep.complete
    assert rep.truncation_level == 5


def test_union_matches_assembled_blocks():
    rng = np.random.default_rng(3)
    blocks = [rng.random((d, d)) + 1j * rng.random((d, d)) for d in (2, 3, 4)]
    fam = make_explicit(blocks)
    big = assemble(fam, 3)
    assert big.dim == 9
    rep = point_spectrum(fam, 3)
    assert greedy_match(rep.multiset(), oracles.eigenvalues(big.data)) <= 1e-8 * max(1, big.norm)


def test_resolvent_sup_explicit():
    fam = make_explicit([[[0]], [[0, 0], [3, 0]]])
    sup = resolvent_sup(fam, 2, 2)
    assert sup.status is SupStatus.FINITE
    inv = np.linalg.inv(assemble(fam, 2).data - 2 * np.eye(3))
    expected = oracles.top_singular_value(inv)
    assert sup.lo == sup.hi
    assert sup.hi == pytest.approx(expected, rel=1e-10)
    # -(1/tau)(I + A/tau) for the nilpotent block
    nil_inv = -(np.eye(2) + np.array([[0, 0], [3, 0]]) / 2) / 2
    assert sup.hi == pytest.approx(max(0.5, oracles.top_singular_value(nil_inv)), rel=1e-10)


def test_resolvent_sup_divergent_witness():
    fam = make_fixture("diag_accumulating")
    sup = resolvent_sup(fam, 1.0, 20)
    assert sup.status is SupStatus.DIVERGENT
    idx = [i for i, _ in sup.witness]
    norms = [v for _, v in sup.witness]
    assert idx == list(range(1, 21))
    assert norms == pytest.approx(idx, rel=1e-12)


def test_resolvent_sup_neumann_tail():
    sup = resolvent_sup(make_fixture("harmonic_diag"), 5, 10)
    assert sup.status is SupStatus.FINITE
    assert sup.lo == 1 / 4
    assert sup.hi == 1 / 4


def test_resolvent_sup_errors_and_unknowns():
    with pytest.raises(PointSpectrumError) as info:
        resolvent_sup(make_explicit([[[1]], [[2]]]), 2, 2)
    assert info.value.index == 2
    bare = make_generator(lambda n: [[1 / n]])
    sup = resolvent_sup(bare, 5, 10)
    assert sup.status is SupStatus.UNKNOWN
    assert sup.prefix_max == 1 / 4
    # tau inside the envelope disk with no clearance: undecided
    tail_only = make_generator(lambda n: [[1 / n]], TailCertificate(upper="1/n"))
    assert resolvent_sup(tail_only, 0.05j, 10).status is SupStatus.UNKNOWN
    assert resolvent_sup(tail_only, 0.5j, 10).status is SupStatus.FINITE


def test_clearance_zero_at_future_eigenvalue_is_not_continuous():
    # 1/n hits 1/40 exactly beyond the inspected prefix
    sup = classify_point(make_fixture("harmonic_diag"), 1 / 40, 10)
    assert sup.kind is Kind.POINT
    assert sup.witness_index == 40


def test_classify_examples():
    assert classify_point(make_fixture("nilpotent2", alpha=(1, 2)), 0, 2).kind is Kind.POINT
    assert classify_point(make_fixture("nilpotent2", alpha=(1, 2)), 0, 2).witness_index == 1
    one = classify_point(make_explicit([[[1]]]), 2, 1)
    assert one.kind is Kind.RESOLVENT and one.bound == (1.0, 1.0)
    assert classify_point(make_fixture("diag_accumulating"), 1, 50).kind is Kind.CONTINUOUS
    assert classify_point(make_fixture("harmonic_diag"), 0, 50).kind is Kind.CONTINUOUS


def test_minimal_support_examples():
    assert minimal_support(make_explicit([[[1]], [[1]], [[2]]]), 3) == [1, 3]
    assert minimal_support(make_fixture("nilpotent2"), 5) == [1]
    fam = make_explicit([np.diag([1, 2]), np.diag([3]), np.diag([1, 3]), np.diag([2])])
    assert minimal_support(fam, 4) == [1, 2]


def test_minimal_support_prunes():
    fam = make_explicit([np.diag([1.0]), np.diag([2.0]), np.diag([1.0, 2.0, 3.0])])
    assert minimal_support(fam, 3) == [3]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.complex_numbers(max_magnitude=4, allow_nan=False, allow_infinity=False))
def test_verdicts_exclusive_and_never_residual(seed, tau):
    fam = make_explicit(random_blocks(np.random.default_rng(seed), 3, 3))
    verdict = classify_point(fam, tau, 3)
    assert verdict.kind in (Kind.POINT, Kind.RESOLVENT)
    assert verdict.kind is not Kind.RESIDUAL
    if verdict.kind is Kind.RESOLVENT:
        assert math.isfinite(verdict.bound[1])
        with pytest.raises(PointSpectrumError):
            resolvent_sup(fam, point_spectrum(fam, 3).eigenvalues[0].value, 3)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 30), st.integers(1, 30), st.sampled_from([0.5, 1.0, 1.5, 1 - 1 / 7, 2j]))
def test_monotone_evidence(n, m, tau):
    fam = make_fixture("diag_accumulating")
    lo, hi = sorted((n, m))
    a, b = classify_point(fam, tau, lo).kind, classify_point(fam, tau, hi).kind
    if a is Kind.POINT:
        assert b is Kind.POINT
    if a is Kind.CONTINUOUS:
        assert b is not Kind.RESOLVENT


def test_measure_does_not_change_results():
    blocks = random_blocks(np.random.default_rng(11), 4)
    f1 = make_explicit(blocks)
    f2 = make_explicit(blocks, measure=(0.1, 7.0, 2.0, 1e-3))
    assert np.array_equal(point_spectrum(f1, 4).values(), point_spectrum(f2, 4).values())
    assert resolvent_sup(f1, 5, 4).hi == resolvent_sup(f2, 5, 4).hi


def test_nilpotent_flag_keeps_zero_exact():
    fam = make_explicit([BlockMatrix(np.triu(np.ones((4, 4)), 1), nilpotency_order=4)])
    rep = point_spectrum(fam, 1)
    assert [e.value for e in rep.eigenvalues] == [0]
