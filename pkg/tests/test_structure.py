import math

import numpy as np
import pytest

from affdim.document import load_document
from affdim.structure import (
    INCONCLUSIVE,
    IRREDUCIBLE,
    NOT_SIMILITUDE,
    REDUCIBLE,
    SIMILITUDE,
    algebra_span,
    check_irreducible,
    check_similitude,
    hypothesis_report,
    is_invariant,
    modulus_violation_scan,
    recover_inner_product,
)
from oracles import random_orthogonal, random_similitude_tuple

TRI = np.array([[[0.7, 0.2], [0.0, 0.5]], [[0.5, 0.0], [0.3, 0.6]]])


def rot(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def verification_residual(G, P):
    d = G.shape[1]
    return max(
        np.linalg.norm(A.T @ P @ A - abs(np.linalg.det(A)) ** (2 / d) * P) / (abs(np.linalg.det(A)) ** (2 / d) * np.linalg.norm(P))
        for A in G
    )


def test_upper_triangular_pair_reducible():
    G = np.array([[[0.5, 0.2], [0.0, 0.3]], [[0.4, -0.1], [0.0, 0.6]]])
    v = check_irreducible(G, 4)
    assert v.status == REDUCIBLE
    W = v.witness
    assert W.shape == (2, 1)
    assert abs(abs(W[0, 0]) - 1) < 1e-10
    assert is_invariant(G, W)


def test_rotation_with_diagonal_spans_everything():
    G = np.array([0.6 * rot(1.0), np.diag([0.5, 0.3])])
    v = check_irreducible(G, 2)
    assert v.status == IRREDUCIBLE
    assert v.span_trace[-1] == 4


def test_single_rotation_has_no_real_invariant_line():
    v = check_irreducible(np.array([rot(math.pi / 2)]), 6)
    assert v.span_trace[-1] == 2
    assert v.status == IRREDUCIBLE


def test_triangular_pair_irreducible():
    assert check_irreducible(TRI).status == IRREDUCIBLE


def test_block_diagonal_3d_reducible():
    rng = np.random.default_rng(2)
    G = []
    for _ in range(3):
        M = np.zeros((3, 3))
        M[:2, :2] = 0.4 * random_orthogonal(rng, 2) @ np.diag([1.0, 0.6])
        M[2, 2] = 0.3
        M[:2, 2] = rng.uniform(-0.2, 0.2, 2)
        G.append(M)
    v = check_irreducible(np.array(G), 6)
    assert v.status == REDUCIBLE
    assert is_invariant(np.array(G), v.witness)


def test_scalar_tuple_not_irreducible():
    # every subspace is invariant; no span element has simple spectrum
    v = check_irreducible(np.array([0.5 * np.eye(2), 0.3 * np.eye(2)]), 4)
    assert v.status in (REDUCIBLE, INCONCLUSIVE)
    assert v.status != IRREDUCIBLE


def test_span_trace_monotone_and_capped():
    rng = np.random.default_rng(7)
    for _ in range(10):
        G = rng.standard_normal((2, 3, 3)) * 0.3
        _, trace = algebra_span(G, 6)
        assert all(b >= a for a, b in zip(trace, trace[1:]))
        assert trace[-1] <= 9
    spans = [algebra_span(TRI, L)[1][-1] for L in range(1, 5)]
    assert spans == sorted(spans)


def test_check_irreducible_rejects_bad_depth():
    with pytest.raises(ValueError):
        check_irreducible(TRI, 0)


def test_similitudes_are_detected_with_identity():
    rng = np.random.default_rng(0)
    G = np.array([r * random_orthogonal(rng, 2) for r in (0.5, 0.3, 0.4)])
    v = check_similitude(G)
    assert v.status == SIMILITUDE
    assert np.allclose(v.inner_product, np.eye(2), atol=1e-10)


def test_conjugated_similitudes_recover_gram_matrix():
    rng = np.random.default_rng(11)
    for _ in range(10):
        G, X, _ = random_similitude_tuple(rng, cmax=10.0)
        v = check_similitude(G)
        assert v.status == SIMILITUDE
        P = v.inner_product
        assert verification_residual(G, P) <= 1e-8
        ref = X.T @ X
        ref *= np.trace(P) / np.trace(ref)
        assert np.allclose(P, ref, rtol=1e-6, atol=1e-8 * np.linalg.norm(ref))


def test_periodic_iteration_falls_back_to_linear_solve():
    # a conjugated quarter turn makes the averaging map periodic, so the
    # iteration never settles and the null-space solve has to finish
    X = np.array([[2.0, 1.0], [0.0, 1.0]])
    Xi = np.linalg.inv(X)
    G = np.array([Xi @ (0.5 * rot(math.pi / 2)) @ X, Xi @ (0.4 * rot(math.pi / 2)) @ X])
    v = check_similitude(G)
    assert v.status == SIMILITUDE
    assert v.method == "nullspace"
    assert verification_residual(G, v.inner_product) <= 1e-8
    ref = X.T @ X
    assert np.allclose(v.inner_product, ref * np.trace(v.inner_product) / np.trace(ref), rtol=1e-8)


def test_triangular_pair_refuted_at_length_one():
    v = check_similitude(TRI)
    assert v.status == NOT_SIMILITUDE
    assert v.counterexample_word == (0,)
    assert v.violation == pytest.approx(abs(math.log(0.7) - 0.5 * math.log(0.35)))


def test_modulus_scan_finds_later_witness():
    # each generator is a similitude on its own; the product is not
    A = 0.5 * rot(0.4)
    B = 0.5 * np.array([[2.0, 0.0], [0.0, 0.5]]) @ rot(1.0) @ np.array([[0.5, 0.0], [0.0, 2.0]])
    word, dev = modulus_violation_scan(np.array([A, B]), 4)
    assert word is not None and len(word) >= 2
    assert dev > 1e-8


def test_recover_inner_product_fails_cleanly():
    P, method, _ = recover_inner_product(TRI)
    assert P is None and method == "nullspace"


def test_eigenvalue_criterion_consistency():
    rng = np.random.default_rng(3)
    for _ in range(10):
        G, _, _ = random_similitude_tuple(rng)
        if check_similitude(G).status == SIMILITUDE:
            word, _ = modulus_violation_scan(G, 5)
            assert word is None


def test_conjugation_equivariance():
    rng = np.random.default_rng(4)
    base_sim, X0, _ = random_similitude_tuple(rng, N=3, d=2)
    for _ in range(20):
        X = rng.standard_normal((2, 2)) + 2 * np.eye(2)
        Xi = np.linalg.inv(X)
        for G in (TRI, base_sim):
            H = Xi @ G @ X
            assert check_similitude(H).status == check_similitude(G).status
        P = check_similitude(base_sim).inner_product
        Q = check_similitude(Xi @ base_sim @ X).inner_product
        ref = X.T @ P @ X
        ref *= np.trace(Q) / np.trace(ref)
        assert np.allclose(Q, ref, rtol=1e-6, atol=1e-8 * np.linalg.norm(ref))


def test_report_triangular_pair():
    rep = hypothesis_report(TRI, 10)
    assert rep.hypotheses == {
        "contracting": True,
        "dimaff_strictly_between": True,
        "irreducible": True,
        "not_similitude": True,
    }
    assert rep.applies
    assert 0 < rep.dimaff.value < 2


def test_report_sierpinski():
    rep = hypothesis_report(load_document("sierpinski").linear, 8)
    assert rep.hypotheses["contracting"]
    assert rep.hypotheses["dimaff_strictly_between"]
    assert not rep.hypotheses["not_similitude"]
    assert not rep.applies
    # the rotated variant draws the same gasket and is irreducible
    twisted = hypothesis_report(load_document("sierpinski-twisted").linear, 8)
    assert twisted.hypotheses["irreducible"]
    assert not twisted.applies


def test_report_triangle_subdivision():
    rep = hypothesis_report(load_document("triangle-subdivision").linear, 8)
    assert rep.det_sum == pytest.approx(1.0, abs=1e-12)
    assert not rep.hypotheses["dimaff_strictly_between"]
    assert rep.hypotheses["irreducible"] and rep.hypotheses["not_similitude"]
    assert not rep.applies


def test_report_reducible_pair():
    rep = hypothesis_report(load_document("reducible-pair").linear, 8)
    assert not rep.hypotheses["irreducible"]
    assert rep.irreducibility.status == REDUCIBLE
    assert not rep.applies
