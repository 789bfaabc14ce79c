"""Irreducibility and similitude-conjugacy tests for a tuple of matrices.

Both tests return three-valued verdicts. A certificate is only issued when a
finite computation proves it: a full matrix-algebra span or an exhausted
invariant-subspace search for irreducibility, a verified invariant inner
product for similitudes. Refutations carry explicit witnesses.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space, orth, subspace_angles

from .errors import NoSignChange, NotContracting
from .linalg import batch_log_eig
from .pressure import ContractionCertificate, DimensionValue, affinity_dimension, check_contraction
from .words import DEFAULT_BUDGET, as_generators, decode_index, iter_level_blocks

IRREDUCIBLE = "irreducible"
REDUCIBLE = "reducible"
SIMILITUDE = "similitude_conjugate"
NOT_SIMILITUDE = "not_similitude"
INCONCLUSIVE = "inconclusive"

SPAN_TOL = 1e-9
ANGLE_TOL = 1e-8
MODULUS_RTOL = 1e-8
FIXED_POINT_RTOL = 1e-12
MAX_ITER = 10_000
VERIFY_RTOL = 1e-8


# --------------------------------------------------------------------------
# irreducibility


@dataclass
class IrreducibilityVerdict:
    status: str
    depth: int
    span_trace: list
    witness: np.ndarray | None = None
    note: str = ""


def _extend_basis(basis: list, M: np.ndarray) -> bool:
    v = M.ravel().copy()
    nv = np.linalg.norm(v)
    if nv == 0:
        return False
    v /= nv
    for _ in range(2):
        for b in basis:
            v -= (b @ v) * b
    r = np.linalg.norm(v)
    if r <= SPAN_TOL:
        return False
    basis.append(v / r)
    return True


def algebra_span(G: np.ndarray, L: int):
    """Orthonormal basis (as flattened ``d*d`` vectors) of the span of all
    products of length ``<= L`` including the identity, and the dimension
    after each length. Stops early once the span stops growing."""
    d = G.shape[1]
    basis: list = []
    _extend_basis(basis, np.eye(d))
    frontier = [np.eye(d)]
    trace = [len(basis)]
    for _ in range(L):
        new = []
        for M in frontier:
            for A in G:
                P = M @ A
                if _extend_basis(basis, P):
                    new.append(P)
        trace.append(len(basis))
        frontier = new
        if not new or len(basis) == d * d:
            break
    return basis, trace


def invariant_closure(G: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the smallest subspace containing the columns of
    ``V`` and invariant under every generator."""
    Q = orth(V, rcond=SPAN_TOL)
    d = G.shape[1]
    while Q.shape[1] < d:
        Q2 = orth(np.hstack([Q] + [A @ Q for A in G]), rcond=SPAN_TOL)
        if Q2.shape[1] == Q.shape[1]:
            break
        Q = Q2
    return Q


def is_invariant(G: np.ndarray, W: np.ndarray, tol: float = ANGLE_TOL) -> bool:
    """Largest principal angle between ``A_i W`` and ``W`` is below ``tol``
    for every generator."""
    return all(float(np.max(subspace_angles(A @ W, W))) <= tol for A in G)


def _spectral_pieces(M: np.ndarray) -> list:
    """Real invariant pieces of ``M``: eigenlines for real eigenvalues,
    planes for complex pairs (one per pair)."""
    vals, vecs = np.linalg.eig(M)
    pieces = []
    seen_conj = set()
    for k, lam in enumerate(vals):
        v = vecs[:, k]
        if abs(lam.imag) <= 1e-12 * max(1.0, abs(lam)):
            pieces.append(np.real(v)[:, None])
        elif lam.imag > 0 and k not in seen_conj:
            pieces.append(np.column_stack([v.real, v.imag]))
        else:
            seen_conj.add(k)
    return pieces, vals


def _simple_spectrum(vals: np.ndarray, rtol: float = 1e-6) -> bool:
    scale = max(1.0, float(np.max(np.abs(vals))))
    diffs = np.abs(vals[:, None] - vals[None])
    np.fill_diagonal(diffs, np.inf)
    return bool(np.min(diffs) > rtol * scale) if len(vals) > 1 else True


def check_irreducible(gens, L: int = 6, *, attempts: int = 16, seed: int = 0) -> IrreducibilityVerdict:
    """Span test in matrix space, then an invariant-subspace search driven by
    random elements of the span.

    Every invariant subspace of the tuple is invariant under each element
    ``M`` of the span. When ``M`` has simple spectrum such a subspace is a
    sum of real spectral pieces of ``M``, so it contains the invariant
    closure of one piece. All closures being the whole space therefore
    proves irreducibility; a proper closure is a verified witness.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    G = as_generators(gens)
    d = G.shape[1]
    if d == 1:
        return IrreducibilityVerdict(IRREDUCIBLE, L, [1], note="dimension 1")
    basis, trace = algebra_span(G, L)
    if len(basis) == d * d:
        return IrreducibilityVerdict(IRREDUCIBLE, L, trace, note="products span all matrices")

    B = np.stack(basis)
    rng = np.random.default_rng(seed)
    for _ in range(attempts):
        M = (rng.standard_normal(len(basis)) @ B).reshape(d, d)
        pieces, vals = _spectral_pieces(M)
        proper = None
        for V in pieces:
            W = invariant_closure(G, V)
            if W.shape[1] < d and is_invariant(G, W):
                proper = W
                break
        if proper is not None:
            return IrreducibilityVerdict(REDUCIBLE, L, trace, witness=proper,
                                         note=f"invariant subspace of dimension {proper.shape[1]}")
        if _simple_spectrum(vals):
            return IrreducibilityVerdict(IRREDUCIBLE, L, trace,
                                         note="no spectral piece of a simple-spectrum span element has a proper invariant closure")
    return IrreducibilityVerdict(INCONCLUSIVE, L, trace, note="no simple-spectrum span element and no witness found")


# --------------------------------------------------------------------------
# similitude conjugacy


@dataclass
class SimilitudeVerdict:
    status: str
    depth: int
    inner_product: np.ndarray | None = None
    counterexample_word: tuple | None = None
    violation: float = 0.0
    method: str = ""
    iterations: int = 0
    residual: float = float("nan")


def modulus_violation_scan(G: np.ndarray, L: int, rtol: float = MODULUS_RTOL):
    """First word (shortest, then lexicographic) of length ``<= L`` with an
    eigenvalue modulus off ``|det|^(1/d)`` by more than ``rtol`` relatively.
    Returns ``(word, log-violation)`` or ``(None, largest log-deviation)``."""
    N, d = G.shape[0], G.shape[1]
    worst = 0.0
    lim = np.log1p(rtol)
    for n in range(1, L + 1):
        for off, P, ld in iter_level_blocks(G, n):
            dev = np.max(np.abs(batch_log_eig(P, ld) - (ld / d)[:, None]), axis=1)
            hits = np.flatnonzero(dev > lim)
            if hits.size:
                j = int(hits[0])
                return decode_index(off + j, N, n), float(dev[j])
            worst = max(worst, float(dev.max()))
    return None, worst


def _normalised_gens(G: np.ndarray) -> np.ndarray:
    d = G.shape[1]
    dets = np.abs(np.linalg.det(G))
    return G / dets[:, None, None] ** (1.0 / d)


def _residual(B: np.ndarray, P: np.ndarray) -> float:
    nP = np.linalg.norm(P)
    return max(float(np.linalg.norm(A.T @ P @ A - P)) / nP for A in B)


def _positive_definite(P: np.ndarray) -> bool:
    ev = np.linalg.eigvalsh(0.5 * (P + P.T))
    return bool(ev[0] > 1e-12 * ev[-1] and ev[-1] > 0)


def recover_inner_product(gens, max_iter: int = MAX_ITER, rtol: float = FIXED_POINT_RTOL):
    """Look for ``P`` with ``A_i^T P A_i = |det A_i|^(2/d) P``.

    First the averaging iteration from the identity; if it has not settled
    after ``max_iter`` steps, the linear constraints are solved directly and
    the null-space element nearest the last iterate is taken. Returns
    ``(P, method, iterations)``; ``P`` is ``None`` if nothing verifies.
    """
    G = as_generators(gens)
    N, d = G.shape[0], G.shape[1]
    B = _normalised_gens(G)
    P = np.eye(d)
    it = 0
    for it in range(1, max_iter + 1):
        Q = sum(A.T @ P @ A for A in B) / N
        Q = 0.5 * (Q + Q.T)
        Q *= d / np.trace(Q)
        change = np.linalg.norm(Q - P) / np.linalg.norm(Q)
        P = Q
        if change < rtol:
            break
    if _residual(B, P) <= VERIFY_RTOL and _positive_definite(P):
        return P, "iteration", it

    # linear solve over symmetric matrices
    iu = np.triu_indices(d)
    basis = []
    for a, b in zip(*iu):
        E = np.zeros((d, d))
        E[a, b] = E[b, a] = 1.0
        basis.append(E)
    cols = [np.concatenate([(A.T @ E @ A - E).ravel() for A in B]) for E in basis]
    K = null_space(np.column_stack(cols), rcond=1e-10)
    if K.shape[1] == 0:
        return None, "nullspace", it
    coords = np.array([np.sum(E * P) / np.sum(E * E) for E in basis])
    c = K @ (K.T @ coords)
    P2 = sum(ci * E for ci, E in zip(c, basis))
    if np.trace(P2) < 0:
        P2 = -P2
    if np.trace(P2) == 0:
        return None, "nullspace", it
    P2 *= d / np.trace(P2)
    if _residual(B, P2) <= VERIFY_RTOL and _positive_definite(P2):
        return P2, "nullspace", it
    return None, "nullspace", it


def check_similitude(gens, L: int = 6) -> SimilitudeVerdict:
    """Eigenvalue-modulus scan over words of length ``<= L``, then recovery of
    an invariant inner product. Both outcomes are checked directly, so the
    verdict does not depend on irreducibility; without a witness or a
    verified ``P`` the answer is inconclusive."""
    if L < 1:
        raise ValueError("L must be >= 1")
    G = as_generators(gens)
    word, dev = modulus_violation_scan(G, L)
    if word is not None:
        return SimilitudeVerdict(NOT_SIMILITUDE, L, counterexample_word=word, violation=dev, method="eigenvalue scan")
    P, method, its = recover_inner_product(G)
    if P is not None:
        return SimilitudeVerdict(SIMILITUDE, L, inner_product=P, violation=dev, method=method,
                                 iterations=its, residual=_residual(_normalised_gens(G), P))
    return SimilitudeVerdict(INCONCLUSIVE, L, violation=dev, method=method, iterations=its)


# --------------------------------------------------------------------------
# the four hypotheses together


@dataclass
class HypothesisReport:
    contraction: ContractionCertificate
    dimaff: DimensionValue | None
    det_sum: float
    irreducibility: IrreducibilityVerdict
    similitude: SimilitudeVerdict
    hypotheses: dict = field(default_factory=dict)
    applies: bool = False
    notes: list = field(default_factory=list)


def hypothesis_report(gens, n: int = 12, L: int = 6, *, budget: int = DEFAULT_BUDGET,
                      threads: int = 1, contraction_depth: int = 4) -> HypothesisReport:
    """Check (i) contraction, (ii) ``0 < dimaff < d``, (iii) irreducibility and
    (iv) absence of an invariant inner product.

    (ii) is decided exactly: the pressure at ``s = d`` is ``log sum |det A_i|``,
    so ``dimaff < d`` iff that sum is below 1, and ``dimaff > 0`` whenever
    ``N >= 2``.
    """
    G = as_generators(gens)
    N, d = G.shape[0], G.shape[1]
    notes = []
    cert = check_contraction(G, contraction_depth)
    dv = None
    if cert.certified:
        try:
            dv = affinity_dimension(G, n, assume_contracting=True, budget=budget, threads=threads)
        except (NoSignChange, NotContracting) as exc:
            notes.append(str(exc))
    else:
        notes.append(f"no contraction certificate up to length {contraction_depth}")
    det_sum = float(np.sum(np.abs(np.linalg.det(G))))
    below_d = det_sum < 1.0 - 1e-12
    if not below_d:
        notes.append(f"sum of |det| = {det_sum:.12g} >= 1, so dimaff >= d")
    if N < 2:
        notes.append("a single map has dimaff = 0")
    irr = check_irreducible(G, L)
    sim = check_similitude(G, L)
    hyp = {
        "contracting": cert.certified,
        "dimaff_strictly_between": bool(below_d and N >= 2),
        "irreducible": irr.status == IRREDUCIBLE,
        "not_similitude": sim.status == NOT_SIMILITUDE,
    }
    if sim.status == SIMILITUDE:
        notes.append("maps are similitudes for a recovered inner product: no gap expected")
    if irr.status == REDUCIBLE:
        notes.append("tuple has a common invariant subspace")
    return HypothesisReport(cert, dv, det_sum, irr, sim, hyp, all(hyp.values()), notes)
