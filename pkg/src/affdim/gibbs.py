"""Gibbs-ratio audits, quasi-multiplicativity estimates, multiplicativity
defects of the spectral potential, and the determinant potential."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy.special import comb, logsumexp

from .linalg import batch_log_eig, batch_log_sv, exterior_power, log_abs_det, weighted_log_potential
from .measures import BernoulliMeasure, _check_alphabet
from .pressure import DEFAULT_DEPTH, _table_log_potential, _weights
from .words import DEFAULT_BUDGET, as_generators, level_table

DEFECT_THRESHOLD = 1e-6


# --------------------------------------------------------------------------
# Gibbs audit


@dataclass
class GibbsAudit:
    """Extremal values of ``mu[i] / (exp(-n P) Phi(i))`` over one level."""

    C_min: float
    C_max: float
    depth: int
    pressure: float
    skipped: int = 0
    argmin: tuple = ()
    argmax: tuple = ()

    @property
    def spread(self) -> float:
        return self.C_max / self.C_min


def gibbs_audit(gens, w, mu: BernoulliMeasure, P_est: float, n: int = DEFAULT_DEPTH, *,
                budget: int = DEFAULT_BUDGET, threads: int = 1) -> GibbsAudit:
    """Scan every word of length ``n``; zero-mass cylinders are skipped and
    counted."""
    G = as_generators(gens)
    _check_alphabet(G, mu)
    w = _weights(w, G.shape[1])
    table = level_table(G, n, budget=budget, threads=threads)
    lm = table.log_mass(mu.p)
    keep = np.flatnonzero(np.isfinite(lm))
    if keep.size == 0:
        raise ValueError("every cylinder has zero mass")
    log_ratio = lm[keep] + n * P_est - _table_log_potential(table, w)[keep]
    lo, hi = int(np.argmin(log_ratio)), int(np.argmax(log_ratio))
    return GibbsAudit(
        C_min=math.exp(log_ratio[lo]),
        C_max=math.exp(log_ratio[hi]),
        depth=n,
        pressure=P_est,
        skipped=int(lm.size - keep.size),
        argmin=table.word(keep[lo]),
        argmax=table.word(keep[hi]),
    )


# --------------------------------------------------------------------------
# quasi-multiplicativity


def _words_up_to(N: int, L: int, start: int = 0) -> list:
    return [w for k in range(start, L + 1) for w in product(range(N), repeat=k)]


def _products(G, words) -> np.ndarray:
    d = G.shape[1]
    out = np.empty((len(words), d, d))
    for j, w in enumerate(words):
        M = np.eye(d)
        for i in w:
            M = M @ G[i]
        out[j] = M
    return out


def _log_det_words(G, words) -> np.ndarray:
    ld = np.array([log_abs_det(A) for A in G])
    return np.array([sum(ld[i] for i in w) for w in words], dtype=float)


def _log_phi_words(G, w, words) -> np.ndarray:
    return weighted_log_potential(batch_log_sv(_products(G, words), _log_det_words(G, words)), w)


def sample_word_pairs(N: int, count: int, length: int, seed: int = 0) -> list:
    """``count`` random pairs of words of the given length."""
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, N, size=(count, 2, length))
    return [(tuple(int(x) for x in a), tuple(int(x) for x in b)) for a, b in draws]


@dataclass
class QuasiMultEstimate:
    F: list
    delta: float
    trace: list = field(default_factory=list)


def quasimult_estimate(gens, w, pairs, max_size: int = 4, max_len: int = 2) -> QuasiMultEstimate:
    """Grow ``F`` greedily from the words of length ``<= max_len`` (the empty
    word included) to maximise ``min_pairs max_{k in F} Phi(ikj) / (Phi(i) Phi(j))``.

    Candidates are tried in (length, lexicographic) order and a candidate is
    only added on strict improvement, so ties favour short words. The
    returned ``delta`` is relative to the sample.
    """
    G = as_generators(gens)
    w = _weights(w, G.shape[1])
    pairs = [(tuple(a), tuple(b)) for a, b in pairs]
    if not pairs:
        raise ValueError("need at least one word pair")
    cands = _words_up_to(G.shape[0], max_len)

    base = _log_phi_words(G, w, [a for a, _ in pairs]) + _log_phi_words(G, w, [b for _, b in pairs])
    # R[k, p] = log Phi(i_p k j_p) - log Phi(i_p) - log Phi(j_p)
    R = np.empty((len(cands), len(pairs)))
    for c, k in enumerate(cands):
        R[c] = _log_phi_words(G, w, [a + k + b for a, b in pairs]) - base

    chosen: list = []
    best = np.full(len(pairs), -np.inf)
    trace = []
    while len(chosen) < max_size:
        scores = np.min(np.maximum(best[None], R), axis=1)
        c = int(np.argmax(scores))
        if chosen and scores[c] <= np.min(best):
            break
        chosen.append(c)
        best = np.maximum(best, R[c])
        trace.append(float(np.exp(np.min(best))))
    return QuasiMultEstimate([cands[c] for c in chosen], float(np.exp(np.min(best))), trace)


# --------------------------------------------------------------------------
# multiplicativity defect of the spectral potential


@dataclass
class DefectWitness:
    i: tuple
    j: tuple
    defect: float

    def __post_init__(self):
        if self.defect < 0:
            raise ValueError("defect must be non-negative")


def defect_table(gens, w, L: int = 3):
    """All words of length ``1..L`` and the matrix of defects
    ``|log xi(A_i A_j) - log xi(A_i) - log xi(A_j)|`` indexed by them."""
    G = as_generators(gens)
    w = _weights(w, G.shape[1])
    words = _words_up_to(G.shape[0], L, start=1)
    P = _products(G, words)
    ld = _log_det_words(G, words)
    single = weighted_log_potential(batch_log_eig(P, ld), w)
    m = len(words)
    PP = (P[:, None] @ P[None]).reshape(-1, *P.shape[1:])
    pair = weighted_log_potential(batch_log_eig(PP, (ld[:, None] + ld[None]).ravel()), w).reshape(m, m)
    return words, np.abs(pair - single[:, None] - single[None])


def defect_witness_search(gens, w, L: int = 3, threshold: float = DEFECT_THRESHOLD):
    """Largest defect over pairs of words with lengths ``1..L``, or ``None``
    when every defect is at most ``threshold``. Ties go to the pair that comes
    first in (length, lexicographic) order."""
    if L < 1:
        raise ValueError("L must be >= 1")
    words, D = defect_table(gens, w, L)
    flat = int(np.argmax(D))
    a, b = divmod(flat, D.shape[1])
    if D[a, b] <= threshold:
        return None
    return DefectWitness(words[a], words[b], float(D[a, b]))


# --------------------------------------------------------------------------
# determinant potential


def log_det_potential(gens, w) -> np.ndarray:
    """``log Phi_det(i) = sum_j beta_j / C(d, k_j) * log|det A_i^(wedge k_j)|``
    for each generator, evaluated on the exterior powers themselves."""
    G = as_generators(gens)
    d = G.shape[1]
    w = _weights(w, d)
    out = np.zeros(G.shape[0])
    for k, beta in w.exterior_orders:
        _, ld = np.linalg.slogdet(exterior_power(G, k))
        out += beta / comb(d, k, exact=True) * ld
    return out


def det_potential_pressure(gens, w, n: int | None = None) -> float:
    """Pressure of the determinant potential. The potential is multiplicative,
    so the value is ``log sum_i Phi_det(i)`` at every depth; ``n`` is
    accepted and ignored."""
    return float(logsumexp(log_det_potential(gens, w)))


def det_equilibrium_weights(gens, w) -> BernoulliMeasure:
    """Bernoulli weights ``p_i`` proportional to ``Phi_det(i)``."""
    lp = log_det_potential(gens, w)
    return BernoulliMeasure(tuple(np.exp(lp - logsumexp(lp))))
