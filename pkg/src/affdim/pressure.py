"""Finite-level pressure of singular value potentials and the affinity
dimension.

At depth ``n`` the pressure estimate is ``(1/n) log sum_{|w|=n} Phi(w)``.
Submultiplicativity makes these values an upper bound for the limit, so the
zero of the depth-``n`` pressure in ``s`` is an upper estimate of the affinity
dimension. Replacing singular values by eigenvalue moduli gives the matching
lower estimate; that side is heuristic (no finite-``n`` guarantee is claimed)
but in practice tight.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import NoSignChange, NotContracting
from .linalg import LinearForm, WeightVector, weighted_log_potential
from .words import DEFAULT_BUDGET, as_generators, level_table, word_product, decode_index

DEFAULT_DEPTH = 12
DEFAULT_TOL = 1e-3
DEFAULT_CONTRACTION_DEPTH = 4


# --------------------------------------------------------------------------
# contraction certificates


@dataclass
class ContractionCertificate:
    """Outcome of :func:`check_contraction`.

    ``certified`` means every word of length ``length`` has Euclidean operator
    norm below ``rate ** length`` with ``rate < 1``; the adapted norm
    ``|||x||| = max_{k < length} max_{|w|=k} |A_w x| / rate**k`` is then
    contracted by every generator with factor ``rate``. A failure only says
    nothing was found up to ``depth``.
    """

    certified: bool
    depth: int
    rates: list
    length: int | None = None
    rate: float | None = None
    max_rate: float = math.nan
    _short_products: list = field(default_factory=list, repr=False)

    @property
    def epsilon(self) -> float:
        """Contraction margin ``1 - rate`` in the adapted norm."""
        return 1.0 - self.rate if self.certified else 0.0

    def norm(self, x) -> float:
        if not self.certified:
            raise NotContracting("no certificate")
        x = np.asarray(x, dtype=float)
        best = 0.0
        for k, mats in enumerate(self._short_products):
            best = max(best, float(np.max(np.linalg.norm(mats @ x, axis=-1))) / self.rate**k)
        return best

    @property
    def equivalence_constant(self) -> float:
        """``K`` with ``|x| <= |||x||| <= K |x|``."""
        if not self.certified:
            raise NotContracting("no certificate")
        return max(
            float(np.max(np.linalg.norm(mats, ord=2, axis=(-2, -1)))) / self.rate**k
            for k, mats in enumerate(self._short_products)
        )


def check_contraction(gens, L: int = DEFAULT_CONTRACTION_DEPTH) -> ContractionCertificate:
    """Search word lengths ``1..L`` for one at which all products have norm
    below 1 (after taking the ``1/length`` root)."""
    if L < 1:
        raise ValueError("L must be >= 1")
    G = as_generators(gens)
    N, d = G.shape[0], G.shape[1]
    rates = []
    cert_len = None
    for ell in range(1, L + 1):
        table = level_table(G, ell)
        rate = math.exp(float(np.max(table.log_sv[:, 0])) / ell)
        rates.append(rate)
        if rate < 1 and cert_len is None:
            cert_len = ell
            break
    cert = ContractionCertificate(
        certified=cert_len is not None,
        depth=L,
        rates=rates,
        max_rate=max(rates),
    )
    if cert_len is not None:
        cert.length = cert_len
        cert.rate = rates[cert_len - 1]
        short = [np.eye(d)[None]]
        for k in range(1, cert_len):
            short.append(np.stack([word_product(G, decode_index(j, N, k)) for j in range(N**k)]))
        cert._short_products = short
    return cert


def _require_contraction(G, assume_contracting: bool):
    if assume_contracting:
        return
    cert = check_contraction(G)
    if not cert.certified:
        raise NotContracting(
            f"no contraction certificate up to word length {cert.depth} "
            f"(rates {['%.4g' % r for r in cert.rates]}); pass assume_contracting=True to override"
        )


# --------------------------------------------------------------------------
# potentials on a level table


def log_phi_s(log_vals: np.ndarray, log_det: np.ndarray, s: float) -> np.ndarray:
    """Log of the singular value function (or its eigenvalue analogue) for
    every row, from per-word log singular values (or log moduli)."""
    d = log_vals.shape[1]
    if s >= d:
        return (s / d) * log_det
    k = int(math.floor(s))
    out = log_vals[:, :k].sum(axis=1)
    frac = s - k
    if frac > 0:
        out = out + frac * log_vals[:, k]
    return out


def _table_log_potential(table, w, which: str = "sv") -> np.ndarray:
    vals = table.log_sv if which == "sv" else table.log_ev
    if isinstance(w, WeightVector):
        return weighted_log_potential(vals, w)
    return log_phi_s(vals, table.log_det, float(w))


def _weights(w, d: int) -> WeightVector:
    if isinstance(w, WeightVector):
        if w.dim != d:
            raise ValueError(f"weight vector of length {w.dim} for dimension {d}")
        return w
    return WeightVector.canonical(float(w), d)


def finite_pressure(gens, w, n: int = DEFAULT_DEPTH, *, assume_contracting: bool = False,
                    budget: int = DEFAULT_BUDGET, threads: int = 1) -> float:
    """``(1/n) log sum_{|i|=n} Phi(i)`` for the weight vector ``w`` (a float
    ``w`` is read as the singular-value exponent ``s``)."""
    G = as_generators(gens)
    _require_contraction(G, assume_contracting)
    w = _weights(w, G.shape[1])
    table = level_table(G, n, budget=budget, threads=threads)
    return float(logsumexp(_table_log_potential(table, w))) / n


def xi_pressure(gens, w, n: int = DEFAULT_DEPTH, *, budget: int = DEFAULT_BUDGET,
                threads: int = 1) -> float:
    """Same sum with eigenvalue moduli in place of singular values."""
    G = as_generators(gens)
    w = _weights(w, G.shape[1])
    table = level_table(G, n, budget=budget, threads=threads)
    return float(logsumexp(_table_log_potential(table, w, "ev"))) / n


@dataclass(frozen=True)
class PressureBracket:
    lower: float
    upper: float
    depth: int
    potential: tuple

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= x <= self.upper + slack


def pressure_bracket(gens, w, n: int = DEFAULT_DEPTH, *, assume_contracting: bool = False,
                     budget: int = DEFAULT_BUDGET, threads: int = 1) -> PressureBracket:
    """Upper edge: depth-``n`` pressure. Lower edge: the eigenvalue-moduli sum at
    the same depth."""
    G = as_generators(gens)
    _require_contraction(G, assume_contracting)
    w = _weights(w, G.shape[1])
    table = level_table(G, n, budget=budget, threads=threads)
    upper = float(logsumexp(_table_log_potential(table, w))) / n
    lower = float(logsumexp(_table_log_potential(table, w, "ev"))) / n
    # xi <= phi word by word, so lower <= upper up to rounding
    lower = min(lower, upper)
    return PressureBracket(lower, upper, n, w.alpha)


# --------------------------------------------------------------------------
# root finding


def bisect_decreasing(f, lo: float, hi: float, tol: float, max_iter: int = 200):
    """Zero of a non-increasing ``f`` on ``[lo, hi]``. Returns the final
    ``(lo, hi)`` with ``f(lo) > 0 >= f(hi)`` and ``hi - lo <= tol``.
    ``f(lo) <= 0`` gives ``(lo, lo)``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if f(lo) <= 0:
        return lo, lo
    if f(hi) > 0:
        raise NoSignChange(f"function still positive at s={hi:g}")
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo, hi


@dataclass(frozen=True)
class DimensionValue:
    """A dimension estimate with its bisection bracket.

    ``bracket`` encloses the zero of the depth-``depth`` objective to width
    ``tol``. For the affinity dimension ``enclosure`` additionally spans from
    the eigenvalue-based zero (lower) to the singular-value zero (upper).
    """

    value: float
    bracket: tuple
    depth: int
    tol: float
    enclosure: tuple | None = None

    @property
    def lower(self) -> float:
        return (self.enclosure or self.bracket)[0]

    @property
    def upper(self) -> float:
        return (self.enclosure or self.bracket)[1]

    @property
    def width(self) -> float:
        return self.upper - self.lower


def pressure_function(gens, n: int = DEFAULT_DEPTH, which: str = "sv", *,
                      budget: int = DEFAULT_BUDGET, threads: int = 1):
    """``s -> depth-n pressure of phi^s`` (``which="ev"`` for the eigenvalue sum)."""
    table = level_table(gens, n, budget=budget, threads=threads)
    vals = table.log_sv if which == "sv" else table.log_ev

    def P(s: float) -> float:
        return float(logsumexp(log_phi_s(vals, table.log_det, s))) / n

    return P


def affinity_dimension(gens, n: int = DEFAULT_DEPTH, tol: float = DEFAULT_TOL, *,
                       assume_contracting: bool = False, budget: int = DEFAULT_BUDGET,
                       threads: int = 1) -> DimensionValue:
    """Zero of ``s -> P_n(s)`` by bisection on ``[0, 2d]``."""
    G = as_generators(gens)
    _require_contraction(G, assume_contracting)
    d = G.shape[1]
    P = pressure_function(G, n, "sv", budget=budget, threads=threads)
    Q = pressure_function(G, n, "ev", budget=budget, threads=threads)
    try:
        lo, hi = bisect_decreasing(P, 0.0, 2.0 * d, tol)
    except NoSignChange as exc:
        raise NoSignChange(f"depth-{n} pressure is non-negative at s={2 * d}: generators do not contract") from exc
    xlo, _ = bisect_decreasing(Q, 0.0, 2.0 * d, tol)
    return DimensionValue(
        value=0.5 * (lo + hi),
        bracket=(lo, hi),
        depth=n,
        tol=tol,
        enclosure=(min(xlo, lo), hi),
    )


def cartan_pressure(gens, forms, n: int = DEFAULT_DEPTH, *, budget: int = DEFAULT_BUDGET,
                    threads: int = 1) -> float:
    """``(1/n) log sum_{|i|=n} max_phi exp(phi(kappa(A_i)))`` over admissible
    linear forms ``phi``. Contraction is not needed for this to be defined."""
    G = as_generators(gens)
    forms = [f if isinstance(f, LinearForm) else LinearForm(tuple(f)) for f in forms]
    if not forms:
        raise ValueError("need at least one linear form")
    d = G.shape[1]
    for f in forms:
        if len(f.coeffs) != d:
            raise ValueError(f"form {f.coeffs} has wrong length for dimension {d}")
    table = level_table(G, n, budget=budget, threads=threads)
    C = np.stack([f.array for f in forms], axis=1)
    return float(logsumexp(np.max(table.log_sv @ C, axis=1))) / n
