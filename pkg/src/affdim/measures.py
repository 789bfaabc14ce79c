"""Bernoulli measures, Lyapunov dimension and the dimension gap.

For a Bernoulli measure the depth-``n`` Lyapunov functional
``(1/n) sum_{|i|=n} mu[i] log Phi(i)`` is linear in the weight vector: it is
``alpha . E / n`` with ``E_k = sum_i mu[i] log sigma_k(A_i)``. Those ``d``
moments are computed once per measure, so the bisection in ``s`` costs
nothing and the simplex search over measures stays cheap even at
``3**12`` words.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import NoSignChange, ValidationError
from .linalg import WeightVector, is_conformal
from .pressure import (
    DEFAULT_DEPTH,
    DEFAULT_TOL,
    DimensionValue,
    _require_contraction,
    _weights,
    affinity_dimension,
    bisect_decreasing,
)
from .words import DEFAULT_BUDGET, as_generators, level_table

#: Bisection tolerance used inside the simplex search, where a coarse
#: tolerance would make the objective piecewise constant.
INNER_TOL = 1e-11


@dataclass(frozen=True)
class BernoulliMeasure:
    """Product measure with ``mu([i_1...i_n]) = p[i_1] ... p[i_n]``. Zero
    entries are allowed."""

    p: tuple

    def __post_init__(self):
        p = tuple(float(x) for x in self.p)
        if not p:
            raise ValidationError("empty probability vector")
        if any(not math.isfinite(x) or x < 0 for x in p):
            raise ValidationError(f"probabilities must be finite and non-negative: {p}")
        total = sum(p)
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"probabilities sum to {total}, not 1")
        object.__setattr__(self, "p", tuple(x / total for x in p))

    @classmethod
    def uniform(cls, N: int) -> "BernoulliMeasure":
        return cls((1.0 / N,) * N)

    @classmethod
    def from_weights(cls, weights) -> "BernoulliMeasure":
        w = np.asarray(weights, dtype=float)
        return cls(tuple(w / w.sum()))

    @property
    def N(self) -> int:
        return len(self.p)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.p)

    def mass(self, word) -> float:
        return math.prod(self.p[i] for i in word)


def entropy(mu: BernoulliMeasure) -> float:
    """``-sum p_i log p_i`` with ``0 log 0 = 0``."""
    p = mu.array
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def _check_alphabet(G, mu):
    if mu.N != G.shape[0]:
        raise ValidationError(f"measure on {mu.N} symbols for {G.shape[0]} maps")


def lyapunov_moments(table, mu: BernoulliMeasure) -> tuple:
    """``(E, E_det)`` with ``E_k = sum_i mu[i] log sigma_k(A_i)`` over the
    depth of ``table``; zero-mass cylinders are excluded."""
    lm = table.log_mass(mu.p)
    keep = np.isfinite(lm)
    m = np.exp(lm[keep])
    return m @ table.log_sv[keep], float(m @ table.log_det[keep])


def _lyap_value(E, E_det, n, w: WeightVector) -> float:
    return float(w.array @ E) / n


def lyapunov_functional(gens, w, mu: BernoulliMeasure, n: int = DEFAULT_DEPTH, *,
                        budget: int = DEFAULT_BUDGET, threads: int = 1) -> float:
    """``(1/n) sum_{|i|=n} mu[i] log Phi(i)``; an upper bound on the limit
    functional that does not increase when ``n`` doubles."""
    G = as_generators(gens)
    _check_alphabet(G, mu)
    w = _weights(w, G.shape[1])
    table = level_table(G, n, budget=budget, threads=threads)
    E, E_det = lyapunov_moments(table, mu)
    return _lyap_value(E, E_det, n, w)


def _lyap_objective(h, E, E_det, n, d):
    cum = np.concatenate([[0.0], np.cumsum(E)])

    def f(s: float) -> float:
        if s >= d:
            return h + (s / d) * E_det / n
        k = int(math.floor(s))
        return h + (cum[k] + (s - k) * E[k]) / n

    return f


def _lyap_dimension(h, E, E_det, n, d, tol) -> tuple:
    f = _lyap_objective(h, E, E_det, n, d)
    try:
        return bisect_decreasing(f, 0.0, 2.0 * d, tol)
    except NoSignChange as exc:
        raise NoSignChange(f"entropy + Lyapunov functional still positive at s={2 * d}") from exc


def lyapunov_dimension(gens, mu: BernoulliMeasure, n: int = DEFAULT_DEPTH,
                       tol: float = DEFAULT_TOL, *, assume_contracting: bool = False,
                       budget: int = DEFAULT_BUDGET, threads: int = 1) -> DimensionValue:
    """Zero of ``s -> h(mu) + Lambda_n(phi^s, mu)`` by bisection on ``[0, 2d]``."""
    G = as_generators(gens)
    _check_alphabet(G, mu)
    _require_contraction(G, assume_contracting)
    table = level_table(G, n, budget=budget, threads=threads)
    E, E_det = lyapunov_moments(table, mu)
    lo, hi = _lyap_dimension(entropy(mu), E, E_det, n, G.shape[1], tol)
    return DimensionValue(0.5 * (lo + hi), (lo, hi), n, tol)


# --------------------------------------------------------------------------
# supremum over Bernoulli measures


@dataclass
class GapReport:
    """Affinity dimension against the best Lyapunov dimension of a Bernoulli
    measure, both at ``depth``.

    ``gap`` is the same-depth difference ``dimaff.value - gamma``.
    ``gap_detected`` applies the conservative rule
    ``dimaff_lower - gamma_upper > 0``: the affinity side uses the lower edge
    of its enclosure, the Bernoulli side its depth-``n`` value (an upper
    estimate, since the depth-``n`` functional bounds the limit from above)
    plus its bisection width.
    """

    dimaff: DimensionValue
    gamma: float
    maximizer: BernoulliMeasure
    gap: float
    depth: int
    dimaff_lower: float
    gamma_upper: float
    gap_detected: bool
    diagnostics: dict = field(default_factory=dict)


def _softmax(theta):
    z = np.concatenate([theta, [0.0]])
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def _logit(p):
    p = np.clip(np.asarray(p, dtype=float), 1e-12, None)
    lp = np.log(p)
    return lp[:-1] - lp[-1]


def gamma_sup(gens, n: int = DEFAULT_DEPTH, tol: float = DEFAULT_TOL, *,
              random_starts: int = 4, refine: int = 3, seed: int = 0,
              assume_contracting: bool = False, budget: int = DEFAULT_BUDGET,
              threads: int = 1, dimaff: DimensionValue | None = None) -> GapReport:
    """Maximise the depth-``n`` Lyapunov dimension over Bernoulli measures.

    Candidates: uniform weights, Hutchinson weights ``r_i**s`` when every map
    is conformal, the determinant-potential weights, and ``random_starts``
    Dirichlet draws. The best ``refine`` candidates are polished with
    Nelder-Mead in softmax coordinates. The result is a lower bound for the
    depth-``n`` supremum.
    """
    from .gibbs import det_equilibrium_weights

    t0 = time.perf_counter()
    G = as_generators(gens)
    N, d = G.shape[0], G.shape[1]
    _require_contraction(G, assume_contracting)
    if dimaff is None:
        dimaff = affinity_dimension(G, n, tol, assume_contracting=True, budget=budget, threads=threads)
    table = level_table(G, n, budget=budget, threads=threads)

    evals = 0

    def dim_of(p) -> float:
        nonlocal evals
        evals += 1
        mu = BernoulliMeasure(tuple(p))
        E, E_det = lyapunov_moments(table, mu)
        lo, hi = _lyap_dimension(entropy(mu), E, E_det, n, d, INNER_TOL)
        return 0.5 * (lo + hi)

    if N == 1:
        mu = BernoulliMeasure((1.0,))
        gamma = dim_of(mu.p)
        return _report(dimaff, gamma, mu, n, tol, {"evaluations": evals, "starts": []}, t0)

    starts = {"uniform": np.full(N, 1.0 / N)}
    if all(is_conformal(A) for A in G):
        r = np.array([np.linalg.svd(A, compute_uv=False)[0] for A in G])
        starts["hutchinson"] = r**dimaff.value / (r**dimaff.value).sum()
    s_star = min(dimaff.value, float(d))
    starts["determinant"] = np.asarray(det_equilibrium_weights(G, WeightVector.canonical(s_star, d)).p)
    rng = np.random.default_rng(seed)
    for j in range(random_starts):
        starts[f"random{j}"] = rng.dirichlet(np.ones(N))

    names = list(starts)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(lambda k: dim_of(starts[k]), names))
    else:
        values = [dim_of(starts[k]) for k in names]
    seeded = sorted(zip(values, names), reverse=True)

    best_val, best_p = seeded[0][0], starts[seeded[0][1]]
    runs = []
    for val, name in seeded[:refine]:
        res = minimize(
            lambda th: -dim_of(_softmax(th)),
            _logit(starts[name]),
            method="Nelder-Mead",
            options={"xatol": 1e-7, "fatol": 1e-12, "maxiter": 400 * N},
        )
        p = _softmax(res.x)
        v = -float(res.fun)
        runs.append({"start": name, "start_value": val, "value": v, "iterations": int(res.nit)})
        if v > best_val:
            best_val, best_p = v, p

    mu = BernoulliMeasure(tuple(best_p))
    diag = {
        "evaluations": evals,
        "starts": [{"start": k, "value": v} for v, k in seeded],
        "refinement": runs,
    }
    return _report(dimaff, best_val, mu, n, tol, diag, t0)


def _report(dimaff, gamma, mu, n, tol, diag, t0) -> GapReport:
    dimaff_lower = dimaff.lower
    gamma_upper = gamma + tol
    diag = dict(diag)
    diag.update(
        dimaff_enclosure_width=dimaff.width,
        dimaff_bracket_width=dimaff.bracket[1] - dimaff.bracket[0],
        gamma_bisection_slack=tol,
        seconds=time.perf_counter() - t0,
    )
    return GapReport(
        dimaff=dimaff,
        gamma=gamma,
        maximizer=mu,
        gap=dimaff.value - gamma,
        depth=n,
        dimaff_lower=dimaff_lower,
        gamma_upper=gamma_upper,
        gap_detected=bool(dimaff_lower - gamma_upper > 0),
        diagnostics=diag,
    )
