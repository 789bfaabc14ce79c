"""Reference computations for the tests, written without the package.

Singular values come from the eigenvalues of A^T A (closed form for 2x2), word
sums from explicit itertools loops, minors from cofactor determinants.
"""
import math
from itertools import combinations, product

import numpy as np


def sv_2x2(A):
    """Singular values of a 2x2 matrix from the quadratic for A^T A."""
    (a, b), (c, d) = A
    t = a * a + b * b + c * c + d * d
    det = a * d - b * c
    disc = math.sqrt(max(t * t - 4 * det * det, 0.0))
    s1 = math.sqrt((t + disc) / 2)
    s2 = abs(det) / s1 if s1 > 0 else 0.0
    return s1, s2


def sv_eigh(A):
    A = np.asarray(A, dtype=float)
    ev = np.linalg.eigvalsh(A.T @ A)
    return np.sqrt(np.clip(ev[::-1], 0, None))


def phi_ref(A, s):
    A = np.asarray(A, dtype=float)
    d = A.shape[0]
    if s >= d:
        return abs(np.linalg.det(A)) ** (s / d)
    sv = sv_eigh(A)
    k = int(math.floor(s))
    out = float(np.prod(sv[:k]))
    if s > k:
        out *= sv[k] ** (s - k)
    return out


def product_of(G, word):
    M = np.eye(len(G[0]))
    for i in word:
        M = M @ np.asarray(G[i], dtype=float)
    return M


def all_words(N, n):
    return list(product(range(N), repeat=n))


def pressure_ref(G, s, n):
    return math.log(sum(phi_ref(product_of(G, w), s) for w in all_words(len(G), n))) / n


def lyapunov_ref(G, p, s, n):
    tot = 0.0
    for w in all_words(len(G), n):
        m = math.prod(p[i] for i in w)
        if m > 0:
            tot += m * math.log(phi_ref(product_of(G, w), s))
    return tot / n


def entropy_ref(p, n):
    """Cylinder entropy at depth n divided by n."""
    tot = 0.0
    for w in all_words(len(p), n):
        m = math.prod(p[i] for i in w)
        if m > 0:
            tot -= m * math.log(m)
    return tot / n


def bisect_ref(f, lo, hi, tol=1e-12):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def power_by_squaring(A, n):
    A = np.asarray(A, dtype=float)
    out = np.eye(A.shape[0])
    while n:
        if n & 1:
            out = out @ A
        A = A @ A
        n >>= 1
    return out


def compound_ref(A, k):
    A = np.asarray(A, dtype=float)
    subsets = list(combinations(range(A.shape[0]), k))
    return np.array([[np.linalg.det(A[np.ix_(r, c)]) for c in subsets] for r in subsets])


def log_sv_of_power(A, n):
    """(1/n) log singular values of A^n via normalised products of compound
    matrices, stable for large n."""
    d = A.shape[0]
    cum = []
    for k in range(1, d + 1):
        B = compound_ref(A, k)
        M = np.eye(B.shape[0])
        lg = 0.0
        for _ in range(n):
            M = M @ B
            s = np.linalg.norm(M, 2)
            M /= s
            lg += math.log(s)
        cum.append(lg)
    return np.diff(np.concatenate([[0.0], cum])) / n


def random_orthogonal(rng, d):
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


def random_conditioned(rng, d, cmax=10.0):
    """Random matrix with condition number at most cmax."""
    U, V = random_orthogonal(rng, d), random_orthogonal(rng, d)
    s = np.exp(rng.uniform(0, math.log(cmax), d))
    s[0], s[-1] = 1.0, max(s.max(), 1.0)
    return U @ np.diag(s) @ V


def random_similitude_tuple(rng, N=None, d=None, cmax=10.0):
    """X^-1 r_i O_i X with random orthogonal O_i, r_i in [0.2, 0.6]."""
    N = N or int(rng.integers(2, 4))
    d = d or int(rng.integers(2, 4))
    X = random_conditioned(rng, d, cmax)
    Xi = np.linalg.inv(X)
    r = rng.uniform(0.2, 0.6, N)
    G = np.array([Xi @ (r[i] * random_orthogonal(rng, d)) @ X for i in range(N)])
    return G, X, r
