"""Words over ``{0, ..., N-1}`` and enumeration of the matrix products
``A_w = A_{w_1} A_{w_2} ... A_{w_n}``.

Words are plain tuples of 0-based symbols; :func:`format_word` prints them in
the customary 1-based form. Level ``n`` is always traversed in lexicographic
order, so the word with index ``j`` is the base-``N`` expansion of ``j``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from .errors import BudgetExceeded, EmptyWord
from .linalg import as_matrix, batch_log_eig, batch_log_sv, log_abs_det

DEFAULT_DEPTH_CAP = 16
DEFAULT_BUDGET = 10**8
#: Target number of words per vectorised block.
BLOCK_WORDS = 1 << 15


def as_generators(gens) -> np.ndarray:
    """Stack a sequence of square matrices into an ``(N, d, d)`` array."""
    G = np.asarray(gens, dtype=float)
    if G.ndim != 3 or G.shape[1] != G.shape[2] or G.shape[0] == 0:
        raise ValueError(f"expected N square matrices, got shape {G.shape}")
    if not np.all(np.isfinite(G)):
        raise ValueError("generators have non-finite entries")
    return G


def format_word(word) -> str:
    if not word:
        return "()"
    sep = "," if max(word) >= 9 else ""
    return sep.join(str(i + 1) for i in word)


def decode_index(index: int, N: int, n: int) -> tuple:
    """Word of length ``n`` with lexicographic rank ``index``."""
    out = []
    for _ in range(n):
        index, r = divmod(index, N)
        out.append(r)
    return tuple(reversed(out))


def check_budget(N: int, n: int, depth_cap: int = DEFAULT_DEPTH_CAP, budget: int = DEFAULT_BUDGET):
    if n < 1 or n > depth_cap:
        raise ValueError(f"depth {n} outside 1..{depth_cap}")
    visits = N**n
    if visits > budget:
        raise BudgetExceeded(visits, budget)
    return visits


def word_product(gens, word) -> np.ndarray:
    """Left-to-right product ``A_{w_1} ... A_{w_n}``."""
    if len(word) == 0:
        raise EmptyWord("product of the empty word is undefined here")
    G = as_generators(gens)
    out = G[word[0]].copy()
    for i in word[1:]:
        out = out @ G[i]
    return out


def enumerate_products(gens, n: int, visitor, *, depth_cap: int = DEFAULT_DEPTH_CAP,
                       budget: int = DEFAULT_BUDGET, parallel: bool = False,
                       threads: int | None = None) -> None:
    """Call ``visitor(word, A_word)`` once for every word of length ``n``.

    Sequential mode visits in lexicographic order using a stack of partial
    products (one multiplication per visit). Parallel mode splits the tree by
    first symbol; visit order is then unspecified and the visitor must be safe
    to call concurrently.
    """
    G = as_generators(gens)
    N = G.shape[0]
    check_budget(N, n, depth_cap, budget)

    def subtree(first):
        stack = [G[first]]
        word = [first]
        if n == 1:
            visitor(tuple(word), stack[0])
            return
        # odometer over the remaining n-1 symbols
        digits = [0] * (n - 1)
        for t in range(n - 1):
            stack.append(stack[-1] @ G[0])
        word.extend(digits)
        while True:
            visitor(tuple(word), stack[-1])
            pos = n - 2
            while pos >= 0 and digits[pos] == N - 1:
                digits[pos] = 0
                pos -= 1
            if pos < 0:
                return
            digits[pos] += 1
            for t in range(pos, n - 1):
                stack[t + 1] = stack[t] @ G[digits[t]]
                word[t + 1] = digits[t]

    if parallel and N > 1:
        with ThreadPoolExecutor(max_workers=threads or min(N, 8)) as pool:
            list(pool.map(subtree, range(N)))
    else:
        for a in range(N):
            subtree(a)


def _suffix_block(G: np.ndarray, k: int) -> np.ndarray:
    """All products of length ``k`` in lexicographic order."""
    d = G.shape[1]
    S = np.eye(d)[None]
    for _ in range(k):
        S = (S[:, None] @ G[None]).reshape(-1, d, d)
    return S


def _suffix_log_det(gen_log_det: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros(1)
    for _ in range(k):
        out = (out[:, None] + gen_log_det[None]).ravel()
    return out


def iter_level_blocks(gens, n: int, *, first: int | None = None, block_words: int = BLOCK_WORDS):
    """Yield ``(offset, products, log_det)`` chunks covering level ``n`` in
    lexicographic order. ``log_det`` is accumulated exactly from the
    generators. With ``first`` set, only the subtree under that symbol is
    produced (offsets stay global)."""
    G = as_generators(gens)
    N, d = G.shape[0], G.shape[1]
    gen_ld = np.array([log_abs_det(A) for A in G])
    depth = n if first is None else n - 1
    base = 0 if first is None else first * N ** (n - 1)
    root = np.eye(d) if first is None else G[first]
    root_ld = 0.0 if first is None else gen_ld[first]

    k = min(depth, max(0, int(math.log(block_words) / math.log(N)))) if N > 1 else depth
    S = _suffix_block(G, k)
    S_ld = _suffix_log_det(gen_ld, k)
    width = N**k
    plen = depth - k

    stack = [root]
    ld_stack = [root_ld]
    prev = None
    for idx, prefix in enumerate(product(range(N), repeat=plen)):
        start = 0
        if prev is not None:
            while prefix[start] == prev[start]:
                start += 1
        del stack[start + 1:], ld_stack[start + 1:]
        for t in range(start, plen):
            stack.append(stack[-1] @ G[prefix[t]])
            ld_stack.append(ld_stack[-1] + gen_ld[prefix[t]])
        prev = prefix
        yield base + idx * width, stack[-1] @ S, ld_stack[-1] + S_ld


@dataclass
class LevelTable:
    """Per-word spectral data for every word of one length, lexicographic.

    ``log_sv[j]`` and ``log_ev[j]`` are the log singular values and log
    eigenvalue moduli of ``A_w`` for the word of rank ``j``; ``log_det`` is
    exact. The table is what the pressure, Lyapunov and audit code reduce
    over, so each level's SVDs are computed once.
    """

    N: int
    d: int
    n: int
    log_sv: np.ndarray
    log_ev: np.ndarray
    log_det: np.ndarray

    @property
    def size(self) -> int:
        return self.log_sv.shape[0]

    def word(self, index: int) -> tuple:
        return decode_index(int(index), self.N, self.n)

    def log_mass(self, p) -> np.ndarray:
        """Log cylinder masses ``log prod_t p[w_t]`` in table order (``-inf``
        for zero-mass cylinders)."""
        p = np.asarray(p, dtype=float)
        with np.errstate(divide="ignore"):
            lp = np.log(p)
        out = np.zeros(1)
        for _ in range(self.n):
            out = (out[:, None] + lp[None]).ravel()
        return out


def _fill(G, n, first, log_sv, log_ev, log_det, with_eig):
    for off, P, ld in iter_level_blocks(G, n, first=first):
        m = P.shape[0]
        log_sv[off:off + m] = batch_log_sv(P, ld)
        if with_eig:
            log_ev[off:off + m] = batch_log_eig(P, ld)
        log_det[off:off + m] = ld


@lru_cache(maxsize=8)
def _cached_table(key: bytes, shape: tuple, n: int, threads: int) -> LevelTable:
    G = np.frombuffer(key, dtype=float).reshape(shape)
    N, d = shape[0], shape[1]
    M = N**n
    log_sv = np.empty((M, d))
    log_ev = np.empty((M, d))
    log_det = np.empty(M)
    if threads > 1 and n > 1 and N > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda a: _fill(G, n, a, log_sv, log_ev, log_det, True), range(N)))
    else:
        _fill(G, n, None, log_sv, log_ev, log_det, True)
    for arr in (log_sv, log_ev, log_det):
        arr.setflags(write=False)
    return LevelTable(N, d, n, log_sv, log_ev, log_det)


def level_table(gens, n: int, *, depth_cap: int = DEFAULT_DEPTH_CAP,
                budget: int = DEFAULT_BUDGET, threads: int = 1) -> LevelTable:
    """Build (or fetch from a small cache) the :class:`LevelTable` at depth ``n``."""
    G = np.ascontiguousarray(as_generators(gens))
    for A in G:
        log_abs_det(as_matrix(A))
    check_budget(G.shape[0], n, depth_cap, budget)
    return _cached_table(G.tobytes(), G.shape, n, max(1, int(threads)))


def auto_depth(N: int, preferred: int = 12, max_words: int = 2 * 10**6) -> int:
    """Largest depth ``<= preferred`` whose level fits in ``max_words``."""
    n = preferred
    while n > 1 and N**n > max_words:
        n -= 1
    return n
