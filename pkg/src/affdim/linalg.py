"""Dense kernels on small invertible matrices.

Everything here is a pure function of its inputs. Potentials are evaluated in
log-space (``log_*`` variants) and exponentiated only at the public boundary,
so long matrix products never underflow.

Functions accept a single ``(d, d)`` matrix; the ``batch_*`` helpers accept a
stack of shape ``(m, d, d)`` and are what the word-tree code uses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import numpy as np

from .errors import BadOrder, InadmissibleForm, SingularMatrix

#: Base threshold on |det A|; multiplied by the dimension before use.
EPS_DET = 1e-300
#: Largest dimension the kernels are tested for.
MAX_DIM = 12


def as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def det_threshold(d: int) -> float:
    return EPS_DET * d


def log_abs_det(A) -> float:
    A = as_matrix(A)
    sign, logdet = np.linalg.slogdet(A)
    if sign == 0 or logdet <= math.log(det_threshold(A.shape[0])):
        raise SingularMatrix(f"|det A| below {det_threshold(A.shape[0]):g}")
    return float(logdet)


def require_invertible(A) -> np.ndarray:
    A = as_matrix(A)
    log_abs_det(A)
    return A


# --------------------------------------------------------------------------
# weight vectors and linear forms


@dataclass(frozen=True)
class WeightVector:
    """Exponents ``alpha_1 >= ... >= alpha_d >= 0`` of the potential
    ``prod_i sigma_i(A) ** alpha_i``."""

    alpha: tuple

    def __post_init__(self):
        alpha = tuple(float(a) for a in self.alpha)
        if not alpha:
            raise ValueError("weight vector must be non-empty")
        if any(not math.isfinite(a) or a < 0 for a in alpha):
            raise ValueError(f"weights must be finite and non-negative: {alpha}")
        if any(alpha[i] < alpha[i + 1] for i in range(len(alpha) - 1)):
            raise ValueError(f"weights must be non-increasing: {alpha}")
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def canonical(cls, s: float, d: int) -> "WeightVector":
        """Weights for which the potential equals the singular value function
        phi^s. Integer ``s`` puts the fractional weight on an index that is
        then zero, so ``0 ** 0`` never arises."""
        if s < 0:
            raise ValueError("s must be non-negative")
        if s >= d:
            return cls((s / d,) * d)
        k = int(math.floor(s))
        frac = s - k
        alpha = [1.0] * k + [0.0] * (d - k)
        if frac > 0:
            alpha[k] = frac
        return cls(tuple(alpha))

    @property
    def dim(self) -> int:
        return len(self.alpha)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.alpha)

    @cached_property
    def betas(self) -> tuple:
        """Exterior-power exponents ``beta_k = alpha_k - alpha_{k+1}``
        (``alpha_{d+1} = 0``), indexed ``k = 1..d`` as positions ``0..d-1``."""
        a = self.alpha + (0.0,)
        return tuple(a[k] - a[k + 1] for k in range(self.dim))

    @cached_property
    def exterior_orders(self) -> tuple:
        """Pairs ``(k, beta_k)`` with ``beta_k > 0``."""
        return tuple((k + 1, b) for k, b in enumerate(self.betas) if b > 0)

    @property
    def total(self) -> float:
        return float(sum(self.alpha))


@dataclass(frozen=True)
class CartanVector:
    """Sorted log singular values (Cartan projection) or sorted log eigenvalue
    moduli (Jordan projection)."""

    kappa: tuple

    def __post_init__(self):
        kappa = tuple(float(k) for k in self.kappa)
        if any(kappa[i] < kappa[i + 1] for i in range(len(kappa) - 1)):
            raise ValueError("Cartan vector must be non-increasing")
        object.__setattr__(self, "kappa", kappa)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.kappa)


@dataclass(frozen=True)
class LinearForm:
    """Linear functional ``kappa -> sum_i coeffs[i] * kappa[i]``.

    Only forms that equal a weight-vector potential up to a multiple of the
    determinant direction ``(1, ..., 1)`` are admitted; those are exactly the
    non-increasing coefficient vectors.
    """

    coeffs: tuple

    def __post_init__(self):
        c = tuple(float(x) for x in self.coeffs)
        if not c or any(not math.isfinite(x) for x in c):
            raise InadmissibleForm(f"bad coefficients {c}")
        bad = [i for i in range(len(c) - 1) if c[i] < c[i + 1] - 1e-15]
        if bad:
            raise InadmissibleForm(
                f"coefficients must be non-increasing (violated at index {bad[0]}): {c}"
            )
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_weights(cls, w: WeightVector, shift: float = 0.0) -> "LinearForm":
        return cls(tuple(a + shift for a in w.alpha))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coeffs)

    def weights_and_shift(self) -> tuple:
        """Decompose as ``WeightVector + t * (1, ..., 1)``."""
        t = self.coeffs[-1]
        return WeightVector(tuple(max(c - t, 0.0) for c in self.coeffs)), t

    def __call__(self, kappa) -> float:
        k = kappa.array if isinstance(kappa, CartanVector) else np.asarray(kappa)
        return float(self.array @ k)


# --------------------------------------------------------------------------
# batched kernels


def batch_singular_values(As: np.ndarray) -> np.ndarray:
    """Singular values of a stack, each row sorted descending."""
    sv = np.linalg.svd(As, compute_uv=False)
    return -np.sort(-sv, axis=-1, kind="stable")


def batch_eigen_moduli(As: np.ndarray) -> np.ndarray:
    ev = np.abs(np.linalg.eigvals(As))
    return -np.sort(-ev, axis=-1, kind="stable")


def batch_log_sv(As: np.ndarray, log_det: np.ndarray | None = None) -> np.ndarray:
    """Log singular values of a stack. When ``log_det`` is supplied (exactly
    accumulated along words) the smallest value is recovered from it, which
    keeps it accurate when ``sigma_d / sigma_1`` approaches machine epsilon."""
    with np.errstate(divide="ignore"):
        out = np.log(batch_singular_values(As))
    if log_det is not None and out.shape[-1] > 1:
        out[..., -1] = log_det - out[..., :-1].sum(axis=-1)
    return out


def batch_log_eig(As: np.ndarray, log_det: np.ndarray | None = None) -> np.ndarray:
    with np.errstate(divide="ignore"):
        out = np.log(batch_eigen_moduli(As))
    if log_det is not None and out.shape[-1] > 1:
        out[..., -1] = log_det - out[..., :-1].sum(axis=-1)
    return out


def weighted_log_potential(log_values: np.ndarray, w: WeightVector) -> np.ndarray:
    """``sum_i alpha_i * log_values[..., i]`` skipping zero weights."""
    idx = np.flatnonzero(w.array)
    if idx.size == 0:
        return np.zeros(log_values.shape[:-1])
    return log_values[..., idx] @ w.array[idx]


# --------------------------------------------------------------------------
# single-matrix operations


def singular_values(A) -> np.ndarray:
    """``sigma_1 >= ... >= sigma_d`` of a finite square matrix."""
    return batch_singular_values(as_matrix(A))


def eigen_moduli(A) -> np.ndarray:
    """Absolute values of the eigenvalues, descending; a complex pair
    contributes both members."""
    return batch_eigen_moduli(as_matrix(A))


def _check_weights(A: np.ndarray, w: WeightVector):
    if w.dim != A.shape[0]:
        raise ValueError(f"weight vector has length {w.dim}, matrix is {A.shape[0]}x{A.shape[0]}")


def log_sv_potential(A, w: WeightVector) -> float:
    A = require_invertible(A)
    _check_weights(A, w)
    return float(weighted_log_potential(np.log(singular_values(A)), w))


def sv_potential(A, w: WeightVector) -> float:
    """``prod_i sigma_i(A) ** alpha_i``; the singular value function phi^s when
    ``w = WeightVector.canonical(s, d)``."""
    return math.exp(log_sv_potential(A, w))


def log_xi_potential(A, w: WeightVector) -> float:
    A = require_invertible(A)
    _check_weights(A, w)
    return float(weighted_log_potential(np.log(eigen_moduli(A)), w))


def xi_potential(A, w: WeightVector) -> float:
    """Eigenvalue-moduli analogue of :func:`sv_potential`; never exceeds it and
    equals ``lim sv_potential(A^n, w) ** (1/n)``."""
    return math.exp(log_xi_potential(A, w))


def phi(A, s: float) -> float:
    """Singular value function phi^s(A)."""
    A = as_matrix(A)
    return sv_potential(A, WeightVector.canonical(s, A.shape[0]))


def xi(A, s: float) -> float:
    A = as_matrix(A)
    return xi_potential(A, WeightVector.canonical(s, A.shape[0]))


def _subsets(d: int, k: int) -> np.ndarray:
    return np.array(list(combinations(range(d), k)), dtype=np.intp)


def exterior_power(A, k: int) -> np.ndarray:
    """k-th compound matrix: all k-by-k minors, rows and columns indexed by
    k-subsets in lexicographic order. Works on stacks ``(..., d, d)`` too."""
    A = np.asarray(A, dtype=float)
    d = A.shape[-1]
    if not 1 <= k <= d:
        raise BadOrder(f"order k={k} outside 1..{d}")
    S = _subsets(d, k)
    rows = S[:, None, :, None]
    cols = S[None, :, None, :]
    minors = A[..., rows, cols]
    return np.linalg.det(minors)


def cartan_projection(A) -> CartanVector:
    A = require_invertible(A)
    return CartanVector(tuple(np.log(singular_values(A))))


def jordan_projection(A) -> CartanVector:
    A = require_invertible(A)
    return CartanVector(tuple(np.log(eigen_moduli(A))))


def is_conformal(A, rtol: float = 1e-9) -> bool:
    """True when ``A`` is a Euclidean similitude (all singular values equal)."""
    sv = singular_values(A)
    return bool(sv[0] <= sv[-1] * (1 + rtol))
