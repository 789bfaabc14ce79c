"""Raster pictures of attractors and self-affine measures.

Points come from the natural projection: a finite word ``i`` is drawn as
``T_{i_1} o ... o T_{i_n}(v0)``. The world frame is the bounding square of an
invariant ball around ``v0``, so every drawn point lands inside the image.
"""
from __future__ import annotations

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NotContracting, ValidationError
from .linalg import require_invertible
from .measures import BernoulliMeasure
from .pressure import ContractionCertificate, check_contraction
from .words import DEFAULT_BUDGET, check_budget

BURN_IN = 64
MARGIN = 0.05
WALKERS = 4096


@dataclass
class AffineIFS:
    """Maps ``T_i x = A_i x + v_i``."""

    linear: np.ndarray
    translations: np.ndarray
    labels: list = field(default_factory=list)

    def __post_init__(self):
        A = np.asarray(self.linear, dtype=float)
        v = np.asarray(self.translations, dtype=float)
        if A.ndim != 3 or A.shape[1] != A.shape[2]:
            raise ValidationError(f"linear parts must have shape (N, d, d), got {A.shape}")
        if v.shape != A.shape[:2]:
            raise ValidationError(f"translations must have shape {A.shape[:2]}, got {v.shape}")
        for M in A:
            require_invertible(M)
        self.linear, self.translations = A, v
        self._cert = None

    @classmethod
    def from_maps(cls, maps) -> "AffineIFS":
        A, v = zip(*maps)
        return cls(np.array(A, dtype=float), np.array(v, dtype=float))

    @property
    def N(self) -> int:
        return self.linear.shape[0]

    @property
    def dim(self) -> int:
        return self.linear.shape[1]

    def certificate(self, L: int = 8) -> ContractionCertificate:
        if self._cert is None or (not self._cert.certified and self._cert.depth < L):
            self._cert = check_contraction(self.linear, L)
        if not self._cert.certified:
            raise NotContracting(f"no contraction certificate up to word length {L}")
        return self._cert

    def apply(self, i: int, x: np.ndarray) -> np.ndarray:
        return x @ self.linear[i].T + self.translations[i]

    def fixed_point(self, i: int) -> np.ndarray:
        return np.linalg.solve(np.eye(self.dim) - self.linear[i], self.translations[i])


def natural_projection_point(ifs: AffineIFS, word, v0=None) -> np.ndarray:
    """``T_{i_1} o T_{i_2} o ... o T_{i_n}(v0)``; the innermost map is applied
    first."""
    x = np.zeros(ifs.dim) if v0 is None else np.asarray(v0, dtype=float).copy()
    for i in reversed(tuple(word)):
        x = ifs.apply(i, x)
    return x


def default_center(ifs: AffineIFS) -> np.ndarray:
    return np.mean([ifs.fixed_point(i) for i in range(ifs.N)], axis=0)


def invariant_ball(ifs: AffineIFS, v0=None, L: int = 8):
    """Centre and radius of a ball (in the certificate's adapted norm, hence
    also contained in the Euclidean ball of the same radius) mapped into
    itself by every ``T_i``."""
    cert = ifs.certificate(L)
    v0 = default_center(ifs) if v0 is None else np.asarray(v0, dtype=float)
    step = max(cert.norm(v0 - ifs.apply(i, v0)) for i in range(ifs.N))
    return v0, step / cert.epsilon


@dataclass
class RasterImage:
    """Square world frame ``[x0, x0 + size] x [y0, y0 + size]`` over the
    ``axes`` coordinate plane; row 0 is the top edge."""

    values: np.ndarray
    x0: float
    y0: float
    size: float
    axes: tuple = (0, 1)
    meta: dict = field(default_factory=dict)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def hits(self) -> np.ndarray:
        return self.values > 0

    def to_pixel(self, pts: np.ndarray):
        """``(rows, cols, inside)`` for world points (already projected)."""
        u = (pts[:, 0] - self.x0) / self.size
        w = (pts[:, 1] - self.y0) / self.size
        cols = np.floor(u * self.width).astype(np.int64)
        rows = self.height - 1 - np.floor(w * self.height).astype(np.int64)
        inside = (cols >= 0) & (cols < self.width) & (rows >= 0) & (rows < self.height)
        return rows, cols, inside

    def pixel_points(self, rows, cols, sub: float = 0.5, sub_y: float | None = None) -> np.ndarray:
        """World coordinates of a point inside each pixel (the centre by
        default)."""
        sy = sub if sub_y is None else sub_y
        x = self.x0 + (cols + sub) / self.width * self.size
        y = self.y0 + (self.height - 1 - rows + 1 - sy) / self.height * self.size
        return np.column_stack([x, y])

    def accumulate(self, pts: np.ndarray, weight: float = 1.0) -> int:
        rows, cols, inside = self.to_pixel(pts)
        np.add.at(self.values, (rows[inside], cols[inside]), weight)
        return int(np.count_nonzero(~inside))


def _frame(ifs, width, height, axes, v0, margin=MARGIN):
    center, r = invariant_ball(ifs, v0)
    half = r * (1 + margin)
    c = center[list(axes)]
    return RasterImage(np.zeros((height, width)), c[0] - half, c[1] - half, 2 * half, tuple(axes),
                       {"center": center.tolist(), "radius": r})


def _check_axes(ifs, axes):
    axes = tuple(int(a) for a in axes)
    if len(axes) != 2 or len(set(axes)) != 2 or not all(0 <= a < ifs.dim for a in axes):
        raise ValidationError(f"axes {axes} invalid for dimension {ifs.dim}")
    return axes


def render_attractor(ifs: AffineIFS, depth: int, width: int = 512, height: int | None = None, *,
                     axes=(0, 1), v0=None, budget: int = DEFAULT_BUDGET) -> RasterImage:
    """Hit map of ``T_w(v0)`` over every word ``w`` of length ``depth``."""
    axes = _check_axes(ifs, axes)
    check_budget(ifs.N, depth, depth_cap=max(depth, 16), budget=budget)
    img = _frame(ifs, width, height or width, axes, v0)
    pts = np.asarray(img.meta["center"])[None]
    for _ in range(depth):
        pts = np.concatenate([ifs.apply(i, pts) for i in range(ifs.N)])
    outside = img.accumulate(pts[:, list(axes)])
    img.values = (img.values > 0).astype(float)
    img.meta.update(mode="attractor", depth=depth, points=len(pts), outside=outside)
    return img


def _chaos_worker(ifs, p, steps, walkers, seq, burn_in, v0, img_shape, frame, axes, cyl_depth):
    rng = np.random.default_rng(seq)
    img = RasterImage(np.zeros(img_shape), *frame, axes)
    x = np.repeat(v0[None], walkers, axis=0)
    N = ifs.N
    counts = np.zeros(N**cyl_depth, dtype=np.int64) if cyl_depth else None
    code = np.zeros(walkers, dtype=np.int64)
    max_dev = 0.0
    outside = 0
    for t in range(burn_in + steps):
        s = rng.choice(N, size=walkers, p=p)
        x = np.einsum("wij,wj->wi", ifs.linear[s], x) + ifs.translations[s]
        if cyl_depth:
            # code holds the address (s_t, s_{t-1}, ...) of the current point
            code = (code // N) + s * N ** (cyl_depth - 1)
        if t < burn_in:
            continue
        max_dev = max(max_dev, float(np.max(np.linalg.norm(x - v0, axis=1))))
        outside += img.accumulate(x[:, list(axes)])
        if cyl_depth and (t - burn_in) % cyl_depth == cyl_depth - 1:
            counts += np.bincount(code, minlength=N**cyl_depth)
    return img.values, counts, max_dev, outside


def render_measure(ifs: AffineIFS, mu: BernoulliMeasure, samples: int, width: int = 512,
                   height: int | None = None, *, seed: int = 0, threads: int = 1,
                   walkers: int = WALKERS, burn_in: int = BURN_IN, axes=(0, 1), v0=None,
                   cylinder_depth: int = 0) -> RasterImage:
    """Chaos game: i.i.d. symbols from ``mu``, ``burn_in`` discarded steps,
    then per-pixel mass normalised to total 1.

    Each thread runs its own walkers with a stream spawned from ``seed``, so
    the output depends only on ``(seed, threads)``. With ``cylinder_depth = k``
    the symbolic address of every ``k``-th point of each walker is counted
    (non-overlapping windows, so counts are multinomial) and stored in
    ``meta["cylinder_counts"]`` in lexicographic order.
    """
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    if mu.N != ifs.N:
        raise ValidationError(f"measure on {mu.N} symbols for {ifs.N} maps")
    axes = _check_axes(ifs, axes)
    img = _frame(ifs, width, height or width, axes, v0)
    center = np.asarray(img.meta["center"])
    threads = max(1, int(threads))
    walkers = max(1, min(walkers, math.ceil(samples / threads)))
    steps = math.ceil(samples / (walkers * threads))
    seqs = np.random.SeedSequence(seed).spawn(threads)
    frame = (img.x0, img.y0, img.size)
    p = mu.array
    args = [(ifs, p, steps, walkers, sq, burn_in, center, img.values.shape, frame, axes, cylinder_depth)
            for sq in seqs]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda a: _chaos_worker(*a), args))
    else:
        results = [_chaos_worker(*a) for a in args]
    total = sum(r[0] for r in results)
    img.values = total / total.sum() if total.sum() > 0 else total
    img.meta.update(
        mode="measure",
        samples=steps * walkers * threads,
        max_distance=max(r[2] for r in results),
        outside=sum(r[3] for r in results),
        seed=seed,
        threads=threads,
    )
    if cylinder_depth:
        img.meta["cylinder_counts"] = sum(r[1] for r in results)
    return img


# --------------------------------------------------------------------------
# self-consistency


def image_of_hits(ifs: AffineIFS, img: RasterImage, supersample: int = 2) -> np.ndarray:
    """Raster of ``union_i T_i(H)`` where ``H`` is the hit set of ``img``:
    every hit pixel is sampled on a ``supersample``-square grid, mapped by
    each ``T_i`` and re-rasterised. Two-dimensional systems only."""
    if ifs.dim != 2:
        raise ValidationError("self-cover test needs a planar system")
    rows, cols = np.nonzero(img.hits)
    out = RasterImage(np.zeros_like(img.values), img.x0, img.y0, img.size, img.axes)
    offs = (np.arange(supersample) + 0.5) / supersample
    for a in offs:
        for b in offs:
            pts = img.pixel_points(rows, cols, a, b)
            for i in range(ifs.N):
                out.accumulate(ifs.apply(i, pts))
    return out.hits


def self_cover_stats(ifs: AffineIFS, img: RasterImage, supersample: int = 2) -> dict:
    """Compare the hit set ``H`` with ``U``, the rasterised union of its
    images. ``image_fraction`` is ``|H symdiff U|`` over all pixels;
    ``relative`` divides by ``|H union U|`` instead. The relative figure
    carries a floor of a few percent from re-rasterising a contracted pixel
    lattice whenever the frame is not aligned with the maps."""
    H = img.hits
    U = image_of_hits(ifs, img, supersample)
    diff = int(np.count_nonzero(H ^ U))
    union = int(np.count_nonzero(H | U))
    return {
        "symmetric_difference": diff,
        "hits": int(np.count_nonzero(H)),
        "cover": int(np.count_nonzero(U)),
        "image_fraction": diff / H.size,
        "relative": diff / union if union else 0.0,
    }


def self_cover_fraction(ifs: AffineIFS, img: RasterImage, supersample: int = 2) -> float:
    """Pixels in exactly one of ``H`` and ``union_i T_i(H)``, as a fraction of
    the image."""
    return self_cover_stats(ifs, img, supersample)["image_fraction"]


def box_counting_dimension(img: RasterImage, scales=(1, 2, 4, 8, 16, 32)) -> float:
    """Slope of log box count against log scale over the hit set. A rough
    diagnostic only: pixel resolution and finite sampling bias it."""
    H = img.hits
    counts, sizes = [], []
    for k in scales:
        h, w = H.shape[0] // k, H.shape[1] // k
        if h < 1 or w < 1:
            break
        blocks = H[: h * k, : w * k].reshape(h, k, w, k).any(axis=(1, 3))
        counts.append(max(1, int(blocks.sum())))
        sizes.append(k)
    if len(counts) < 2:
        return float("nan")
    slope = np.polyfit(np.log(sizes), np.log(counts), 1)[0]
    return float(-slope)


# --------------------------------------------------------------------------
# file output


def write_pgm(img: RasterImage, path, mode: str = "auto") -> Path:
    """Binary PGM. ``mode="hit"`` writes an 8-bit map with hits in black on
    white; ``mode="mass"`` writes a 16-bit map scaled to the maximum pixel
    mass. ``auto`` picks by ``img.meta["mode"]``."""
    path = Path(path)
    if mode == "auto":
        mode = "mass" if img.meta.get("mode") == "measure" else "hit"
    h, w = img.values.shape
    if mode == "hit":
        data = np.where(img.hits, 0, 255).astype(np.uint8)
        header = f"P5\n{w} {h}\n255\n".encode()
    elif mode == "mass":
        peak = img.values.max()
        scaled = img.values / peak if peak > 0 else img.values
        data = np.round(scaled * 65535).astype(">u2")
        header = f"P5\n{w} {h}\n65535\n".encode()
    else:
        raise ValueError(f"unknown PGM mode {mode!r}")
    path.write_bytes(header + data.tobytes())
    return path


def read_pgm(path) -> np.ndarray:
    """Read a P5 file written by :func:`write_pgm`."""
    raw = Path(path).read_bytes()
    m = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", raw)
    if m is None:
        raise ValueError("not a binary PGM")
    w, h, maxval = (int(g) for g in m.groups())
    body = raw[m.end():]
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    return np.frombuffer(body, dtype=dtype, count=w * h).reshape(h, w)


def write_ppm(img: RasterImage, path, overlay: np.ndarray | None = None) -> Path:
    """Plain-text PPM: hits in black, ``overlay`` pixels in red (both in
    purple), background white."""
    path = Path(path)
    h, w = img.values.shape
    rgb = np.full((h, w, 3), 255, dtype=np.int64)
    rgb[img.hits] = (0, 0, 0)
    if overlay is not None:
        ov = np.asarray(overlay, dtype=bool)
        rgb[ov & ~img.hits] = (220, 0, 0)
        rgb[ov & img.hits] = (120, 0, 120)
    lines = [f"P3\n{w} {h}\n255"]
    lines += [" ".join(map(str, row.ravel())) for row in rgb]
    path.write_text("\n".join(lines) + "\n")
    return path
