"""JSON description files for affine iterated function systems.

A document looks like::

    {
      "name": "sierpinski",
      "dim": 2,
      "maps": [
        {"matrix": [[0.5, 0.0], [0.0, 0.5]], "translation": [0.0, 0.0]},
        ...
      ],
      "probabilities": [0.3333, 0.3333, 0.3334]
    }

``probabilities``, ``labels`` (per map), ``name`` and ``description`` are
optional. Matrices are row-major.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import SingularMatrix, ValidationError
from .linalg import log_abs_det
from .measures import BernoulliMeasure
from .render import AffineIFS


@dataclass(frozen=True)
class IFSDocument:
    dim: int
    matrices: tuple
    translations: tuple
    probabilities: tuple | None = None
    labels: tuple | None = None
    name: str = ""
    description: str = ""

    def __post_init__(self):
        d = self.dim
        if not isinstance(d, int) or isinstance(d, bool) or d < 1:
            raise ValidationError(f"dim must be a positive integer, got {d!r}")
        N = len(self.matrices)
        if N < 2:
            raise ValidationError(f"need at least 2 maps, got {N}")
        if len(self.translations) != N:
            raise ValidationError(f"{N} matrices but {len(self.translations)} translations")
        for k, (A, v) in enumerate(zip(self.matrices, self.translations)):
            if len(A) != d or any(len(row) != d for row in A):
                raise ValidationError(f"map {k + 1}: matrix is not {d}x{d}")
            if len(v) != d:
                raise ValidationError(f"map {k + 1}: translation has length {len(v)}, expected {d}")
            if not all(math.isfinite(x) for row in A for x in row) or not all(math.isfinite(x) for x in v):
                raise ValidationError(f"map {k + 1}: non-finite entry")
            try:
                log_abs_det(np.array(A, dtype=float))
            except SingularMatrix as exc:
                raise ValidationError(f"map {k + 1}: {exc}") from exc
        if self.probabilities is not None:
            if len(self.probabilities) != N:
                raise ValidationError(f"{len(self.probabilities)} probabilities for {N} maps")
            BernoulliMeasure(self.probabilities)
        if self.labels is not None and len(self.labels) != N:
            raise ValidationError(f"{len(self.labels)} labels for {N} maps")

    @property
    def N(self) -> int:
        return len(self.matrices)

    @property
    def linear(self) -> np.ndarray:
        return np.array(self.matrices, dtype=float)

    def ifs(self) -> AffineIFS:
        return AffineIFS(self.linear, np.array(self.translations, dtype=float), list(self.labels or []))

    def measure(self) -> BernoulliMeasure | None:
        return None if self.probabilities is None else BernoulliMeasure(self.probabilities)

    # -- (de)serialisation ------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "IFSDocument":
        if not isinstance(data, dict):
            raise ValidationError("document must be a JSON object")
        try:
            maps = data["maps"]
            dim = data["dim"]
        except KeyError as exc:
            raise ValidationError(f"missing field {exc.args[0]!r}") from None
        if not isinstance(maps, list):
            raise ValidationError("'maps' must be a list")
        try:
            matrices = tuple(tuple(tuple(float(x) for x in row) for row in m["matrix"]) for m in maps)
            translations = tuple(tuple(float(x) for x in m["translation"]) for m in maps)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed map entry: {exc}") from None
        labels = [m.get("label") for m in maps]
        probs = data.get("probabilities")
        try:
            probs = None if probs is None else tuple(float(x) for x in probs)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"malformed probabilities: {exc}") from None
        return cls(
            dim=dim,
            matrices=matrices,
            translations=translations,
            probabilities=probs,
            labels=tuple(labels) if any(x is not None for x in labels) else None,
            name=str(data.get("name", "")),
            description=str(data.get("description", "")),
        )

    def to_dict(self) -> dict:
        maps = []
        for k, (A, v) in enumerate(zip(self.matrices, self.translations)):
            entry = {"matrix": [list(r) for r in A], "translation": list(v)}
            if self.labels is not None and self.labels[k] is not None:
                entry["label"] = self.labels[k]
            maps.append(entry)
        out = {"name": self.name, "dim": self.dim, "maps": maps}
        if self.description:
            out["description"] = self.description
        if self.probabilities is not None:
            out["probabilities"] = list(self.probabilities)
        return out

    @classmethod
    def loads(cls, text: str) -> "IFSDocument":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON: {exc}") from None
        return cls.from_dict(data)

    def dumps(self) -> str:
        """Indented JSON with one map per line."""
        data = self.to_dict()
        maps = data.pop("maps")
        head = json.dumps(data, indent=2)[:-2]
        body = ",\n".join("    " + json.dumps(m) for m in maps)
        return f'{head},\n  "maps": [\n{body}\n  ]\n}}\n'

    def digest(self) -> str:
        """sha256 of the canonical serialisation."""
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def bundled_names() -> list:
    root = resources.files("affdim") / "data"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_document(ref) -> IFSDocument:
    """Read a document from a path, or by bundled name (``sierpinski``)."""
    path = Path(ref)
    if path.is_file():
        return IFSDocument.loads(path.read_text())
    name = str(ref)
    if name.endswith(".json"):
        name = name[:-5]
    res = resources.files("affdim") / "data" / f"{name}.json"
    if res.is_file():
        return IFSDocument.loads(res.read_text())
    raise ValidationError(f"no such file or bundled system: {ref} (bundled: {', '.join(bundled_names())})")
