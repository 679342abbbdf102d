"""Piecewise-linear DMT curve container and serialisation."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = ["PiecewiseCurve", "Piece", "evaluate_pieces", "compress_collinear"]


@dataclass(frozen=True)
class Piece:
    """One branch of a closed-form curve, valid on ``[lo, hi]``."""

    lo: float
    hi: float
    fn: Callable[[float], float]

    @property
    def length(self) -> float:
        return self.hi - self.lo


def evaluate_pieces(pieces: Sequence[Piece], r: float) -> float:
    """Evaluate a branch list at ``r``; zero-length branches are skipped.

    At a shared endpoint the earlier branch wins.  Beyond the last branch the
    diversity is exhausted and 0 is returned.
    """
    if r < 0:
        raise ValueError(f"multiplexing gain must be >= 0, got {r}")
    for piece in pieces:
        if piece.length <= 0:
            continue
        if piece.lo <= r <= piece.hi:
            return float(piece.fn(r))
    return 0.0


def compress_collinear(r: np.ndarray, d: np.ndarray, tol: float = 1e-9):
    """Drop interior samples that lie on the segment joining their neighbours."""
    keep = [0]
    for k in range(1, len(r) - 1):
        r0, d0 = r[keep[-1]], d[keep[-1]]
        r2, d2 = r[k + 1], d[k + 1]
        interp = d0 + (d2 - d0) * (r[k] - r0) / (r2 - r0)
        if abs(interp - d[k]) > tol:
            keep.append(k)
    if len(r) > 1:
        keep.append(len(r) - 1)
    return r[keep], d[keep]


@dataclass(frozen=True)
class PiecewiseCurve:
    """DMT curve given by breakpoints ``(r, d)``.

    Linear interpolation between breakpoints, 0 beyond the last one.
    """

    breakpoints: tuple[tuple[float, float], ...]
    label: str = ""

    def __post_init__(self):
        rs = [p[0] for p in self.breakpoints]
        if not rs:
            raise ValueError("a curve needs at least one breakpoint")
        if any(b <= a for a, b in zip(rs, rs[1:])):
            raise ValueError("breakpoint rates must be strictly increasing")

    @classmethod
    def from_samples(cls, r: Iterable[float], d: Iterable[float], label: str = "",
                     tol: float = 1e-9) -> "PiecewiseCurve":
        r = np.asarray(list(r), dtype=float)
        d = np.asarray(list(d), dtype=float)
        r, d = compress_collinear(r, d, tol)
        return cls(tuple((float(a), float(b)) for a, b in zip(r, d)), label)

    @property
    def r(self) -> np.ndarray:
        return np.array([p[0] for p in self.breakpoints])

    @property
    def d(self) -> np.ndarray:
        return np.array([p[1] for p in self.breakpoints])

    def __call__(self, r: float) -> float:
        rs, ds = self.r, self.d
        if r > rs[-1]:
            return 0.0
        return float(np.interp(r, rs, ds))

    def is_nonincreasing(self, tol: float = 1e-9) -> bool:
        return bool(np.all(np.diff(self.d) <= tol))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "d"])
        for r, d in self.breakpoints:
            w.writerow([repr(r), repr(d)])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"label": self.label,
                           "r": [p[0] for p in self.breakpoints],
                           "d": [p[1] for p in self.breakpoints]})

    @classmethod
    def from_json(cls, text: str) -> "PiecewiseCurve":
        obj = json.loads(text)
        return cls(tuple(zip(obj["r"], obj["d"])), obj.get("label", ""))
