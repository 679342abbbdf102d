"""Reusable verification routines behind ``icdmt verify`` and the test suite."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import closed_form as cf
from .curves import Piece
from .solver import GridSpec, d_o5_numeric, d_o5_support_end, d_ptp_numeric, normalization_check

__all__ = [
    "CheckResult",
    "VerificationTimeout",
    "piece_defects",
    "continuity_checks",
    "alpha_continuity_checks",
    "asym_continuity_check",
    "oracle_rows",
    "normalization_report",
    "CONTINUITY_TOL",
]

CONTINUITY_TOL = 1e-9


class VerificationTimeout(RuntimeError):
    """A verification run exceeded its wall-clock budget."""


@dataclass(frozen=True)
class CheckResult:
    name: str
    deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.deviation <= self.tolerance)

    def row(self) -> dict:
        return {"check": self.name, "deviation": self.deviation,
                "tolerance": self.tolerance, "passed": self.passed}


def piece_defects(pieces: Sequence[Piece]) -> tuple[float, float, float]:
    """``(max jump, max domain gap, |value at support end|)`` of a branch list.

    Zero-length branches are ignored.  The domain gap also covers a first
    branch that does not start at 0.
    """
    live = [p for p in pieces if p.length > 0]
    jump = gap = 0.0
    if live:
        gap = abs(live[0].lo)
    for left, right in zip(live, live[1:]):
        gap = max(gap, abs(right.lo - left.hi))
        jump = max(jump, abs(left.fn(left.hi) - right.fn(right.lo)))
    end = abs(live[-1].fn(live[-1].hi)) if live else 0.0
    return jump, gap, end


def _families(n: int, alpha: float):
    yield "d_o3", cf.d_o3_pieces(n, alpha)
    yield "d_o5", cf.d_o5_pieces(n, alpha)
    if alpha >= 1 or n % 2 == 0:
        yield "d_o6", cf.d_o6_pieces(n, alpha)
    if alpha >= 1:
        yield "d_s", cf.d_s_pieces(n, alpha)


def continuity_checks(n: int, alpha: float, tol: float = CONTINUITY_TOL) -> list[CheckResult]:
    """Breakpoint continuity, tiling and endpoint-zero checks for one ``(n, alpha)``."""
    out = []
    for name, pieces in _families(n, alpha):
        jump, gap, end = piece_defects(pieces)
        tag = f"{name}(n={n},alpha={alpha:g})"
        out.append(CheckResult(f"{tag} breakpoint jump", jump, tol))
        out.append(CheckResult(f"{tag} domain gap", gap, tol))
        out.append(CheckResult(f"{tag} endpoint value", end, tol))
    return out


def asym_continuity_check(M: int, N1: int, N2: int, alpha: float,
                          tol: float = CONTINUITY_TOL) -> CheckResult:
    """Jumps of the asymmetric no-CSIT sum-rate curve, including ``r_s = M alpha``."""
    jump, gap, end = piece_defects(cf.d_ics_pieces(M, N1, alpha))
    return CheckResult(f"d_ics(M={M},N1={N1},N2={N2},alpha={alpha:g}) continuity",
                       max(jump, gap, end), tol)


def alpha_continuity_checks(n: int, r_step: float = 0.05,
                            tol: float = CONTINUITY_TOL) -> list[CheckResult]:
    """Agreement of the alpha-families at their common boundary alpha."""
    out = []
    pairs = [("d_o3", cf.d_o3, 1.0), ("d_o5", cf.d_o5, 0.5)]
    if n % 2 == 0:
        pairs.append(("d_o6", cf.d_o6, 1.0))
    eps = 1e-12
    for name, fn, a0 in pairs:
        r = np.arange(0, 4 * n + r_step / 2, r_step)
        dev = max(abs(fn(n, a0 - eps, x) - fn(n, a0 + eps, x)) for x in r)
        # the eps offset only moves breakpoints by O(n eps)
        out.append(CheckResult(f"{name}(n={n}) alpha-branches at {a0:g}", dev, tol))
    return out


def _r_grid(end: float, r_step: float) -> np.ndarray:
    return np.round(np.arange(0.0, end + r_step / 2, r_step), 10)


def oracle_rows(bound: str, n: int, alpha: float, step: float, rounds: int = 0,
                variants: Iterable[bool] = (False, True), r_step: float = 0.1,
                p: Optional[int] = None, q: Optional[int] = None,
                workers: int = 1, timeout: Optional[float] = None) -> list[dict]:
    """Compare the grid oracle with the closed form on an ``r_step`` grid.

    ``bound`` is ``"ptp"`` (uses ``p, q``, default ``n, n``) or ``"5"``.  One
    row per (variant, r) with the closed value, the numeric value, the
    deviation and the certificate gap.  Raises :class:`VerificationTimeout`
    once ``timeout`` seconds have elapsed.
    """
    t0 = time.monotonic()
    rows = []

    def tick():
        if timeout is not None and time.monotonic() - t0 > timeout:
            raise VerificationTimeout(f"oracle sweep exceeded {timeout:g} s")

    if bound == "ptp":
        p = p or n
        q = q or n
        grid = GridSpec.default(alpha, step * 2 ** rounds, rounds)
        for r in _r_grid(min(p, q), r_step):
            tick()
            res = d_ptp_numeric(p, q, float(r), grid)
            closed = cf.d_ptp(p, q, float(r))
            rows.append(_row("ptp", r, closed, res))
        return rows
    if str(bound) != "5":
        raise ValueError("numeric oracle exists for the point-to-point and fifth bounds only")
    grid = GridSpec.default(alpha, step * 2 ** rounds, rounds)
    for typical in variants:
        label = "typical" if typical else "unrestricted"
        for r in _r_grid(d_o5_support_end(n, alpha), r_step):
            tick()
            res = d_o5_numeric(n, alpha, float(r), grid, typical_only=typical, workers=workers)
            rows.append(_row(label, r, cf.d_o5(n, alpha, float(r)), res))
    return rows


def _row(variant, r, closed, res) -> dict:
    num = res.value if res.value is not None else math.nan
    dev = abs(num - closed)
    return {"variant": variant, "r": float(r), "closed": float(closed), "numeric": float(num),
            "deviation": float(dev), "certificate_gap": float(res.certificate_gap),
            "status": res.status, "passed": bool(dev <= res.certificate_gap + 1e-9)}


def normalization_report(n: int, alpha: float, step: float = 0.05, workers: int = 1) -> dict:
    """Unconstrained minimum of the fifth-bound joint exponent and its argmin."""
    res = normalization_check(n, alpha, GridSpec.default(alpha, step), workers=workers)
    return {"n": n, "alpha": alpha, "value": res.value,
            "argmin": [list(v.values) for v in res.argmin],
            "negative": bool(res.value is not None and res.value < -1e-9),
            "certificate_gap": res.certificate_gap}
