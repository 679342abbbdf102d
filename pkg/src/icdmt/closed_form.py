"""Closed-form diversity-multiplexing tradeoff curves of the (n,n,n,n) IC.

Each outage exponent ``d_Ok`` is built as a list of :class:`Piece` branches so
that the branch boundaries stay inspectable (continuity checks, plotting).
Composite rates follow the bound coefficients::

    B1: r1          B2: r2          B3 = B4 = B5: r1 + r2
    B6: 2 r1 + r2   B7: r1 + 2 r2

``d_o4`` and ``d_o7`` are aliases of ``d_o3`` and ``d_o6`` by user symmetry.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .curves import Piece, PiecewiseCurve, evaluate_pieces

__all__ = [
    "UnsupportedClosedForm",
    "BoundId",
    "BOUND_COEFFICIENTS",
    "d_ptp",
    "d_o_single",
    "d_o3",
    "d_o4",
    "d_o5",
    "d_o6",
    "d_o7",
    "d_o3_pieces",
    "d_o5_pieces",
    "d_o6_pieces",
    "d_ics_pieces",
    "d_s_pieces",
    "d_bound",
    "bound_rate",
    "d_ic_optimal",
    "d_ic_alpha1",
    "d_s",
    "d_mac",
    "d_ics",
    "d_ic_nocsit_asym",
    "support_end",
    "sample_curve",
    "CURVES",
]


class UnsupportedClosedForm(ValueError):
    """No closed form is available for the requested parameters."""


BOUND_COEFFICIENTS: dict[int, tuple[int, int]] = {
    1: (1, 0), 2: (0, 1), 3: (1, 1), 4: (1, 1), 5: (1, 1), 6: (2, 1), 7: (1, 2),
}


@dataclass(frozen=True)
class BoundId:
    """One of the seven capacity bounds, with its rate coefficients."""

    id: int

    def __post_init__(self):
        if self.id not in BOUND_COEFFICIENTS:
            raise ValueError(f"bound id must be in 1..7, got {self.id}")

    @property
    def rate_coefficients(self) -> tuple[int, int]:
        return BOUND_COEFFICIENTS[self.id]

    def rate(self, r1: float, r2: float) -> float:
        a1, a2 = self.rate_coefficients
        return a1 * r1 + a2 * r2


def bound_rate(bound: int, r1: float, r2: float) -> float:
    return BoundId(bound).rate(r1, r2)


def d_ptp(p: int, q: int, r: float) -> float:
    """Optimal DMT of a ``p x q`` point-to-point Rayleigh MIMO channel.

    Piecewise linear through ``(k, (p-k)(q-k))`` for ``k = 0..min(p, q)``,
    and 0 beyond ``min(p, q)``.
    """
    if p < 1 or q < 1:
        raise ValueError("antenna counts must be positive")
    if r < 0:
        raise ValueError(f"multiplexing gain must be >= 0, got {r}")
    m = min(p, q)
    if r >= m:
        return 0.0
    k = int(np.floor(r))
    lo = (p - k) * (q - k)
    hi = (p - k - 1) * (q - k - 1)
    t = r - k
    return float(lo + (hi - lo) * t)


def d_o_single(n: int, r: float) -> float:
    """Outage exponent of the single-user bounds B1 and B2."""
    return d_ptp(n, n, r)


def _check(n: int, alpha: float):
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")


def d_o3_pieces(n: int, alpha: float) -> list[Piece]:
    _check(n, alpha)
    a = alpha
    if a <= 1:
        return [
            Piece(0.0, n * a,
                  lambda r: a * d_ptp(n, 3 * n, r / a) + 2 * n * n * (1 - a)),
            Piece(n * a, n * (2 - a),
                  lambda r: 2 * (1 - a) * d_ptp(n, n, (r - n * a) / (2 * (1 - a)))),
        ]
    return [
        Piece(0.0, float(n), lambda r: d_ptp(n, 3 * n, r) + n * n * (a - 1)),
        Piece(float(n), n * a, lambda r: (a - 1) * d_ptp(n, n, (r - n) / (a - 1))),
    ]


def d_o5_pieces(n: int, alpha: float) -> list[Piece]:
    _check(n, alpha)
    a = alpha
    if a <= 0.5:
        return [
            Piece(0.0, 2 * n * a,
                  lambda r: 2 * a * d_ptp(n, 3 * n, r / (2 * a)) + 2 * n * n * (1 - 2 * a)),
            Piece(2 * n * a, 2 * n * (1 - a),
                  lambda r: 2 * (1 - 2 * a) * d_ptp(n, n, (r - 2 * n * a) / (2 * (1 - 2 * a)))),
        ]
    return [
        Piece(0.0, float(n), lambda r: n * n * (2 * a - 1) + d_ptp(n, 3 * n, r)),
        Piece(float(n), 2 * n * a,
              lambda r: (2 * a - 1) * d_ptp(n, n, (r - n) / (2 * a - 1))),
    ]


def d_o6_pieces(n: int, alpha: float) -> list[Piece]:
    """Branches of the sixth-bound exponent.

    For ``1/2 <= alpha < 1`` the second branch is placed on
    ``[n alpha / 2, n (alpha + 1) / 2]`` with shift ``r_t - n alpha / 2``; this is
    the only placement that tiles the axis and joins both neighbours.
    """
    _check(n, alpha)
    a = alpha
    if a >= 1:
        return [
            Piece(0.0, float(n), lambda r: n * n * (2 * a - 1) + d_ptp(n, 3 * n, r)),
            Piece(float(n), 2 * n * a,
                  lambda r: (2 * a - 1) * d_ptp(n, n, (r - n) / (2 * a - 1))),
        ]
    if n % 2:
        raise UnsupportedClosedForm(
            f"no closed form for the sixth/seventh bound with odd n={n} and alpha={a} < 1; "
            "estimate it by Monte-Carlo simulation instead"
        )
    h = n / 2
    if a < 0.5:
        s1, s2, s3 = n * a / 2, 3 * n * a / 2, n * (1 + 2 * a) / 2
        return [
            Piece(0.0, s1, lambda r: n * n * (2 - a) + a * d_ptp(n, 3 * n, r / a)),
            Piece(s1, s2, lambda r: (n * n * (2 - 3 * a)
                                     + a * d_ptp(n, 3 * n, (r - s1) / (2 * a) + h)
                                     + a * d_ptp(n, 2 * n, (r - s1) / (2 * a)))),
            Piece(s2, s3, lambda r: (n * n * (1 - a)
                                     + (1 - 2 * a) * d_ptp(n, n, (r - s2) / (1 - a))
                                     + a * d_ptp(n, 2 * n, (r - s2) / (1 - a) + h))),
            Piece(s3, n * (2 - a), lambda r: ((1 - 2 * a) * d_ptp(n, n, (r - s3) / (3 - 4 * a) + h)
                                              + (1 - a) * d_ptp(n, n, (r - s3) / (3 - 4 * a)))),
            Piece(n * (2 - a), n * (3 - 2 * a),
                  lambda r: (1 - a) * d_ptp(n, n, (r - n) / (2 * (1 - a)))),
        ]
    s1, s2, s3 = n * a / 2, n * (a + 1) / 2, n * (1 + 2 * a) / 2
    return [
        Piece(0.0, s1, lambda r: n * n * (2 - a) + a * d_ptp(n, 3 * n, r / a)),
        Piece(s1, s2, lambda r: (n * n * a
                                 + a * d_ptp(n, 3 * n, (r - s1) + h)
                                 + (1 - a) * d_ptp(n, 2 * n, r - s1))),
        Piece(s2, s3, lambda r: (n * n * (1 - a)
                                 + (2 * a - 1) * d_ptp(n, n, (r - s2) / a)
                                 + (1 - a) * d_ptp(n, 2 * n, (r - s2) / a + h))),
        Piece(s3, n * (1 + a), lambda r: ((2 * a - 1) * d_ptp(n, n, (r - s3) + h)
                                          + (1 - a) * d_ptp(n, n, r - s3))),
        Piece(n * (1 + a), 2.0 * n,
              lambda r: (1 - a) * d_ptp(n, n, (r - 2 * n * a) / (2 * (1 - a)))),
    ]


def d_o3(n: int, alpha: float, r_s: float) -> float:
    """Outage exponent of the third (sum-rate) bound at ``r_s = r1 + r2``."""
    return evaluate_pieces(d_o3_pieces(n, alpha), r_s)


d_o4 = d_o3


def d_o5(n: int, alpha: float, r_s: float) -> float:
    """Outage exponent of the fifth (doubly whitened sum-rate) bound."""
    return evaluate_pieces(d_o5_pieces(n, alpha), r_s)


def d_o6(n: int, alpha: float, r_t: float) -> float:
    """Outage exponent of the sixth bound at ``r_t = 2 r1 + r2``.

    Raises :class:`UnsupportedClosedForm` for odd ``n`` with ``alpha < 1``.
    """
    return evaluate_pieces(d_o6_pieces(n, alpha), r_t)


d_o7 = d_o6


def d_bound(bound: int, n: int, alpha: float, r1: float, r2: float) -> float:
    """Outage exponent of bound ``bound`` at the rate pair ``(r1, r2)``."""
    x = bound_rate(bound, r1, r2)
    if bound in (1, 2):
        return d_o_single(n, x)
    if bound in (3, 4):
        return d_o3(n, alpha, x)
    if bound == 5:
        return d_o5(n, alpha, x)
    return d_o6(n, alpha, x)


def d_ic_optimal(n: int, alpha: float, r1: float, r2: float) -> float:
    """Optimal DMT with CSIT: the minimum of the seven outage exponents."""
    return min(d_bound(k, n, alpha, r1, r2) for k in range(1, 8))


def d_ic_alpha1(n: int, r1: float, r2: float) -> float:
    """Optimal DMT at ``alpha = 1``."""
    return min(d_ptp(n, n, r1), d_ptp(n, n, r2), d_ptp(n, 3 * n, r1 + r2))


def d_s_pieces(n: int, alpha: float) -> list[Piece]:
    if alpha < 1:
        raise ValueError(f"the MAC-style exponent is defined for alpha >= 1, got {alpha}")
    a = alpha
    return [
        Piece(0.0, float(n), lambda x: d_ptp(n, 3 * n, x) + n * n * (a - 1)),
        Piece(float(n), n * a, lambda x: (a - 1) * d_ptp(n, n, (x - n) / (a - 1))),
    ]


def d_s(n: int, alpha: float, x: float) -> float:
    """Sum-rate exponent of treating each receiver as a MAC, ``x = 2r``."""
    return evaluate_pieces(d_s_pieces(n, alpha), x)


def d_mac(n: int, alpha: float, r: float) -> float:
    """DMT of the CSIT-free scheme sending only common messages, at ``(r, r)``."""
    return min(d_ptp(n, n, r), d_s(n, alpha, 2 * r))


def _check_asym(M: int, N1: int, N2: int, alpha: float):
    if M < 1:
        raise ValueError("M must be positive")
    if not (2 * M <= N1 <= N2):
        raise ValueError(f"requires 2M <= N1 <= N2, got M={M}, N1={N1}, N2={N2}")
    if alpha < 1:
        raise ValueError(f"requires alpha >= 1, got {alpha}")


def d_ics_pieces(M: int, N1: int, alpha: float) -> list[Piece]:
    a = alpha
    pieces = []
    for k in range(M):
        pieces.append(Piece(
            k * a, (k + 1) * a,
            lambda r, k=k: (a * d_ptp(M, M + N1, r / a)
                            + M * (max(r - k * a - 1, 0.0) + (M - k) * (1 - a))
                            + M * (N1 - M)),
        ))
    pieces.append(Piece(M * a, M * (a - 1) + N1, lambda r: d_ptp(M, N1 - M, r - M * a)))
    return pieces


def d_ics(M: int, N1: int, N2: int, alpha: float, r_s: float) -> float:
    """Sum-rate exponent of the asymmetric no-CSIT channel."""
    _check_asym(M, N1, N2, alpha)
    return evaluate_pieces(d_ics_pieces(M, N1, alpha), r_s)


def d_ic_nocsit_asym(M: int, N1: int, N2: int, alpha: float, r1: float, r2: float) -> float:
    """Optimal no-CSIT DMT of the ``(M, N1, M, N2)`` IC with ``2M <= N1 <= N2``."""
    _check_asym(M, N1, N2, alpha)
    return min(d_ptp(M, N1, r1), d_ptp(M, N2, r2), d_ics(M, N1, N2, alpha, r1 + r2))


def support_end(bound: int, n: int, alpha: float) -> float:
    """Largest composite rate at which the exponent of ``bound`` is positive."""
    if bound in (1, 2):
        return float(n)
    pieces = {3: d_o3_pieces, 4: d_o3_pieces, 5: d_o5_pieces,
              6: d_o6_pieces, 7: d_o6_pieces}[bound](n, alpha)
    return max(p.hi for p in pieces if p.length > 0)


# Named single-argument curve families for sampling and the CLI.
CURVES: dict[str, Callable[..., float]] = {
    "ptp": lambda r, p, q: d_ptp(p, q, r),
    "o1": lambda r, n, alpha=None: d_o_single(n, r),
    "o3": lambda r, n, alpha: d_o3(n, alpha, r),
    "o5": lambda r, n, alpha: d_o5(n, alpha, r),
    "o6": lambda r, n, alpha: d_o6(n, alpha, r),
    "s": lambda r, n, alpha: d_s(n, alpha, r),
    "ics": lambda r, M, N1, N2, alpha: d_ics(M, N1, N2, alpha, r),
}


def sample_curve(selector, params: dict, step: float, r_max: float | None = None,
                 label: str = "") -> PiecewiseCurve:
    """Sample a curve on a uniform grid and keep only its breakpoints.

    ``selector`` is either a key of :data:`CURVES` or a callable ``f(r, **params)``.
    The grid runs from 0 to ``r_max`` (default: the first grid point at which
    the curve reaches 0, searched up to 64).
    """
    if step <= 0:
        raise ValueError("grid step must be positive")
    fn = CURVES[selector] if isinstance(selector, str) else selector
    if r_max is None:
        k = 0
        while fn(k * step, **params) > 0 and k * step < 64:
            k += 1
        r_max = k * step
    count = int(round(r_max / step))
    grid = np.arange(count + 1) * step
    vals = np.array([fn(float(r), **params) for r in grid])
    return PiecewiseCurve.from_samples(grid, vals, label=label or str(selector))
