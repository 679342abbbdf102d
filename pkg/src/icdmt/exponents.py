"""High-SNR eigenvalue-exponent calculus.

An eigenvalue ``lam`` of a random matrix at nominal SNR ``rho`` is written as
``lam = rho ** (-e)``; the probability that the exponent vector lands near
``e`` decays like ``rho ** (-E(e))``.  This module evaluates those decay rates
``E`` for

* ordinary (point-to-point) Wishart matrices,
* the whitened direct link ``(I + rho^a H2 H2^H)^(-1/2) H1 (I + rho^a H3^H H3)^(-1/2)``
  conditioned on the eigenvalue exponents of the two cross links,

together with the log-det to exponent map used to express outage events as
piecewise-linear constraints.

Exponent vectors are always stored in ascending order, i.e. eigenvalues in
descending order.  Index ``j`` (1-based) therefore refers to the ``j``-th
largest eigenvalue.  All public functions accept any sequence and
sort-normalize it, so permuting the input never changes a result.

Every evaluator has a batched twin (suffix ``_batch``) operating on
``(..., n)`` arrays whose last axis is already sorted ascending; the solver
uses those directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

__all__ = [
    "ExponentVector",
    "ExponentTriple",
    "support_contains",
    "conditional_exponent",
    "wishart_marginal_exponent",
    "logdet_exponent",
    "joint_exponent_b5",
    "support_contains_batch",
    "conditional_exponent_batch",
    "wishart_marginal_exponent_batch",
    "logdet_exponent_batch",
    "conditional_lipschitz",
    "whitening_consistent_batch",
]

#: Slack used when checking the (closed) support constraints.
SUPPORT_TOL = 1e-12

# Exponents are plain floats; ``math.inf`` marks an event outside the support
# (faster than polynomial decay).
ExtendedExponent = float


@dataclass(frozen=True)
class ExponentVector:
    """Ascending tuple of eigenvalue scaling exponents.

    Input order is irrelevant: the values are sorted on construction.
    """

    values: tuple[float, ...]

    def __init__(self, values: Union[Sequence[float], np.ndarray, "ExponentVector"]):
        if isinstance(values, ExponentVector):
            vals = values.values
        else:
            vals = tuple(float(v) for v in np.ravel(np.asarray(values, dtype=float)))
        if len(vals) < 1:
            raise ValueError("an exponent vector needs at least one entry")
        if any(math.isnan(v) for v in vals):
            raise ValueError("exponent vector contains NaN")
        object.__setattr__(self, "values", tuple(sorted(vals)))

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, idx):
        return self.values[idx]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class ExponentTriple:
    """Conditioning set ``(beta, gamma, alpha_vec, alpha)``.

    ``beta`` are the exponents of the whitened direct link, ``gamma`` and
    ``alpha_vec`` those of the two cross-link Wishart matrices, and
    ``cross_exponent`` is the scalar INR exponent ``alpha``.
    """

    beta: ExponentVector
    gamma: ExponentVector
    alpha_vec: ExponentVector
    cross_exponent: float

    def __init__(self, beta, gamma, alpha_vec, cross_exponent: float):
        beta, gamma, alpha_vec = (ExponentVector(v) for v in (beta, gamma, alpha_vec))
        if not (len(beta) == len(gamma) == len(alpha_vec)):
            raise ValueError(
                f"dimension mismatch: len(beta)={len(beta)}, len(gamma)={len(gamma)}, "
                f"len(alpha_vec)={len(alpha_vec)}"
            )
        cross_exponent = float(cross_exponent)
        if not cross_exponent >= 0:
            raise ValueError(f"cross exponent must be >= 0, got {cross_exponent}")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "alpha_vec", alpha_vec)
        object.__setattr__(self, "cross_exponent", cross_exponent)

    @property
    def n(self) -> int:
        return len(self.beta)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.beta.as_array(), self.gamma.as_array(), self.alpha_vec.as_array()


def _pos(x):
    return np.maximum(x, 0.0)


# ---------------------------------------------------------------------------
# batched kernels (last axis sorted ascending, broadcast over leading axes)
# ---------------------------------------------------------------------------

def _pair_mask(n: int) -> np.ndarray:
    # mask[i, j] is True for 1-based pairs with i + j >= n + 1
    idx = np.arange(1, n + 1)
    return (idx[:, None] + idx[None, :]) >= n + 1


def support_contains_batch(beta, gamma, avec, alpha: float) -> np.ndarray:
    """Vectorised membership test for the support set.

    ``beta``, ``gamma`` and ``avec`` broadcast against each other; the last
    axis (length ``n``) must be sorted ascending.
    """
    beta = np.asarray(beta, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    avec = np.asarray(avec, dtype=float)
    n = beta.shape[-1]
    ok = beta[..., 0] >= -SUPPORT_TOL
    mask = _pair_mask(n)
    for i in range(n):
        for j in range(n):
            if not mask[i, j]:
                continue
            ok = ok & (avec[..., i] + beta[..., j] >= alpha - SUPPORT_TOL)
            ok = ok & (gamma[..., i] + beta[..., j] >= alpha - SUPPORT_TOL)
    return ok


def conditional_exponent_batch(beta, gamma, avec, alpha: float) -> np.ndarray:
    """Vectorised conditional density exponent, ``+inf`` outside the support."""
    beta = np.asarray(beta, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    avec = np.asarray(avec, dtype=float)
    n = beta.shape[-1]
    shape = np.broadcast_shapes(beta.shape[:-1], gamma.shape[:-1], avec.shape[:-1])
    total = np.zeros(shape)
    # inner floor term per i; the third entry may be negative and is used as is
    floor = np.minimum(np.minimum(avec, gamma), gamma + avec - alpha)
    for j in range(1, n + 1):
        bj = beta[..., j - 1]
        term = (2 * n + 1 - 2 * j) * bj
        term = term - n * _pos(alpha - avec[..., j - 1]) - n * _pos(alpha - gamma[..., j - 1])
        for i in range(1, n - j + 1):
            term = term + _pos(alpha - bj - floor[..., i - 1])
        total = total + term
    inside = support_contains_batch(beta, gamma, avec, alpha)
    return np.where(inside, total, np.inf)


def wishart_marginal_exponent_batch(p: int, q: int, e) -> np.ndarray:
    """Vectorised point-to-point Wishart exponent, ``+inf`` if any entry < 0."""
    e = np.asarray(e, dtype=float)
    m = min(p, q)
    if e.shape[-1] != m:
        raise ValueError(f"expected {m} exponents for a {p}x{q} channel, got {e.shape[-1]}")
    j = np.arange(1, m + 1)
    weights = 2 * m + 1 - 2 * j + abs(p - q)
    val = e @ weights.astype(float)
    return np.where(np.all(e >= -SUPPORT_TOL, axis=-1), val, np.inf)


def logdet_exponent_batch(level: float, e) -> np.ndarray:
    """Vectorised ``sum_i (level - e_i)^+`` over the last axis."""
    return _pos(level - np.asarray(e, dtype=float)).sum(axis=-1)


def whitening_consistent_batch(beta, gamma, avec, alpha: float) -> np.ndarray:
    """Necessary conditions on ``beta`` implied by two-sided whitening.

    With ``H~ = L H R`` the whitening factors have squared-singular-value
    exponents ``(alpha - gamma_l)^+`` and ``(alpha - a_k)^+``.  Sorting them
    ascending into ``dl`` and ``dr``, the singular-value product inequality
    gives ``beta_(i+k-1) >= dl_i + dr_k`` whenever ``i + k - 1 <= n``, and the
    determinant gives ``sum(beta) >= sum(dl) + sum(dr)``.  Configurations
    violating these have vanishing probability at any SNR.
    """
    beta = np.asarray(beta, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    avec = np.asarray(avec, dtype=float)
    n = beta.shape[-1]
    # gamma ascending -> hinge descending, so reversing sorts ascending
    dl = _pos(alpha - gamma)[..., ::-1]
    dr = _pos(alpha - avec)[..., ::-1]
    ok = beta.sum(axis=-1) >= dl.sum(axis=-1) + dr.sum(axis=-1) - SUPPORT_TOL
    for i in range(n):
        for k in range(n - i):
            ok = ok & (beta[..., i + k] >= dl[..., i] + dr[..., k] - SUPPORT_TOL)
    return ok


def conditional_lipschitz(n: int) -> float:
    """Sum of absolute coefficients of the conditional exponent (l-inf Lipschitz)."""
    # linear beta weights + two n-weighted hinge families + 3 per inner hinge
    return float(n * n + 2 * n * n + 3 * n * (n - 1) // 2)


# ---------------------------------------------------------------------------
# scalar API
# ---------------------------------------------------------------------------

def support_contains(t: ExponentTriple) -> bool:
    """True iff ``t`` lies in the support set of the conditional law.

    The support requires ``beta_1 >= 0`` and, for every 1-based index pair with
    ``i + j >= n + 1``, both ``alpha_i + beta_j >= alpha`` and
    ``gamma_i + beta_j >= alpha``.
    """
    b, g, a = t.arrays()
    return bool(support_contains_batch(b, g, a, t.cross_exponent))


def conditional_exponent(t: ExponentTriple) -> ExtendedExponent:
    """Decay exponent of the density of ``beta`` given ``gamma`` and ``alpha_vec``.

    Returns ``math.inf`` when ``t`` is outside the support.  The inner floor
    ``min(alpha_i, gamma_i, gamma_i + alpha_i - alpha)`` is not clipped at 0.

    Examples
    --------
    >>> conditional_exponent(ExponentTriple([3.0], [0.0], [0.0], 1.0))
    1.0
    """
    b, g, a = t.arrays()
    return float(conditional_exponent_batch(b, g, a, t.cross_exponent))


def wishart_marginal_exponent(p: int, q: int, e) -> ExtendedExponent:
    """Decay exponent of the ordered eigenvalue exponents of a ``p x q`` Wishart.

    With ``m = min(p, q)`` and ``e`` ascending, the value is
    ``sum_j (2m + 1 - 2j + |p - q|) e_j``; any negative entry gives ``inf``.
    """
    if p < 1 or q < 1:
        raise ValueError("antenna counts must be positive")
    ev = ExponentVector(e)
    if len(ev) != min(p, q):
        raise ValueError(f"expected {min(p, q)} exponents, got {len(ev)}")
    return float(wishart_marginal_exponent_batch(p, q, ev.as_array()))


def logdet_exponent(level: float, e) -> float:
    """Pre-log of ``log|I + rho^level W|`` given eigenvalue exponents ``e``."""
    return float(logdet_exponent_batch(level, ExponentVector(e).as_array()))


def joint_exponent_b5(beta1, beta2, a21, a12, alpha: float) -> ExtendedExponent:
    """Joint decay exponent of the four eigenvalue sets entering the fifth bound.

    Given the cross-link exponents, the two whitened direct links are
    conditionally independent, so the joint exponent is the sum of two
    conditional terms and the two cross-link Wishart marginals.
    """
    b1, b2, g21, g12 = (ExponentVector(v) for v in (beta1, beta2, a21, a12))
    n = len(b1)
    if not (len(b2) == len(g21) == len(g12) == n):
        raise ValueError("all exponent vectors must have the same length")
    c1 = conditional_exponent(ExponentTriple(b1, g21, g12, alpha))
    c2 = conditional_exponent(ExponentTriple(b2, g12, g21, alpha))
    m1 = wishart_marginal_exponent(n, n, g21)
    m2 = wishart_marginal_exponent(n, n, g12)
    return c1 + c2 + m1 + m2
