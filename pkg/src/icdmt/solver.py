"""Grid-based minimisation of outage exponents.

By the Laplace principle the outage exponent at a rate threshold is the
minimum of the joint eigenvalue-exponent density over the outage set.  This
module computes that minimum numerically, independently of the closed forms:

* ``ptp``: point-to-point ``p x q`` channel, one ascending vector ``mu``;
* ``b5``: the fifth sum-rate bound, four ascending vectors
  ``(beta1, beta2, a21, a12)`` of length ``n``.

The search is exhaustive on a uniform grid over ``[0, upper_bound]`` per
coordinate (ordered vectors only), followed by ``refinement_rounds`` local
rounds that halve the step in a window around the incumbent.

For ``b5`` the objective and the rate constraint are separable once the two
cross-link vectors are fixed, which turns the 4n-dimensional enumeration into
a table lookup: for every cross-link pair the best ``beta2`` for each residual
budget is a prefix minimum over ``beta2`` candidates sorted by rate.  The
result is the exact grid minimum, identical to naive enumeration.
"""

from __future__ import annotations

import functools
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import exponents as ex
from .exponents import ExponentVector

__all__ = [
    "GridSpec",
    "OutageProblem",
    "SolverResult",
    "minimize_exponent",
    "d_o5_numeric",
    "d_ptp_numeric",
    "normalization_check",
    "lipschitz_bound",
    "d_o5_support_end",
]

RATE_TOL = 1e-9
# objective values are compared on an integer lattice of this spacing so that
# ties are exact and the lexicographic tie-break is reproducible
QUANT = 1e-9
_SENTINEL = 1 << 40

B5_VECTORS = ("beta1", "beta2", "a21", "a12")


@dataclass(frozen=True)
class GridSpec:
    """Exponent grid: uniform ``step`` on ``[0, upper_bound]`` plus refinement."""

    step: float
    upper_bound: float
    refinement_rounds: int = 0

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("grid step must be positive")
        if not self.upper_bound > 0:
            raise ValueError("upper bound must be positive")
        if self.step > self.upper_bound:
            raise ValueError("grid step exceeds the search ceiling")
        if self.refinement_rounds < 0:
            raise ValueError("refinement rounds must be >= 0")

    @classmethod
    def default(cls, alpha: float, step: float = 0.02, refinement_rounds: int = 0,
                upper_bound: Optional[float] = None) -> "GridSpec":
        """Grid with the standard ceiling ``max(1, alpha) + 1``."""
        if upper_bound is None:
            upper_bound = max(1.0, alpha) + 1.0
        return cls(step, upper_bound, refinement_rounds)

    @property
    def final_step(self) -> float:
        return self.step / 2 ** self.refinement_rounds

    def values(self) -> np.ndarray:
        count = int(math.floor(self.upper_bound / self.step + 1e-9))
        vals = np.round(np.arange(count + 1) * self.step, 12)
        if vals[-1] < self.upper_bound - 1e-12:
            vals = np.append(vals, self.upper_bound)
        return vals


@dataclass(frozen=True)
class OutageProblem:
    """Minimise a joint exponent subject to ``sum(level - e)^+ <= threshold``.

    ``rate_terms`` lists ``(level, vector_name)`` pairs; each contributes
    ``logdet_exponent(level, vector)`` to the rate constraint.  ``threshold``
    of ``None`` drops the rate constraint.  ``typical_only`` additionally
    requires every conditional term of the ``b5`` objective to be ``>= 0``
    and each whitened vector to respect the two-sided whitening floors.
    """

    n: int
    alpha: float
    rate_terms: tuple[tuple[float, str], ...]
    threshold: Optional[float]
    objective: str = "b5"
    p: Optional[int] = None
    q: Optional[int] = None
    typical_only: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.threshold is not None and self.threshold < 0:
            raise ValueError("rate threshold must be >= 0")
        if self.objective not in ("b5", "ptp"):
            raise ValueError(f"unknown objective {self.objective!r}")
        names = B5_VECTORS if self.objective == "b5" else ("mu",)
        for level, name in self.rate_terms:
            if name not in names:
                raise ValueError(f"unknown vector {name!r} for objective {self.objective}")
            if not (math.isclose(level, 1.0) or math.isclose(level, self.alpha)):
                raise ValueError(f"rate levels must be 1 or alpha, got {level}")
        if self.objective == "ptp" and (self.p is None or self.q is None
                                         or min(self.p, self.q) != self.n):
            raise ValueError("ptp problems need p, q with min(p, q) == n")

    @classmethod
    def b5(cls, n: int, alpha: float, r_s: Optional[float],
           typical_only: bool = False) -> "OutageProblem":
        terms = ((1.0, "beta1"), (1.0, "beta2"), (alpha, "a21"), (alpha, "a12"))
        return cls(n, alpha, terms, r_s, "b5", typical_only=typical_only)

    @classmethod
    def ptp(cls, p: int, q: int, r: float) -> "OutageProblem":
        return cls(min(p, q), 0.0, ((1.0, "mu"),), r, "ptp", p=p, q=q)

    def vector_names(self) -> tuple[str, ...]:
        return B5_VECTORS if self.objective == "b5" else ("mu",)

    def levels(self, name: str) -> list[float]:
        return [lvl for lvl, v in self.rate_terms if v == name]


@dataclass(frozen=True)
class SolverResult:
    """Outcome of a grid minimisation.

    ``status`` is ``"optimal"``, ``"infeasible"`` (no grid point satisfies
    the constraints; ``value`` is ``None``) or ``"beyond-support"`` (the rate
    is past the curve's support, ``value`` is 0 by definition).
    """

    value: Optional[float]
    argmin: tuple[ExponentVector, ...]
    certificate_gap: float
    status: str = "optimal"
    final_step: float = 0.0
    evaluations: int = 0

    @property
    def feasible(self) -> bool:
        return self.status != "infeasible"


def lipschitz_bound(problem: OutageProblem) -> float:
    """Sum of absolute objective coefficients (l-inf Lipschitz constant)."""
    if problem.objective == "ptp":
        return float(problem.p * problem.q)
    n = problem.n
    return 2 * ex.conditional_lipschitz(n) + 2.0 * n * n


# ---------------------------------------------------------------------------
# candidate generation
# ---------------------------------------------------------------------------

def _ascending_full(values: np.ndarray, n: int) -> np.ndarray:
    combos = list(itertools.combinations_with_replacement(range(len(values)), n))
    return values[np.array(combos, dtype=int)]


def _ascending_product(per_coord: Sequence[np.ndarray]) -> np.ndarray:
    rows = [c for c in itertools.product(*per_coord)
            if all(a <= b for a, b in zip(c, c[1:]))]
    return np.array(rows, dtype=float).reshape(len(rows), len(per_coord))


def _window(center: np.ndarray, step: float, upper: float, radius: int) -> list[np.ndarray]:
    offsets = np.arange(-radius, radius + 1) * step
    out = []
    for c in center:
        vals = np.round(np.clip(c + offsets, 0.0, upper), 12)
        out.append(np.unique(vals))
    return out


def _rate(vecs: np.ndarray, levels: list[float]) -> np.ndarray:
    total = np.zeros(len(vecs))
    for lvl in levels:
        total = total + ex.logdet_exponent_batch(lvl, vecs)
    return total


def _quantize(x: np.ndarray) -> np.ndarray:
    q = np.full(x.shape, _SENTINEL, dtype=np.int64)
    finite = np.isfinite(x)
    q[finite] = np.rint(x[finite] / QUANT).astype(np.int64)
    return q


# ---------------------------------------------------------------------------
# point-to-point objective
# ---------------------------------------------------------------------------

def _solve_ptp(problem: OutageProblem, cands: np.ndarray):
    obj = ex.wishart_marginal_exponent_batch(problem.p, problem.q, cands)
    if problem.threshold is not None:
        rate = _rate(cands, problem.levels("mu"))
        obj = np.where(rate <= problem.threshold + RATE_TOL, obj, np.inf)
    q = _quantize(obj)
    k = int(np.argmin(q))  # first occurrence = lexicographically smallest
    if q[k] >= _SENTINEL:
        return None, len(cands)
    return (cands[k],), len(cands)


# ---------------------------------------------------------------------------
# fifth-bound objective
# ---------------------------------------------------------------------------

class _B5Tables:
    """Rate-independent lookup tables for one set of candidate vectors."""

    def __init__(self, problem: OutageProblem, c1, c2, cg, ca, workers: int = 1):
        self.problem = problem
        self.c1, self.c2, self.cg, self.ca = c1, c2, cg, ca
        alpha = problem.alpha
        p = problem
        self.rate1 = _rate(c1, p.levels("beta1"))
        rate2 = _rate(c2, p.levels("beta2"))
        self.rate_ga = _rate(cg, p.levels("a21"))[:, None] + _rate(ca, p.levels("a12"))[None, :]
        marg = (ex.wishart_marginal_exponent_batch(p.n, p.n, cg)[:, None]
                + ex.wishart_marginal_exponent_batch(p.n, p.n, ca)[None, :])
        self.q_marg = _quantize(marg)
        self.order2 = np.argsort(rate2, kind="stable")
        self.rate2_sorted = rate2[self.order2]
        k2 = len(c2)
        self.k2 = k2

        G, A = len(cg), len(ca)
        self.q1 = np.empty((G, A, len(c1)), dtype=np.int64)
        self.key2 = np.empty((G, A, k2), dtype=np.int64)
        idx2_sorted = self.order2.astype(np.int64)

        def fill(g_slice):
            g = cg[g_slice][:, None, None, :]
            a = ca[None, :, None, :]
            cond1 = ex.conditional_exponent_batch(c1[None, None], g, a, alpha)
            cond2 = ex.conditional_exponent_batch(c2[None, None], a, g, alpha)
            if p.typical_only:
                ok1 = (cond1 >= -1e-12) & ex.whitening_consistent_batch(c1[None, None], g, a, alpha)
                ok2 = (cond2 >= -1e-12) & ex.whitening_consistent_batch(c2[None, None], a, g, alpha)
                cond1 = np.where(ok1, cond1, np.inf)
                cond2 = np.where(ok2, cond2, np.inf)
            self.q1[g_slice] = _quantize(cond1)
            q2 = _quantize(cond2)[..., self.order2]
            keys = q2 * k2 + idx2_sorted
            self.key2[g_slice] = np.minimum.accumulate(keys, axis=-1)

        chunk = max(1, 2_000_000 // max(1, A * max(len(c1), k2)))
        slices = [slice(s, min(s + chunk, G)) for s in range(0, G, chunk)]
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                list(pool.map(fill, slices))
        else:
            for s in slices:
                fill(s)

    @property
    def size(self) -> int:
        return len(self.c1) * len(self.c2) * len(self.cg) * len(self.ca)

    def solve(self, threshold: Optional[float]):
        """Best grid point as ``(q_value, (i1, i2, ig, ia))`` or ``None``."""
        G = self.q1.shape[0]
        chunk = max(1, 1_000_000 // max(1, self.q1.shape[1] * self.q1.shape[2]))
        best = None
        for s in range(0, G, chunk):
            hit = self._solve_chunk(threshold, slice(s, min(s + chunk, G)), s)
            if hit is not None and (best is None or hit < best):
                best = hit
        if best is None:
            return None
        q, i1, i2, ig, ia = best
        return q, (i1, i2, ig, ia)

    def _solve_chunk(self, threshold, gs: slice, offset: int):
        k2 = self.k2
        q1 = self.q1[gs]
        if threshold is None:
            pos = np.full(q1.shape, k2 - 1)
            valid = np.ones(q1.shape, dtype=bool)
        else:
            budget = threshold - self.rate_ga[gs]
            t = budget[..., None] - self.rate1[None, None, :]
            pos = np.searchsorted(self.rate2_sorted, t + RATE_TOL, side="right") - 1
            valid = pos >= 0
            pos = np.clip(pos, 0, k2 - 1)
        key = np.take_along_axis(self.key2[gs], pos, axis=-1)
        q2 = key // k2
        qm = self.q_marg[gs][..., None]
        total = q1 + q2 + qm
        bad = (~valid) | (q1 >= _SENTINEL) | (q2 >= _SENTINEL) | (qm >= _SENTINEL)
        total = np.where(bad, _SENTINEL, total)
        best = total.min()
        if best >= _SENTINEL:
            return None
        ig, ia, i1 = np.nonzero(total == best)
        j2 = key[ig, ia, i1] % k2
        k = np.lexsort((ia, ig, j2, i1))[0]
        # tuple order makes the cross-chunk reduction a lexicographic min
        return int(best), int(i1[k]), int(j2[k]), int(ig[k]) + offset, int(ia[k])

    def point(self, idx):
        i1, i2, ig, ia = idx
        return self.c1[i1], self.c2[i2], self.cg[ig], self.ca[ia]


@functools.lru_cache(maxsize=8)
def _coarse_b5_tables(n, alpha, rate_terms, typical_only, step, upper, workers):
    problem = OutageProblem(n, alpha, rate_terms, None, "b5", typical_only=typical_only)
    grid = GridSpec(step, upper).values()
    full = _ascending_full(grid, n)
    return _B5Tables(problem, full, full, full, full, workers)


def _b5_value(problem: OutageProblem, b1, b2, g, a) -> float:
    alpha = problem.alpha
    c1 = float(ex.conditional_exponent_batch(b1, g, a, alpha))
    c2 = float(ex.conditional_exponent_batch(b2, a, g, alpha))
    m = float(ex.wishart_marginal_exponent_batch(problem.n, problem.n, g)
              + ex.wishart_marginal_exponent_batch(problem.n, problem.n, a))
    return c1 + c2 + m


def _ptp_value(problem: OutageProblem, mu) -> float:
    return float(ex.wishart_marginal_exponent_batch(problem.p, problem.q, mu))


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------

def minimize_exponent(problem: OutageProblem, grid: GridSpec, workers: int = 1,
                      refine_radius: int = 4) -> SolverResult:
    """Grid-minimise the joint exponent of ``problem``.

    The coarse stage is exhaustive over ordered vectors on ``grid``.  Each
    refinement round halves the step and searches exhaustively in a window of
    ``refine_radius`` new steps around the incumbent in every coordinate.
    ``certificate_gap`` is the Lipschitz bound times the final step.
    Ties are broken towards the lexicographically smallest argmin of the
    concatenated vectors; the result does not depend on ``workers``.
    """
    if grid.upper_bound < max(1.0, problem.alpha) + 1.0 - 1e-12:
        raise ValueError("search ceiling must be at least max(1, alpha) + 1")
    n = problem.n
    lip = lipschitz_bound(problem)
    step = grid.step
    upper = grid.upper_bound
    evals = 0

    if problem.objective == "ptp":
        cands = _ascending_full(grid.values(), n)
        best, cnt = _solve_ptp(problem, cands)
        evals += cnt
        if best is None:
            return SolverResult(None, (), lip * step, "infeasible", step, evals)
        for _ in range(grid.refinement_rounds):
            step /= 2
            cands = _ascending_product(_window(best[0], step, upper, refine_radius))
            new, cnt = _solve_ptp(problem, cands)
            evals += cnt
            if new is not None and _ptp_value(problem, new[0]) <= _ptp_value(problem, best[0]):
                best = new
        vecs = tuple(ExponentVector(v) for v in best)
        return SolverResult(_ptp_value(problem, best[0]), vecs, lip * step,
                            "optimal", step, evals)

    tables = _coarse_b5_tables(n, float(problem.alpha), problem.rate_terms,
                               problem.typical_only, float(step), float(upper), workers)
    found = tables.solve(problem.threshold)
    evals += tables.size
    if found is None:
        return SolverResult(None, (), lip * step, "infeasible", step, evals)
    best = tables.point(found[1])
    best_val = _b5_value(problem, *best)
    for _ in range(grid.refinement_rounds):
        step /= 2
        blocks = [_ascending_product(_window(v, step, upper, refine_radius)) for v in best]
        local = _B5Tables(problem, *blocks, workers=1)
        evals += local.size
        hit = local.solve(problem.threshold)
        if hit is None:
            continue
        cand = local.point(hit[1])
        val = _b5_value(problem, *cand)
        if val <= best_val:
            best, best_val = cand, val
    vecs = tuple(ExponentVector(v) for v in best)
    return SolverResult(best_val, vecs, lip * step, "optimal", step, evals)


def d_o5_support_end(n: int, alpha: float) -> float:
    return 2 * n * (1 - alpha) if alpha <= 0.5 else 2 * n * alpha


def d_o5_numeric(n: int, alpha: float, r_s: float, grid: GridSpec, *,
                 typical_only: bool = False, workers: int = 1) -> SolverResult:
    """Numerical fifth-bound outage exponent at sum rate ``r_s``.

    At or beyond the support end the exponent is 0 by definition.

    ``typical_only`` restricts the search to conditional exponents ``>= 0``
    that also satisfy the two-sided whitening floors
    (:func:`icdmt.exponents.whitening_consistent_batch`).  Those floors can
    push ``beta`` up to ``2 alpha``, so the ceiling is raised to at least
    that value in this mode.
    """
    if r_s < 0:
        raise ValueError("r_s must be >= 0")
    if typical_only and grid.upper_bound < 2 * alpha:
        grid = replace(grid, upper_bound=2.0 * alpha)
    problem = OutageProblem.b5(n, alpha, r_s, typical_only)
    if r_s >= d_o5_support_end(n, alpha) - 1e-12:
        return SolverResult(0.0, (), 0.0, "beyond-support", grid.final_step, 0)
    return minimize_exponent(problem, grid, workers=workers)


def d_ptp_numeric(p: int, q: int, r: float, grid: GridSpec) -> SolverResult:
    """Numerical point-to-point DMT: min Wishart exponent s.t. the rate cap."""
    if r < 0:
        raise ValueError("r must be >= 0")
    problem = OutageProblem.ptp(p, q, r)
    if r >= min(p, q):
        return SolverResult(0.0, (), 0.0, "beyond-support", grid.final_step, 0)
    return minimize_exponent(problem, grid)


def normalization_check(n: int, alpha: float, grid: GridSpec, workers: int = 1) -> SolverResult:
    """Unconstrained minimum of the fifth-bound joint exponent.

    A proper density exponent has minimum 0; a negative value is returned
    as found, together with its argmin.
    """
    return minimize_exponent(OutageProblem.b5(n, alpha, None), grid, workers=workers)
