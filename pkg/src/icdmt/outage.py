"""Monte-Carlo outage probabilities and diversity-slope fitting."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from .channel import AntennaProfile, ScalingProfile, mutual_info_bounds_batch, sample_channels
from .closed_form import BoundId

__all__ = [
    "OutageEstimate",
    "estimate_outage",
    "fit_diversity_slope",
    "MIN_EVENTS",
    "CSV_COLUMNS",
]

#: sweep points with fewer outage events are ignored by the slope fit
MIN_EVENTS = 20
CSV_COLUMNS = ("rho_db", "p_out", "ci_low", "ci_high", "trials")
UNRESOLVED = "unresolved: increase trials or rate"


@dataclass(frozen=True)
class OutageEstimate:
    """Outage frequencies over an SNR sweep and the fitted diversity slope."""

    rho_db: tuple[float, ...]
    counts: tuple[int, ...]
    trials: int
    slope: float = math.nan
    slope_std_err: float = math.nan
    bound: Optional[int] = None
    r1: float = 0.0
    r2: float = 0.0
    alpha: Optional[float] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if len(self.rho_db) != len(self.counts):
            raise ValueError("rho_db and counts must have equal length")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if any(c < 0 or c > self.trials for c in self.counts):
            raise ValueError("outage counts must lie in [0, trials]")

    @classmethod
    def from_probabilities(cls, rho_db, p_out, trials: int, **kw) -> "OutageEstimate":
        counts = tuple(int(round(p * trials)) for p in p_out)
        return cls(tuple(float(x) for x in rho_db), counts, trials, **kw)

    @property
    def p_out(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.trials

    @property
    def wilson_interval(self) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = proportion_confint(np.asarray(self.counts), self.trials,
                                    alpha=0.05, method="wilson")
        return np.atleast_1d(lo), np.atleast_1d(hi)

    @property
    def wilson_half_width(self) -> np.ndarray:
        lo, hi = self.wilson_interval
        return (hi - lo) / 2

    @property
    def resolved(self) -> bool:
        return math.isfinite(self.slope)

    @property
    def warning(self) -> Optional[str]:
        return None if self.resolved else UNRESOLVED

    def to_csv(self) -> str:
        lo, hi = self.wilson_interval
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for k, db in enumerate(self.rho_db):
            w.writerow([repr(float(db)), repr(float(self.p_out[k])), repr(float(lo[k])),
                        repr(float(hi[k])), self.trials])
        return buf.getvalue()

    def sidecar(self, **extra) -> dict:
        meta = {
            "slope": self.slope if self.resolved else None,
            "slope_std_err": self.slope_std_err if self.resolved else None,
            "resolved": self.resolved,
            "warning": self.warning,
            "bound": self.bound,
            "r1": self.r1,
            "r2": self.r2,
            "alpha": self.alpha,
            "seed": self.seed,
            "trials": self.trials,
            "counts": list(self.counts),
        }
        meta.update(extra)
        return meta

    def sidecar_json(self, **extra) -> str:
        return json.dumps(self.sidecar(**extra), indent=2, sort_keys=True)


def fit_diversity_slope(e: OutageEstimate, min_events: int = MIN_EVENTS) -> tuple[float, float]:
    """Weighted least-squares slope of ``-log10 p_out`` against ``log10 rho``.

    Weights are the inverse delta-method variances of ``log10 p_hat``,
    ``k / (1 - p)`` up to a constant, for a point with ``k`` outage events.
    Points with fewer than ``min_events`` events are dropped.  With more than
    two points the standard error is scaled by the reduced chi-square (so an
    exact power law gives 0); with exactly two it uses the binomial variances.
    Returns ``(nan, nan)`` when fewer than two points remain.
    """
    counts = np.asarray(e.counts, dtype=float)
    use = counts >= min_events
    if use.sum() < 2:
        return math.nan, math.nan
    p = counts[use] / e.trials
    x = np.asarray(e.rho_db, dtype=float)[use] / 10.0
    y = -np.log10(p)
    var = (1.0 - p) / (counts[use] * math.log(10) ** 2)
    w = 1.0 / np.maximum(var, 1e-300)
    xm = np.sum(w * x) / np.sum(w)
    ym = np.sum(w * y) / np.sum(w)
    sxx = np.sum(w * (x - xm) ** 2)
    slope = float(np.sum(w * (x - xm) * (y - ym)) / sxx)
    m = len(x)
    if m > 2:
        resid = y - (ym + slope * (x - xm))
        chi2 = float(np.sum(w * resid ** 2)) / (m - 2)
        se = math.sqrt(chi2 / sxx)
    else:
        se = math.sqrt(1.0 / sxx)
    return slope, se


def estimate_outage(profile: AntennaProfile, scaling: ScalingProfile, bound: int,
                    r1: float, r2: float, trials: int, seed: int, *,
                    chunk: int = 100_000, workers: int = 1) -> OutageEstimate:
    """Estimate ``Pr(I_b < (a1 r1 + a2 r2) log2 rho)`` over the SNR sweep.

    The same ``trials`` realisations are reused at every SNR.  Counts are
    reduced by integer summation, so results are identical for any
    ``chunk`` or ``workers``.
    """
    if trials < 1000:
        raise ValueError("at least 1000 trials are required")
    if r1 < 0 or r2 < 0:
        raise ValueError("multiplexing gains must be >= 0")
    bid = BoundId(bound)
    mult = bid.rate(r1, r2)
    rhos = scaling.rho
    thresholds = mult * np.log2(rhos)

    def run(start: int) -> np.ndarray:
        count = min(chunk, trials - start)
        h = sample_channels(profile, seed, start, count)
        out = np.zeros(len(rhos), dtype=np.int64)
        for k, rho in enumerate(rhos):
            vals = mutual_info_bounds_batch(*h, rho, scaling.alpha)[:, bound - 1]
            out[k] = int(np.count_nonzero(vals < thresholds[k]))
        return out

    starts = range(0, trials, chunk)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    counts = np.sum(parts, axis=0)
    est = OutageEstimate(scaling.rho_db, tuple(int(c) for c in counts), trials,
                         bound=bound, r1=float(r1), r2=float(r2),
                         alpha=scaling.alpha, seed=int(seed))
    slope, se = fit_diversity_slope(est)
    return OutageEstimate(est.rho_db, est.counts, trials, slope, se, bound,
                          float(r1), float(r2), scaling.alpha, int(seed))
