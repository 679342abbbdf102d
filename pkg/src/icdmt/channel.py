"""Finite-SNR channel model: Rayleigh realisations, capacity bounds, regions.

Conventions: ``H_ij`` is the ``N_j x M_i`` matrix from transmitter ``i`` to
receiver ``j``.  Direct links see SNR ``rho`` and cross links INR
``rho ** alpha``.  All rates are in bits (log base 2).

Every function that takes a :class:`ChannelRealization` has a ``*_batch``
twin operating on stacked ``(trials, N, M)`` arrays.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .closed_form import BOUND_COEFFICIENTS

__all__ = [
    "AntennaProfile",
    "ScalingProfile",
    "ChannelRealization",
    "RateBounds",
    "RateRegionConstraint",
    "ChannelFileError",
    "sample_channel",
    "sample_channels",
    "mutual_info_bounds",
    "mutual_info_bounds_batch",
    "hk_power_split",
    "upper_region",
    "achievable_region",
    "region_gap",
    "load_channel",
    "dump_channel",
    "ExponentSamples",
    "exponent_histogram",
]

_EIG_FLOOR = 1e-14


class ChannelFileError(ValueError):
    """A channel realisation file is malformed or inconsistent."""


@dataclass(frozen=True)
class AntennaProfile:
    """Antenna counts of an ``(M1, N1, M2, N2)`` interference channel."""

    m1: int
    n1: int
    m2: int
    n2: int

    def __post_init__(self):
        for name in ("m1", "n1", "m2", "n2"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v}")

    @classmethod
    def symmetric(cls, n: int) -> "AntennaProfile":
        return cls(n, n, n, n)

    def is_symmetric(self) -> bool:
        return self.m1 == self.n1 == self.m2 == self.n2

    def swapped(self) -> "AntennaProfile":
        return AntennaProfile(self.m2, self.n2, self.m1, self.n1)

    def shapes(self) -> dict[str, tuple[int, int]]:
        """Matrix shapes keyed by link name."""
        return {"h11": (self.n1, self.m1), "h12": (self.n2, self.m1),
                "h21": (self.n1, self.m2), "h22": (self.n2, self.m2)}

    @property
    def entries(self) -> int:
        return sum(a * b for a, b in self.shapes().values())


@dataclass(frozen=True)
class ScalingProfile:
    """Cross-link exponent ``alpha`` and the nominal SNR sweep in dB."""

    alpha: float
    rho_db: tuple[float, ...]

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        rho = tuple(float(x) for x in self.rho_db)
        object.__setattr__(self, "rho_db", rho)
        if len(rho) < 2:
            raise ValueError("an SNR sweep needs at least two points")
        if any(b <= a for a, b in zip(rho, rho[1:])):
            raise ValueError("SNR sweep must be strictly increasing")

    @property
    def rho(self) -> np.ndarray:
        return 10.0 ** (np.asarray(self.rho_db) / 10.0)


@dataclass(frozen=True)
class ChannelRealization:
    """The four channel matrices of one fading state."""

    h11: np.ndarray
    h12: np.ndarray
    h21: np.ndarray
    h22: np.ndarray

    def __post_init__(self):
        for name in ("h11", "h12", "h21", "h22"):
            m = np.atleast_2d(np.asarray(getattr(self, name), dtype=complex))
            if m.ndim != 2:
                raise ValueError(f"{name} must be a matrix")
            if not np.all(np.isfinite(m)):
                raise ValueError(f"{name} has non-finite entries")
            object.__setattr__(self, name, m)
        if self.h11.shape[0] != self.h21.shape[0] or self.h12.shape[0] != self.h22.shape[0]:
            raise ValueError("receiver dimensions are inconsistent")
        if self.h11.shape[1] != self.h12.shape[1] or self.h21.shape[1] != self.h22.shape[1]:
            raise ValueError("transmitter dimensions are inconsistent")

    @property
    def profile(self) -> AntennaProfile:
        return AntennaProfile(self.h11.shape[1], self.h11.shape[0],
                              self.h22.shape[1], self.h22.shape[0])

    def swapped(self) -> "ChannelRealization":
        """Relabel the users (1 <-> 2)."""
        return ChannelRealization(self.h22, self.h21, self.h12, self.h11)

    def stacked(self):
        return tuple(m[None] for m in (self.h11, self.h12, self.h21, self.h22))


@dataclass(frozen=True)
class RateBounds:
    """The seven log-det capacity bounds of one realisation, in bits."""

    ib1: float
    ib2: float
    ib3: float
    ib4: float
    ib5: float
    ib6: float
    ib7: float

    def __getitem__(self, k: int) -> float:
        return getattr(self, f"ib{k}")

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(self[k] for k in range(1, 8))


@dataclass(frozen=True)
class RateRegionConstraint:
    """Half-plane ``a1 R1 + a2 R2 <= rhs`` (bits per channel use)."""

    bound: int
    a1: int
    a2: int
    rhs: float


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def _blocks_per_trial(profile: AntennaProfile) -> int:
    # two uniforms per complex entry, four uint64 outputs per Philox block
    return -(-2 * profile.entries // 4)


def sample_channels(profile: AntennaProfile, seed: int, start: int, count: int):
    """Realisations ``start .. start + count - 1`` as stacked arrays.

    Trial ``t`` reads the Philox-4x64 stream keyed by ``seed`` from counter
    ``t * K``, ``K`` fixed per profile, so each realisation depends on
    ``(seed, t)`` only.  Entries are CN(0, 1) via Box-Muller.
    """
    if count < 0 or start < 0:
        raise ValueError("start and count must be >= 0")
    k = _blocks_per_trial(profile)
    bg = np.random.Philox(key=int(seed) & (2 ** 64 - 1), counter=start * k)
    raw = bg.random_raw(count * k * 4).reshape(count, k * 4)[:, : 2 * profile.entries]
    u = (raw >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
    u1 = 1.0 - u[:, 0::2]  # (0, 1]
    u2 = u[:, 1::2]
    z = np.sqrt(-np.log(u1)) * np.exp(2j * np.pi * u2)
    out = {}
    pos = 0
    for name, (rows, cols) in profile.shapes().items():
        size = rows * cols
        out[name] = z[:, pos:pos + size].reshape(count, rows, cols)
        pos += size
    return out["h11"], out["h12"], out["h21"], out["h22"]


def sample_channel(profile: AntennaProfile, seed: int, trial_index: int) -> ChannelRealization:
    """The realisation with index ``trial_index`` of the stream keyed by ``seed``."""
    h = sample_channels(profile, seed, trial_index, 1)
    return ChannelRealization(*(m[0] for m in h))


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------

def _herm(a):
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


def _ct(a):
    return np.conj(np.swapaxes(a, -1, -2))


def _logdet2(a) -> np.ndarray:
    """log2 det of a stack of Hermitian positive-definite matrices."""
    chol = np.linalg.cholesky(_herm(a))
    diag = np.real(np.diagonal(chol, axis1=-2, axis2=-1))
    return 2.0 * np.log2(diag).sum(axis=-1)


def _eye(k):
    return np.eye(k, dtype=complex)


def mutual_info_bounds_batch(h11, h12, h21, h22, rho: float, alpha: float) -> np.ndarray:
    """All seven bounds for stacked realisations; returns ``(trials, 7)``."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    for m in (h11, h12, h21, h22):
        if not np.all(np.isfinite(m)):
            raise ValueError("channel matrices must be finite")
    r, ri = float(rho), float(rho) ** alpha
    n1, m1 = h11.shape[-2:]
    n2, m2 = h22.shape[-2:]
    I1, I2 = _eye(n1), _eye(n2)
    g11 = h11 @ _ct(h11)
    g22 = h22 @ _ct(h22)
    g12 = h12 @ _ct(h12)
    g21 = h21 @ _ct(h21)
    p12 = _eye(m1) + ri * (_ct(h12) @ h12)
    p21 = _eye(m2) + ri * (_ct(h21) @ h21)
    w11 = _herm(h11 @ np.linalg.solve(p12, _ct(h11)))
    w22 = _herm(h22 @ np.linalg.solve(p21, _ct(h22)))

    rx1_full = _logdet2(I1 + ri * g21 + r * g11)
    rx2_full = _logdet2(I2 + ri * g12 + r * g22)
    rx1_white = _logdet2(I1 + r * w11 + ri * g21)
    rx2_white = _logdet2(I2 + ri * g12 + r * w22)
    own1 = _logdet2(I1 + r * w11)
    own2 = _logdet2(I2 + r * w22)

    ib1 = _logdet2(I1 + r * g11)
    ib2 = _logdet2(I2 + r * g22)
    ib3 = rx2_full + own1
    ib4 = rx1_full + own2
    ib5 = rx1_white + rx2_white
    ib6 = rx1_full + rx2_white + own1
    ib7 = rx2_full + rx1_white + own2
    out = np.stack([ib1, ib2, ib3, ib4, ib5, ib6, ib7], axis=-1)
    return np.maximum(out, 0.0)


def mutual_info_bounds(h: ChannelRealization, rho: float, alpha: float) -> RateBounds:
    """The seven upper-bound log-dets of one realisation.

    The fourth bound is the sum of its two log-det terms, mirroring the third.
    """
    vals = mutual_info_bounds_batch(*h.stacked(), rho, alpha)[0]
    return RateBounds(*(float(v) for v in vals))


def hk_power_split(h: ChannelRealization, rho: float, alpha: float):
    """Common/private covariances ``(K11, K12, K21, K22)`` of the HK scheme.

    ``K_i1 = I/2`` carries the common message and
    ``K_i2 = (I + rho^alpha H_ij^H H_ij)^-1 / 2`` the private one, so the
    private part arrives at the unintended receiver at roughly noise level.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    ri = float(rho) ** alpha
    m1, m2 = h.h11.shape[1], h.h22.shape[1]
    k11 = _eye(m1) / 2
    k21 = _eye(m2) / 2
    k12 = _herm(np.linalg.inv(_eye(m1) + ri * (_ct(h.h12) @ h.h12)) / 2)
    k22 = _herm(np.linalg.inv(_eye(m2) + ri * (_ct(h.h21) @ h.h21)) / 2)
    return k11, k12, k21, k22


def _offsets(profile: AntennaProfile, kind: str) -> tuple[float, float]:
    if kind == "upper":
        c = math.log2(max(profile.m1, profile.m2))
        return profile.n1 * c, profile.n2 * c
    return -2.0 * profile.n1, -2.0 * profile.n2


def _region(h: ChannelRealization, rho: float, alpha: float, kind: str, clip: bool):
    bounds = mutual_info_bounds(h, rho, alpha)
    c1, c2 = _offsets(h.profile, kind)
    out = []
    for k, (a1, a2) in BOUND_COEFFICIENTS.items():
        rhs = bounds[k] + a1 * c1 + a2 * c2
        if clip:
            rhs = max(rhs, 0.0)
        out.append(RateRegionConstraint(k, a1, a2, rhs))
    return out


def upper_region(h: ChannelRealization, rho: float, alpha: float) -> list[RateRegionConstraint]:
    """Outer bound on the capacity region: each bound shifted up by the
    per-receiver offsets ``N_i log2(max(M1, M2))``, combined linearly."""
    return _region(h, rho, alpha, "upper", clip=False)


def achievable_region(h: ChannelRealization, rho: float, alpha: float,
                      clip: bool = True) -> list[RateRegionConstraint]:
    """Rate region achieved by the HK scheme: each bound shifted down by
    ``(2 N1, 2 N2)`` combined linearly, then clipped at 0 (unless ``clip``
    is False)."""
    return _region(h, rho, alpha, "achievable", clip=clip)


def region_gap(profile: AntennaProfile, bound: int) -> float:
    """Analytic constant between upper and (unclipped) achievable rhs."""
    a1, a2 = BOUND_COEFFICIENTS[bound]
    u1, u2 = _offsets(profile, "upper")
    l1, l2 = _offsets(profile, "achievable")
    return a1 * (u1 - l1) + a2 * (u2 - l2)


# ---------------------------------------------------------------------------
# channel files
# ---------------------------------------------------------------------------

def _encode(m: np.ndarray):
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def dump_channel(h: ChannelRealization) -> str:
    """JSON text: profile plus four matrices as nested ``[re, im]`` pairs."""
    p = h.profile
    obj = {"profile": {"m1": p.m1, "n1": p.n1, "m2": p.m2, "n2": p.n2}}
    for name in ("h11", "h12", "h21", "h22"):
        obj[name] = _encode(getattr(h, name))
    return json.dumps(obj, indent=1)


def load_channel(source) -> ChannelRealization:
    """Parse a channel file (path or JSON text); raise :class:`ChannelFileError`."""
    try:
        if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            text = Path(source).read_text()
        else:
            text = source
        obj = json.loads(text)
        prof = AntennaProfile(**{k: int(obj["profile"][k]) for k in ("m1", "n1", "m2", "n2")})
        mats = {}
        for name, (rows, cols) in prof.shapes().items():
            arr = np.asarray(obj[name], dtype=float)
            if arr.shape != (rows, cols, 2):
                raise ChannelFileError(
                    f"{name}: expected shape {(rows, cols, 2)}, got {arr.shape}")
            mats[name] = arr[..., 0] + 1j * arr[..., 1]
        return ChannelRealization(**mats)
    except ChannelFileError:
        raise
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise ChannelFileError(f"malformed channel file: {exc}") from exc


# ---------------------------------------------------------------------------
# eigenvalue exponents
# ---------------------------------------------------------------------------

def _inv_sqrt_psd_shifted(h, ri, left: bool):
    # (I + ri * G)^(-1/2) with G = h h^H (left) or h^H h (right)
    g = h @ _ct(h) if left else _ct(h) @ h
    k = g.shape[-1]
    w, v = np.linalg.eigh(_herm(np.eye(k) + ri * g))
    w = np.maximum(w, _EIG_FLOOR * w[..., -1:])
    return (v * (w[..., None, :] ** -0.5)) @ _ct(v)


@dataclass(frozen=True)
class ExponentSamples:
    """Per-trial eigenvalue exponents (ascending) of the whitened direct link
    ``beta`` and the two cross-link Gram matrices ``gamma``, ``alpha_vec``."""

    beta: np.ndarray
    gamma: np.ndarray
    alpha_vec: np.ndarray
    rho: float
    alpha: float

    def _pick(self, which: str) -> np.ndarray:
        return {"beta": self.beta, "gamma": self.gamma, "alpha_vec": self.alpha_vec}[which]

    def histogram(self, which: str = "beta", index: int = 0, bins=50, range=None):
        return np.histogram(self._pick(which)[:, index], bins=bins, range=range)

    def joint_histogram(self, bins=20, range=None):
        data = np.concatenate([self.beta, self.gamma, self.alpha_vec], axis=1)
        return np.histogramdd(data, bins=bins, range=range)


def exponent_histogram(profile: AntennaProfile, alpha: float, rho: float, trials: int,
                       seed: int) -> ExponentSamples:
    """Sample eigenvalue exponents of ``W1 = H~ H~^H`` with
    ``H~ = (I + rho^a H21 H21^H)^(-1/2) H11 (I + rho^a H12^H H12)^(-1/2)``,
    ``W2 = H21 H21^H`` and ``W3 = H12^H H12``.

    Exponents are ``-log(lambda) / log(rho)``, sorted ascending.
    """
    if not profile.is_symmetric():
        raise ValueError("exponent histograms need a symmetric profile")
    if not rho > 1:
        raise ValueError("rho must exceed 1 for exponents to be defined")
    h11, h12, h21, _ = sample_channels(profile, seed, 0, trials)
    ri = rho ** alpha
    ht = _inv_sqrt_psd_shifted(h21, ri, left=True) @ h11 @ _inv_sqrt_psd_shifted(h12, ri, left=False)
    tiny = np.finfo(float).tiny

    def expo(mats):
        lam = np.maximum(np.linalg.eigvalsh(_herm(mats)), tiny)  # ascending
        return -np.log(lam[..., ::-1]) / math.log(rho)

    return ExponentSamples(expo(ht @ _ct(ht)), expo(h21 @ _ct(h21)),
                           expo(_ct(h12) @ h12), float(rho), float(alpha))
