"""AWGN channel, per-level soft demapping and symmetric capacities."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numba
import numpy as np
from scipy.special import logsumexp

from .constellation import Constellation, Labeling, natural_labeling

GH_NODES = 64
_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class AwgnChannel:
    """Real AWGN channel with noise standard deviation ``noise_std``."""

    noise_std: float

    def __post_init__(self):
        if not self.noise_std > 0:
            raise ValueError("noise_std must be positive")

    @property
    def snr_db(self) -> float:
        """Es / sigma^2 in dB for a unit-energy constellation."""
        return 10.0 * math.log10(1.0 / self.noise_std**2)

    @property
    def esn0_db(self) -> float:
        return sigma_to_esn0_db(self.noise_std)

    @classmethod
    def from_esn0_db(cls, esn0_db: float) -> "AwgnChannel":
        return cls(esn0_db_to_sigma(esn0_db))

    def sample(self, x, rng: np.random.Generator):
        x = np.asarray(x, dtype=float)
        return x + self.noise_std * rng.standard_normal(x.shape)


def esn0_db_to_sigma(esn0_db: float) -> float:
    """Noise std for Es/N0 (dB) with Es = 1 and N0 = 2 sigma^2."""
    return math.sqrt(0.5 * 10.0 ** (-esn0_db / 10.0))


def sigma_to_esn0_db(sigma: float) -> float:
    return 10.0 * math.log10(1.0 / (2.0 * sigma * sigma))


def esn0_to_ebn0_db(esn0_db: float, bits_per_symbol_info: float) -> float:
    """Eb/N0 from Es/N0 given information bits per symbol (K/N)."""
    return esn0_db - 10.0 * math.log10(bits_per_symbol_info)


def sample(ch: AwgnChannel, x, rng: np.random.Generator):
    return ch.sample(x, rng)


@dataclass(frozen=True)
class LevelContext:
    level: int
    prior_bits: tuple
    labeling: Labeling
    constellation: Constellation
    noise_std: float

    def __post_init__(self):
        if not 1 <= self.level <= self.labeling.m:
            raise ValueError("level out of range")
        if len(self.prior_bits) != self.level - 1:
            raise ValueError(f"level {self.level} needs {self.level - 1} prior bits")
        if self.labeling.m != self.constellation.m:
            raise ValueError("labeling and constellation sizes differ")


@lru_cache(maxsize=None)
def _level_sets(m: int, level: int):
    # (2**(level-1), 2, 2**(m-level)) labels with given prior value and bit b_level
    M = 1 << m
    mask = 1 << (level - 1)
    out = np.empty((mask, 2, M >> level), dtype=np.int64)
    for ctx in range(mask):
        for b in (0, 1):
            out[ctx, b] = [u for u in range(M) if (u & (mask - 1)) == ctx and bool(u & mask) == b]
    return out


def _point_sets(lab: Labeling, level: int) -> np.ndarray:
    return np.asarray(lab.table)[_level_sets(lab.m, level)]


@numba.njit(cache=True)
def _demap(y, prior, sets, points, sigma):
    # sets[ctx, b] lists the points whose label has the given prior and bit b
    out = np.empty(y.shape)
    scale = 1.0 / (2.0 * sigma * sigma)
    yf = y.ravel()
    pf = prior.ravel()
    of = out.ravel()
    G = sets.shape[2]
    for k in range(yf.size):
        yk = yf[k]
        acc = np.empty(2)
        for b in range(2):
            top = -np.inf
            for g in range(G):
                d = yk - points[sets[pf[k], b, g]]
                top = max(top, -d * d * scale)
            tot = 0.0
            for g in range(G):
                d = yk - points[sets[pf[k], b, g]]
                tot += np.exp(-d * d * scale - top)
            acc[b] = top + np.log(tot)
        of[k] = acc[0] - acc[1]
    return out


def level_llrs(level: int, y, prior, lab: Labeling, c: Constellation, sigma: float):
    """LLRs ln W_j(y, prior | 0) - ln W_j(y, prior | 1) for arrays of outputs.

    ``prior`` holds the integer value of the ``level-1`` already decided bits
    for every entry of ``y`` (ignored for level 1).  Computed as a difference
    of two log-sum-exps, so the result stays finite for any finite ``y``.
    """
    if lab.m != c.m:
        raise ValueError("labeling and constellation sizes differ")
    y = np.ascontiguousarray(y, dtype=float)
    if level == 1:
        prior = np.zeros(y.shape, dtype=np.int64)
    else:
        prior = np.ascontiguousarray(np.broadcast_to(prior, y.shape), dtype=np.int64)
    return _demap(y, prior, _point_sets(lab, level), c.points, float(sigma))


def level_llr(ctx: LevelContext, y: float) -> float:
    prior = sum(int(b) << k for k, b in enumerate(ctx.prior_bits))
    return float(
        level_llrs(ctx.level, np.array([y]), np.array([prior]), ctx.labeling, ctx.constellation, ctx.noise_std)[0]
    )


def bit_llrs(y, lab: Labeling, c: Constellation, sigma: float) -> np.ndarray:
    """Per-bit LLRs with every other bit marginalised (parallel demapping).

    Returns an array of shape ``y.shape + (m,)``.
    """
    y = np.ascontiguousarray(y, dtype=float)
    table = np.asarray(lab.table)
    labels = np.arange(1 << lab.m)
    zero = np.zeros(y.shape, dtype=np.int64)
    out = np.empty(y.shape + (lab.m,))
    for j in range(lab.m):
        sets = np.stack([table[(labels >> j) & 1 == b] for b in (0, 1)])[None]
        out[..., j] = _demap(y, zero, sets, c.points, float(sigma))
    return out


@lru_cache(maxsize=1)
def _gh():
    t, w = np.polynomial.hermite.hermgauss(GH_NODES)
    return t, w / math.sqrt(math.pi)


def _quadrature_loglik(lab: Labeling, c: Constellation, sigma: float):
    """Log-likelihoods at quadrature outputs.

    Returns ``ll[u, k, v]``: log density (up to a common constant) of output
    ``y = x_u + sqrt(2) sigma t_k`` under input label ``v``, and weights.
    """
    t, w = _gh()
    x = c.points[np.asarray(lab.table)]  # amplitude by label
    y = x[:, None] + math.sqrt(2.0) * sigma * t[None, :]
    ll = -((y[:, :, None] - x[None, None, :]) ** 2) / (2.0 * sigma * sigma)
    return ll, w


def _lse(a: np.ndarray, axis: int = -1) -> np.ndarray:
    top = np.max(a, axis=axis, keepdims=True)
    return np.squeeze(top, axis) + np.log(np.sum(np.exp(a - top), axis=axis))


def _cond_logmean(ll: np.ndarray, m: int, nbits: int) -> np.ndarray:
    # log mean_{v : v agrees with u on the nbits low bits} p(y | v), shape (M, K)
    M = 1 << m
    groups = ll.reshape(M, ll.shape[1], M >> nbits, 1 << nbits)
    low = np.arange(M) & ((1 << nbits) - 1)
    sel = groups[np.arange(M), :, :, low]  # (M, K, M >> nbits)
    return _lse(sel) - math.log(M >> nbits)


def _check(lab: Labeling, c: Constellation, sigma: float):
    if lab.m != c.m:
        raise ValueError("labeling and constellation sizes differ")
    if not sigma > 0:
        raise ValueError("sigma must be positive")


def level_capacities(lab: Labeling, c: Constellation, sigma: float) -> np.ndarray:
    """I(W_1), ..., I(W_m) in bits by Gauss-Hermite quadrature."""
    _check(lab, c, sigma)
    ll, w = _quadrature_loglik(lab, c, sigma)
    cond = [_cond_logmean(ll, lab.m, j) for j in range(lab.m + 1)]
    M = 1 << lab.m
    caps = np.empty(lab.m)
    for j in range(1, lab.m + 1):
        caps[j - 1] = np.sum((cond[j] - cond[j - 1]) @ w) / M / _LOG2
    return caps


def level_capacity(level: int, lab: Labeling, c: Constellation, sigma: float) -> float:
    if not 1 <= level <= lab.m:
        raise ValueError("level out of range")
    return float(level_capacities(lab, c, sigma)[level - 1])


def total_capacity(lab: Labeling, c: Constellation, sigma: float) -> float:
    """Symmetric capacity of the 2**m-ary input channel in bits."""
    _check(lab, c, sigma)
    ll, w = _quadrature_loglik(lab, c, sigma)
    M = 1 << lab.m
    own = ll[np.arange(M), :, np.arange(M)]
    marg = logsumexp(ll, axis=-1) - math.log(M)
    return float(np.sum((own - marg) @ w) / M / _LOG2)


def bit_capacities(lab: Labeling, c: Constellation, sigma: float) -> np.ndarray:
    """I(b_j; y) without conditioning on other bits (parallel bit channels)."""
    _check(lab, c, sigma)
    ll, w = _quadrature_loglik(lab, c, sigma)
    M = 1 << lab.m
    labels = np.arange(M)
    marg = logsumexp(ll, axis=-1) - math.log(M)
    caps = np.empty(lab.m)
    for j in range(lab.m):
        acc = 0.0
        for u in range(M):
            members = labels[((labels >> j) & 1) == ((u >> j) & 1)]
            cond = logsumexp(ll[u][:, members], axis=-1) - math.log(members.size)
            acc += (cond - marg[u]) @ w
        caps[j] = acc / M / _LOG2
    return caps


def biawgn_capacity(sigma: float) -> float:
    """Binary-input AWGN symmetric capacity (antipodal +-1 inputs).

    Same quadrature as :func:`level_capacity` with m=1, written on the LLR
    ``2y/sigma^2`` of the +1 input directly.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    t, w = _gh()
    llr = 2.0 / sigma**2 + 2.0 * math.sqrt(2.0) * t / sigma
    return float(1.0 - (np.logaddexp(0.0, -llr) @ w) / _LOG2)


def biawgn_sigma_for_capacity(capacity: float) -> float:
    """Invert :func:`biawgn_capacity` by bisection on log(sigma)."""
    if not 1e-6 <= capacity <= 1.0 - 1e-6:
        raise ValueError(f"capacity must lie in [1e-6, 1-1e-6], got {capacity!r}")
    lo, hi = math.log(1e-3), math.log(1e4)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if biawgn_capacity(math.exp(mid)) > capacity:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14:
            break
    return math.exp(0.5 * (lo + hi))


def sigma_for_total_capacity(c: Constellation, capacity: float) -> float:
    """Noise std at which the 2**m-ary symmetric capacity equals ``capacity``."""
    if not 0.0 < capacity < c.m:
        raise ValueError(f"capacity must lie in (0, {c.m}), got {capacity!r}")
    lab = natural_labeling(c.m)
    lo, hi = math.log(1e-4), math.log(1e4)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if total_capacity(lab, c, math.exp(mid)) > capacity:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    return math.exp(0.5 * (lo + hi))
