"""Gaussian-approximation construction of multi-level polar codes.

Every polarized bit channel is summarised by the mean of a symmetric
Gaussian LLR.  A level's synthesized channel enters the recursion through a
binary-input AWGN channel of equal capacity.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_ndtr

from . import channel
from .constellation import Constellation, Labeling
from .crc import CrcConfig
from .polar import PolarCodeLevel

CAP_MIN = 1e-6
CAP_MAX = 1.0 - 1e-6

# two-piece closed form of the GA function phi
_A, _B, _C = 0.4527, 0.86, 0.0218
_X_SPLIT = 10.0


class ConstructionWarning(UserWarning):
    pass


def _log_phi(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    lo = (x > 0) & (x < _X_SPLIT)
    hi = x >= _X_SPLIT
    # the fit exceeds 1 below x ~ 0.03; phi never does
    out[lo] = np.minimum(-_A * x[lo] ** _B + _C, 0.0)
    xh = x[hi]
    with np.errstate(divide="ignore", invalid="ignore"):
        out[hi] = 0.5 * np.log(math.pi / xh) - xh / 4.0 + np.log1p(-10.0 / (7.0 * xh))
    out[np.isinf(x)] = -np.inf
    return out


def phi(x):
    """GA function phi(x) = 1 - E[tanh(L/2)] for L ~ N(x, 2x)."""
    return np.exp(_log_phi(x))


_LOG_PHI_SPLIT = -_A * _X_SPLIT**_B + _C


def _phi_inv_log(ly):
    """Inverse of phi given log(phi)."""
    ly = np.asarray(ly, dtype=float)
    out = np.empty_like(ly)
    first = ly >= _LOG_PHI_SPLIT
    out[first] = np.where(ly[first] >= 0.0, 0.0, np.maximum((_C - ly[first]) / _A, 0.0) ** (1.0 / _B))
    rest = ~first & np.isfinite(ly)
    if np.any(rest):
        t = ly[rest]
        x = np.maximum(-4.0 * t, _X_SPLIT)
        for _ in range(60):
            g = 0.5 * np.log(math.pi / x) - x / 4.0 + np.log1p(-10.0 / (7.0 * x)) - t
            dg = -0.5 / x - 0.25 + (10.0 / (7.0 * x * x)) / (1.0 - 10.0 / (7.0 * x))
            step = g / dg
            x = np.maximum(x - step, _X_SPLIT)
            if np.all(np.abs(step) <= 1e-12 * x):
                break
        out[rest] = x
    out[np.isneginf(ly)] = np.inf
    return out


def phi_inv(y):
    with np.errstate(divide="ignore"):
        return _phi_inv_log(np.log(np.asarray(y, dtype=float)))


def check_node_mean(a, b=None):
    """Mean of the LLR out of a check node fed with means ``a`` and ``b``."""
    a = np.asarray(a, dtype=float)
    b = a if b is None else np.asarray(b, dtype=float)
    la, lb = _log_phi(a), _log_phi(b)
    # 1 - (1 - phi_a)(1 - phi_b) = phi_a + phi_b (1 - phi_a)
    with np.errstate(divide="ignore"):
        ly = np.logaddexp(la, lb + np.log1p(-np.exp(la)))
    out = _phi_inv_log(ly)
    out = np.where(np.isinf(b), a, out)
    out = np.where(np.isinf(a), b, out)
    # the two-piece fit is not exactly monotone across its split
    return np.minimum(out, np.minimum(a, b))


def _require_pow2(N: int):
    if not isinstance(N, (int, np.integer)) or N < 1 or N & (N - 1):
        raise ValueError(f"block length must be a power of two, got {N!r}")


def ga_evolve(mean0: float, N: int) -> np.ndarray:
    """Mean LLR of each of the N polarized channels of a BI-AWGN channel.

    Natural index order: index ``i`` with most significant bit 0 passes the
    first polarization step through the check-node side.
    """
    if not mean0 > 0:
        raise ValueError(f"mean LLR must be positive, got {mean0!r}")
    _require_pow2(N)
    means = np.array([float(mean0)])
    while means.size < N:
        means = np.stack([check_node_mean(means), 2.0 * means], axis=1).ravel()
    return means


def ga_evolve_vector(means) -> np.ndarray:
    """GA recursion for position-dependent channel means (``inf`` = known bit)."""
    means = np.asarray(means, dtype=float)
    _require_pow2(means.size)
    if means.size == 1:
        return means.copy()
    h = means.size // 2
    a, b = means[:h], means[h:]
    return np.concatenate([ga_evolve_vector(check_node_mean(a, b)), ga_evolve_vector(a + b)])


def log_error_probability(mean):
    """log Q(sqrt(mean / 2)): bit error rate of a symmetric Gaussian LLR."""
    return log_ndtr(-np.sqrt(np.asarray(mean, dtype=float) / 2.0))


def error_probability(mean):
    return np.exp(log_error_probability(mean))


@dataclass(frozen=True)
class ReliabilityProfile:
    m: int
    N: int
    mean_llr: np.ndarray = field(repr=False)
    log_perr: np.ndarray = field(repr=False)

    @property
    def perr(self) -> np.ndarray:
        return np.exp(self.log_perr)

    def level_of(self, i: int) -> int:
        """Level of 1-based channel index ``i``."""
        return -(-i // self.N)


def _capacity_to_mean(capacity: float) -> tuple[float, bool]:
    clamped = not CAP_MIN < capacity < CAP_MAX
    cap = min(max(capacity, CAP_MIN), CAP_MAX)
    sigma_eq = channel.biawgn_sigma_for_capacity(cap)
    return 2.0 / sigma_eq**2, clamped


def surrogate_mean(level: int, lab: Labeling, c: Constellation, sigma: float) -> float:
    """Mean LLR of the BI-AWGN channel whose capacity equals I(W_level)."""
    mean, clamped = _capacity_to_mean(channel.level_capacity(level, lab, c, sigma))
    if clamped:
        warnings.warn(f"capacity of level {level} clamped to [{CAP_MIN}, {CAP_MAX}]", ConstructionWarning)
    return mean


def surrogate_means(lab: Labeling, c: Constellation, sigma: float):
    """Surrogate means of all levels and the mask of clamped levels."""
    caps = channel.level_capacities(lab, c, sigma)
    pairs = [_capacity_to_mean(cap) for cap in caps]
    return np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs]), caps


def reliability_profile(lab: Labeling, c: Constellation, sigma: float, N: int) -> ReliabilityProfile:
    means, _, _ = surrogate_means(lab, c, sigma)
    mean_llr = np.concatenate([ga_evolve(mu, N) for mu in means])
    return ReliabilityProfile(lab.m, N, mean_llr, log_error_probability(mean_llr))


def select_information_set(log_perr: np.ndarray, K: int) -> np.ndarray:
    """Indices of the K most reliable channels, sorted; ties go to smaller index."""
    order = np.argsort(log_perr, kind="stable")
    return np.sort(order[:K])


def design_sigma(c: Constellation, N: int, K: int, margin: float = 0.4) -> float:
    """Noise std giving I(W) = K/N + margin bits (capped below m)."""
    rate = K / N
    target = rate + margin
    if target >= c.m:
        target = 0.5 * (rate + c.m)
    target = min(target, c.m - 1e-3)
    return channel.sigma_for_total_capacity(c, target)


@dataclass(frozen=True)
class MlcCodeSpec:
    labeling: Labeling
    constellation: Constellation
    levels: tuple
    K: int
    design_sigma: float
    predicted_bler: float
    profile: ReliabilityProfile | None = field(default=None, repr=False, compare=False)
    level_capacities: tuple = field(default=(), compare=False)
    clamped_levels: tuple = field(default=(), compare=False)
    crc: CrcConfig | None = None

    @property
    def m(self) -> int:
        return self.labeling.m

    @property
    def N(self) -> int:
        return self.levels[0].N

    @property
    def rate(self) -> float:
        return self.K / (self.m * self.N)

    @property
    def level_info_counts(self) -> tuple:
        return tuple(lv.K for lv in self.levels)

    def frozen_mask(self) -> np.ndarray:
        """Frozen mask over all mN channels, level-major."""
        return np.concatenate([lv.frozen_mask for lv in self.levels])


def build_mlc_code(
    lab: Labeling,
    c: Constellation,
    sigma_design: float,
    N: int,
    K: int,
    crc: CrcConfig | None = None,
) -> MlcCodeSpec:
    """Pick the K most reliable of the mN polarized channels."""
    if lab.m != c.m:
        raise ValueError("labeling and constellation sizes differ")
    _require_pow2(N)
    if not isinstance(K, (int, np.integer)) or not 1 <= K <= lab.m * N:
        raise ValueError(f"K must be in 1..{lab.m * N}, got {K!r}")
    means, clamped, caps = surrogate_means(lab, c, sigma_design)
    if clamped.any():
        warnings.warn(f"level capacities clamped at levels {list(np.flatnonzero(clamped) + 1)}", ConstructionWarning)
    mean_llr = np.concatenate([ga_evolve(mu, N) for mu in means])
    profile = ReliabilityProfile(lab.m, N, mean_llr, log_error_probability(mean_llr))
    info = select_information_set(profile.log_perr, K)
    mask = np.ones(lab.m * N, dtype=bool)
    mask[info] = False
    levels = tuple(PolarCodeLevel(mask[j * N : (j + 1) * N]) for j in range(lab.m))
    predicted = float(np.sum(np.exp(profile.log_perr[info])))
    return MlcCodeSpec(
        lab,
        c,
        levels,
        int(K),
        float(sigma_design),
        predicted,
        profile,
        tuple(float(x) for x in caps),
        tuple(int(j) + 1 for j in np.flatnonzero(clamped)),
        crc,
    )


def single_level_code(mean0: float, N: int, K: int) -> tuple[PolarCodeLevel, np.ndarray]:
    """GA-designed code for one BI-AWGN channel; returns code and log perr."""
    log_perr = log_error_probability(ga_evolve(mean0, N))
    return PolarCodeLevel.from_info_positions(N, select_information_set(log_perr, K)), log_perr


def max_rate_curve(N: int, target_bler: float, capacities) -> list[tuple[float, float]]:
    """Largest rate whose union-bound BLER stays at or below ``target_bler``."""
    if not 0.0 < target_bler < 1.0:
        raise ValueError("target_bler must lie in (0, 1)")
    _require_pow2(N)
    out = []
    for cap in capacities:
        if not 0.0 < cap < 1.0:
            raise ValueError("capacities must lie in (0, 1)")
        mean0, _ = _capacity_to_mean(float(cap))
        perr = np.sort(error_probability(ga_evolve(mean0, N)))
        k = int(np.searchsorted(np.cumsum(perr), target_bler, side="right"))
        out.append((float(cap), k / N))
    return out
