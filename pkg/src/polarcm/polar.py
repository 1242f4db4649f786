"""Polar encoding and SC / SCL / CRC-aided SCL decoding of one binary level.

Index convention: ``x = u F^{(x)n}`` in natural order with
``F = [[1, 0], [1, 1]]``; no bit-reversal permutation anywhere.  LLRs are
``ln P(bit=0) / P(bit=1)``.

Decoder memory is layered: layer ``l`` holds ``2**l`` values at offset
``2**l`` of a length-``2N`` buffer, layer ``n`` being the channel LLRs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numba
import numpy as np

from .crc import CRC16, CrcConfig, crc_check

MAX_LIST = 64


class Decoder(enum.Enum):
    SC = "sc"
    SCL = "scl"
    CASCL = "cascl"


@dataclass(frozen=True)
class PolarCodeLevel:
    """Length-N polar code; ``frozen_mask[i]`` is True for frozen positions."""

    frozen_mask: np.ndarray = field(repr=False)
    frozen_values: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        mask = np.asarray(self.frozen_mask, dtype=bool).copy()
        N = mask.size
        if N < 1 or N & (N - 1):
            raise ValueError(f"block length must be a power of two, got {N}")
        vals = np.zeros(N, np.uint8) if self.frozen_values is None else np.asarray(self.frozen_values, np.uint8).copy()
        if vals.shape != mask.shape:
            raise ValueError("frozen_values must have the same length as frozen_mask")
        vals[~mask] = 0
        mask.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "frozen_mask", mask)
        object.__setattr__(self, "frozen_values", vals)

    @property
    def N(self) -> int:
        return self.frozen_mask.size

    @property
    def n(self) -> int:
        return self.N.bit_length() - 1

    @property
    def info_positions(self) -> np.ndarray:
        return np.flatnonzero(~self.frozen_mask)

    @property
    def K(self) -> int:
        return int(self.N - np.count_nonzero(self.frozen_mask))

    @classmethod
    def from_info_positions(cls, N: int, positions) -> "PolarCodeLevel":
        mask = np.ones(N, dtype=bool)
        mask[np.asarray(positions, dtype=np.int64)] = False
        return cls(mask)

    def embed(self, info) -> np.ndarray:
        """Place information bits on the non-frozen positions."""
        info = np.asarray(info, dtype=np.uint8)
        if info.shape[-1] != self.K:
            raise ValueError(f"expected {self.K} information bits, got {info.shape[-1]}")
        u = np.broadcast_to(self.frozen_values, info.shape[:-1] + (self.N,)).copy()
        u[..., ~self.frozen_mask] = info
        return u

    def __eq__(self, other):
        if not isinstance(other, PolarCodeLevel):
            return NotImplemented
        return np.array_equal(self.frozen_mask, other.frozen_mask) and np.array_equal(
            self.frozen_values, other.frozen_values
        )

    def __hash__(self):
        return hash((self.frozen_mask.tobytes(), self.frozen_values.tobytes()))


@dataclass
class DecodeResult:
    u_hat: np.ndarray
    info_bits: np.ndarray
    path_metric: float = 0.0
    crc_ok: bool | None = None


# --------------------------------------------------------------------------
# kernels


@numba.njit(cache=True)
def _transform(u):
    x = u.copy()
    N = x.size
    h = 1
    while h < N:
        for start in range(0, N, 2 * h):
            for t in range(start, start + h):
                x[t] ^= x[t + h]
        h *= 2
    return x


@numba.njit(cache=True)
def _transform_rows(u):
    out = np.empty_like(u)
    for r in range(u.shape[0]):
        out[r] = _transform(u[r])
    return out


@numba.njit(cache=True, inline="always")
def _f(a, b):
    # exact box-plus: 2 atanh(tanh(a/2) tanh(b/2))
    aa = abs(a)
    ab = abs(b)
    s = min(aa, ab)
    if s < 5.0:
        # log form cancels catastrophically for small inputs
        return 2.0 * np.arctanh(np.tanh(0.5 * a) * np.tanh(0.5 * b))
    if (a < 0) != (b < 0):
        s = -s
    return s + np.log1p(np.exp(-abs(a + b))) - np.log1p(np.exp(-abs(a - b)))


@numba.njit(cache=True)
def _ctz(i):
    k = 0
    while (i & 1) == 0:
        i >>= 1
        k += 1
    return k


@numba.njit(cache=True)
def _sc_frame(llr_ch, frozen, fval, u_out, x_out, buf, beta, vbuf):
    N = llr_ch.size
    n = 0
    while (1 << n) < N:
        n += 1
    buf[N : 2 * N] = llr_ch
    for i in range(N):
        if i == 0:
            top = n - 1
        else:
            k = _ctz(i)
            h = 1 << k
            for t in range(h):
                a = buf[2 * h + t]
                b = buf[3 * h + t]
                buf[h + t] = b + a if beta[h + t] == 0 else b - a
            top = k - 1
        for l in range(top, -1, -1):
            h = 1 << l
            for t in range(h):
                buf[h + t] = _f(buf[2 * h + t], buf[3 * h + t])
        lam = buf[1]
        if frozen[i]:
            ui = fval[i]
        else:
            ui = 1 if lam < 0.0 else 0
        u_out[i] = ui
        vbuf[1] = ui
        l = 0
        while l < n and (i >> l) & 1:
            h = 1 << l
            for t in range(h):
                v = vbuf[h + t]
                vbuf[2 * h + t] = beta[h + t] ^ v
                vbuf[3 * h + t] = v
            l += 1
        if l < n:
            h = 1 << l
            for t in range(h):
                beta[h + t] = vbuf[h + t]
    if N == 1:
        x_out[0] = u_out[0]
    else:
        x_out[:] = vbuf[N : 2 * N]


@numba.njit(cache=True)
def _sc_batch(llr, frozen, fval):
    F, N = llr.shape
    u = np.zeros((F, N), np.uint8)
    x = np.zeros((F, N), np.uint8)
    buf = np.zeros(2 * N)
    beta = np.zeros(2 * N, np.uint8)
    vbuf = np.zeros(2 * N, np.uint8)
    for r in range(F):
        _sc_frame(llr[r], frozen, fval, u[r], x[r], buf, beta, vbuf)
    return u, x


@numba.njit(cache=True)
def _scl_frame(llr_ch, frozen, fval, L, llrbuf, betabuf, vbuf, lz, lzb, dec, par, metric, active, cand, u_out):
    """List decode one frame; fills ``u_out`` (L, N) sorted by metric.

    Returns the number of valid rows and their metrics.
    """
    N = llr_ch.size
    n = 0
    while (1 << n) < N:
        n += 1
    for p in range(L):
        active[p] = False
        metric[p] = 0.0
        for l in range(n + 1):
            lz[p, l] = 0
            lzb[p, l] = 0
    active[0] = True
    llrbuf[0, N : 2 * N] = llr_ch
    lam = np.zeros(L)
    hard = np.zeros(L, np.int64)
    keep = np.zeros((L, 2), np.bool_)
    for i in range(N):
        # LLR recursion for every active path
        for p in range(L):
            if not active[p]:
                continue
            if i == 0:
                top = n - 1
            else:
                k = _ctz(i)
                h = 1 << k
                src = lz[p, k + 1]
                bs = lzb[p, k]
                for t in range(h):
                    a = llrbuf[src, 2 * h + t]
                    b = llrbuf[src, 3 * h + t]
                    llrbuf[p, h + t] = b + a if betabuf[bs, h + t] == 0 else b - a
                lz[p, k] = p
                top = k - 1
            for l in range(top, -1, -1):
                h = 1 << l
                src = lz[p, l + 1]
                for t in range(h):
                    llrbuf[p, h + t] = _f(llrbuf[src, 2 * h + t], llrbuf[src, 3 * h + t])
                lz[p, l] = p
            lam[p] = llrbuf[p, 1]
        # decisions
        if frozen[i]:
            b = fval[i]
            for p in range(L):
                if active[p]:
                    lp = lam[p]
                    if (b == 0 and lp < 0.0) or (b == 1 and lp > 0.0):
                        metric[p] += abs(lp)
                    dec[i, p] = b
                    par[i, p] = p
        else:
            # per path: hard-decision child first, so metric ties (including
            # penalties absorbed by rounding) resolve exactly as SC would
            nc = 0
            for p in range(L):
                if active[p]:
                    lp = lam[p]
                    hard[p] = 1 if lp < 0.0 else 0
                    cand[nc] = metric[p]
                    cand[nc + 1] = metric[p] + abs(lp)
                    nc += 2
            for p in range(L):
                keep[p, 0] = False
                keep[p, 1] = False
            # map candidate index back to slot
            slots = np.empty(nc // 2, np.int64)
            c = 0
            for p in range(L):
                if active[p]:
                    slots[c] = p
                    c += 1
            if nc <= L:
                for c in range(nc // 2):
                    keep[slots[c], 0] = True
                    keep[slots[c], 1] = True
            else:
                order = np.argsort(cand[:nc], kind="mergesort")
                for r in range(L):
                    ci = order[r]
                    p = slots[ci // 2]
                    keep[p, hard[p] ^ (ci % 2)] = True
            cost = np.empty(nc)
            for c in range(nc // 2):
                p = slots[c]
                cost[2 * c + hard[p]] = cand[2 * c]
                cost[2 * c + 1 - hard[p]] = cand[2 * c + 1]
            free = np.empty(L, np.int64)
            nfree = 0
            for p in range(L):
                if not active[p]:
                    free[nfree] = p
                    nfree += 1
            for c in range(nc // 2):
                p = slots[c]
                if not keep[p, 0] and not keep[p, 1]:
                    active[p] = False
                    free[nfree] = p
                    nfree += 1
            for c in range(nc // 2):
                p = slots[c]
                k0 = keep[p, 0]
                k1 = keep[p, 1]
                if k0 and k1:
                    nfree -= 1
                    q = free[nfree]
                    active[q] = True
                    for l in range(n + 1):
                        lz[q, l] = lz[p, l]
                        lzb[q, l] = lzb[p, l]
                    metric[q] = cost[2 * c + 1]
                    dec[i, q] = 1
                    par[i, q] = p
                    metric[p] = cost[2 * c]
                    dec[i, p] = 0
                    par[i, p] = p
                elif k0:
                    metric[p] = cost[2 * c]
                    dec[i, p] = 0
                    par[i, p] = p
                elif k1:
                    metric[p] = cost[2 * c + 1]
                    dec[i, p] = 1
                    par[i, p] = p
        # partial sums
        for p in range(L):
            if not active[p]:
                continue
            vbuf[1] = dec[i, p]
            l = 0
            while l < n and (i >> l) & 1:
                h = 1 << l
                bs = lzb[p, l]
                for t in range(h):
                    v = vbuf[h + t]
                    vbuf[2 * h + t] = betabuf[bs, h + t] ^ v
                    vbuf[3 * h + t] = v
                l += 1
            if l < n:
                h = 1 << l
                for t in range(h):
                    betabuf[p, h + t] = vbuf[h + t]
                lzb[p, l] = p
    # trace back surviving paths, best metric first (stable on slot index)
    nact = 0
    for p in range(L):
        if active[p]:
            nact += 1
    slots = np.empty(nact, np.int64)
    ms = np.empty(nact)
    c = 0
    for p in range(L):
        if active[p]:
            slots[c] = p
            ms[c] = metric[p]
            c += 1
    order = np.argsort(ms, kind="mergesort")
    out_m = np.empty(nact)
    for r in range(nact):
        s = slots[order[r]]
        out_m[r] = metric[s]
        for i in range(N - 1, -1, -1):
            u_out[r, i] = dec[i, s]
            s = par[i, s]
    return nact, out_m


@numba.njit(cache=True)
def _scl_batch(llr, frozen, fval, L):
    F, N = llr.shape
    n = 0
    while (1 << n) < N:
        n += 1
    llrbuf = np.zeros((L, 2 * N))
    betabuf = np.zeros((L, 2 * N), np.uint8)
    vbuf = np.zeros(2 * N, np.uint8)
    lz = np.zeros((L, n + 1), np.int64)
    lzb = np.zeros((L, n + 1), np.int64)
    dec = np.zeros((N, L), np.uint8)
    par = np.zeros((N, L), np.int64)
    metric = np.zeros(L)
    active = np.zeros(L, np.bool_)
    cand = np.zeros(2 * L)
    paths = np.zeros((F, L, N), np.uint8)
    metrics = np.full((F, L), np.inf)
    counts = np.zeros(F, np.int64)
    for r in range(F):
        nact, ms = _scl_frame(llr[r], frozen, fval, L, llrbuf, betabuf, vbuf, lz, lzb, dec, par, metric, active, cand, paths[r])
        counts[r] = nact
        metrics[r, :nact] = ms
    return paths, metrics, counts


# --------------------------------------------------------------------------
# public API


def _as_u8(bits) -> np.ndarray:
    return np.ascontiguousarray(bits, dtype=np.uint8)


def polar_transform(u) -> np.ndarray:
    """x = u F^{(x)n} over GF(2); works on a vector or on rows of a matrix."""
    u = _as_u8(u)
    if u.ndim == 1:
        return _transform(u)
    return _transform_rows(u.reshape(-1, u.shape[-1])).reshape(u.shape)


def polar_encode(code: PolarCodeLevel, u) -> np.ndarray:
    u = _as_u8(u)
    if u.shape[-1] != code.N:
        raise ValueError(f"expected {code.N} bits, got {u.shape[-1]}")
    if np.any(u[..., code.frozen_mask] != code.frozen_values[code.frozen_mask]):
        raise ValueError("u violates the frozen bit values")
    return polar_transform(u)


def _check_llr(llr, N) -> np.ndarray:
    llr = np.ascontiguousarray(llr, dtype=np.float64)
    if llr.shape[-1] != N:
        raise ValueError(f"expected {N} LLRs, got {llr.shape[-1]}")
    if not np.all(np.isfinite(llr)):
        raise ValueError("LLRs must be finite")
    return llr


def _check_list(L: int) -> int:
    if not isinstance(L, (int, np.integer)) or not 1 <= L <= MAX_LIST or L & (L - 1):
        raise ValueError(f"list size must be a power of two in 1..{MAX_LIST}, got {L!r}")
    return int(L)


def sc_decode_batch(code: PolarCodeLevel, llr) -> tuple[np.ndarray, np.ndarray]:
    """SC-decode rows of ``llr``; returns (u_hat, re-encoded x_hat)."""
    llr = _check_llr(llr, code.N).reshape(-1, code.N)
    return _sc_batch(llr, code.frozen_mask, code.frozen_values)


def scl_list_batch(code: PolarCodeLevel, llr, L: int):
    """List-decode rows of ``llr``.

    Returns ``(paths, metrics, counts)``: candidate ``u`` vectors of shape
    ``(F, L, N)`` sorted by ascending metric, their metrics (``inf`` for unused
    rows) and the number of valid candidates per frame.
    """
    L = _check_list(L)
    llr = _check_llr(llr, code.N).reshape(-1, code.N)
    return _scl_batch(llr, code.frozen_mask, code.frozen_values, L)


def sc_decode(code: PolarCodeLevel, llr) -> DecodeResult:
    u, _ = sc_decode_batch(code, np.asarray(llr)[None])
    return DecodeResult(u[0], u[0][code.info_positions])


def scl_decode(code: PolarCodeLevel, llr, list_size: int) -> DecodeResult:
    paths, metrics, _ = scl_list_batch(code, np.asarray(llr)[None], list_size)
    u = paths[0, 0]
    return DecodeResult(u, u[code.info_positions], float(metrics[0, 0]))


def select_crc_path(paths, metrics, count, info_positions, crc: CrcConfig, prefix=None):
    """Index of the best CRC-passing candidate, or (0, False) if none passes."""
    prefix = np.zeros(0, np.uint8) if prefix is None else np.asarray(prefix, np.uint8)
    for r in range(count):
        bits = np.concatenate([prefix, paths[r][info_positions]])
        if crc_check(bits, crc):
            return r, True
    return 0, False


def ca_scl_decode(code: PolarCodeLevel, llr, list_size: int, crc: CrcConfig = CRC16, prefix=None) -> DecodeResult:
    """CRC-aided SCL.

    The CRC covers ``prefix`` followed by this code's information bits, with
    the check bits at the end; ``prefix`` carries bits decided elsewhere (for
    example on earlier modulation levels).
    """
    n_prefix = 0 if prefix is None else len(prefix)
    if code.K + n_prefix <= crc.width:
        raise ValueError("information length must exceed the CRC width")
    paths, metrics, counts = scl_list_batch(code, np.asarray(llr)[None], list_size)
    r, ok = select_crc_path(paths[0], metrics[0], int(counts[0]), code.info_positions, crc, prefix)
    u = paths[0, r]
    return DecodeResult(u, u[code.info_positions], float(metrics[0, r]), ok)
