"""Monte Carlo BLER of multi-level (PCM) and bit-interleaved (BIPCM) polar coded PAM.

Frames are drawn from generators seeded by ``(seed, frame_index)``, noise
first and payload second, so every scheme, decoder and SNR point sees the
same standard-normal noise sequence for a given frame.  Frames are simulated
in fixed-size chunks and the stop rule is evaluated at chunk boundaries,
which makes results independent of the number of worker processes.
"""

from __future__ import annotations

import csv
import enum
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from . import channel
from .constellation import Constellation, Labeling, gray_labeling, make_pam
from .construction import (
    ConstructionWarning,
    MlcCodeSpec,
    _capacity_to_mean,
    ga_evolve_vector,
    log_error_probability,
    select_information_set,
)
from .crc import CrcConfig, crc_bits
from .polar import (
    Decoder,
    PolarCodeLevel,
    _check_list,
    polar_transform,
    sc_decode_batch,
    scl_list_batch,
    select_crc_path,
)

CSV_HEADER = ["scheme", "decoder", "list", "m", "N", "K", "esn0_db", "ebn0_db", "frames", "frame_errors", "bit_errors", "bler"]
SHORTENED_LLR = 1e3


class Scheme(enum.Enum):
    PCM = "pcm"
    BIPCM = "bipcm"


@dataclass(frozen=True)
class BipcmCode:
    """Single polar code over the m parallel bit channels of 2**m-PAM.

    When ``mN`` is not a power of two the mother code has length
    ``2**ceil(log2(mN))`` and its last positions are shortened: their ``u``
    bits are frozen, which forces the matching code bits to zero, and they
    are not transmitted.
    """

    labeling: Labeling
    constellation: Constellation
    N: int
    K: int
    code: PolarCodeLevel
    interleaver: np.ndarray = field(repr=False)
    interleaver_seed: int
    design_sigma: float
    predicted_bler: float

    @property
    def m(self) -> int:
        return self.labeling.m

    @property
    def coded_length(self) -> int:
        return self.m * self.N


def build_bipcm_code(
    m: int,
    N: int,
    K: int,
    sigma_design: float,
    interleaver_seed: int = 0,
    labeling: Labeling | None = None,
) -> BipcmCode:
    """Construct the BIPCM code from the bit-averaged capacity surrogate."""
    c = make_pam(m)
    lab = gray_labeling(m) if labeling is None else labeling
    n_coded = m * N
    if not 1 <= K <= n_coded:
        raise ValueError(f"K must be in 1..{n_coded}, got {K}")
    M = 1 << max(0, math.ceil(math.log2(n_coded)))
    cap = float(np.mean(channel.bit_capacities(lab, c, sigma_design)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConstructionWarning)
        mean, _ = _capacity_to_mean(cap)
    means = np.full(M, np.inf)
    means[:n_coded] = mean
    log_perr = log_error_probability(ga_evolve_vector(means))
    log_perr[n_coded:] = np.inf  # shortened positions stay frozen
    info = select_information_set(log_perr, K)
    code = PolarCodeLevel.from_info_positions(M, info)
    if m == 1:
        perm = np.arange(n_coded)
    else:
        perm = np.random.default_rng(interleaver_seed).permutation(n_coded)
    predicted = float(np.sum(np.exp(log_perr[info])))
    return BipcmCode(lab, c, N, K, code, perm, interleaver_seed, float(sigma_design), predicted)


@dataclass(frozen=True)
class SimConfig:
    scheme: Scheme
    decoder: Decoder
    code: MlcCodeSpec | BipcmCode = field(repr=False)
    esn0_db: tuple
    list_size: int = 1
    max_frames: int = 10_000
    target_errors: int = 100
    seed: int = 0
    workers: int = 1
    chunk_frames: int = 200
    crc: CrcConfig | None = None

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "decoder", Decoder(self.decoder))
        object.__setattr__(self, "esn0_db", tuple(float(s) for s in self.esn0_db))
        if not self.esn0_db:
            raise ValueError("at least one SNR point is required")
        if self.max_frames < 1 or self.target_errors < 1 or self.chunk_frames < 1:
            raise ValueError("stop rule parameters must be positive")
        if self.decoder is Decoder.SC:
            if self.list_size != 1:
                raise ValueError("SC decoding takes no list size")
        else:
            _check_list(self.list_size)
        if self.decoder is Decoder.CASCL and self.crc is None:
            object.__setattr__(self, "crc", CrcConfig())
        if self.decoder is not Decoder.CASCL and self.crc is not None:
            raise ValueError("a CRC is only used by the CA-SCL decoder")
        if self.payload_bits < 1:
            raise ValueError("no payload bits left after the CRC")
        expected = Scheme.BIPCM if isinstance(self.code, BipcmCode) else Scheme.PCM
        if expected is not self.scheme:
            raise ValueError(f"code object does not match scheme {self.scheme.value}")

    @property
    def m(self) -> int:
        return self.code.m

    @property
    def N(self) -> int:
        return self.code.N

    @property
    def payload_bits(self) -> int:
        """Information bits per frame; the CRC sits inside the code's K."""
        return self.code.K - (self.crc.width if self.crc is not None else 0)


@dataclass(frozen=True)
class BlerPoint:
    esn0_db: float
    ebn0_db: float
    frames: int
    frame_errors: int
    bit_errors: int

    @property
    def bler(self) -> float:
        return self.frame_errors / self.frames

    @property
    def std_error(self) -> float:
        p = self.bler
        return math.sqrt(max(p * (1.0 - p), 1.0 / self.frames**2) / self.frames)


# ---------------------------------------------------------------------------
# frame generation, transmit and receive chains


def draw_frames(seed: int, start: int, stop: int, n_symbols: int, n_payload: int):
    """Standard-normal noise and payload bits for frames ``start..stop-1``."""
    noise = np.empty((stop - start, n_symbols))
    payload = np.empty((stop - start, n_payload), dtype=np.uint8)
    for r, f in enumerate(range(start, stop)):
        rng = np.random.default_rng([seed, f])
        noise[r] = rng.standard_normal(n_symbols)
        payload[r] = rng.integers(0, 2, n_payload, dtype=np.uint8)
    return noise, payload


def _with_crc(payload: np.ndarray, crc: CrcConfig | None) -> np.ndarray:
    if crc is None:
        return payload
    return np.concatenate([payload, np.array([crc_bits(p, crc) for p in payload])], axis=1)


def _symbols(labels: np.ndarray, lab: Labeling, c: Constellation) -> np.ndarray:
    return c.points[np.asarray(lab.table)[labels]]


def pcm_encode_modulate(spec: MlcCodeSpec, info) -> np.ndarray:
    """Symbols for rows of information bits (``K`` per row, level-major).

    ``info`` is the code input, i.e. payload plus any CRC bits.
    """
    info = np.atleast_2d(np.asarray(info, dtype=np.uint8))
    if info.shape[1] != spec.K:
        raise ValueError(f"expected {spec.K} information bits per frame, got {info.shape[1]}")
    labels = np.zeros((info.shape[0], spec.N), dtype=np.int64)
    offset = 0
    for j, level in enumerate(spec.levels):
        u = level.embed(info[:, offset : offset + level.K])
        offset += level.K
        labels |= polar_transform(u).astype(np.int64) << j
    return _symbols(labels, spec.labeling, spec.constellation)


def _decode_level(code: PolarCodeLevel, llr, decoder: Decoder, L: int, crc=None, prefix=None):
    """Returns (u_hat, x_hat) rows for one level."""
    if decoder is Decoder.SC:
        return sc_decode_batch(code, llr)
    paths, metrics, counts = scl_list_batch(code, llr, L)
    u = paths[:, 0].copy()
    if crc is not None:
        info = code.info_positions
        for r in range(u.shape[0]):
            pre = None if prefix is None else prefix[r]
            k, _ = select_crc_path(paths[r], metrics[r], int(counts[r]), info, crc, pre)
            u[r] = paths[r, k]
    return u, polar_transform(u)


def msd_decode(spec: MlcCodeSpec, y, sigma: float, decoder=Decoder.SC, list_size: int = 1, crc: CrcConfig | None = None):
    """Multistage decoding; returns the decided information bits per row.

    Level ``j`` is demapped with the re-encoded hard decisions of levels
    ``1..j-1``.  With a CRC, the last level picks the best list candidate
    whose full information sequence passes the check.
    """
    decoder = Decoder(decoder)
    y = np.atleast_2d(np.asarray(y, dtype=float))
    prior = np.zeros(y.shape, dtype=np.int64)
    decided = []
    for j, level in enumerate(spec.levels, start=1):
        llr = channel.level_llrs(j, y, prior, spec.labeling, spec.constellation, sigma)
        use_crc = crc if (decoder is Decoder.CASCL and j == spec.m) else None
        prefix = np.concatenate(decided, axis=1) if (use_crc is not None and decided) else None
        u, x = _decode_level(level, llr, decoder, list_size, use_crc, prefix)
        decided.append(u[:, level.info_positions])
        prior |= x.astype(np.int64) << (j - 1)
    return np.concatenate(decided, axis=1)


def bipcm_encode_modulate(code: BipcmCode, info) -> np.ndarray:
    info = np.atleast_2d(np.asarray(info, dtype=np.uint8))
    x = polar_transform(code.code.embed(info))[:, : code.coded_length]
    bits = x[:, code.interleaver].reshape(-1, code.N, code.m).astype(np.int64)
    labels = np.sum(bits << np.arange(code.m), axis=-1)
    return _symbols(labels, code.labeling, code.constellation)


def bipcm_decode(code: BipcmCode, y, sigma: float, decoder=Decoder.SC, list_size: int = 1, crc: CrcConfig | None = None):
    decoder = Decoder(decoder)
    y = np.atleast_2d(np.asarray(y, dtype=float))
    llr_int = channel.bit_llrs(y, code.labeling, code.constellation, sigma).reshape(y.shape[0], -1)
    llr = np.full((y.shape[0], code.code.N), SHORTENED_LLR)
    llr[:, code.interleaver] = llr_int
    u, _ = _decode_level(code.code, llr, decoder, list_size, crc if decoder is Decoder.CASCL else None)
    return u[:, code.code.info_positions]


def _simulate_chunk(cfg: SimConfig, sigma: float, start: int, stop: int) -> tuple[int, int, int]:
    noise, payload = draw_frames(cfg.seed, start, stop, cfg.N, cfg.payload_bits)
    info = _with_crc(payload, cfg.crc)
    if cfg.scheme is Scheme.PCM:
        y = pcm_encode_modulate(cfg.code, info) + sigma * noise
        dec = msd_decode(cfg.code, y, sigma, cfg.decoder, cfg.list_size, cfg.crc)
    else:
        y = bipcm_encode_modulate(cfg.code, info) + sigma * noise
        dec = bipcm_decode(cfg.code, y, sigma, cfg.decoder, cfg.list_size, cfg.crc)
    wrong = dec[:, : cfg.payload_bits] != payload
    return stop - start, int(np.count_nonzero(wrong.any(axis=1))), int(np.count_nonzero(wrong))


def _chunks(cfg: SimConfig):
    start = 0
    while start < cfg.max_frames:
        stop = min(start + cfg.chunk_frames, cfg.max_frames)
        yield start, stop
        start = stop


def simulate_point(cfg: SimConfig, esn0_db: float, executor=None) -> BlerPoint:
    sigma = channel.esn0_db_to_sigma(esn0_db)
    frames = errors = bit_errors = 0
    chunks = list(_chunks(cfg))
    wave = max(1, cfg.workers) if executor is not None else 1
    for w0 in range(0, len(chunks), wave):
        batch = chunks[w0 : w0 + wave]
        if executor is None:
            results = (_simulate_chunk(cfg, sigma, a, b) for a, b in batch)
        else:
            results = executor.map(_simulate_chunk, *zip(*[(cfg, sigma, a, b) for a, b in batch]))
        for nf, ne, nb in results:
            frames += nf
            errors += ne
            bit_errors += nb
            if errors >= cfg.target_errors:
                break
        if errors >= cfg.target_errors:
            break
    ebn0 = channel.esn0_to_ebn0_db(esn0_db, cfg.payload_bits / cfg.N)
    return BlerPoint(float(esn0_db), ebn0, frames, errors, bit_errors)


def csv_row(cfg: SimConfig, p: BlerPoint) -> list:
    return [
        cfg.scheme.value,
        cfg.decoder.value,
        cfg.list_size,
        cfg.m,
        cfg.N,
        cfg.payload_bits,
        f"{p.esn0_db:.4f}",
        f"{p.ebn0_db:.4f}",
        p.frames,
        p.frame_errors,
        p.bit_errors,
        repr(p.bler),
    ]


def run_bler(cfg: SimConfig, out: IO[str] | None = None, header: bool = True) -> list[BlerPoint]:
    """Simulate every SNR point of ``cfg``; rows are written to ``out`` as they finish."""
    writer = csv.writer(out, lineterminator="\n") if out is not None else None
    if writer is not None and header:
        writer.writerow(CSV_HEADER)
        out.flush()
    points = []
    executor = ProcessPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        for snr in cfg.esn0_db:
            p = simulate_point(cfg, snr, executor)
            points.append(p)
            if writer is not None:
                writer.writerow(csv_row(cfg, p))
                out.flush()
    finally:
        if executor is not None:
            executor.shutdown()
    return points


def run_bipcm_bler(cfg: SimConfig, out: IO[str] | None = None, header: bool = True) -> list[BlerPoint]:
    if cfg.scheme is not Scheme.BIPCM:
        raise ValueError("run_bipcm_bler needs a BIPCM configuration")
    return run_bler(cfg, out, header)


def required_snr(points: Sequence[BlerPoint], target_bler: float) -> float:
    """SNR where the BLER curve crosses ``target_bler`` (log-linear interpolation).

    Returns NaN if the simulated range does not bracket the target.
    """
    pts = sorted(points, key=lambda p: p.esn0_db)
    for a, b in zip(pts[:-1], pts[1:]):
        if a.bler >= target_bler >= b.bler and b.frame_errors > 0:
            la, lb, lt = math.log10(a.bler), math.log10(b.bler), math.log10(target_bler)
            if la == lb:
                return a.esn0_db
            return a.esn0_db + (la - lt) / (la - lb) * (b.esn0_db - a.esn0_db)
    return math.nan
