"""Bit-serial CRC used by the CRC-aided list decoder."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np


@dataclass(frozen=True)
class CrcConfig:
    """CRC parameters.  ``poly`` excludes the implicit leading x**width term."""

    width: int = 16
    poly: int = 0x1021
    init: int = 0xFFFF
    reflect_in: bool = False
    reflect_out: bool = False
    xor_out: int = 0

    def __post_init__(self):
        if self.width not in (8, 16, 24):
            raise ValueError(f"CRC width must be 8, 16 or 24, got {self.width}")
        if not 0 < self.poly < (1 << self.width) or not self.poly & 1:
            raise ValueError("generator polynomial must have degree == width and a constant term")

    def describe(self) -> str:
        return (
            f"width={self.width};poly=0x{self.poly:X};init=0x{self.init:X};"
            f"refin={int(self.reflect_in)};refout={int(self.reflect_out)};xorout=0x{self.xor_out:X}"
        )

    @classmethod
    def parse(cls, text: str) -> "CrcConfig":
        fields = dict(kv.split("=", 1) for kv in text.strip().split(";") if kv)
        return cls(
            width=int(fields["width"]),
            poly=int(fields["poly"], 0),
            init=int(fields["init"], 0),
            reflect_in=bool(int(fields.get("refin", "0"))),
            reflect_out=bool(int(fields.get("refout", "0"))),
            xor_out=int(fields.get("xorout", "0"), 0),
        )


CRC16 = CrcConfig()


@numba.njit(cache=True)
def _crc_register(bits, width, poly, init):
    top = np.int64(1) << (width - 1)
    mask = (np.int64(1) << width) - 1
    reg = np.int64(init)
    for b in bits:
        fb = ((reg & top) != 0) ^ (b != 0)
        reg = (reg << 1) & mask
        if fb:
            reg ^= poly
    return reg


def _reflect_bytes(bits: np.ndarray) -> np.ndarray:
    if bits.size % 8:
        raise ValueError("input reflection needs a whole number of bytes")
    return bits.reshape(-1, 8)[:, ::-1].ravel()


def crc_value(bits, crc: CrcConfig = CRC16) -> int:
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    if crc.reflect_in:
        bits = np.ascontiguousarray(_reflect_bytes(bits))
    reg = int(_crc_register(bits, crc.width, crc.poly, crc.init))
    if crc.reflect_out:
        reg = int(format(reg, f"0{crc.width}b")[::-1], 2)
    return reg ^ crc.xor_out


def crc_bits(bits, crc: CrcConfig = CRC16) -> np.ndarray:
    """Check bits, most significant first."""
    reg = crc_value(bits, crc)
    return np.array([(reg >> (crc.width - 1 - k)) & 1 for k in range(crc.width)], dtype=np.uint8)


def crc_attach(payload, crc: CrcConfig = CRC16) -> np.ndarray:
    payload = np.asarray(payload, dtype=np.uint8)
    if payload.size == 0:
        raise ValueError("payload must be non-empty")
    return np.concatenate([payload, crc_bits(payload, crc)])


def crc_check(bits, crc: CrcConfig = CRC16) -> bool:
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size <= crc.width:
        raise ValueError("codeword shorter than the CRC")
    return bool(np.array_equal(crc_bits(bits[: -crc.width], crc), bits[-crc.width :]))
