"""Plain-text file formats: labeling files, code-spec files, key=value configs."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .constellation import Labeling, make_pam
from .construction import MlcCodeSpec
from .crc import CrcConfig
from .polar import PolarCodeLevel


class FormatError(ValueError):
    def __init__(self, message: str, lineno: int | None = None, path: str | None = None):
        self.lineno = lineno
        self.path = path
        where = f"{path}:" if path else ""
        where += f"line {lineno}: " if lineno is not None else ""
        super().__init__(where + message)


def format_labeling(lab: Labeling) -> str:
    lines = [f"m={lab.m}"]
    lines += [f"{u:0{lab.m}b} {point}" for u, point in enumerate(lab.table)]
    return "\n".join(lines) + "\n"


def parse_labeling(text: str, path: str | None = None) -> Labeling:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("m="):
        raise FormatError("expected header 'm=<int>'", 1, path)
    try:
        m = int(lines[0][2:])
    except ValueError:
        raise FormatError(f"bad bits-per-symbol {lines[0][2:]!r}", 1, path) from None
    if not 1 <= m <= 6:
        raise FormatError(f"m must be in 1..6, got {m}", 1, path)
    body = lines[1:]
    table = [None] * (1 << m)
    for lineno, line in enumerate(body, start=2):
        if lineno - 2 >= 1 << m:
            raise FormatError(f"more than {1 << m} label lines", lineno, path)
        parts = line.split()
        if len(parts) != 2 or len(parts[0]) != m or set(parts[0]) - {"0", "1"}:
            raise FormatError(f"expected '<{m}-bit label> <point index>', got {line!r}", lineno, path)
        u = int(parts[0], 2)
        try:
            point = int(parts[1])
        except ValueError:
            raise FormatError(f"bad point index {parts[1]!r}", lineno, path) from None
        if table[u] is not None:
            raise FormatError(f"label {parts[0]} appears twice", lineno, path)
        table[u] = point
    if len(body) != 1 << m:
        raise FormatError(f"expected {1 << m} label lines, found {len(body)}", len(lines) + 1, path)
    try:
        return Labeling(tuple(table), m)
    except ValueError as exc:
        raise FormatError(str(exc), None, path) from None


def write_labeling(path, lab: Labeling) -> None:
    Path(path).write_text(format_labeling(lab))


def read_labeling(path) -> Labeling:
    return parse_labeling(Path(path).read_text(), str(path))


def format_code_spec(spec: MlcCodeSpec, labeling_file: str | None = None) -> str:
    header = {
        "m": spec.m,
        "N": spec.N,
        "K": spec.K,
        "sigma_design": repr(spec.design_sigma),
        "predicted_bler": repr(spec.predicted_bler),
        "labeling": spec.labeling.to_string(),
        "labeling_file": labeling_file or "",
        "crc": spec.crc.describe() if spec.crc is not None else "none",
    }
    mask = "".join("F" if f else "I" for f in spec.frozen_mask())
    return "".join(f"{k}={v}\n" for k, v in header.items()) + mask + "\n"


def parse_code_spec(text: str, path: str | None = None) -> MlcCodeSpec:
    lines = text.splitlines()
    header = {}
    mask_line = None
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if "=" in line:
            key, value = line.split("=", 1)
            header[key.strip()] = (value.strip(), lineno)
        elif mask_line is None:
            mask_line = (line.strip(), lineno)
        else:
            raise FormatError("unexpected extra line", lineno, path)
    for key in ("m", "N", "K", "sigma_design", "predicted_bler", "labeling"):
        if key not in header:
            raise FormatError(f"missing header field {key!r}", None, path)
    if mask_line is None:
        raise FormatError("missing frozen/information mask line", len(lines) + 1, path)

    def _num(key, kind):
        value, lineno = header[key]
        try:
            return kind(value)
        except ValueError:
            raise FormatError(f"bad value for {key}: {value!r}", lineno, path) from None

    m, N, K = _num("m", int), _num("N", int), _num("K", int)
    mask_text, mask_no = mask_line
    if len(mask_text) != m * N or set(mask_text) - {"F", "I"}:
        raise FormatError(f"mask must be {m * N} characters of 'F'/'I'", mask_no, path)
    mask = np.array([ch == "F" for ch in mask_text])
    if int(np.count_nonzero(~mask)) != K:
        raise FormatError(f"mask has {np.count_nonzero(~mask)} information positions, header says K={K}", mask_no, path)
    try:
        lab = Labeling.from_string(header["labeling"][0])
        levels = tuple(PolarCodeLevel(mask[j * N : (j + 1) * N]) for j in range(m))
    except ValueError as exc:
        raise FormatError(str(exc), header["labeling"][1], path) from None
    if lab.m != m:
        raise FormatError("labeling size does not match m", header["labeling"][1], path)
    crc_text, crc_no = header.get("crc", ("none", None))
    try:
        crc = None if crc_text == "none" else CrcConfig.parse(crc_text)
    except (KeyError, ValueError) as exc:
        raise FormatError(f"bad crc description: {exc}", crc_no, path) from None
    return MlcCodeSpec(lab, make_pam(m), levels, K, _num("sigma_design", float), _num("predicted_bler", float), crc=crc)


def write_code_spec(path, spec: MlcCodeSpec, labeling_file: str | None = None) -> None:
    Path(path).write_text(format_code_spec(spec, labeling_file))


def read_code_spec(path) -> MlcCodeSpec:
    return parse_code_spec(Path(path).read_text(), str(path))


def parse_config(text: str, path: str | None = None) -> dict:
    """``key=value`` lines; ``#`` starts a comment.  Keys use underscores."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"expected key=value, got {raw!r}", lineno, path)
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out
