"""Command-line entry point: ``python -m polarcm <command> ...``.

Every command that writes ``--out FILE`` also writes ``FILE.manifest.json``
holding the fully resolved argument list, so ``polarcm rerun FILE.manifest.json``
regenerates the file bit for bit.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import math
import re
import sys
import warnings
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, channel, formats
from .constellation import labeling_for, make_pam
from .construction import ConstructionWarning, build_mlc_code, design_sigma, max_rate_curve
from .crc import CRC16, CrcConfig
from .labelsearch import search_optimal_labeling
from .polar import Decoder
from .simulator import Scheme, SimConfig, build_bipcm_code, run_bler


class CliError(Exception):
    """Failure reported as a single ``error: <kind>: <message>`` line."""

    def __init__(self, kind: str, message: str):
        self.kind = kind
        super().__init__(message)


@dataclass
class RunManifest:
    command: str
    params: dict
    argv: list
    seeds: dict
    outputs: list
    inputs: dict = field(default_factory=dict)
    version: str = __version__
    timestamp: str = ""

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n")

    @classmethod
    def read(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))


def manifest_path(out) -> Path:
    return Path(str(out) + ".manifest.json")


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# argument helpers


def parse_snr_list(text: str) -> list[float]:
    """``"4,4.5,5"`` or an inclusive range ``"start:stop:step"``."""
    text = str(text).strip()
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + k * step, 10) for k in range(count)]
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise CliError("bad-snr", f"cannot parse SNR list {text!r}") from None
    if not values:
        raise CliError("bad-snr", "empty SNR list")
    return values


def _to_esn0(values, ebn0: bool, info_per_symbol: float) -> list[float]:
    if not ebn0:
        return list(values)
    return [v + 10.0 * math.log10(info_per_symbol) for v in values]


def _labeling(args):
    if getattr(args, "labeling_file", None):
        lab = formats.read_labeling(args.labeling_file)
        if args.m is not None and args.m != lab.m:
            raise CliError("bad-args", f"--m {args.m} does not match labeling file (m={lab.m})")
        return lab
    if args.m is None:
        raise CliError("bad-args", "--m is required without --labeling-file")
    return labeling_for(args.labeling, args.m)


def _design_sigma(args, c, N, K) -> float:
    if args.design_snr in (None, "auto"):
        return design_sigma(c, N, K)
    try:
        return channel.esn0_db_to_sigma(float(args.design_snr))
    except ValueError:
        raise CliError("bad-args", f"--design-snr must be a number or 'auto', got {args.design_snr!r}") from None


@contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


# ---------------------------------------------------------------------------
# commands; each returns (output files, input files)


def cmd_capacity(args):
    lab = _labeling(args)
    c = make_pam(lab.m)
    snrs = _to_esn0(parse_snr_list(args.snr), args.ebn0, args.info_rate)
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["esn0_db", "sigma"] + [f"I_W{j}" for j in range(1, lab.m + 1)] + ["sum", "I_W"])
        for snr in snrs:
            sigma = channel.esn0_db_to_sigma(snr)
            caps = channel.level_capacities(lab, c, sigma)
            total = channel.total_capacity(lab, c, sigma)
            w.writerow([repr(float(snr)), repr(sigma)] + [repr(float(x)) for x in caps] + [repr(float(caps.sum())), repr(total)])
    return [args.out], [args.labeling_file]


def cmd_search(args):
    c = make_pam(args.m)
    sigma = _design_sigma(args, c, args.N, args.K)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConstructionWarning)
        try:
            report = search_optimal_labeling(args.m, args.N, args.K, sigma, args.workers, args.allow_large)
        except ValueError as exc:
            hint = "; pass --allow-large to enumerate m = 4" if "limited" in str(exc) else ""
            raise CliError("invalid-parameter", f"{exc}{hint}") from None
    best = report.ranked[0]
    print(f"evaluated {report.evaluated_count}")
    print(f"best {best.labeling.to_string()} predicted_bler {best.predicted_bler!r}")
    with _output(args.out) as fh:
        fh.write(report.to_csv())
    outputs = [args.out]
    best_path = args.best or (str(Path(args.out).with_suffix("")) + ".best.lab" if args.out else None)
    if best_path:
        formats.write_labeling(best_path, report.best)
        outputs.append(best_path)
    return outputs, []


def _crc_arg(text):
    if text in (None, "none"):
        return None
    if text == "crc16":
        return CRC16
    try:
        return CrcConfig.parse(text)
    except (KeyError, ValueError) as exc:
        raise CliError("bad-crc", f"cannot parse CRC description {text!r}: {exc}") from None


def cmd_construct(args):
    lab = _labeling(args)
    c = make_pam(lab.m)
    sigma = _design_sigma(args, c, args.N, args.K)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ConstructionWarning)
            spec = build_mlc_code(lab, c, sigma, args.N, args.K, crc=_crc_arg(args.crc))
    except ValueError as exc:
        raise CliError("invalid-parameter", str(exc)) from None
    for wrn in caught:
        print(f"warning: {wrn.message}", file=sys.stderr)
    text = formats.format_code_spec(spec, args.labeling_file)
    with _output(args.out) as fh:
        fh.write(text)
    print(f"levels {' '.join(str(k) for k in spec.level_info_counts)} predicted_bler {spec.predicted_bler!r}", file=sys.stderr)
    return [args.out], [args.labeling_file]


def cmd_ratecurve(args):
    if args.grid:
        grid = [float(x) for x in args.grid.split(",")]
    else:
        grid = list(np.linspace(0.0, 1.0, args.points + 2)[1:-1])
    try:
        curve = max_rate_curve(args.N, args.target_bler, grid)
    except ValueError as exc:
        raise CliError("invalid-parameter", str(exc)) from None
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["capacity", "rate"])
        for cap, rate in curve:
            w.writerow([repr(cap), repr(rate)])
    return [args.out], []


def cmd_simulate(args):
    decoder = Decoder(args.decoder)
    list_size = args.list if args.list is not None else (1 if decoder is Decoder.SC else 32)
    crc = None
    if args.scheme == "pcm":
        if not args.spec:
            raise CliError("bad-args", "--spec is required for the pcm scheme")
        code = formats.read_code_spec(args.spec)
        if decoder is Decoder.CASCL:
            crc = code.crc or _crc_arg(args.crc) or CRC16
    else:
        if None in (args.m, args.N, args.K):
            raise CliError("bad-args", "the bipcm scheme needs --m, --N and --K")
        c = make_pam(args.m)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConstructionWarning)
            code = build_bipcm_code(args.m, args.N, args.K, _design_sigma(args, c, args.N, args.K), args.interleaver_seed)
        if decoder is Decoder.CASCL:
            crc = _crc_arg(args.crc) or CRC16
    payload = code.K - (crc.width if crc else 0)
    snrs = _to_esn0(parse_snr_list(args.snr), args.ebn0, payload / code.N)
    try:
        cfg = SimConfig(
            Scheme(args.scheme),
            decoder,
            code,
            tuple(snrs),
            list_size=list_size,
            max_frames=args.max_frames,
            target_errors=args.target_errors,
            seed=args.seed,
            workers=args.workers,
            chunk_frames=args.chunk_frames,
            crc=crc,
        )
    except ValueError as exc:
        raise CliError("invalid-parameter", str(exc)) from None
    with _output(args.out) as fh:
        run_bler(cfg, fh)
    return [args.out], [args.spec]


COMMANDS = {
    "capacity": cmd_capacity,
    "search": cmd_search,
    "construct": cmd_construct,
    "ratecurve": cmd_ratecurve,
    "simulate": cmd_simulate,
}


# ---------------------------------------------------------------------------
# parser


def _common(p):
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("--out", default=None, help="output file (stdout if omitted)")
    p.add_argument("--config", default=None, help="key=value file; command-line flags take precedence")


def _labeling_args(p):
    p.add_argument("--m", type=int, default=None, help="bits per symbol")
    p.add_argument("--labeling", default="natural", choices=["natural", "gray"])
    p.add_argument("--labeling-file", default=None)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage", f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="polarcm", description="Multi-level polar coded PAM toolkit.")
    parser.add_argument("--version", action="version", version=f"polarcm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacity", help="per-level and total capacities versus SNR")
    _common(p)
    _labeling_args(p)
    p.add_argument("--snr", required=True, help="Es/N0 list in dB: a,b,c or start:stop:step")
    p.add_argument("--ebn0", action="store_true", help="read --snr as Eb/N0")
    p.add_argument("--info-rate", type=float, default=1.0, help="information bits per symbol for --ebn0")

    p = sub.add_parser("search", help="exhaustive labeling search")
    _common(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--design-snr", default="auto", help="Es/N0 in dB, or 'auto'")
    p.add_argument("--best", default=None, help="file for the best labeling")
    p.add_argument("--allow-large", action="store_true", help="permit m = 4")

    p = sub.add_parser("construct", help="build a multi-level polar code")
    _common(p)
    _labeling_args(p)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--design-snr", default="auto")
    p.add_argument("--crc", default="none", help="'none', 'crc16' or a width=..;poly=.. description")

    p = sub.add_parser("ratecurve", help="largest rate meeting a target BLER")
    _common(p)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--target-bler", type=float, default=1e-3)
    p.add_argument("--points", type=int, default=20, help="uniform grid size inside (0, 1)")
    p.add_argument("--grid", default=None, help="explicit comma-separated capacities")

    p = sub.add_parser("simulate", help="Monte Carlo BLER")
    _common(p)
    p.add_argument("--scheme", default="pcm", choices=["pcm", "bipcm"])
    p.add_argument("--spec", default=None, help="code-spec file (pcm)")
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--K", type=int, default=None)
    p.add_argument("--design-snr", default="auto")
    p.add_argument("--interleaver-seed", type=int, default=0)
    p.add_argument("--decoder", default="sc", choices=[d.value for d in Decoder])
    p.add_argument("--list", type=int, default=None, help="list size (default 32 for list decoders)")
    p.add_argument("--crc", default=None, help="CRC for cascl when the code spec names none")
    p.add_argument("--snr", required=True)
    p.add_argument("--ebn0", action="store_true")
    p.add_argument("--max-frames", type=int, default=10_000)
    p.add_argument("--target-errors", type=int, default=100)
    p.add_argument("--chunk-frames", type=int, default=200)

    p = sub.add_parser("rerun", help="repeat a run from its manifest")
    p.add_argument("manifest")
    return parser


def _subparser(parser, name) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


_NEG_VALUE = re.compile(r"^-\.?\d")


def _join_negative_values(argv: list[str]) -> list[str]:
    """Rewrite ``--flag -2:10:2`` as ``--flag=-2:10:2`` so argparse keeps the value."""
    out: list[str] = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and _NEG_VALUE.match(tok):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def _apply_config(parser, argv, command, config):
    """Parse with config-file values as defaults so explicit flags win."""
    sub = _subparser(parser, command)
    values = formats.parse_config(Path(config).read_text(), config)
    known = {a.dest: a for a in sub._actions}
    for key, value in values.items():
        if key not in known or key in ("config", "help"):
            raise CliError("bad-config", f"{config}: unknown key {key!r}")
        action = known[key]
        if isinstance(action, argparse._StoreTrueAction):
            value = value.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            value = action.type(value)
        sub.set_defaults(**{key: value})
    for action in sub._actions:
        if action.dest in values:
            action.required = False
    return parser.parse_args(argv)


def canonical_argv(parser, args) -> list[str]:
    """Explicit argument list reproducing ``args`` without a config file."""
    sub = _subparser(parser, args.command)
    out = [args.command]
    for action in sub._actions:
        if not action.option_strings or action.dest in ("help", "config"):
            continue
        value = getattr(args, action.dest)
        flag = action.option_strings[-1]
        if isinstance(action, argparse._StoreTrueAction):
            if value:
                out.append(flag)
        elif value is not None:
            out.append(f"{flag}={value}")
    return out


def _run(argv) -> int:
    parser = build_parser()
    argv = _join_negative_values(argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config and known.command in COMMANDS:
        args = _apply_config(parser, argv, known.command, known.config)
    else:
        args = parser.parse_args(argv)
    if args.command == "rerun":
        manifest = RunManifest.read(args.manifest)
        return _run(manifest.argv)
    if args.workers < 1:
        raise CliError("invalid-parameter", "--workers must be at least 1")
    outputs, inputs = COMMANDS[args.command](args)
    outputs = [o for o in outputs if o]
    argv_full = canonical_argv(parser, args)
    if args.out:
        params = {k: v for k, v in vars(args).items() if k not in ("config",)}
        RunManifest(
            command=args.command,
            params=params,
            argv=argv_full,
            seeds={"seed": args.seed, "interleaver_seed": getattr(args, "interleaver_seed", None)},
            outputs=outputs,
            inputs={p: _sha256(p) for p in inputs if p},
            timestamp=_dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        ).write(manifest_path(args.out))
    return 0


def main(argv=None) -> int:
    try:
        return _run(sys.argv[1:] if argv is None else list(argv))
    except CliError as exc:
        kind, msg = exc.kind, str(exc)
    except formats.FormatError as exc:
        kind, msg = "parse-error", str(exc)
    except FileNotFoundError as exc:
        kind, msg = "io-error", f"{exc.filename}: file not found"
    except OSError as exc:
        kind, msg = "io-error", str(exc)
    except ValueError as exc:
        kind, msg = "invalid-parameter", str(exc)
    print(f"error: {kind}: {' '.join(msg.split())}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
