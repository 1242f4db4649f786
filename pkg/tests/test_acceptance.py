"""Acceptance criteria 1-10, one test each.

Each test prints a single ``CRITERION k: PASS/FAIL ...`` line; the lines are
repeated in the pytest terminal summary. Run on its own with
``python3 tests/test_acceptance.py`` or ``pytest tests/test_acceptance.py -v``.
"""

import math
import time
import warnings

import numpy as np
import pytest
from scipy.special import logsumexp

from polarcm import channel
from polarcm.constellation import Labeling, enumerate_canonical_labelings, gray_labeling, make_pam
from polarcm.construction import (
    ConstructionWarning,
    build_mlc_code,
    design_sigma,
    ga_evolve,
    log_error_probability,
    max_rate_curve,
)
from polarcm.labelsearch import search_optimal_labeling
from polarcm.polar import PolarCodeLevel, polar_transform, sc_decode_batch, scl_list_batch
from polarcm.simulator import SimConfig, build_bipcm_code, msd_decode, pcm_encode_modulate, required_snr, run_bler

import oracles

TARGET = 1e-2
M, N, K = 3, 512, 512


@pytest.fixture(autouse=True)
def _quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConstructionWarning)
        yield


def bpsk_llr(x, sigma, rng):
    return 2.0 * (1.0 - 2.0 * x + sigma * rng.standard_normal(x.shape)) / sigma**2


def within(a, b):
    """``a <= b`` up to three standard errors of the difference."""
    return a.bler <= b.bler + 3 * math.hypot(a.std_error, b.std_error)


# --- criteria 1-7: exact and statistical properties ---------------------------


def test_criterion_1_search_space_count(criterion):
    t0 = time.perf_counter()
    n_enum = sum(1 for _ in enumerate_canonical_labelings(3))
    dt = time.perf_counter() - t0
    counts = {m: search_optimal_labeling(m, 16, 16, 0.5).evaluated_count for m in (1, 2, 3)}
    ok = counts == {1: 1, 2: 3, 3: 315} and n_enum == 315 and dt < 1.0
    criterion(1, ok, f"evaluated counts {counts}, enumeration {dt * 1e3:.1f} ms")


def test_criterion_2_chain_rule(criterion):
    c, rng = make_pam(3), np.random.default_rng(2)
    worst = 0.0
    for _ in range(20):
        lab = Labeling(tuple(int(v) for v in rng.permutation(8)), 3)
        for s in (0.3, 0.6, 1.0):
            caps = channel.level_capacities(lab, c, s)
            worst = max(worst, abs(float(np.sum(caps)) - channel.total_capacity(lab, c, s)))
    criterion(2, worst <= 1e-6, f"max |sum I(W_j) - I(W)| = {worst:.2e} over 20 labelings x 3 sigmas")


def test_criterion_3_bit_flip_symmetry(criterion):
    c, rng = make_pam(3), np.random.default_rng(3)
    worst = 0.0
    for _ in range(10):
        lab = Labeling(tuple(int(v) for v in rng.permutation(8)), 3)
        for s in (0.3, 0.6, 1.0):
            base = channel.level_capacities(lab, c, s)
            for level in (1, 2, 3):
                flipped = channel.level_capacities(lab.flip_bit(level), c, s)
                worst = max(worst, float(np.max(np.abs(flipped - base))))
    criterion(3, worst <= 1e-9, f"max per-level change after a bit flip = {worst:.2e}")


def test_criterion_4_polar_round_trips(criterion):
    rng = np.random.default_rng(4)
    failures = []
    for n in range(1, 11):
        N_ = 2**n
        K_ = int(rng.integers(1, N_ + 1))
        code = PolarCodeLevel.from_info_positions(N_, np.sort(rng.choice(N_, K_, replace=False)))
        info = rng.integers(0, 2, (100, K_), dtype=np.uint8)
        x = polar_transform(code.embed(info))
        u, _ = sc_decode_batch(code, 20.0 * (1.0 - 2.0 * x))
        if not np.array_equal(u[:, code.info_positions], info):
            failures.append(N_)
    code = PolarCodeLevel.from_info_positions(128, np.sort(rng.choice(128, 64, replace=False)))
    info = rng.integers(0, 2, (1000, 64), dtype=np.uint8)
    llr = bpsk_llr(polar_transform(code.embed(info)), 0.9, rng)
    u_sc, _ = sc_decode_batch(code, llr)
    paths, _, _ = scl_list_batch(code, llr, 1)
    same = bool(np.array_equal(paths[:, 0], u_sc))
    criterion(4, not failures and same, f"noiseless SC failures at N={failures}, SCL(1)==SC on 1000 frames: {same}")


def test_criterion_5_small_instance_oracles(criterion):
    rng = np.random.default_rng(5)
    s = channel.esn0_db_to_sigma(6.0)
    code = PolarCodeLevel.from_info_positions(8, [3, 5, 6, 7])
    info = rng.integers(0, 2, (10**4, 4), dtype=np.uint8)
    llr = bpsk_llr(polar_transform(code.embed(info)), s, rng)
    ml = oracles.ml_decode_bpsk(llr, code.info_positions, 8)
    paths, _, _ = scl_list_batch(code, llr, 16)
    scl_agree = float(np.mean(np.all(paths[:, 0][:, code.info_positions] == ml, axis=1)))

    c = make_pam(2)
    spec = build_mlc_code(gray_labeling(2), c, s, 8, 8)
    info = rng.integers(0, 2, (10**4, 8), dtype=np.uint8)
    y = pcm_encode_modulate(spec, info) + s * rng.standard_normal((10**4, 8))
    msd_agree = float(np.mean(np.all(msd_decode(spec, y, s) == oracles.joint_ml_pam(y, spec, c.points), axis=1)))
    ok = scl_agree >= 0.99 and msd_agree >= 0.95
    criterion(5, ok, f"SCL(16) vs ML {scl_agree:.4f}, MSD vs joint ML {msd_agree:.4f}")


def test_criterion_6_construction_sanity(criterion):
    # design and simulate at Es/N0 = 0 dB so that 100 frame errors are reachable
    s = channel.esn0_db_to_sigma(0.0)
    spec = build_mlc_code(Labeling((0, 1), 1), make_pam(1), s, 256, 128)
    code = spec.levels[0]
    rng = np.random.default_rng(6)
    errors = frames = 0
    while errors < 100 or frames < 10_000:
        info = rng.integers(0, 2, (2000, 128), dtype=np.uint8)
        u, _ = sc_decode_batch(code, bpsk_llr(polar_transform(code.embed(info)), s, rng))
        errors += int(np.count_nonzero((u[:, code.info_positions] != info).any(axis=1)))
        frames += 2000
    mc = errors / frames
    ratio = spec.predicted_bler / mc

    mu = 2 / s**2
    genie = oracles.genie_llrs(rng.normal(mu, math.sqrt(2 * mu), (4000, 256)))
    emp = logsumexp(-genie / 2, axis=0)
    ga = log_error_probability(ga_evolve(mu, 256))
    iu = np.triu_indices(256, 1)
    agree = float(np.mean(np.sign(ga[:, None] - ga[None, :])[iu] == np.sign(emp[:, None] - emp[None, :])[iu]))
    ok = 0.2 <= ratio <= 5.0 and agree >= 0.95
    criterion(6, ok, f"union bound {spec.predicted_bler:.4g} vs MC SC {mc:.4g} ({errors} errors), ratio {ratio:.2f}; ranking agreement {agree:.4f}")


def test_criterion_7_rate_curve(criterion):
    grid = ((np.arange(20) + 0.5) / 20).tolist()
    curve = max_rate_curve(1024, 1e-3, grid)
    rates = [r for _, r in curve]
    ok = len(curve) == 20 and all(r <= i for i, r in curve) and all(a <= b for a, b in zip(rates[:-1], rates[1:]))
    criterion(7, ok, f"R(I) on 20 points: " + " ".join(f"{r:.3f}" for r in rates))


# --- criteria 8-10: m=3 PAM, N=512, K=512 link simulations ------------------


@pytest.fixture(scope="module")
def setup_8():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConstructionWarning)
        c = make_pam(M)
        s = design_sigma(c, N, K)
        best = search_optimal_labeling(M, N, K, s).best
        return {
            "optimal": build_mlc_code(best, c, s, N, K),
            "gray": build_mlc_code(gray_labeling(M), c, s, N, K),
            "bipcm": build_bipcm_code(M, N, K, s, interleaver_seed=0),
        }


def _point(code, snr, scheme="pcm", decoder="sc", L=1, frames=40_000, errors=100):
    cfg = SimConfig(scheme, decoder, code, (snr,), list_size=L, max_frames=frames, target_errors=errors, seed=8)
    return run_bler(cfg)[0]


def _crossing(code, start, scheme="pcm", step=0.25):
    """Walk an SNR grid from ``start`` until the BLER curve brackets the target."""
    pts = {}
    snr = start
    for _ in range(16):
        pts[snr] = _point(code, snr, scheme)
        below = [s for s, p in pts.items() if p.bler <= TARGET and p.frame_errors > 0]
        above = [s for s, p in pts.items() if p.bler >= TARGET]
        if below and above and min(below) - max(above) <= step + 1e-9:
            break
        snr = round(snr + step if not below else min(pts) - step, 6)
    pts = [pts[s] for s in sorted(pts)]
    return required_snr(pts, TARGET), pts


@pytest.fixture(scope="module")
def crossings(setup_8):
    return {
        "optimal": _crossing(setup_8["optimal"], 4.25),
        "gray": _crossing(setup_8["gray"], 8.5),
        "bipcm": _crossing(setup_8["bipcm"], 6.25, scheme="bipcm"),
    }


def _curve(pts):
    return " ".join(f"{p.esn0_db:g}:{p.bler:.3g}" for p in pts)


@pytest.mark.slow
def test_criterion_8_pcm_beats_bipcm(setup_8, crossings, criterion):
    opt, opt_pts = crossings["optimal"]
    bip, bip_pts = crossings["bipcm"]
    gap = bip - opt
    ok = math.isfinite(gap) and gap >= 1.0
    lab = setup_8["optimal"].labeling.to_string()
    criterion(8, ok, f"required Es/N0 at BLER 1e-2: PCM[{lab}] {opt:.2f} dB, BIPCM {bip:.2f} dB, gap {gap:.2f} dB (PCM {_curve(opt_pts)}; BIPCM {_curve(bip_pts)})")


@pytest.mark.slow
def test_criterion_9_labeling_matters(setup_8, crossings, criterion):
    opt, opt_pts = crossings["optimal"]
    gray, gray_pts = crossings["gray"]
    gap = gray - opt
    # BLER separation at the first optimal point that reaches the target
    ref = min((p for p in opt_pts if p.bler <= TARGET and p.frame_errors > 0), key=lambda p: p.esn0_db)
    g = _point(setup_8["gray"], ref.esn0_db)
    sep = (g.bler - ref.bler) / math.hypot(g.std_error, ref.std_error)
    ok = math.isfinite(gap) and gap >= 0.2 and sep >= 3.0
    criterion(9, ok, f"required Es/N0: optimal {opt:.2f} dB, Gray {gray:.2f} dB, gap {gap:.2f} dB; at {ref.esn0_db:g} dB Gray BLER {g.bler:.3g} vs {ref.bler:.3g} ({sep:.1f} SE); Gray {_curve(gray_pts)}")


@pytest.mark.slow
def test_criterion_10_decoder_ordering(setup_8, crossings, criterion):
    spec = setup_8["optimal"]
    _, opt_pts = crossings["optimal"]
    # the two simulated points that bracket the target
    hi = min(p.esn0_db for p in opt_pts if p.bler <= TARGET and p.frame_errors > 0)
    snrs = (hi - 0.25, hi)
    frames = 3000
    rows, ok = [], True
    for snr in snrs:
        sc = _point(spec, snr, frames=frames, errors=frames)
        scl = _point(spec, snr, decoder="scl", L=32, frames=frames, errors=frames)
        ca = _point(spec, snr, decoder="cascl", L=32, frames=frames, errors=frames)
        ok &= within(ca, scl) and within(scl, sc)
        rows.append(f"{snr:g} dB: SC {sc.bler:.4f}, SCL32 {scl.bler:.4f}, CA-SCL32 {ca.bler:.4f}")
    criterion(10, ok, f"({frames} frames per point) " + "; ".join(rows))


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v", "-s"]))
