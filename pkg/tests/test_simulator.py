import io
import math
import warnings

import numpy as np
import pytest

from polarcm import channel
from polarcm.constellation import gray_labeling, make_pam, natural_labeling
from polarcm.construction import ConstructionWarning, build_mlc_code
from polarcm.crc import CRC16, crc_attach
from polarcm.polar import Decoder, polar_transform, sc_decode_batch
from polarcm.simulator import (
    CSV_HEADER,
    BlerPoint,
    Scheme,
    SimConfig,
    bipcm_decode,
    bipcm_encode_modulate,
    build_bipcm_code,
    draw_frames,
    msd_decode,
    pcm_encode_modulate,
    required_snr,
    run_bipcm_bler,
    run_bler,
)

import oracles


@pytest.fixture(autouse=True)
def _quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConstructionWarning)
        yield


def small_spec(m=3, N=64, K=None, lab=None, snr=8.0):
    c = make_pam(m)
    lab = natural_labeling(m) if lab is None else lab
    return build_mlc_code(lab, c, channel.esn0_db_to_sigma(snr), N, N if K is None else K)


def test_zero_payload_gives_constant_symbol():
    spec = small_spec(lab=gray_labeling(3))
    sym = pcm_encode_modulate(spec, np.zeros((1, spec.K), np.uint8))
    assert sym.shape == (1, 64)
    assert np.all(sym == spec.constellation.points[spec.labeling.table[0]])


def test_symbol_count_and_length_check():
    spec = small_spec(N=512, K=512, snr=5.24)
    assert pcm_encode_modulate(spec, np.zeros(512, np.uint8)).shape == (1, 512)
    with pytest.raises(ValueError):
        pcm_encode_modulate(spec, np.zeros(511, np.uint8))


@pytest.mark.parametrize("lab", [natural_labeling(3), gray_labeling(3)])
def test_msd_noiseless_round_trip(lab):
    spec = small_spec(lab=lab)
    info = np.random.default_rng(0).integers(0, 2, (100, spec.K), dtype=np.uint8)
    y = pcm_encode_modulate(spec, info)
    for dec, L in ((Decoder.SC, 1), (Decoder.SCL, 4)):
        np.testing.assert_array_equal(msd_decode(spec, y, 1e-3, dec, L), info)


def test_msd_noiseless_with_crc():
    spec = small_spec()
    rng = np.random.default_rng(1)
    payload = rng.integers(0, 2, (20, spec.K - 16), dtype=np.uint8)
    info = np.array([crc_attach(p) for p in payload])
    y = pcm_encode_modulate(spec, info)
    np.testing.assert_array_equal(msd_decode(spec, y, 0.01, Decoder.CASCL, 8, CRC16), info)


def test_m1_reduces_to_bpsk_polar():
    spec = small_spec(m=1, N=128, K=64, snr=2.0)
    code = spec.levels[0]
    rng = np.random.default_rng(2)
    info = rng.integers(0, 2, (200, 64), dtype=np.uint8)
    x = polar_transform(code.embed(info))
    sym = pcm_encode_modulate(spec, info)
    np.testing.assert_array_equal(sym, 2.0 * x - 1.0)
    s = 0.8
    y = sym + s * rng.standard_normal(sym.shape)
    u, _ = sc_decode_batch(code, -2 * y / s**2)
    np.testing.assert_array_equal(msd_decode(spec, y, s), u[:, code.info_positions])


def test_msd_matches_joint_ml_small():
    c = make_pam(2)
    s = channel.esn0_db_to_sigma(6.0)
    spec = build_mlc_code(gray_labeling(2), c, s, 8, 8)
    rng = np.random.default_rng(3)
    info = rng.integers(0, 2, (10**4, 8), dtype=np.uint8)
    y = pcm_encode_modulate(spec, info) + s * rng.standard_normal((10**4, 8))
    ml = oracles.joint_ml_pam(y, spec, c.points)
    assert np.mean(np.all(msd_decode(spec, y, s) == ml, axis=1)) >= 0.95


def test_draw_frames_noise_independent_of_payload_size():
    n1, p1 = draw_frames(7, 3, 6, 16, 10)
    n2, p2 = draw_frames(7, 3, 6, 16, 40)
    np.testing.assert_array_equal(n1, n2)
    n3, _ = draw_frames(7, 4, 6, 16, 10)
    np.testing.assert_array_equal(n1[1:], n3)


def test_bler_extremes():
    spec = small_spec()
    hi = run_bler(SimConfig("pcm", "sc", spec, (60.0,), max_frames=400))
    assert hi[0].frames == 400 and hi[0].frame_errors == 0
    lo = run_bler(SimConfig("pcm", "sc", spec, (-30.0,), max_frames=1000, target_errors=10**6))
    assert lo[0].bler >= 0.99


def test_bler_monotone_sweep():
    spec = small_spec(N=128, K=128, snr=5.0)
    pts = run_bler(SimConfig("pcm", "sc", spec, (2.0, 3.0, 4.0, 5.0, 6.0), max_frames=2000, target_errors=200))
    for a, b in zip(pts[:-1], pts[1:]):
        assert b.bler <= a.bler + 3 * math.hypot(a.std_error, b.std_error)


@pytest.mark.slow
def test_worker_count_invariance():
    spec = small_spec(N=64, K=64, snr=5.0)
    kw = dict(max_frames=1200, target_errors=60, chunk_frames=100, seed=9)
    one = run_bler(SimConfig("pcm", "scl", spec, (3.0, 4.0), list_size=4, workers=1, **kw))
    two = run_bler(SimConfig("pcm", "scl", spec, (3.0, 4.0), list_size=4, workers=2, **kw))
    assert one == two


def test_csv_output_and_point_fields():
    spec = small_spec()
    buf = io.StringIO()
    pts = run_bler(SimConfig("pcm", "sc", spec, (4.0, 6.0), max_frames=200), out=buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 3
    for p in pts:
        assert p.bler == p.frame_errors / p.frames
        assert 0 <= p.bler <= 1
        assert p.ebn0_db == pytest.approx(channel.esn0_to_ebn0_db(p.esn0_db, 64 / 64))


def test_sim_config_validation():
    spec = small_spec()
    with pytest.raises(ValueError):
        SimConfig("pcm", "sc", spec, (1.0,), list_size=4)
    with pytest.raises(ValueError):
        SimConfig("pcm", "scl", spec, (1.0,), list_size=3)
    with pytest.raises(ValueError):
        SimConfig("pcm", "scl", spec, (1.0,), list_size=4, crc=CRC16)
    with pytest.raises(ValueError):
        SimConfig("pcm", "sc", spec, ())
    with pytest.raises(ValueError):
        SimConfig("pcm", "sc", spec, (1.0,), max_frames=0)
    with pytest.raises(ValueError):
        SimConfig("bipcm", "sc", spec, (1.0,))
    with pytest.raises(ValueError):
        SimConfig("pcm", "viterbi", spec, (1.0,))
    cfg = SimConfig("pcm", "cascl", spec, (1.0,), list_size=8)
    assert cfg.crc == CRC16 and cfg.payload_bits == spec.K - 16


def test_bipcm_m1_coincides_with_pcm():
    s = channel.esn0_db_to_sigma(2.0)
    pcm = build_mlc_code(natural_labeling(1), make_pam(1), s, 128, 64)
    bip = build_bipcm_code(1, 128, 64, s)
    np.testing.assert_array_equal(pcm.levels[0].frozen_mask, bip.code.frozen_mask)
    kw = dict(max_frames=1000, target_errors=10**6, seed=4)
    a = run_bler(SimConfig("pcm", "sc", pcm, (1.0, 2.0), **kw))
    b = run_bipcm_bler(SimConfig("bipcm", "sc", bip, (1.0, 2.0), **kw))
    assert a == b


def test_bipcm_shortened_noiseless():
    code = build_bipcm_code(3, 64, 64, channel.esn0_db_to_sigma(8.0), interleaver_seed=3)
    assert code.code.N == 256 and code.coded_length == 192
    assert np.all(code.code.frozen_mask[192:])
    assert sorted(code.interleaver) == list(range(192))
    info = np.random.default_rng(5).integers(0, 2, (50, 64), dtype=np.uint8)
    y = bipcm_encode_modulate(code, info)
    # shortened positions carry zero code bits
    assert not polar_transform(code.code.embed(info))[:, 192:].any()
    np.testing.assert_array_equal(bipcm_decode(code, y, 1e-3), info)
    pts = run_bipcm_bler(SimConfig("bipcm", "sc", code, (60.0,), max_frames=200))
    assert pts[0].frame_errors == 0
    with pytest.raises(ValueError):
        run_bipcm_bler(SimConfig("pcm", "sc", small_spec(), (1.0,)))


def test_bipcm_interleaver_seeded():
    s = channel.esn0_db_to_sigma(6.0)
    a = build_bipcm_code(2, 32, 32, s, interleaver_seed=1)
    b = build_bipcm_code(2, 32, 32, s, interleaver_seed=1)
    c = build_bipcm_code(2, 32, 32, s, interleaver_seed=2)
    np.testing.assert_array_equal(a.interleaver, b.interleaver)
    assert not np.array_equal(a.interleaver, c.interleaver)


def test_required_snr_interpolation():
    pts = [BlerPoint(4.0, 4.0, 1000, 100, 0), BlerPoint(5.0, 5.0, 1000, 1, 0)]
    assert required_snr(pts, 1e-2) == pytest.approx(4.5)
    assert math.isnan(required_snr(pts, 1e-4))
    p = BlerPoint(0.0, 0.0, 100, 0, 0)
    assert p.std_error > 0
