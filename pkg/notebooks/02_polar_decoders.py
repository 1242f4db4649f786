# ---
# jupyter:
#   jupytext:
#     text_representation:
#       extension: .py
#       format_name: light
# ---

# # Polar encoding and SC / SCL / CA-SCL decoding on BPSK

import numpy as np

from polarcm.construction import single_level_code
from polarcm.crc import CRC16, crc_attach
from polarcm.polar import ca_scl_decode, polar_transform, sc_decode_batch, scl_list_batch

rng = np.random.default_rng(0)
N, K, sigma = 256, 128, 0.8
code, _ = single_level_code(2 / sigma**2, N, K)
print(code.info_positions[:10], code.K)

# Encode random payloads, pass them through AWGN and decode with SC.

frames = 2000
info = rng.integers(0, 2, (frames, K), dtype=np.uint8)
x = polar_transform(code.embed(info))
llr = 2 * (1 - 2.0 * x + sigma * rng.standard_normal(x.shape)) / sigma**2
u, _ = sc_decode_batch(code, llr)
print("SC BLER", np.mean((u[:, code.info_positions] != info).any(axis=1)))

# A list decoder keeps the L best paths. The first path is the most likely one.

paths, metrics, _ = scl_list_batch(code, llr, 8)
print("SCL(8) BLER", np.mean((paths[:, 0][:, code.info_positions] != info).any(axis=1)))

# With a CRC appended to the payload, the decoder returns the best path that
# passes the check.

payload = rng.integers(0, 2, (200, K - 16), dtype=np.uint8)
info = np.array([crc_attach(p) for p in payload])
x = polar_transform(code.embed(info))
llr = 2 * (1 - 2.0 * x + sigma * rng.standard_normal(x.shape)) / sigma**2
errors = sum(not np.array_equal(ca_scl_decode(code, llr[i], 8, CRC16).info_bits, info[i]) for i in range(200))
print("CA-SCL(8) BLER", errors / 200)
