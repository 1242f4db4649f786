# ---
# jupyter:
#   jupytext:
#     text_representation:
#       extension: .py
#       format_name: light
# ---

# # Per-level capacities of labeled 8-PAM
#
# A labeling maps each 3-bit label to one of the eight PAM points. Multistage
# decoding sees one binary channel per bit level, and the level capacities add
# up to the capacity of the whole constellation.

import numpy as np

from polarcm import channel
from polarcm.constellation import count_candidates, enumerate_canonical_labelings, gray_labeling, make_pam, natural_labeling

c = make_pam(3)
print(c.points)
print("average energy", np.mean(c.points**2))

# Level capacities for the natural and Gray labelings over a few Es/N0 values.

for name, lab in (("natural", natural_labeling(3)), ("gray", gray_labeling(3))):
    for snr in (0.0, 5.0, 10.0, 15.0):
        s = channel.esn0_db_to_sigma(snr)
        caps = channel.level_capacities(lab, c, s)
        print(f"{name:8s} {snr:5.1f} dB", np.round(caps, 4), "sum", round(caps.sum(), 4), "I(W)", round(channel.total_capacity(lab, c, s), 4))

# The natural labeling polarizes the levels more strongly than Gray: its first
# level is weak and its last level is nearly perfect.
#
# Complementing a bit level does not change any level capacity, so labelings
# related by bit flips are equivalent. Only one representative per class is
# enumerated.

lab = natural_labeling(3)
s = channel.esn0_db_to_sigma(5.0)
print(channel.level_capacities(lab.flip_bit(2), c, s) - channel.level_capacities(lab, c, s))
print("classes per m:", [count_candidates(m) for m in (1, 2, 3, 4)])
print(sum(1 for _ in enumerate_canonical_labelings(3)))
