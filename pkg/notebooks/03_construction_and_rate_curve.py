# ---
# jupyter:
#   jupytext:
#     text_representation:
#       extension: .py
#       format_name: light
# ---

# # Gaussian-approximation construction of a multilevel polar code

import numpy as np

from polarcm import channel
from polarcm.constellation import gray_labeling, make_pam, natural_labeling
from polarcm.construction import build_mlc_code, design_sigma, max_rate_curve

c = make_pam(3)
s = design_sigma(c, 512, 512)
print("design Es/N0 (dB)", 10 * np.log10(1 / (2 * s**2)))

# Information bits are picked globally over all 3 x 512 polarized channels, so
# each level receives as many bits as its reliability warrants.

for name, lab in (("natural", natural_labeling(3)), ("gray", gray_labeling(3))):
    spec = build_mlc_code(lab, c, s, 512, 512)
    print(name, "bits per level", spec.level_info_counts, "predicted BLER", f"{spec.predicted_bler:.3g}")

# The largest rate whose union bound stays below 1e-3 on a binary-input AWGN
# channel, as a function of its capacity.

for i, r in max_rate_curve(1024, 1e-3, np.linspace(0.1, 0.9, 9).tolist()):
    print(f"I={i:.1f}  R={r:.3f}")
