# ---
# jupyter:
#   jupytext:
#     text_representation:
#       extension: .py
#       format_name: light
# ---

# # Labeling search and BLER simulation of 8-PAM PCM against BIPCM

import warnings

from polarcm.constellation import gray_labeling, make_pam
from polarcm.construction import ConstructionWarning, build_mlc_code, design_sigma
from polarcm.labelsearch import search_optimal_labeling
from polarcm.simulator import SimConfig, build_bipcm_code, run_bler

warnings.simplefilter("ignore", ConstructionWarning)
c = make_pam(3)
s = design_sigma(c, 512, 512)

# Rank all 315 canonical labelings by the predicted BLER of their best code.

report = search_optimal_labeling(3, 512, 512, s)
for r in report.ranked[:5]:
    print(r.labeling.to_string(), f"{r.predicted_bler:.3g}")
print("...", report.ranked[-1].labeling.to_string(), f"{report.ranked[-1].predicted_bler:.3g}")

# Short Monte Carlo runs. Raise max_frames for smooth curves.

best = build_mlc_code(report.best, c, s, 512, 512)
gray = build_mlc_code(gray_labeling(3), c, s, 512, 512)
bipcm = build_bipcm_code(3, 512, 512, s, interleaver_seed=0)
for name, scheme, code, snrs in (
    ("PCM best", "pcm", best, (4.5, 5.0)),
    ("PCM gray", "pcm", gray, (8.5, 9.0)),
    ("BIPCM", "bipcm", bipcm, (6.5, 7.0)),
):
    for p in run_bler(SimConfig(scheme, "sc", code, snrs, max_frames=1000, target_errors=50)):
        print(f"{name:9s} {p.esn0_db:4.1f} dB  BLER {p.bler:.3g} ({p.frame_errors}/{p.frames})")
