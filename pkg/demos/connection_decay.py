"""Plot ATRC connection probabilities and the fitted decay from an ``ozfit`` run.

    python3 demos/connection_decay.py runs/atrc_q25 [out.png]
"""
import json
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

root = sys.argv[1] if len(sys.argv) > 1 else "runs/atrc_q25"
out = sys.argv[2] if len(sys.argv) > 2 else "connection_decay.png"
with open(os.path.join(root, "fit.json")) as f:
    fit = json.load(f)

b, tp = fit["boundary"], fit["two_point"]
fig, ax = plt.subplots(figsize=(5, 4))
ax.semilogy(b["k"], b["p"], "o", label="P(0 <-> boundary of box k)")
k = np.array(b["k"], dtype=float)
ax.semilogy(k, np.exp(-b["nu"]["intercept"] - b["nu"]["nu"] * k), "C0-", lw=0.8,
            label=f"exp fit, nu={b['nu']['nu']:.3f}")
d = np.array(tp["distances"], dtype=float)
oz = tp["oz"]
ax.semilogy(d, tp["p"], "s", label="P(0 <-> x) along the axis")
ax.semilogy(d, np.exp(oz["log_g"] - oz["nu"] * d) / np.sqrt(d), "C1-", lw=0.8,
            label=f"OZ fit, nu={oz['nu']:.3f}")
ax.set(xlabel="distance")
ax.legend(fontsize=8)
fig.savefig(out, dpi=120, bbox_inches="tight")
print("wrote", out)
