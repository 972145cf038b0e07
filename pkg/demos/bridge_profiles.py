"""Plot the rescaled envelope variance profiles of a finished interface run.

    python3 demos/bridge_profiles.py runs/interface_q25 [out.png]

Reads the plot_potts.csv files written by ``dobrushin interface``.
"""
import csv
import glob
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

root = sys.argv[1] if len(sys.argv) > 1 else "runs/interface_q25"
out = sys.argv[2] if len(sys.argv) > 2 else "bridge_profiles.png"

fig, (a1, a2) = plt.subplots(1, 2, figsize=(10, 4))
for path in sorted(glob.glob(os.path.join(root, "n*", "plot_potts.csv")), key=lambda p: int(p.split(os.sep)[-2][1:])):
    n = os.path.basename(os.path.dirname(path))[1:]
    with open(path) as f:
        rows = np.array([[float(v) for v in r] for r in list(csv.reader(f))[1:]])
    t, mean, var, ref = rows.T
    a1.plot(t, var, label=f"n={n}")
    a1.plot(t, ref, "k:", lw=0.8)
    a2.plot(t, mean, label=f"n={n}")
a1.set(xlabel="t", ylabel="Var of rescaled envelope", title="variance vs c^2 t(1-t)")
a2.set(xlabel="t", ylabel="mean", title="mean profile")
a1.legend()
fig.savefig(out, dpi=120, bbox_inches="tight")
print("wrote", out)
