"""Sample a q=25 Potts configuration in a box with 1/free conditions and draw its two envelopes.

    python3 demos/interface_snapshot.py [n] [sweeps] [out.png]
"""
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from dobrushin.fk_potts import FKChain, FKGraph, edwards_sokal_color
from dobrushin.interfaces import envelope_gap, potts_envelopes, potts_grid
from dobrushin.params import from_q

n = int(sys.argv[1]) if len(sys.argv) > 1 else 24
sweeps = int(sys.argv[2]) if len(sys.argv) > 2 else 40 * n
out = sys.argv[3] if len(sys.argv) > 3 else "interface_snapshot.png"
q, m = 25, 2 * n

prm = from_q(q)
g = FKGraph.box(n, m, "1f")
ch = FKChain(g, prm.p_c, q, seed=1)
ch.run(sweeps)
verts = [v for v in g.verts if abs(v[0]) <= 2 * n and abs(v[1]) <= 2 * m]
grid = potts_grid(edwards_sokal_color(g, ch.omega, q, 2, verts), verts, n, m)
up, lo = potts_envelopes(grid, n, m)
print(f"n={n} m={m} sweeps={sweeps}: envelope gap {envelope_gap(up, lo)}")

xs = np.arange(-n, n + 1)
fig, ax = plt.subplots(figsize=(5, 8))
ax.imshow((grid == 1).T, origin="lower", extent=(-n - 0.5, n + 0.5, -m - 0.5, m + 0.5), cmap="Greys", alpha=0.5)
ax.step(xs, up.values, where="mid", color="C3", label="upper envelope")
ax.step(xs, lo.values, where="mid", color="C0", label="lower envelope")
ax.set_title(f"q={q}, colour 1 shaded")
ax.legend(loc="upper right")
fig.savefig(out, dpi=120, bbox_inches="tight")
print("wrote", out)
