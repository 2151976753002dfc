"""Sweep the bent-core quartic analyzer over (alpha, beta) and compare the
closed-form classification against the numerical tensor-space minimum.

Usage: python scripts/sweep_bentcore.py [n_alpha n_beta]
"""

import sys
import time

import numpy as np

from framefields import analysis

na, nb = (int(sys.argv[1]), int(sys.argv[2])) if len(sys.argv) > 2 else (20, 20)
alphas = np.linspace(0.2, 2.0, na)
betas = np.linspace(-29.0 / 15.0 + 0.1, 2.0, nb)

t0 = time.time()
worst = 0.0
for a in alphas:
    for b in betas:
        rep = analysis.bentcore_minimize(a, b, numeric=True)
        rel = abs(rep.numeric_omega - rep.omega) / max(abs(rep.omega), 1e-30)
        worst = max(worst, rel)
print(f"{na}x{nb} sweep in {time.time() - t0:.1f}s, "
      f"worst relative mismatch {worst:.3g}")
