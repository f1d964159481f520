"""Fixed-point solve of D_s f = q (Dsbar + wbar) f on a cap.

The seed phi is the Cauchy kernel with its pole at the antipode of the cap
axis, so D_s phi = 0 on the cap.

Run: python demos/03_beltrami_cap.py
"""

import math

import numpy as np

from spherical_pi.beltrami import BeltramiProblem, QuadratureMode, solve_fixed_point
from spherical_pi.clifford import Multivector

pb = BeltramiProblem(2, "s0", QuadratureMode(math.pi / 3, 0.05), Multivector.scalar(2, 0.1),
                     pole=(-1.0, 0.0, 0.0), tolerance=1e-10)
res = solve_fixed_point(pb)
pre = res.precheck
print(f"precheck: ||q|| = {pre.q_sup}, ||Pi|| ~ {pre.pi_norm:.4f}, margin {pre.margin:.3f}")
print(f"iterations {res.iterations}, observed rate {res.rate:.4f} (Banach estimate {pre.q_sup * pre.pi_norm:.4f})")
print("residual history:", " ".join(f"{r:.1e}" for r in res.residual_history))
print(f"max |h| = {np.abs(res.h).max():.3e}; f = phi + T h")
