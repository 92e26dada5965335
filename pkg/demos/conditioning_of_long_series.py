"""
How series length degrades the spectral conditioning
====================================================

The subspace construction diagonalizes the recurrence on a rotated
unit-circle grid.  Its conditioning is governed by the smallest |a(z)|
over the grid, and for a recurrence with a t-fold root on the circle that
minimum decays like N^{-t}: polynomial trends are the hard case, and
longer series are harder.
"""

import numpy as np

from hmgn import GlrrVector, rotated_spectrum

cases = {
    1: GlrrVector((1.0, -1.0)),        # constants
    2: GlrrVector((1.0, -2.0, 1.0)),   # linear trends
    3: GlrrVector((1.0, -3.0, 3.0, -1.0)),  # quadratic trends
}

sizes = 2 ** np.arange(6, 13)
print(f"{'N':>6s}" + "".join(f"  t={t}: min|a(z)|" for t in cases))
table = {}
for n in sizes:
    row = [
        rotated_spectrum(a, int(n), mode="compensated").min_abs_eigenvalue
        for a in cases.values()
    ]
    table[n] = row
    print(f"{n:6d}" + "".join(f"  {v:14.3e}" for v in row))

# regression slope of log(min) against log(N) recovers -t
print("\ndecay exponents (log-log slope):")
for j, t in enumerate(cases):
    mins = [table[n][j] for n in sizes]
    slope = np.polyfit(np.log(sizes), np.log(mins), 1)[0]
    print(f"  t = {t}: slope = {slope:+.3f}")
