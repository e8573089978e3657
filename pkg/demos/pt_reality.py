"""Real coefficients give a spectrum that is real apart from finitely many pairs.

A cubic potential with a large real ``a_2`` has a complex-conjugate pair at
the bottom of the spectrum (the scan finds one member).  The rest is real
and ordered by magnitude, and the counting formula tracks the number of
eigenvalues below ``t``.

    python3 demos/pt_reality.py
"""

import numpy as np

from spectra_asym import AsymptoticModel, ProblemSpec, counting, empirical_count, scan_spectrum

for a in ([0.2, -0.25], [0.0, 3.0]):
    spec = ProblemSpec(3, 1, a)
    lam = np.array([r.lam for r in scan_spectrum(spec, 0, 12, jobs=4)])
    print(f"a = {a}")
    for v in lam:
        tag = "" if abs(v.imag) < 1e-8 * abs(v) else "  <- complex"
        print(f"   {v.real:+.10f} {v.imag:+.3e}i{tag}")

    model = AsymptoticModel.from_spec(spec)
    mags = np.sort(np.abs(lam))
    ts = 0.5 * (mags[4:-1] + mags[5:])
    diff = [counting(model, t) - empirical_count(lam, t) for t in ts]
    print(f"   counting formula minus count, n >= 5: {np.round(diff, 3)}\n")
