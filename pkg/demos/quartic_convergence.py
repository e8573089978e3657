"""Shooting eigenvalues of the quartic oscillator against the asymptotic expansion.

The relative gap between the numerical and asymptotic eigenvalue shrinks
as n grows; the leading term alone is already good to a few parts in 1e4
by n = 20.

    python3 demos/quartic_convergence.py
"""

from spectra_asym import AsymptoticModel, ProblemSpec, asym_eigenvalue, lambda_n0, scan_spectrum

spec = ProblemSpec(4, 2)
model = AsymptoticModel.from_spec(spec)
recs = scan_spectrum(spec, 0, 20, jobs=4)

print(f"{'n':>3} {'shooting':>22} {'asymptotic':>22} {'rel gap':>10}")
for r in recs:
    asy = asym_eigenvalue(model, r.n)
    print(f"{r.n:3d} {r.lam.real:22.15f} {asy.real:22.15f} {abs(r.lam - asy) / abs(r.lam):10.2e}")

# with a = 0 the asymptotic series is just the leading term
assert abs(asym_eigenvalue(model, 20) - lambda_n0(spec, 20)) == 0.0
