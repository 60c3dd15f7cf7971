"""Spectral stability of the delta = 0.1 front, near and away from the origin.

Near lam = 0 the Evans-type function is sampled on a polar gamma grid.
A sech-shaped potential bump of growing amplitude is then added until the
function vanishes, showing that the test can see an eigenvalue when there
is one.  Away from the origin the weighted operator is diagonalised and
each eigenvalue near the right half plane is sorted into band or candidate.
"""
import numpy as np

from efkpp import EvansEnv, classify_spectrum, control_crossing, front, linearization, logistic
from efkpp.eigen_scan import unstable_region
from efkpp.evans import default_gamma_grid, scan_small_eigenvalues

r = logistic()
env = EvansEnv.build(r, 0.1)
scan = scan_small_eigenvalues(0.1, default_gamma_grid(), env)
print(f"|E(0,0)| reference {scan.reference:.6f}")
for smp in scan.samples[:7]:
    print(f"  gamma = {smp.gamma:.3f}   E = {smp.E:.5f}")
print(f"min |E| over {len(scan.samples)} points: {scan.min_modulus:.4f} (flagged: {len(scan.flagged)})")

s_c = control_crossing(env)
print(f"\ncontrol bump amplitude where E(0.1, 0) changes sign: {s_c:.5f}")
for s in (0.0, 0.5 * s_c, s_c):
    E = scan_small_eigenvalues(0.1, [0.0], env.with_control(s), reference=scan.reference).samples[0].E
    print(f"  amplitude {s:.4f}: E = {E.real:+.3e}")

q = front(r, 0.1)
rep = classify_spectrum(linearization(q), q.spreading, unstable_region(q))
print("\neigenvalues with Re >= -0.05:")
for lam, tag, dist in zip(rep.windowed, rep.classified, rep.distances):
    print(f"  {lam.real:+.5f} {lam.imag:+.5f}i   {tag:<16} distance to borders {dist:.1e}")
print(f"a priori region: {rep.region.description}")
print(f"unstable point candidates: {len(rep.unstable_point_candidates)}")
