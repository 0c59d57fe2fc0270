import time
import warnings

import numpy as np

import fracheat.lattice as lt
from fracheat.kato import box_potential, zero_potential
from fracheat.kernels import FracParams

P_HALF = FracParams(0.5, 1)
P_ONE = FracParams(1.0, 1)

t0 = time.time()
# uniformity vs box depth, alpha = 1/2 and alpha = 1
for amp in (-0.5, -0.3, -0.2, 0.4):
    V = box_potential(amplitude=amp, radius=1.0)
    r = lt.verify_41(P_HALF, V, p=2.0, N=256, L=64.0)
    r1 = lt.verify_41(P_HALF, V, p=1.0, N=256, L=64.0)
    print(f"a=1/2 amp={amp}: p2 const={r.empirical_constant:.4f} margin={r.margin:.4f} "
          f"| p1 const={r1.empirical_constant:.4f}")
for amp in (-0.5, -0.3, 0.4):
    V = box_potential(amplitude=amp, radius=1.0)
    r = lt.verify_41(P_ONE, V, p=2.0, N=256, L=64.0)
    print(f"a=1 amp={amp}: p2 const={r.empirical_constant:.4f} margin={r.margin:.4f}")
print(f"({time.time()-t0:.1f}s)")

# longer sweep sensitivity for the worst case
V5 = box_potential(amplitude=-0.5, radius=1.0)
r = lt.verify_41(P_HALF, V5, p=2.0, N=256, L=64.0, t_sweep=np.geomspace(0.2, 8.0, 11))
print("amp=-0.5 t in [0.2, 8]:", r.empirical_constant, r.worst_point)

# resolvent theta sweep on a divisible lattice
vals = []
for th in (1.0, 0.5, 0.25):
    latT = lt.PeriodicLattice(128, 64.0)
    HT = lt.build_hamiltonian(latT, P_HALF, box_potential(amplitude=-0.3, radius=1.0),
                              theta=th, M=2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        vals.append(lt.resolvent_power_amalgam(HT, 0.75, 1.0, 2.0))
print("resolvent theta amalgams:", [f"{v:.6f}" for v in vals],
      "ratio:", max(vals) / min(vals))

# threshold warning
Hb = lt.build_hamiltonian(lt.PeriodicLattice(128, 64.0), P_HALF,
                          box_potential(amplitude=-0.3, radius=1.0), M=2.0)
with warnings.catch_warnings(record=True) as wl:
    warnings.simplefilter("always")
    lt.resolvent_power_amalgam(Hb, 0.2, 1.0, 2.0)
print("warning fired:", len(wl), str(wl[0].message)[:70] if wl else "")

# small-t amalgam slope, resolved lattice
t1 = time.time()
latS = lt.PeriodicLattice(1024, 32.0)
HS = lt.build_hamiltonian(latS, P_HALF, zero_potential(), M=1.0)
for lo, hi in ((0.05, 0.5), (0.03, 0.3), (0.1, 1.0)):
    ts = np.geomspace(lo, hi, 7)
    norms = [lt.heat_amalgam_norm(HS, float(t), 2.0) for t in ts]
    slope = np.polyfit(np.log(ts), np.log(norms), 1)[0]
    print(f"small-t slope t in [{lo},{hi}]:", slope)
print(f"({time.time()-t1:.1f}s)")

# exact L2 norm cross-check: ||K(t)||_L2 = (2 pi t)^{-1/2} for alpha=1/2 n=1
K = lt.heat_kernel_matrix(HS, 0.1)
discrete_l2 = np.sqrt(latS.dx * (K[:, 0] ** 2).sum())
print("L2 at t=0.1:", discrete_l2, "exact:", (2 * np.pi * 0.1) ** -0.5)

print("total", time.time() - t0, "s")
