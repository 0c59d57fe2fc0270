import time
import warnings

import numpy as np

import fracheat.lattice as lt
from fracheat.kato import box_potential, gaussian_potential, zero_potential
from fracheat.kernels import FracParams

t0 = time.time()
P_HALF = FracParams(0.5, 1)
P_ONE = FracParams(1.0, 1)

# --- 1. lattice basics + free eigenvalues == sorted symbol
lat = lt.PeriodicLattice(128, 60.0)
print("dx", lat.dx, "x0", lat.x_nodes[0], "xlast", lat.x_nodes[-1])
fr = lat.frequencies
print("freq extremes", fr.min(), fr.max(), "count>0", (fr > 0).sum())
H0 = lt.build_hamiltonian(lat, P_ONE, zero_potential(), M=1.0)
sym = np.abs(fr) ** 2
gap = np.abs(H0.eigenvalues - np.sort(sym)).max()
print("free eig vs symbol (alpha=1):", gap, "rel", gap / sym.max())
H0h = lt.build_hamiltonian(lat, P_HALF, zero_potential(), M=1.0)
symh = np.abs(fr)
gaph = np.abs(H0h.eigenvalues - np.sort(symh)).max()
print("free eig vs symbol (alpha=1/2):", gaph, "rel", gaph / symh.max())

# --- 2. constant shift, box floor, M default
const = box_potential(amplitude=0.3, radius=30.0)   # covers the cell
Hc = lt.build_hamiltonian(lat, P_HALF, const, M=1.0)
print("const shift err:", np.abs(np.sort(Hc.eigenvalues) - np.sort(H0h.eigenvalues + 0.3)).max())
neg = box_potential(amplitude=-0.5, radius=1.0)
Hn = lt.build_hamiltonian(lat, P_HALF, neg)
print("neg box lam_min:", Hn.eigenvalues[0], ">= -0.5?", Hn.eigenvalues[0] >= -0.5 - 1e-12,
      "M default:", Hn.M)

# --- 3. theta rescale
H1 = lt.build_hamiltonian(lat, P_HALF, neg, theta=1.0, M=1.0)
Hsame = lt.build_hamiltonian(lat, P_HALF, neg, theta=1.0, M=1.0)
print("theta=1 check:", lt.theta_rescale_check(H1, Hsame, t=0.7))
th = 0.25
lat_th = lt.PeriodicLattice(128, 60.0 * th ** (-1.0 / (2 * 0.5)))
Hth = lt.build_hamiltonian(lat_th, P_HALF, neg, theta=th, M=1.0)
print("theta=1/4 box, t=1:", lt.theta_rescale_check(H1, Hth, t=1.0))
th2 = 0.3
lat_th2 = lt.PeriodicLattice(128, 60.0 * th2 ** (-1.0 / (2 * 0.5)))
Hfree1 = lt.build_hamiltonian(lat, P_HALF, zero_potential(), M=1.0)
Hfree_th = lt.build_hamiltonian(lat_th2, P_HALF, zero_potential(), theta=th2, M=1.0)
print("theta=0.3 free:", lt.theta_rescale_check(Hfree1, Hfree_th, t=0.8))
# alpha=1 variant
lat_a1 = lt.PeriodicLattice(128, 60.0 * 0.25 ** (-1.0 / 2.0))
H1_a1 = lt.build_hamiltonian(lat, P_ONE, neg, theta=1.0, M=1.0)
Hth_a1 = lt.build_hamiltonian(lat_a1, P_ONE, neg, theta=0.25, M=1.0)
print("theta=1/4 box alpha=1, t=1:", lt.theta_rescale_check(H1_a1, Hth_a1, t=1.0))

# --- 4. Gamma quadrature vs spectral
rng = np.random.default_rng(0)
B = rng.standard_normal((16, 16))
A = 0.5 * (B + B.T)
lam_a = np.linalg.eigvalsh(A)
for lam_exp in (0.6, 0.8, 1.5, 2.0):
    M = 1.0 + abs(lam_a[0])
    G = lt.matrix_power_via_gamma(A, M, lam_exp)
    lam, vec = np.linalg.eigh(A)
    S = (vec * (lam + M) ** (-lam_exp)) @ vec.T
    print(f"gamma vs spectral 16x16 lam={lam_exp}:", np.abs(G - S).max() / np.abs(S).max())
# lattice-scale shifts
shifts = np.sort(H0h.eigenvalues) + 1.0
for s in (0.6, 0.75, 2.0):
    qv = lt._power_quad(s, shifts)
    import math
    exact = math.gamma(s) * shifts ** (-s)
    print(f"_power_quad s={s} lattice shifts rel:", np.abs(qv / math.gamma(s) - shifts ** (-s)).max() / (shifts ** (-s)).max())

# --- 5. dyadic
dec = lt.dyadic_pieces(0.75, 2.0, 8)
lamg = np.linspace(0.0, 2.0 ** 7, 8193)
print("partition gap:", np.abs(dec.partition_sum(lamg) - 1.0).max())
out = np.concatenate([np.linspace(0, 0.5, 4001), np.linspace(2.0, 10.0, 4001)])
print("leak:", max(np.abs(dec.f_k(k, out)).max() for k in range(1, 9)))
u = np.linspace(0.4, 2.1, 20001)
du = u[1] - u[0]
for j in range(3):
    scaled = []
    for k in range(2, 9):
        vals = dec.f_k(k, u)
        d = vals.copy()
        for _ in range(j):
            d = np.gradient(d, du)
        scaled.append(np.abs(d).max() * 2.0 ** (0.75 * k))
    scaled = np.array(scaled)
    print(f"deriv j={j} scaled max/min:", scaled.max() / scaled.min(), scaled)

# --- 6. smoothing norms: p=2 t-independence + AC10 slope
lat2 = lt.PeriodicLattice(128, 60.0)
Hb = lt.build_hamiltonian(lat2, P_HALF, neg, M=1.0)
v2 = [lt.propagator_smoothing_norm(Hb, t, 0.6, 2.0) for t in (0.0, 1.0, 7.0)]
exact2 = (Hb.eigenvalues[0] + 1.0) ** -0.6
print("p=2 norms:", v2, "exact:", exact2, "spread:", max(v2) - min(v2))
t1 = time.time()
latL = lt.PeriodicLattice(512, 512.0)
Hfree = lt.build_hamiltonian(latL, P_ONE, zero_potential(), M=1.0)
tsw = np.geomspace(1.0, 100.0, 12)
samples = [(t, lt.propagator_smoothing_norm(Hfree, t, 0.6, 1.0)) for t in tsw]
fit = lt.growth_fit(samples, P_ONE, 1.0, 0.6)
print("AC10 slope:", fit.gamma_fit, "n_p:", fit.n_p, "residual:", fit.residual,
      "prefactor:", fit.prefactor, f"({time.time()-t1:.1f}s)")

# --- 7. amalgam basics + K0 stability
latA = lt.PeriodicLattice(256, 16.0)
one_cell = np.zeros(256)
one_cell[16:32] = np.linspace(-1.0, 2.0, 16)
l2 = np.sqrt(latA.dx * (one_cell ** 2).sum())
print("single cell p=1 q=2:", lt.amalgam_norm(one_cell, latA, 1.0, 1.0, 2.0), "plain L2:", l2)
constv = np.full(256, 0.7)
print("const q=inf p=1:", lt.amalgam_norm(constv, latA, 1.0, 1.0, np.inf), "expect", 16 * 0.7)
for NN, LL in ((512, 32.0), (1024, 64.0)):
    latK = lt.PeriodicLattice(NN, LL)
    HK = lt.build_hamiltonian(latK, P_HALF, zero_potential(), M=1.0)
    K = lt.heat_kernel_matrix(HK, 1.0)
    val = lt.amalgam_norm(K[:, 0], latK, 1.0, 1.0, 2.0)
    print(f"K0(1,.) amalgam N={NN} L={LL}:", repr(val))

# --- 8. verify_41
rep0 = lt.verify_41(P_HALF, zero_potential(), p=2.0, N=128, L=64.0)
print("verify_41 free:", rep0)
repb = lt.verify_41(P_HALF, neg, p=2.0, N=128, L=64.0)
print("verify_41 box p=2:", repb)
repb1 = lt.verify_41(P_HALF, neg, p=1.0, N=128, L=64.0)
print("verify_41 box p=1:", repb1)
# small-t p=2 slope ~ -n/4alpha = -0.5 for alpha=1/2
latS = lt.PeriodicLattice(512, 64.0)
HS = lt.build_hamiltonian(latS, P_HALF, zero_potential(), M=1.0)
ts_small = np.geomspace(0.01, 0.1, 7)
norms = [lt.heat_amalgam_norm(HS, t, 2.0) for t in ts_small]
slope = np.polyfit(np.log(ts_small), np.log(norms), 1)[0]
print("small-t amalgam slope (expect -0.5):", slope)

# --- 9. assemble_thm12
t2 = time.time()
est_inf = lt.assemble_thm12(Hfree, 0.6, None, tsw, p=np.inf)
print("assemble free p=inf gamma:", est_inf.gamma_fit, "n_p:", est_inf.n_p, f"({time.time()-t2:.1f}s)")
Hbox = lt.build_hamiltonian(lat2, P_HALF, neg, M=None)
est_b = lt.assemble_thm12(Hbox, 0.75, 0.75, np.geomspace(1.0, 100.0, 12), p=1.0)
print("assemble box p=1 beta=0.75 slope:", est_b.gamma_fit, "prefactor:", est_b.prefactor,
      "M used:", Hbox.M)

# --- 10. resolvent_power_amalgam
print("res p=q=2 lam=2:", lt.resolvent_power_amalgam(Hb, 2.0, 2.0, 2.0),
      "exact:", (Hb.eigenvalues[0] + Hb.M) ** -2.0)
vals_theta = []
for th in (1.0, 0.5, 0.25):
    latT = lt.PeriodicLattice(128, 60.0)
    HT = lt.build_hamiltonian(latT, P_HALF, neg, theta=th, M=2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        vals_theta.append(lt.resolvent_power_amalgam(HT, 0.75, 1.0, 2.0))
print("theta sweep resolvent amalgams:", vals_theta, "ratio:", max(vals_theta) / min(vals_theta))
with warnings.catch_warnings(record=True) as wlist:
    warnings.simplefilter("always")
    lt.resolvent_power_amalgam(Hb, 0.2, 1.0, 2.0)
    print("threshold warning fired:", len(wlist) == 1, str(wlist[0].message)[:60] if wlist else "")

# --- 11. lattice-continuum gap
t3 = time.time()
rep = lt.lattice_continuum_error(P_HALF)
print("lattice-continuum (N=512, L=80):", rep, f"({time.time()-t3:.1f}s)")
rep8 = lt.lattice_continuum_error(P_HALF, N=256, L=40.0, t_sweep=np.geomspace(0.1, 1.0, 7))
print("AC8 config (N=256, L=40, t<=1):", rep8)

# --- 12. growth_fit synthetic + np_exponent duality
ts = np.geomspace(1.0, 200.0, 10)
f0 = lt.growth_fit([(t, 3.7) for t in ts], P_HALF, 2.0, 0.6)
print("const slope:", f0.gamma_fit)
f1 = lt.growth_fit([(t, 2.0 * (1 + t) ** 0.5) for t in ts], P_HALF, 1.0, 0.6)
print("sqrt slope:", f1.gamma_fit, "pref:", f1.prefactor)
print("np duality:", lt.np_exponent(1, 1.0), lt.np_exponent(1, np.inf),
      lt.np_exponent(1, 2.0), lt.np_exponent(1, 4.0), lt.np_exponent(1, 4.0 / 3.0))

print("total", time.time() - t0, "s")
