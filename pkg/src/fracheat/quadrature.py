"""One-dimensional quadrature, Bessel evaluation, and DFT contracts.

Everything downstream (kernel sweeps, Kato integrals, resolvent transforms)
reduces to one-dimensional integrals before it reaches this module.  The
only genuinely delicate job here is ``oscillatory_bessel_integral``: the
inverse Fourier transform of e^{-t|xi|^{2a}} has an algebraically damped,
oscillating radial integrand for fractional a, and naive adaptive quadrature
dies on it.  The standard cure is implemented: split the axis at consecutive
Bessel zeros and accelerate the alternating partial sums (Wynn's epsilon
algorithm).

Adaptive non-oscillatory work is delegated to QUADPACK via scipy; endpoint
power singularities must be declared by the caller and are removed by a
graded (power) substitution before QUADPACK sees the integrand.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as _sciint
from scipy import special as _special

__all__ = [
    "QuadratureSpec",
    "ErrorEstimate",
    "RadialGrid",
    "QuadratureError",
    "integrate",
    "bessel_j",
    "bessel_zeros",
    "oscillatory_bessel_integral",
    "dft_1d",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerance and scheme knobs shared by all quadrature entry points.

    tail_cutoff marks where the caller promises the integrand has no
    structure other than smooth decay and oscillation; beyond it the
    oscillatory routine switches to zero-split segments with series
    acceleration.
    """

    scheme_id: str = "adaptive_gk"
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 200
    tail_cutoff: float = 50.0

    def __post_init__(self) -> None:
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if self.scheme_id not in ("adaptive_gk",):
            raise ValueError(f"unknown scheme_id {self.scheme_id!r}")


DEFAULT_SPEC = QuadratureSpec()


@dataclass(frozen=True)
class ErrorEstimate:
    abs_err: float
    rel_err: float
    converged: bool

    def __post_init__(self) -> None:
        if self.abs_err < 0 or self.rel_err < 0:
            raise ValueError("error estimates must be nonnegative")


@dataclass(frozen=True)
class RadialGrid:
    """Values of a radial function sampled at |x| = radii (dimension dim)."""

    radii: np.ndarray
    values: np.ndarray
    dim: int

    def __post_init__(self) -> None:
        radii = np.asarray(self.radii, dtype=float)
        values = np.asarray(self.values)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "values", values)
        if radii.ndim != 1 or values.shape[0] != radii.shape[0]:
            raise ValueError("radii and values must be aligned 1-d arrays")
        if radii.size and (radii[0] < 0 or np.any(np.diff(radii) <= 0)):
            raise ValueError("radii must be strictly increasing and nonnegative")
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")


class QuadratureError(RuntimeError):
    """Non-convergence; carries the partial value and its error estimate."""

    def __init__(self, message: str, value: float | complex = np.nan,
                 estimate: ErrorEstimate | None = None):
        super().__init__(message)
        self.value = value
        self.estimate = estimate or ErrorEstimate(np.inf, np.inf, False)


def _estimate(value: float, abs_err: float, spec: QuadratureSpec) -> ErrorEstimate:
    rel = abs_err / abs(value) if value != 0 else np.inf
    ok = abs_err <= spec.abs_tol or rel <= spec.rel_tol
    return ErrorEstimate(abs_err, rel, ok)


def _graded_substitution(f, a: float, exponent: float):
    """Map f with an (x-a)^exponent endpoint singularity to a bounded integrand.

    x = a + u^k with integer k >= 1/(1+exponent) turns (x-a)^p dx into
    k u^{p k + k - 1} du with nonnegative power, i.e. a graded mesh near a.
    """
    if exponent <= -1:
        raise ValueError("endpoint exponent must be > -1 (integrable)")
    k = max(1, int(np.ceil(1.0 / (1.0 + exponent))) + 1)

    def g(u):
        return k * u ** (k - 1) * f(a + u ** k)

    return g, k


def integrate(f, a: float, b: float, spec: QuadratureSpec | None = None,
              singular_a: float | None = None,
              singular_b: float | None = None) -> tuple[float, ErrorEstimate]:
    """Adaptive quadrature of f over (a, b); b may be +infinity.

    Integrable endpoint singularities must be declared as power-law
    exponents (f ~ (x-a)^singular_a near a, similarly at finite b); they
    are removed by a power substitution, which is equivalent to running
    the adaptive scheme on a mesh graded toward the endpoint.

    Returns (value, ErrorEstimate).  Raises QuadratureError on
    non-convergence, with the partial value attached.
    """
    spec = spec or DEFAULT_SPEC
    if singular_b is not None and not np.isfinite(b):
        raise ValueError("singular_b requires a finite upper endpoint")

    lo, hi = a, b
    g = f
    if singular_a is not None and singular_a != 0:
        if singular_b is not None:
            # split in the middle, handle each endpoint separately
            mid = 0.5 * (a + b)
            v1, e1 = integrate(f, a, mid, spec, singular_a=singular_a)
            v2, e2 = integrate(f, mid, b, spec, singular_b=singular_b)
            err = e1.abs_err + e2.abs_err
            return v1 + v2, _estimate(v1 + v2, err, spec)
        g, k = _graded_substitution(f, a, singular_a)
        lo = 0.0
        hi = (b - a) ** (1.0 / k) if np.isfinite(b) else np.inf
    elif singular_b is not None and singular_b != 0:
        g_rev, k = _graded_substitution(lambda x: f(b - (x - 0.0)), 0.0, singular_b)
        # reverse orientation: int_a^b f = int_0^{(b-a)^{1/k}} g_rev
        g = g_rev
        lo, hi = 0.0, (b - a) ** (1.0 / k)

    with warnings.catch_warnings():
        warnings.simplefilter("error", _sciint.IntegrationWarning)
        try:
            value, abs_err = _sciint.quad(
                g, lo, hi, limit=spec.max_subdivisions,
                epsabs=spec.abs_tol, epsrel=spec.rel_tol)
        except _sciint.IntegrationWarning as w:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                value, abs_err = _sciint.quad(
                    g, lo, hi, limit=spec.max_subdivisions,
                    epsabs=spec.abs_tol, epsrel=spec.rel_tol)
            est = _estimate(value, abs_err, spec)
            if not est.converged:
                raise QuadratureError(
                    f"quadrature did not converge after "
                    f"{spec.max_subdivisions} subdivisions: {w}",
                    value=value, estimate=est) from None
            return value, est
    return value, _estimate(value, abs_err, spec)


def bessel_j(nu: float, x) -> float | np.ndarray:
    """Bessel function of the first kind J_nu(x), nu >= -1/2, x >= 0."""
    if nu < -0.5:
        raise ValueError("order nu must be >= -1/2")
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0):
        raise ValueError("argument x must be nonnegative")
    out = _special.jv(nu, x_arr)
    return float(out) if np.isscalar(x) or x_arr.ndim == 0 else out


_zero_cache: dict[float, np.ndarray] = {}


def bessel_zeros(nu: float, count: int) -> np.ndarray:
    """First `count` positive zeros of J_nu, McMahon guess + brentq polish."""
    if nu < -0.5:
        raise ValueError("order nu must be >= -1/2")
    nu = float(nu)
    cached = _zero_cache.get(nu)
    if cached is not None and cached.size >= count:
        return cached[:count]

    from scipy.optimize import brentq

    zeros = list(cached) if cached is not None else []
    k = len(zeros)
    while len(zeros) < count:
        k += 1
        beta = (k + 0.5 * nu - 0.25) * np.pi
        mu = 4.0 * nu * nu
        guess = beta - (mu - 1) / (8 * beta)
        lo, hi = guess - 0.5 * np.pi, guess + 0.5 * np.pi
        if zeros:
            lo = max(lo, zeros[-1] + 1e-9)
        lo = max(lo, 1e-9)
        flo, fhi = _special.jv(nu, lo), _special.jv(nu, hi)
        # widen until bracketed; McMahon is already close for k >= 1
        tries = 0
        while flo * fhi > 0 and tries < 60:
            hi += 0.25 * np.pi
            fhi = _special.jv(nu, hi)
            tries += 1
        zeros.append(brentq(lambda s: _special.jv(nu, s), lo, hi, xtol=1e-14, rtol=1e-15))
    arr = np.asarray(zeros)
    _zero_cache[nu] = arr
    return arr[:count]


def _wynn_epsilon(s: np.ndarray) -> tuple[float, float]:
    """Wynn epsilon acceleration of the partial-sum sequence s.

    Returns (best estimate, residual), residual being the spread between
    the last two entries of the most converged even column.  When adjacent
    entries of an even column agree to machine precision the recursion has
    broken down because the limit is already found; recursing further would
    divide by rounding noise, so that entry is returned with zero residual.
    """
    n = len(s)
    if n == 1:
        return float(s[0]), np.inf
    eps_prev = np.zeros(n + 1)                 # epsilon_{-1} column
    eps_curr = np.asarray(s, dtype=float)      # epsilon_0 column
    best = float(eps_curr[-1])
    resid = abs(eps_curr[-1] - eps_curr[-2])
    col = 0
    while len(eps_curr) >= 2:
        diff = np.diff(eps_curr)
        floor = 1e-16 * np.maximum(np.abs(eps_curr[:-1]),
                                   np.abs(eps_curr[1:])) + 1e-300
        stuck = np.abs(diff) <= floor
        if stuck.any():
            if col % 2 == 0:
                j = int(np.argmax(stuck))
                best, resid = float(eps_curr[j]), 0.0
            break
        eps_next = eps_prev[1:len(eps_curr)] + 1.0 / diff
        eps_prev, eps_curr = eps_curr, eps_next
        col += 1
        if col % 2 == 0 and len(eps_curr) >= 2:
            cand_res = abs(eps_curr[-1] - eps_curr[-2])
            if cand_res < resid:
                best, resid = float(eps_curr[-1]), cand_res
    return best, resid


_GL_NODES_LO, _GL_WEIGHTS_LO = np.polynomial.legendre.leggauss(15)
_GL_NODES_HI, _GL_WEIGHTS_HI = np.polynomial.legendre.leggauss(21)


def _gl_segments(func, edges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Integrate func over each [edges[i], edges[i+1]] with two GL orders.

    Returns (per-segment values at order 21, per-segment |order21-order15|).
    func must accept numpy arrays.
    """
    a, b = edges[:-1], edges[1:]
    mid = 0.5 * (a + b)[:, None]
    half = 0.5 * (b - a)[:, None]
    x_hi = mid + half * _GL_NODES_HI[None, :]
    f_hi = func(x_hi)
    v_hi = (f_hi * _GL_WEIGHTS_HI[None, :]).sum(axis=1) * half[:, 0]
    x_lo = mid + half * _GL_NODES_LO[None, :]
    f_lo = func(x_lo)
    v_lo = (f_lo * _GL_WEIGHTS_LO[None, :]).sum(axis=1) * half[:, 0]
    return v_hi, np.abs(v_hi - v_lo)


def oscillatory_bessel_integral(g, nu: float, omega: float,
                                spec: QuadratureSpec | None = None
                                ) -> tuple[float | complex, ErrorEstimate]:
    """Evaluate int_0^infty g(r) J_nu(omega r) dr for decaying g.

    The axis is partitioned at the scaled Bessel zeros z_k/omega beyond
    spec.tail_cutoff, and Wynn's epsilon algorithm accelerates the
    alternating partial sums of the segment contributions; the error
    estimate combines segment quadrature error with the acceleration
    residual.  Below the cutoff the same zero-split segments are summed
    directly (no sign alternation can be assumed there since g may still
    vary), with an adaptive head on [0, first zero].

    g must be vectorized over numpy arrays; complex values are allowed
    (real and imaginary parts share the Bessel weight).
    """
    spec = spec or DEFAULT_SPEC
    if omega <= 0:
        raise ValueError("omega must be positive")
    if nu < -0.5:
        raise ValueError("order nu must be >= -1/2")

    def weighted(r):
        return g(r) * _special.jv(nu, omega * r)

    probe = np.asarray(weighted(np.asarray([0.5 * spec.tail_cutoff])))
    is_complex = np.iscomplexobj(probe)

    def quad_piece(lo, hi):
        if is_complex:
            vr, er = integrate(lambda r: np.real(weighted(r)), lo, hi, spec)
            vi, ei = integrate(lambda r: np.imag(weighted(r)), lo, hi, spec)
            return vr + 1j * vi, er.abs_err + ei.abs_err
        v, e = integrate(weighted, lo, hi, spec)
        return v, e.abs_err

    block = 64
    zeros = bessel_zeros(nu, block)
    first_knot = zeros[0] / omega

    # head: adaptive quadrature up to the first zero (or the cutoff if the
    # first zero lies absurdly far out, as happens for omega -> 0+)
    head_end = min(first_knot, max(spec.tail_cutoff, 1.0))
    value, abs_err = quad_piece(0.0, head_end)

    if head_end < first_knot:
        # no zeros before the cutoff: continue with geometrically growing
        # panels over the oscillation-free stretch
        lo = head_end
        for _ in range(200):
            if lo >= first_knot:
                break
            hi = min(2.0 * lo, first_knot)
            v, e = quad_piece(lo, hi)
            value += v
            abs_err += e
            if abs(v) < 0.01 * spec.abs_tol and hi < first_knot:
                # decayed to nothing; remaining mass is negligible
                lo = first_knot
                break
            lo = hi

    # zero-split segments from the first zero on
    max_segments = 2048
    tail_sum = 0.0 + 0.0j if is_complex else 0.0
    partial: list = []
    seg_err = 0.0
    accel_value = None
    accel_resid = np.inf
    done = False
    k0 = 0
    while k0 < max_segments and not done:
        if len(zeros) < k0 + block + 1:
            zeros = bessel_zeros(nu, len(zeros) + block)
        edges = zeros[k0:k0 + block + 1] / omega
        below = edges <= spec.tail_cutoff
        if below.all() and k0 + block < max_segments:
            v, dv = _gl_segments(weighted, edges)
            tail_sum += v.sum()
            seg_err += dv.sum()
            k0 += block
            continue
        v, dv = _gl_segments(weighted, edges)
        seg_err += dv.sum()
        for sv in v:
            tail_sum += sv
            partial.append(tail_sum)
        k0 += block
        if len(partial) >= 6:
            if is_complex:
                re_best, re_res = _wynn_epsilon(np.real(partial))
                im_best, im_res = _wynn_epsilon(np.imag(partial))
                accel_value, accel_resid = re_best + 1j * im_best, re_res + im_res
            else:
                accel_value, accel_resid = _wynn_epsilon(np.asarray(partial))
            scale = max(abs(value + accel_value), 1.0e-300)
            if accel_resid <= max(spec.abs_tol, spec.rel_tol * scale):
                done = True
        # fast exit when the integrand has simply died
        if len(partial) >= 3 and all(
                abs(partial[-i] - partial[-i - 1]) < 0.01 * spec.abs_tol
                for i in (1, 2)):
            accel_value = partial[-1]
            accel_resid = abs(partial[-1] - partial[-3])
            done = True

    if accel_value is None:
        accel_value = tail_sum if partial or k0 else 0.0
        accel_resid = 0.0 if not partial else np.inf

    total = value + accel_value
    total_err = abs_err + seg_err + (0.0 if accel_resid is np.inf else accel_resid)
    est = _estimate(abs(total), total_err, spec)
    if not done and partial and accel_resid > max(spec.abs_tol, spec.rel_tol * abs(total)):
        last3 = [complex(p) if is_complex else float(p) for p in partial[-3:]]
        raise QuadratureError(
            f"oscillatory integral did not converge after {k0} Bessel-zero "
            f"segments; last partial sums: {last3}",
            value=total, estimate=ErrorEstimate(total_err, np.inf, False))
    if is_complex:
        return complex(total), est
    return float(np.real(total)), est


def dft_1d(values, direction: str) -> np.ndarray:
    """Unitary discrete Fourier transform (forward) or its inverse."""
    v = np.asarray(values, dtype=complex)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("values must be a nonempty 1-d sequence")
    if direction == "forward":
        return np.fft.fft(v, norm="ortho")
    if direction == "inverse":
        return np.fft.ifft(v, norm="ortho")
    raise ValueError("direction must be 'forward' or 'inverse'")
