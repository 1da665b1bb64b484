"""Numeric transfer-matrix spectra and zero hunting.

Work happens in the rescaled variable z = 1/lambda.  The matrix
M_z[S,T] = z^{||S||} A[S,T] has exactly two nonzero eigenvalues at z = 0,
equal to +1 and -1; their analytic continuations q^{+-}(z) are tracked by
homotopy along the segment [0, z] with adaptive step halving.  Zeros of
Z(C_n box T; lambda) with large |lambda| are located by Newton iteration
on h(z) = 1 + beta(z)^n + Q(z), seeded where the exact series inverse of
beta hits the n-th roots of -1 near -1, and certified by a high-precision
residual of the normalized trace.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    NoConvergenceError,
    SeedNotOnCurveError,
    TrackingFailureError,
    ValidationError,
)
from .lattice import IndSetFamily
from . import qseries as _qseries

_EPS = 2.2e-16


@dataclass(frozen=True)
class TransferMatrix:
    fam: IndSetFamily
    z: complex
    entries: object  # dense complex ndarray


def build_matrix(fam: IndSetFamily, z: complex) -> TransferMatrix:
    """M_z = D-hat_z A with row S scaled by z^{||S||}."""
    defect = np.array(fam.defects())
    n = len(fam.sets)
    a = np.zeros((n, n))
    for i, s in enumerate(fam.sets):
        for j, t in enumerate(fam.sets):
            if s & t == 0:
                a[i, j] = 1.0
    scale = np.power(complex(z), defect)
    return TransferMatrix(fam, complex(z), scale[:, None] * a)


def symmetric_matrix(fam: IndSetFamily, z: complex):
    """Symmetric variant D_{sqrt z} A D_{sqrt z} with S_even, S_odd moved last.

    Principal branch of the square root; returns (matrix, index_order).
    """
    n = len(fam.sets)
    order = [i for i in range(n) if i not in (fam.index_even, fam.index_odd)]
    order += [fam.index_even, fam.index_odd]
    root = cmath.sqrt(complex(z))
    half = np.power(root, [fam.defect(i) for i in order])
    a = np.zeros((n, n))
    for oi, i in enumerate(order):
        for oj, j in enumerate(order):
            if fam.sets[i] & fam.sets[j] == 0:
                a[oi, oj] = 1.0
    return half[:, None] * a * half[None, :], order


@dataclass(frozen=True)
class SpectrumTrack:
    """All eigenvalues of M_z with the continued q^{+-} pair labeled."""

    z: complex
    eigenvalues: tuple
    labels: tuple  # "qplus" | "qminus" | "bulk" per eigenvalue
    qplus_val: complex
    qminus_val: complex

    def bulk(self):
        return [s for s, l in zip(self.eigenvalues, self.labels) if l == "bulk"]


def _eigvals(fam, z):
    return np.linalg.eigvals(build_matrix(fam, z).entries)


def _match_pair(ev, qp, qm):
    """Indices of the eigenvalues nearest to the tracked q+ and q- values."""
    d_p = np.abs(ev - qp)
    d_m = np.abs(ev - qm)
    ip = int(np.argmin(d_p))
    im = int(np.argmin(d_m))
    if ip == im:
        # resolve the tie by assigning the second-best to the worse fit
        if d_p[ip] <= d_m[im]:
            d_m[im] = np.inf
            im = int(np.argmin(d_m))
        else:
            d_p[ip] = np.inf
            ip = int(np.argmin(d_p))
    return ip, im


def _continue_pair(fam, z_from, qp, qm, z_to, min_step=1e-12):
    """Continue the (q+, q-) pair from z_from to z_to along the segment."""
    s = 0.0
    h = 1.0
    while s < 1.0:
        s_next = min(1.0, s + h)
        z = z_from + (z_to - z_from) * s_next
        ev = _eigvals(fam, z)
        ip, im = _match_pair(ev, qp, qm)
        ok = True
        for idx, prev in ((ip, qp), (im, qm)):
            others = np.abs(ev - ev[idx])
            others[idx] = np.inf
            gap = others.min()
            if abs(ev[idx] - prev) > 0.5 * gap:
                ok = False
                break
        if ok:
            qp, qm = complex(ev[ip]), complex(ev[im])
            s = s_next
            h = min(1.0, h * 1.5)
        else:
            h *= 0.5
            if h < min_step:
                raise TrackingFailureError(
                    f"eigenvalue continuation stalled near z = {z_from + (z_to - z_from) * s}"
                )
    return qp, qm


def spectrum(fam: IndSetFamily, z: complex, start=None) -> SpectrumTrack:
    """Eigenvalues of M_z with q^{+-} identified by homotopy from z = 0.

    ``start`` may be a previous (z0, qplus, qminus) triple to warm-start the
    continuation from z0 instead of from the origin.
    """
    if fam.alpha is None:
        raise ValidationError("spectrum needs a torus family")
    z = complex(z)
    if start is None:
        z0, qp, qm = 0.0, 1.0 + 0j, -1.0 + 0j
    else:
        z0, qp, qm = start
    if z != z0:
        qp, qm = _continue_pair(fam, z0, qp, qm, z)
    ev = _eigvals(fam, z)
    ip, im = _match_pair(ev, qp, qm)
    labels = ["bulk"] * len(ev)
    labels[ip] = "qplus"
    labels[im] = "qminus"
    return SpectrumTrack(
        z=z,
        eigenvalues=tuple(complex(s) for s in ev),
        labels=tuple(labels),
        qplus_val=complex(ev[ip]),
        qminus_val=complex(ev[im]),
    )


def beta(fam: IndSetFamily, z: complex, start=None) -> complex:
    """beta(z) = q^-(z) / q^+(z)."""
    tr = spectrum(fam, z, start=start)
    if tr.qplus_val == 0:
        raise TrackingFailureError("q+ vanished; beta undefined")
    return tr.qminus_val / tr.qplus_val


# ----------------------------------------------------------------------
# High-precision evaluation (mpmath) for certification
# ----------------------------------------------------------------------


def _mp_context(dps):
    import mpmath

    mp = mpmath.mp.clone()
    mp.dps = dps
    return mpmath, mp


def _mp_eigenvalues(fam, z, dps=30):
    mpmath, mp = _mp_context(dps)
    n = len(fam.sets)
    defect = fam.defects()
    zz = mp.mpc(z.real, z.imag) if isinstance(z, complex) else mp.mpmathify(z)
    m = mp.matrix(n, n)
    powers = [zz**k for k in range(max(defect) + 1)]
    for i, s in enumerate(fam.sets):
        for j, t in enumerate(fam.sets):
            if s & t == 0:
                m[i, j] = powers[defect[i]]
    return mp, mp.eig(m, left=False, right=False)


def spectrum_mp(fam: IndSetFamily, z: complex, dps=30, anchor=None):
    """High-precision eigenvalues with the q pair matched against an anchor.

    The anchor defaults to the double-precision tracked pair at the same z.
    Returns (qplus, qminus, bulk_list) as mpmath complex numbers.
    """
    if anchor is None:
        tr = spectrum(fam, z)
        anchor = (tr.qplus_val, tr.qminus_val)
    mp, ev = _mp_eigenvalues(fam, z, dps=dps)
    qp_ref, qm_ref = anchor
    d_p = [abs(s - mp.mpc(qp_ref.real, qp_ref.imag)) for s in ev]
    d_m = [abs(s - mp.mpc(qm_ref.real, qm_ref.imag)) for s in ev]
    ip = min(range(len(ev)), key=lambda i: d_p[i])
    im = min(range(len(ev)), key=lambda i: d_m[i])
    if ip == im:
        raise TrackingFailureError("high-precision pair matching collided")
    bulk = [s for i, s in enumerate(ev) if i not in (ip, im)]
    return ev[ip], ev[im], bulk


def trace_residual(fam: IndSetFamily, z: complex, n: int, dps=30) -> float:
    """|Tr(M_z^n)| / max_s |s|^n evaluated at dps digits (overflow-free)."""
    mp, ev = _mp_eigenvalues(fam, z, dps=dps)
    mags = [abs(s) for s in ev]
    smax = max(mags)
    if smax == 0:
        return 0.0
    acc = mp.mpc(0)
    for s in ev:
        if abs(s) == 0:
            continue
        acc += mp.exp(n * (mp.log(s) - mp.log(smax)))
    return float(abs(acc))


# ----------------------------------------------------------------------
# Zero search
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class FoundZero:
    lam: complex
    residual: float
    method: str  # "newton" | "oracle"


def _pow_n(b: complex, n: int) -> complex:
    """b**n in log domain; huge magnitudes saturate instead of overflowing."""
    if b == 0:
        return 0.0 + 0j
    w = n * cmath.log(b)
    if w.real > 700.0:
        return cmath.rect(1e300, w.imag)
    if w.real < -700.0:
        return 0.0 + 0j
    return cmath.exp(w)


class _BetaChain:
    """Warm-started beta/h evaluations sharing one continuation state."""

    def __init__(self, fam, n):
        self.fam = fam
        self.n = n
        self.state = (0.0 + 0j, 1.0 + 0j, -1.0 + 0j)

    def spectrum(self, z):
        z0, qp, qm = self.state
        tr = spectrum(self.fam, z, start=(z0, qp, qm))
        self.state = (z, tr.qplus_val, tr.qminus_val)
        return tr

    def beta(self, z):
        tr = self.spectrum(z)
        return tr.qminus_val / tr.qplus_val

    def h(self, z):
        tr = self.spectrum(z)
        b = tr.qminus_val / tr.qplus_val
        q = 0.0 + 0j
        for s in tr.bulk():
            q += _pow_n(s / tr.qplus_val, self.n)
        return 1.0 + _pow_n(b, self.n) + q


def _newton(f, z0, target=0.0, tol=1e-13, max_iter=40, rel_step=1e-7):
    """Newton iteration with a numerically differentiated derivative."""
    z = complex(z0)
    for _ in range(max_iter):
        val = f(z) - target
        if abs(val) <= tol:
            return z
        d = rel_step * max(abs(z), 1e-300)
        der = (f(z + d) - f(z - d)) / (2 * d)
        if der == 0:
            raise NoConvergenceError("vanishing derivative in Newton step")
        step = val / der
        z = z - step
        if abs(step) <= 1e-16 * max(abs(z), 1e-300):
            val = f(z) - target
            if abs(val) <= tol * 10:
                return z
    val = f(z) - target
    if abs(val) <= tol:
        return z
    raise NoConvergenceError(f"Newton did not reach |f|<{tol:g} (final {abs(val):g})")


def _mp_refine_beta(fam, z, n, k, dps=40, iters=4):
    """Refine the solution of beta(z) = zeta_k at high precision.

    The target is rebuilt as exp(i pi (2k+1)/n) at working precision; a
    double-precision zeta would miss being an exact n-th root of -1 by
    O(n * eps), which would dominate the certified residual.
    """
    mpmath, mp = _mp_context(dps)
    zz = mp.mpc(z.real, z.imag)
    target = mp.exp(1j * mp.pi * mp.mpf(2 * k + 1) / n)

    # anchor once in double to avoid re-tracking every call
    tr = spectrum(fam, complex(z))
    anchor = (tr.qplus_val, tr.qminus_val)

    def bval_fast(w):
        qp, qm, _ = spectrum_mp(fam, w, dps=dps, anchor=anchor)
        return qm / qp

    for _ in range(iters):
        val = bval_fast(zz) - target
        d = mp.mpf(10) ** (-dps // 2) * max(abs(zz), mp.mpf(10) ** -30)
        der = (bval_fast(zz + d) - bval_fast(zz - d)) / (2 * d)
        if der == 0:
            break
        zz = zz - val / der
    return complex(zz.real, zz.imag)


def _mp_refine_h(fam, z, n, dps=40, iters=6):
    """Refine a root of h(z) = 1 + beta^n + Q at high precision (small n)."""
    mpmath, mp = _mp_context(dps)
    tr = spectrum(fam, complex(z))
    anchor = (tr.qplus_val, tr.qminus_val)

    def hval(w):
        qp, qm, bulk = spectrum_mp(fam, w, dps=dps, anchor=anchor)
        acc = 1 + (qm / qp) ** n
        for s in bulk:
            if s != 0:
                acc += mp.exp(n * (mp.log(s) - mp.log(qp)))
        return acc

    zz = mp.mpc(z.real, z.imag)
    for _ in range(iters):
        val = hval(zz)
        d = mp.mpf(10) ** (-dps // 2) * max(abs(zz), mp.mpf(10) ** -30)
        der = (hval(zz + d) - hval(zz - d)) / (2 * d)
        if der == 0:
            break
        zz = zz - val / der
    return complex(zz.real, zz.imag)


def seed_targets(n: int, alpha: int, radius_inv: float):
    """n-th roots of -1 inside the sector S_rho, rho = radius_inv^alpha / 2.

    Returns (k, zeta) pairs with zeta = exp(i pi (2k+1)/n).
    """
    rho = 0.5 * radius_inv**alpha
    width = n * rho / 5.0
    center = (n - 1) / 2.0
    ks = range(math.ceil(center - width / 2.0), math.floor(center + width / 2.0) + 1)
    return [(k, cmath.exp(1j * math.pi * (2 * k + 1) / n)) for k in ks]


def zero_search(
    fam: IndSetFamily,
    n: int,
    radius: float,
    residual_tol: float = 1e-8,
    newton_tol: float = 1e-12,
    certify_dps: int = 40,
    threads: int = 1,
) -> list:
    """Zeros lambda of Z(C_n box T; lambda) with |lambda| >= radius.

    Newton iteration on h(z) = 1 + beta(z)^n + Q(z) seeded at the exact-series
    preimages of the n-th roots of -1 in the accumulation sector.  Every
    returned zero carries a high-precision normalized trace residual below
    residual_tol.  Seeds that fail to converge are skipped.  Seeds are
    independent, so they may be processed by a small thread pool; results are
    collected in seed order either way.
    """
    if radius <= 1.0:
        raise ValidationError("radius must exceed 1")
    if n < 3:
        raise ValidationError("need n >= 3")
    if fam.alpha is None:
        raise ValidationError("zero_search needs a torus family")
    alpha = fam.alpha
    n_sets = len(fam.sets)

    qs = _qseries.q_series(fam, alpha)
    a_series, _ = _qseries.a_b_split(qs.qplus, qs.qminus)
    a_alpha = a_series.coeff(alpha)
    if a_alpha <= 0:
        raise ValidationError("leading sum coefficient a_alpha must be positive")

    # phase-A tolerance on beta and the noise floor it induces on h = 1 + beta^n
    beta_tol = 1e-13
    tol_h = max(newton_tol, 10 * n * beta_tol)
    # below this, Q(z) cannot influence the root at certification accuracy
    q_negligible = n_sets * 0.5**n < 1e-25

    def hunt(seed):
        k, zeta = seed
        hits = []
        w = (zeta + 1.0) / (2.0 * float(a_alpha))
        for branch in range(alpha):
            z0 = w ** (1.0 / alpha) * cmath.exp(2j * math.pi * branch / alpha)
            if abs(z0) > 1.2 / radius or z0 == 0:
                continue
            chain = _BetaChain(fam, n)
            try:
                z1 = _newton(chain.beta, z0, target=zeta, tol=beta_tol)
                if not q_negligible:
                    z1 = _newton(chain.h, z1, tol=tol_h, max_iter=50)
                elif abs(chain.h(z1)) > tol_h:
                    raise NoConvergenceError("h residual above tolerance at beta preimage")
            except (NoConvergenceError, TrackingFailureError):
                continue
            if q_negligible:
                z2 = _mp_refine_beta(fam, z1, n, k, dps=certify_dps)
            else:
                z2 = _mp_refine_h(fam, z1, n, dps=certify_dps)
            if z2 == 0 or abs(z2) > 1.0 / radius:
                continue
            lam = 1.0 / z2
            res = trace_residual(fam, z2, n, dps=certify_dps)
            if res < residual_tol:
                hits.append(FoundZero(lam=lam, residual=res, method="newton"))
        return hits

    seeds = seed_targets(n, alpha, 1.0 / radius)
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            batches = list(pool.map(hunt, seeds))
    else:
        batches = [hunt(s) for s in seeds]
    found = [fz for batch in batches for fz in batch]

    # deduplicate
    unique = []
    for fz in sorted(found, key=lambda f: (f.lam.real, f.lam.imag)):
        if all(abs(fz.lam - u.lam) > 1e-9 * max(abs(fz.lam), 1.0) for u in unique):
            unique.append(fz)
    return unique


# ----------------------------------------------------------------------
# Equal-modulus curve tracing
# ----------------------------------------------------------------------


def _top_two(ev):
    order = np.argsort(-np.abs(ev))
    return int(order[0]), int(order[1])


def _track_two(ev, mu_a, mu_b):
    d_a = np.abs(ev - mu_a)
    d_b = np.abs(ev - mu_b)
    ia = int(np.argmin(d_a))
    ib = int(np.argmin(d_b))
    if ia == ib:
        if d_a[ia] <= d_b[ib]:
            d_b[ib] = np.inf
            ib = int(np.argmin(d_b))
        else:
            d_a[ia] = np.inf
            ia = int(np.argmin(d_a))
    return complex(ev[ia]), complex(ev[ib])


def equal_modulus_curve(
    fam: IndSetFamily,
    seed: complex,
    steps: int,
    step: float = 0.05,
    direction: int = +1,
    seed_tol: float = 1e-8,
) -> list:
    """Predictor-corrector polyline of z where the two top eigenvalue moduli tie.

    The two largest-modulus eigenvalues at the seed are tracked by nearest
    matching; the trace stops early when the corrector can no longer restore
    the tie (e.g. at a branch endpoint).  Returns the list of z points.
    """
    z = complex(seed)
    ev = _eigvals(fam, z)
    ia, ib = _top_two(ev)
    mu_a, mu_b = complex(ev[ia]), complex(ev[ib])
    scale = abs(mu_a)
    if scale == 0 or abs(abs(mu_a) - abs(mu_b)) > seed_tol * scale:
        raise SeedNotOnCurveError(
            f"top moduli differ by {abs(abs(mu_a) - abs(mu_b)):.3g} at the seed"
        )

    def f_and_grad(zz, ma, mb):
        d = 1e-6 * max(1.0, abs(zz))
        vals = {}
        for dz in (0, d, -d, 1j * d, -1j * d):
            e = _eigvals(fam, zz + dz)
            na, nb = _track_two(e, ma, mb)
            vals[dz] = (abs(na) - abs(nb), na, nb)
        f0, na0, nb0 = vals[0]
        gx = (vals[d][0] - vals[-d][0]) / (2 * d)
        gy = (vals[1j * d][0] - vals[-1j * d][0]) / (2 * d)
        return f0, gx, gy, na0, nb0

    def pair_is_maximal(zz, ma, mb):
        ev = _eigvals(fam, zz)
        if len(ev) <= 2:
            return True
        ia = int(np.argmin(np.abs(ev - ma)))
        rest = np.abs(np.delete(ev, ia))
        ib = int(np.argmin(np.abs(np.delete(ev, ia) - mb)))
        rest = np.delete(rest, ib)
        return min(abs(ma), abs(mb)) >= rest.max() * (1 - 1e-9)

    pts = [z]
    h = step
    corr_tol = 1e-9 * scale
    prev_tangent = None
    for _ in range(steps):
        f0, gx, gy, mu_a, mu_b = f_and_grad(z, mu_a, mu_b)
        gnorm = math.hypot(gx, gy)
        if gnorm == 0:
            break
        tangent = complex(-gy, gx) / gnorm
        if prev_tangent is None:
            tangent *= direction
        elif (tangent * prev_tangent.conjugate()).real < 0:
            tangent = -tangent
        advanced = False
        while h >= step * 2**-10:
            z_try, ma, mb = z + h * tangent, mu_a, mu_b
            ok = True
            for _ in range(8):
                f1, g1x, g1y, ma, mb = f_and_grad(z_try, ma, mb)
                g1n = math.hypot(g1x, g1y) ** 2
                if g1n == 0:
                    ok = False
                    break
                z_try = z_try - f1 * complex(g1x, g1y) / g1n
                if abs(f1) <= corr_tol:
                    break
            else:
                ok = abs(f1) <= corr_tol
            if ok and abs(f1) <= corr_tol and abs(z_try - z) <= 3 * h:
                advanced = True
                break
            h *= 0.5
        if not advanced or abs(z_try - z) < 1e-6 * step:
            break
        if not pair_is_maximal(z_try, ma, mb):
            break
        prev_tangent = tangent
        z, mu_a, mu_b = z_try, ma, mb
        pts.append(z)
        h = min(step, h * 1.5)
    return pts


def find_equal_modulus_seed(fam: IndSetFamily, re_lo: float, re_hi: float, im: float = 0.0, samples: int = 200):
    """Scan a horizontal line for a point where the top two moduli tie."""
    best = None
    for x in np.linspace(re_lo, re_hi, samples):
        z = complex(x, im)
        ev = _eigvals(fam, z)
        ia, ib = _top_two(ev)
        gap = abs(abs(ev[ia]) - abs(ev[ib])) / max(abs(ev[ia]), 1e-300)
        if best is None or gap < best[1]:
            best = (z, gap)
    if best is None or best[1] > 1e-8:
        raise SeedNotOnCurveError("no tie found on the scanned segment")
    return best[0]
