"""Exact integer power series of the two dominant transfer eigenvalues.

The rescaled transfer matrix M_z of an even torus cross-section has two
eigenvalues analytic at z = 0 with values +1 and -1.  Their Taylor
coefficients q_n^{+-} and eigenvector coefficient vectors v_n^{+-} satisfy
an integer recursion driven by the defect projectors Q_k and the
compatibility matrix A:

    v_n = q_0 * (sum_{k=1}^{min(n,alpha)} Q_k A v_{n-k}
                 - sum_{i=1}^{n-1} q_i v_{n-i}),
    q_n = e_even^T A v_n.

Everything in this module is exact: Python ints and Fractions only.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import SymmetryViolationError, ValidationError
from .lattice import IndSetFamily, Torus, build_torus, independent_sets


@dataclass(frozen=True)
class RationalSeries:
    """Truncated power series with exact rational coefficients."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(Fraction(c) for c in self.coeffs))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, n: int) -> Fraction:
        return self.coeffs[n] if 0 <= n < len(self.coeffs) else Fraction(0)

    def integer_coeffs(self):
        out = []
        for c in self.coeffs:
            if c.denominator != 1:
                raise ValidationError(f"coefficient {c} is not an integer")
            out.append(c.numerator)
        return out

    def __call__(self, z):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * z + (c if isinstance(z, (int, Fraction)) else float(c))
        return acc


@dataclass(frozen=True)
class QSeries:
    """q^{+-} coefficients together with the eigenvector coefficient history."""

    fam: IndSetFamily
    qplus: RationalSeries
    qminus: RationalSeries
    vplus: tuple  # tuple of integer coefficient vectors (tuples)
    vminus: tuple

    @property
    def order(self) -> int:
        return self.qplus.order


def _family(t) -> IndSetFamily:
    if isinstance(t, IndSetFamily):
        if t.alpha is None:
            raise ValidationError("q-series needs a torus family (alpha, even/odd indices)")
        return t
    torus = t if isinstance(t, Torus) else build_torus(t)
    return independent_sets(torus)


def _compat_rows(fam: IndSetFamily):
    sets = fam.sets
    return [[j for j, t in enumerate(sets) if s & t == 0] for s in sets]


def _apply_a(rows, v):
    return [sum(v[j] for j in row) for row in rows]


def q_series(t, m: int) -> QSeries:
    """Exact q^{+-} series of a torus (or even cycle) up to order m."""
    fam = _family(t)
    if m < 0:
        raise ValidationError("order must be non-negative")
    n_sets = len(fam.sets)
    defect = fam.defects()
    rows = _compat_rows(fam)
    e_even, e_odd = fam.index_even, fam.index_odd
    alpha = fam.alpha

    out = {}
    for sign in (+1, -1):
        v0 = [0] * n_sets
        v0[e_even] = 1
        v0[e_odd] = sign
        vs = [v0]
        avs = [_apply_a(rows, v0)]
        qs = [sign]
        for n in range(1, m + 1):
            acc = [0] * n_sets
            for k in range(1, min(n, alpha) + 1):
                av = avs[n - k]
                for i in range(n_sets):
                    if defect[i] == k:
                        acc[i] += av[i]
            for i in range(1, n):
                qi = qs[i]
                if qi:
                    vni = vs[n - i]
                    for j in range(n_sets):
                        acc[j] -= qi * vni[j]
            if sign < 0:
                acc = [-c for c in acc]
            vs.append(acc)
            avs.append(_apply_a(rows, acc))
            qs.append(avs[n][e_even])
        out[sign] = (qs, vs)

    qp, vp = out[+1]
    qm, vm = out[-1]
    return QSeries(
        fam=fam,
        qplus=RationalSeries(tuple(qp)),
        qminus=RationalSeries(tuple(qm)),
        vplus=tuple(tuple(v) for v in vp),
        vminus=tuple(tuple(v) for v in vm),
    )


def a_b_split(qplus: RationalSeries, qminus: RationalSeries):
    """a_n = (q_n^+ + q_n^-)/2 and b_n = (q_n^+ - q_n^-)/2."""
    if qplus.order != qminus.order:
        raise ValidationError("series orders differ")
    a = [(p + q) / 2 for p, q in zip(qplus.coeffs, qminus.coeffs)]
    b = [(p - q) / 2 for p, q in zip(qplus.coeffs, qminus.coeffs)]
    return RationalSeries(tuple(a)), RationalSeries(tuple(b))


def bound_sequences(n_sets: int, m: int):
    """The combinatorial bound sequence x_n and its rescaling y_n = x_n / N^{2n}.

    x_0 = 1 and x_n = N (x_{n-1} + sum_{i=1}^{n-1} x_i x_{n-i}); exact ints,
    with y_n returned as exact Fractions.
    """
    if n_sets < 1 or m < 0:
        raise ValidationError("need N >= 1 and m >= 0")
    xs = [1]
    for n in range(1, m + 1):
        s = xs[n - 1] + sum(xs[i] * xs[n - i] for i in range(1, n))
        xs.append(n_sets * s)
    ys = [Fraction(x, n_sets ** (2 * n)) for n, x in enumerate(xs)]
    return xs, ys


# ----------------------------------------------------------------------
# Symmetry checks (parity automorphisms acting on the vector history)
# ----------------------------------------------------------------------


def family_permutation(fam: IndSetFamily, vertex_perm) -> tuple:
    """Index permutation induced on the family by a vertex permutation."""
    lookup = {s: i for i, s in enumerate(fam.sets)}
    out = []
    for s in fam.sets:
        img = 0
        m = s
        while m:
            b = m & -m
            img |= 1 << vertex_perm[b.bit_length() - 1]
            m ^= b
        out.append(lookup[img])
    return tuple(out)


def check_vector_symmetry(v_history, fam_perm, sign: int):
    """Raise SymmetryViolationError(n) unless P v_n = sign * v_n for all n."""
    for n, v in enumerate(v_history):
        for i, pi in enumerate(fam_perm):
            if v[i] != sign * v[pi]:
                raise SymmetryViolationError(n, f"entry {i}")


@dataclass(frozen=True)
class SymmetryReport:
    sides: tuple
    order: int
    odd_involution_ok: bool
    even_translation_ok: bool

    @property
    def ok(self) -> bool:
        return self.odd_involution_ok and self.even_translation_ok


def verify_symmetry(t, m: int) -> SymmetryReport:
    """Check P_sigma v_n^{+-} = +-v_n^{+-} for the coordinate-1 reflection
    and P_tau v_n^{+-} = v_n^{+-} for an even translation, for all n <= m."""
    torus = t if isinstance(t, Torus) else build_torus(t)
    fam = independent_sets(torus)
    qs = q_series(fam, m)
    sigma = family_permutation(fam, torus.reflection_perm())
    tau = family_permutation(fam, torus.even_translation_perm())
    check_vector_symmetry(qs.vplus, sigma, +1)
    check_vector_symmetry(qs.vminus, sigma, -1)
    check_vector_symmetry(qs.vplus, tau, +1)
    check_vector_symmetry(qs.vminus, tau, +1)
    return SymmetryReport(sides=torus.sides, order=m, odd_involution_ok=True, even_translation_ok=True)


# ----------------------------------------------------------------------
# Certified series evaluation
# ----------------------------------------------------------------------


def coefficient_bound(n_sets: int, n: int) -> int:
    """|q_n^{+-}| <= N (6 N^2)^n; entries of v_n^{+-} are bounded by (6 N^2)^n."""
    return n_sets * (6 * n_sets * n_sets) ** n


def _abs_tail(n_sets: int, m: int, z_abs: Fraction) -> Fraction:
    """Upper bound for N sum_{n > m} (6N^2)^n |z|^n (geometric tail)."""
    r = 6 * n_sets * n_sets * z_abs
    if r >= 1:
        raise ValidationError("|z| too large for a convergent tail bound")
    return n_sets * r ** (m + 1) / (1 - r)


def beta_plus_one_interval(t, z_abs: Fraction, m: int | None = None):
    """Certified interval for |beta(z) + 1| valid for every |z| = z_abs.

    Uses exact coefficients up to order m plus the coefficient bound for the
    tails: |beta + 1| = 2|a(z)| / |q^+(z)| with a = (q^+ + q^-)/2.
    Returns (lower, upper) as Fractions.
    """
    fam = _family(t)
    alpha = fam.alpha
    if m is None:
        m = 2 * alpha
    z_abs = Fraction(z_abs)
    qs = q_series(fam, m)
    a, _ = a_b_split(qs.qplus, qs.qminus)
    n_sets = len(fam.sets)

    tail = _abs_tail(n_sets, m, z_abs)
    # |a(z)| >= a_alpha |z|^alpha - sum_{alpha < n <= m} |a_n| |z|^n - tail
    main = a.coeff(alpha) * z_abs**alpha
    slack = sum(abs(a.coeff(n)) * z_abs**n for n in range(alpha + 1, m + 1)) + tail
    a_lo = main - slack
    a_hi = main + slack
    # |q^+(z)| in [1 - s, 1 + s]
    s = sum(abs(qs.qplus.coeff(n)) * z_abs**n for n in range(1, m + 1)) + tail
    if s >= 1 or a_lo < 0:
        raise ValidationError("order m too small to certify at this |z|")
    lower = 2 * a_lo / (1 + s)
    upper = 2 * a_hi / (1 - s)
    return lower, upper
