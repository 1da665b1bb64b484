"""Abstract polymer models, cluster expansions and the interpolation evaluator.

A polymer system is a finite set with a symmetric incompatibility relation
(every polymer is incompatible with itself) and complex or rational
weights.  The partition function sums weight products over pairwise
compatible subsets; its logarithm expands over clusters weighted by the
Ursell function.  The same Newton-identity bookkeeping that converts
between polynomial coefficients and log-series coefficients powers the
truncated-Taylor evaluator for independence polynomials of tori at large
fugacity.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    RadiusTooLargeError,
    TooLargeError,
    ValidationError,
    ZeroConstantTermError,
)
from .exactpoly import IntPolynomial, indep_poly
from .lattice import Torus

#: Cap on exhaustive subset enumeration in polymer_partition.
POLYMER_CAP = 24


@dataclass(frozen=True)
class PolymerSystem:
    """Finite polymer set with incompatibility, weights and sizes.

    ``incompatible(i, j)`` is indexed by polymer position; it is symmetrized
    and self-incompatibility is enforced regardless of the callable.
    """

    polymers: tuple
    incompatible: object  # callable (i, j) -> bool on polymer indices
    weights: tuple
    sizes: tuple

    def __post_init__(self):
        if not (len(self.polymers) == len(self.weights) == len(self.sizes)):
            raise ValidationError("polymers, weights and sizes must align")
        if any(s <= 0 for s in self.sizes):
            raise ValidationError("polymer sizes must be positive integers")

    def n(self) -> int:
        return len(self.polymers)

    def clash(self, i: int, j: int) -> bool:
        if i == j:
            return True
        return bool(self.incompatible(i, j) or self.incompatible(j, i))


def polymer_partition(sys: PolymerSystem, cap: int | None = None):
    """Z_pol: sum over pairwise-compatible polymer subsets of weight products."""
    n = sys.n()
    limit = POLYMER_CAP if cap is None else cap
    if n > limit:
        raise TooLargeError(f"{n} polymers exceeds cap {limit}")
    clash_masks = []
    for i in range(n):
        m = 0
        for j in range(n):
            if sys.clash(i, j):
                m |= 1 << j
        clash_masks.append(m)

    total = 0
    stack = [(0, 0, 1)]
    while stack:
        i, used, prod = stack.pop()
        if i == n:
            total = total + prod
            continue
        stack.append((i + 1, used, prod))
        if not (used >> i) & 1:
            w = sys.weights[i]
            if w != 0:
                stack.append((i + 1, used | clash_masks[i], prod * w))
    return total


def ursell(n_vertices: int, edges) -> int:
    """psi(H) = sum over connected spanning edge subsets of (-1)^{|E|}.

    Computed by inclusion-exclusion over the component of the lowest vertex:
    [E(S) empty] = sum_{T : min(S) in T subset S} C(T) [E(S \\ T) empty].
    """
    if n_vertices < 1:
        raise ValidationError("need at least one vertex")
    if n_vertices > 10:
        raise TooLargeError("Ursell evaluation capped at 10 vertices")
    adj = [0] * n_vertices
    for u, v in edges:
        if u == v:
            continue
        adj[u] |= 1 << v
        adj[v] |= 1 << u

    full = (1 << n_vertices) - 1

    def has_edges(mask):
        m = mask
        while m:
            v = (m & -m).bit_length() - 1
            m &= m - 1
            if adj[v] & mask & ~((1 << (v + 1)) - 1):
                return True
            if adj[v] & mask & ((1 << v) - 1):
                return True
        return False

    from functools import lru_cache

    @lru_cache(maxsize=None)
    def conn(mask):
        # C(mask): signed sum over connected spanning subgraphs of H[mask]
        low = mask & -mask
        rest = mask ^ low
        total = 0 if has_edges(mask) else 1
        # subtract contributions where the component of the low vertex is proper
        sub = rest
        while True:
            t_mask = low | sub
            if t_mask != mask:
                remainder = mask ^ t_mask
                if not has_edges(remainder):
                    total -= conn(t_mask)
            if sub == 0:
                break
            sub = (sub - 1) & rest
        return total

    return conn(full)


def ursell_complete(k: int) -> int:
    """psi(K_k); the closed form is (-1)^{k-1} (k-1)!."""
    return ursell(k, [(i, j) for i in range(k) for j in range(i + 1, k)])


@dataclass(frozen=True)
class Cluster:
    """Multiset of polymer indices with its Ursell value and weight product."""

    indices: tuple  # sorted polymer indices with multiplicity
    phi: object  # Phi(X) contribution to log Z


def _cluster_phi(sys: PolymerSystem, combo) -> object:
    """Phi(X) = prod 1/n_X! * psi(H_X) * prod w for the multiset ``combo``."""
    k = len(combo)
    edges = [
        (a, b) for a in range(k) for b in range(a + 1, k) if sys.clash(combo[a], combo[b])
    ]
    psi = ursell(k, edges)
    if psi == 0:
        return None
    mult_fact = 1
    i = 0
    while i < k:
        j = i
        while j < k and combo[j] == combo[i]:
            j += 1
        mult_fact *= math.factorial(j - i)
        i = j
    wprod = 1
    for idx in combo:
        wprod = wprod * sys.weights[idx]
    return Fraction(psi, mult_fact) * wprod if isinstance(wprod, (int, Fraction)) else (
        psi / mult_fact
    ) * wprod


def clusters_up_to(sys: PolymerSystem, max_total_size: int):
    """All clusters (connected incompatibility graph) with total size bounded."""
    n = sys.n()
    out = []

    combo = []

    def rec(start, total):
        if combo:
            k = len(combo)
            edges = [
                (a, b)
                for a in range(k)
                for b in range(a + 1, k)
                if sys.clash(combo[a], combo[b])
            ]
            if _connected(k, edges):
                phi = _cluster_phi(sys, tuple(combo))
                if phi is not None and phi != 0:
                    out.append(Cluster(tuple(combo), phi))
        for i in range(start, n):
            s = sys.sizes[i]
            if total + s > max_total_size:
                continue
            combo.append(i)
            rec(i, total + s)
            combo.pop()

    rec(0, 0)
    return out


def _connected(k, edges) -> bool:
    if k <= 1:
        return True
    adj = [[] for _ in range(k)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for u in adj[v]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return len(seen) == k


def cluster_expansion_partial(sys: PolymerSystem, max_total_size: int):
    """Partial sum of log Z_pol over clusters with total size <= bound."""
    total = 0
    for cl in clusters_up_to(sys, max_total_size):
        total = total + cl.phi
    return total


@dataclass(frozen=True)
class KPReport:
    ok: bool
    worst_margin: float
    worst_polymer: int | None
    lhs: tuple  # per-polymer sums


def kp_check(sys: PolymerSystem, a_mult: float, b_mult: float) -> KPReport:
    """Kotecky-Preiss condition with a(gamma) = a_mult*size, b = b_mult*size.

    Verifies sum_{gamma' incompatible with gamma} |w| e^{a+b} <= a(gamma)
    for every polymer and reports the worst margin a(gamma) - lhs.
    """
    n = sys.n()
    lhs = []
    for i in range(n):
        s = 0.0
        for j in range(n):
            if sys.clash(i, j):
                s += abs(sys.weights[j]) * math.exp((a_mult + b_mult) * sys.sizes[j])
        lhs.append(s)
    margins = [a_mult * sys.sizes[i] - lhs[i] for i in range(n)]
    worst = min(range(n), key=lambda i: margins[i], default=None)
    if worst is None:
        return KPReport(True, math.inf, None, ())
    return KPReport(margins[worst] >= 0, margins[worst], worst, tuple(lhs))


# ----------------------------------------------------------------------
# Newton identities: polynomial coefficients <-> log-series coefficients
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class LogSeries:
    """log p around 0: log(constant) + sum_{j>=1} -p_j x^j / j, p_j exact."""

    constant: Fraction  # p(0) > 0
    pj: tuple  # p_1..p_m as Fractions

    @property
    def order(self) -> int:
        return len(self.pj)

    def coefficient(self, j: int) -> Fraction:
        """Taylor coefficient of log p at order j >= 1 (exact)."""
        if j < 1 or j > len(self.pj):
            raise ValidationError("coefficient order out of range")
        return -self.pj[j - 1] / j

    def evaluate(self, x, order: int | None = None) -> complex:
        m = len(self.pj) if order is None else min(order, len(self.pj))
        acc = 0j
        for j in range(m, 0, -1):
            acc = (acc + complex(-self.pj[j - 1] / j)) * x
        return cmath.log(float(self.constant)) + acc

    def poly_coeffs(self, m: int | None = None):
        """Reconstruct a_0..a_m of p from the p_j via k a_k = -sum a_i p_{k-i}."""
        if m is None:
            m = len(self.pj)
        if m > len(self.pj):
            raise ValidationError("not enough log coefficients")
        a = [Fraction(self.constant)]
        for k in range(1, m + 1):
            s = sum(a[i] * self.pj[k - i - 1] for i in range(k))
            a.append(-s / k)
        return a


def newton_log_coeffs(p: IntPolynomial, m: int) -> LogSeries:
    """Power sums p_j of log p up to order m via k a_k = -sum_i a_i p_{k-i}."""
    a0 = p.coeff(0)
    if a0 <= 0:
        raise ZeroConstantTermError("need a positive constant term")
    pj = []
    for k in range(1, m + 1):
        s = Fraction(k * p.coeff(k))
        for i in range(1, k):
            s += Fraction(p.coeff(i)) * pj[k - i - 1]
        pj.append(-s / a0)
    return LogSeries(constant=Fraction(a0), pj=tuple(pj))


# ----------------------------------------------------------------------
# Truncated-Taylor evaluator for Z_ind at large fugacity
# ----------------------------------------------------------------------

#: Default convergence radius in z = 1/lambda for the desk-scale evaluator.
DEFAULT_Z_RADIUS = 0.1


@dataclass(frozen=True)
class FptasResult:
    value: complex
    order: int


def _split_parts(t: Torus):
    from .contour import z_match_split

    z_even, z_odd, z_large = z_match_split(t)
    return z_even + z_large, z_odd


def fptas_truncation(t: Torus, lam: complex, m: int) -> complex:
    """Order-m truncated-log approximation of Z_ind(t; lam).

    Splits Z_match into p_1 = Z^even + Z^large and p_2 = Z^odd, extracts m
    log coefficients of each, recombines them into m log coefficients of
    p = p_1 + p_2, evaluates the truncated series at z = 1/lam and scales
    by lam^alpha.
    """
    lam = complex(lam)
    if lam == 0:
        raise ValidationError("lambda must be nonzero")
    z = 1.0 / lam
    p1, p2 = _split_parts(t)
    log1 = newton_log_coeffs(p1, m)
    log2 = newton_log_coeffs(p2, m)
    a1 = log1.poly_coeffs(m)
    a2 = log2.poly_coeffs(m)
    p_coeffs = [x + y for x, y in zip(a1, a2)]
    # Newton pass on the recombined truncated coefficients
    a0 = p_coeffs[0]
    pj = []
    for k in range(1, m + 1):
        s = Fraction(k) * p_coeffs[k]
        for i in range(1, k):
            s += p_coeffs[i] * pj[k - i - 1]
        pj.append(-s / a0)
    log_p = LogSeries(constant=a0, pj=tuple(pj))
    return cmath.exp(log_p.evaluate(z)) * lam**t.alpha


def fptas_evaluate(
    t: Torus,
    lam: complex,
    eps: float,
    z_radius: float = DEFAULT_Z_RADIUS,
    max_order: int = 200,
) -> FptasResult:
    """Approximation of Z_ind(t; lam) with target relative accuracy eps.

    The truncation order grows until the tail estimate of the log series
    falls below eps/4; the returned order is the one actually used.
    """
    lam = complex(lam)
    if eps <= 0:
        raise ValidationError("eps must be positive")
    if lam == 0 or abs(1.0 / lam) > z_radius + 1e-15:
        raise RadiusTooLargeError(
            f"|1/lambda| = {abs(1.0/lam) if lam != 0 else math.inf:.4g} exceeds radius {z_radius}"
        )
    z = 1.0 / lam
    p1, p2 = _split_parts(t)
    deg = max(p1.degree, p2.degree)
    m_cap = min(max_order, 4 * deg + 80)
    log1 = newton_log_coeffs(p1, m_cap)
    log2 = newton_log_coeffs(p2, m_cap)
    a1 = log1.poly_coeffs(m_cap)
    a2 = log2.poly_coeffs(m_cap)
    p_coeffs = [x + y for x, y in zip(a1, a2)]
    a0 = p_coeffs[0]
    pj = []
    for k in range(1, m_cap + 1):
        s = Fraction(k) * p_coeffs[k]
        for i in range(1, k):
            s += p_coeffs[i] * pj[k - i - 1]
        pj.append(-s / a0)
    log_p = LogSeries(constant=a0, pj=tuple(pj))

    terms = [abs(complex(-log_p.pj[j - 1] / j)) * abs(z) ** j for j in range(1, m_cap + 1)]
    chosen = None
    for m in range(1, m_cap + 1):
        tail = sum(terms[m : m + 8])
        if m + 8 < len(terms):
            # crude geometric extrapolation of the remainder
            ratio = max(
                (terms[k + 1] / terms[k]) for k in range(m, m + 7) if terms[k] > 0
            ) if any(terms[k] > 0 for k in range(m, m + 7)) else 0.0
            if ratio < 1:
                tail += terms[m + 7] * ratio / (1 - ratio) if terms[m + 7] > 0 else 0.0
            else:
                continue
        if tail < eps / 4:
            chosen = m
            break
    if chosen is None:
        raise RadiusTooLargeError("log series does not reach the target accuracy")
    value = cmath.exp(log_p.evaluate(z, order=chosen)) * lam**t.alpha
    return FptasResult(value=value, order=chosen)


def fptas_reference(t: Torus, lam: complex) -> complex:
    """Exact-oracle evaluation for accuracy tests."""
    return complex(indep_poly(t)(complex(lam)))
