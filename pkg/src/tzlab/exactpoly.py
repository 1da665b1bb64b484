"""Exact big-integer independence polynomials.

Everything here is integer arithmetic: the deletion recursion
Z_G = lambda * Z_{G - N[v]} + Z_{G - v}, symbolic transfer-matrix traces
Tr[(D_lambda A)^n], the defect-indexed rewrite Z_match, and bounded-depth
defect counting.  These routines are the oracle the numeric modules are
tested against.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .errors import CycleTooShortError, TooLargeError, ValidationError
from .lattice import IndSetFamily, Torus

#: Default cap on the deletion recursion (vertex count of the input graph).
DEFAULT_RECURSION_CAP = 40


def _trim(coeffs):
    i = len(coeffs)
    while i > 0 and coeffs[i - 1] == 0:
        i -= 1
    return tuple(coeffs[:i])


@dataclass(frozen=True)
class IntPolynomial:
    """Univariate polynomial with arbitrary-precision integer coefficients."""

    coeffs: tuple  # coeffs[k] multiplies x**k; trailing zeros trimmed

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _trim(tuple(int(c) for c in self.coeffs)))

    @staticmethod
    def zero() -> "IntPolynomial":
        return IntPolynomial(())

    @staticmethod
    def one() -> "IntPolynomial":
        return IntPolynomial((1,))

    @staticmethod
    def x() -> "IntPolynomial":
        return IntPolynomial((0, 1))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1  # -1 for the zero polynomial

    def __bool__(self):
        return bool(self.coeffs)

    def __add__(self, other):
        a, b = self.coeffs, _as_coeffs(other)
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] += c
        return IntPolynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return IntPolynomial([-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) + (-self)

    def __mul__(self, other):
        b = _as_coeffs(other)
        a = self.coeffs
        if not a or not b:
            return IntPolynomial.zero()
        out = [0] * (len(a) + len(b) - 1)
        for i, ca in enumerate(a):
            if ca:
                for j, cb in enumerate(b):
                    if cb:
                        out[i + j] += ca * cb
        return IntPolynomial(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValidationError("negative polynomial power")
        result = IntPolynomial.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def shifted(self, k: int) -> "IntPolynomial":
        """Multiply by x**k."""
        if not self.coeffs:
            return self
        return IntPolynomial((0,) * k + self.coeffs)

    def shifted_down(self, k: int) -> "IntPolynomial":
        """Exact division by x**k; raises if the low coefficients are nonzero."""
        if any(self.coeffs[:k]):
            raise ValidationError("polynomial not divisible by x**k")
        return IntPolynomial(self.coeffs[k:])

    def reversed(self, degree: int | None = None) -> "IntPolynomial":
        """x**degree * p(1/x) with coefficients padded to the given degree."""
        d = self.degree if degree is None else degree
        if d < self.degree:
            raise ValidationError("reversal degree below polynomial degree")
        padded = list(self.coeffs) + [0] * (d + 1 - len(self.coeffs))
        return IntPolynomial(padded[::-1])

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def coeff(self, k: int) -> int:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else 0

    def to_json(self, var: str = "lambda") -> str:
        if var not in ("lambda", "z"):
            raise ValidationError("polynomial variable must be 'lambda' or 'z'")
        return json.dumps({"var": var, "coeffs": [str(c) for c in self.coeffs]})

    @staticmethod
    def from_json(text: str) -> "IntPolynomial":
        data = json.loads(text)
        return IntPolynomial([int(c) for c in data["coeffs"]])


def _as_poly(x) -> IntPolynomial:
    if isinstance(x, IntPolynomial):
        return x
    if isinstance(x, int):
        return IntPolynomial((x,))
    raise TypeError(f"cannot coerce {type(x).__name__} to IntPolynomial")


def _as_coeffs(x):
    return _as_poly(x).coeffs


# ----------------------------------------------------------------------
# Deletion recursion
# ----------------------------------------------------------------------

_memo: dict = {}


def _canonical_key(nbrs):
    """Hashable encoding of a graph: tuple of sorted neighbor tuples."""
    return tuple(tuple(sorted(row)) for row in nbrs)


def _indep_poly_masked(nbr_masks, live: int) -> IntPolynomial:
    """Z of the subgraph induced by the 'live' vertex bitmask."""
    if live == 0:
        return IntPolynomial.one()

    vertices = []
    m = live
    while m:
        b = m & -m
        vertices.append(b.bit_length() - 1)
        m ^= b

    # split into connected components; Z multiplies across components
    comp_masks = []
    remaining = set(vertices)
    while remaining:
        start = remaining.pop()
        comp = 1 << start
        stack = [start]
        while stack:
            v = stack.pop()
            for u in list(remaining):
                if nbr_masks[v] >> u & 1:
                    remaining.discard(u)
                    comp |= 1 << u
                    stack.append(u)
        comp_masks.append(comp)

    result = IntPolynomial.one()
    for comp in comp_masks:
        result = result * _indep_poly_component(nbr_masks, comp)
    return result


def _indep_poly_component(nbr_masks, live: int) -> IntPolynomial:
    count = bin(live).count("1")
    if count == 1:
        return IntPolynomial((1, 1))
    verts = []
    m = live
    while m:
        b = m & -m
        verts.append(b.bit_length() - 1)
        m ^= b
    pos = {v: i for i, v in enumerate(verts)}
    local = tuple(
        tuple(sorted(pos[u] for u in _mask_bits(nbr_masks[v] & live))) for v in verts
    )
    key = _canonical_key(local)
    cached = _memo.get(key)
    if cached is not None:
        return cached

    # pivot on a maximum-degree vertex (smallest index breaks ties)
    degs = [len(row) for row in local]
    pivot = max(range(count), key=lambda i: (degs[i], -i))
    v = verts[pivot]
    closed = (1 << v) | (nbr_masks[v] & live)
    with_v = _indep_poly_masked(nbr_masks, live & ~closed).shifted(1)
    without_v = _indep_poly_masked(nbr_masks, live & ~(1 << v))
    result = with_v + without_v
    _memo[key] = result
    return result


def _mask_bits(m: int):
    while m:
        b = m & -m
        yield b.bit_length() - 1
        m ^= b


def indep_poly(g, cap: int | None = None) -> IntPolynomial:
    """Independence polynomial of a SiteGraph or Torus, exactly."""
    graph = g.graph if isinstance(g, Torus) else g
    limit = DEFAULT_RECURSION_CAP if cap is None else cap
    if graph.n > limit:
        raise TooLargeError(f"{graph.n} vertices exceeds recursion cap {limit}")
    masks = graph.neighbor_masks()
    return _indep_poly_masked(masks, (1 << graph.n) - 1)


# ----------------------------------------------------------------------
# Symbolic transfer traces
# ----------------------------------------------------------------------


def indep_poly_cycle_product(n: int, fam: IndSetFamily) -> IntPolynomial:
    """Z(C_n box G; lambda) = Tr[(D_lambda A)^n] with exact polynomial entries."""
    if n < 3:
        raise CycleTooShortError(f"cycle length {n} < 3")
    sets = fam.sets
    size = len(sets)
    sizes = [bin(s).count("1") for s in sets]
    row = [IntPolynomial((0,) * k + (1,)) for k in range(max(sizes) + 1)]
    mat = [
        [row[sizes[i]] if sets[i] & sets[j] == 0 else IntPolynomial.zero() for j in range(size)]
        for i in range(size)
    ]

    def mat_mul(x, y):
        yt = list(zip(*y))
        out = []
        for xi in x:
            out_row = []
            for yj in yt:
                acc = IntPolynomial.zero()
                for a, b in zip(xi, yj):
                    if a and b:
                        acc = acc + a * b
                out_row.append(acc)
            out.append(out_row)
        return out

    result = None
    base = mat
    k = n
    while k:
        if k & 1:
            result = base if result is None else mat_mul(result, base)
        k >>= 1
        if k:
            base = mat_mul(base, base)
    trace = IntPolynomial.zero()
    for i in range(size):
        trace = trace + result[i][i]
    return trace


# ----------------------------------------------------------------------
# Defect-indexed (matching) polynomial
# ----------------------------------------------------------------------


def match_poly(t: Torus, cap: int | None = None) -> IntPolynomial:
    """Z_match(T; z): coefficient of z^k counts independent sets with deficiency k."""
    z_ind = indep_poly(t, cap=cap)
    return z_ind.reversed(t.alpha)


def defect_counts(t: Torus, k_max: int):
    """Counts c_0..c_{k_max} of independent sets of size alpha - k.

    Branch-and-bound over vertices: a branch dies as soon as even taking
    every remaining unblocked vertex cannot reach size alpha - k_max, so
    small k_max never visits the full subset lattice.
    """
    alpha = t.alpha
    if k_max > alpha:
        raise ValidationError(f"k_max {k_max} exceeds alpha {alpha}")
    min_size = alpha - k_max
    n = t.n_vertices
    nbr = t.graph.neighbor_masks()
    counts = [0] * (k_max + 1)
    full = (1 << n) - 1

    def rec(v: int, size: int, blocked: int):
        free_ahead = bin(~blocked & full & ~((1 << v) - 1)).count("1")
        if size + free_ahead < min_size:
            return
        if v == n:
            counts[alpha - size] += 1
            return
        rec(v + 1, size, blocked | (1 << v))
        if not (blocked >> v) & 1:
            rec(v + 1, size + 1, blocked | (1 << v) | nbr[v])

    rec(0, 0, 0)
    return counts


def count_by_size(fam: IndSetFamily):
    """Histogram of independent-set sizes (index = size); brute-force oracle."""
    out = []
    for s in fam.sets:
        k = bin(s).count("1")
        while len(out) <= k:
            out.append(0)
        out[k] += 1
    return out


# ----------------------------------------------------------------------
# Small helpers shared by downstream modules
# ----------------------------------------------------------------------


def evaluate_at(poly: IntPolynomial, x):
    """Horner evaluation at an int, Fraction or complex point."""
    return poly(x)


def cauchy_root_bound(poly: IntPolynomial) -> Fraction:
    """Cauchy bound: every root has modulus <= 1 + max |a_i / a_deg|."""
    if poly.degree < 1:
        raise ValidationError("root bound needs degree >= 1")
    lead = abs(poly.coeffs[-1])
    worst = max(Fraction(abs(c), lead) for c in poly.coeffs[:-1])
    return 1 + worst
