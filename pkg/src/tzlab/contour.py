"""Contour machinery on small even tori.

A feasible configuration deviates from the two alternating ground states
on its set of incorrect vertices; the connected components of that set,
dressed with the configuration restricted to them and labels for the
complement components, are contours.  Components of box-diameter below
the shortest side are small; all others are merged into a single large
contour.  This module implements the configuration <-> matching-set
bijection, surface energies, region partition functions with a fixed
ground state, contour weights and the closed-formula zero-freeness radii.

Everything is exhaustive and exact (integers and Fractions); tori with a
side of length 2 are rejected because the small/large dichotomy
degenerates there.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import (
    BadParametersError,
    DenominatorZeroError,
    InconsistentLabelsError,
    TooLargeError,
    ValidationError,
)
from .exactpoly import IntPolynomial
from .lattice import Torus, build_torus, enumerate_independent_masks

EVEN = "even"
ODD = "odd"


def _other(phi: str) -> str:
    return ODD if phi == EVEN else EVEN


class TorusEnv:
    """Precomputed geometry for contour extraction on one torus."""

    def __init__(self, torus: Torus):
        if min(torus.sides) < 4:
            raise ValidationError("contour machinery needs every side >= 4")
        self.torus = torus
        n = torus.n_vertices
        self.n = n
        self.nbr = [tuple(torus.graph.nbrs[v]) for v in range(n)]
        self.nbr_mask = torus.graph.neighbor_masks()
        self.window_mask = [
            sum(1 << u for u in torus.inf_neighborhood(v)) for v in range(n)
        ]
        self.even_mask = torus.even_mask()
        self.odd_mask = torus.odd_mask()
        self.full_mask = (1 << n) - 1
        self.parity = [torus.parity(v) for v in range(n)]
        self.alpha = torus.alpha
        self.l1 = torus.sides[0]
        self._region_memo = {}

    # -- configuration-level primitives ---------------------------------

    def incorrect_mask(self, occ: int) -> int:
        out = 0
        ev, od = self.even_mask, self.odd_mask
        for v in range(self.n):
            w = self.window_mask[v]
            if (occ ^ ev) & w and (occ ^ od) & w:
                out |= 1 << v
        return out

    def components(self, mask: int):
        """Connected components (graph adjacency) of a vertex bitmask."""
        comps = []
        rest = mask
        while rest:
            bit = rest & -rest
            comp = bit
            frontier = bit
            rest ^= bit
            while frontier:
                v = (frontier & -frontier).bit_length() - 1
                frontier &= frontier - 1
                grow = self.nbr_mask[v] & rest
                comp |= grow
                frontier |= grow
                rest &= ~grow
            comps.append(comp)
        return comps

    def mask_vertices(self, mask: int):
        out = []
        while mask:
            bit = mask & -mask
            out.append(bit.bit_length() - 1)
            mask ^= bit
        return out

    def box_diameter(self, mask: int) -> int:
        return self.torus.box_diameter(self.mask_vertices(mask))

    def label_at(self, occ: int, v: int) -> str:
        """Ground state matched by occ at a single vertex."""
        bit = (occ >> v) & 1
        return EVEN if bit == (1 - self.parity[v]) else ODD

    def ground_mask(self, phi: str) -> int:
        return self.even_mask if phi == EVEN else self.odd_mask


@lru_cache(maxsize=None)
def _env_for_sides(sides) -> TorusEnv:
    return TorusEnv(build_torus(sides))


def env_for(t: Torus) -> TorusEnv:
    return _env_for_sides(t.sides)


@dataclass(frozen=True)
class FeasibleConfig:
    """0/1 configuration on a torus whose occupied set is independent."""

    sides: tuple
    occupied: int  # vertex bitmask

    def __post_init__(self):
        env = _env_for_sides(self.sides)
        occ = self.occupied
        for v in env.mask_vertices(occ):
            if env.nbr_mask[v] & occ:
                raise ValidationError("occupied set is not independent")

    @property
    def torus(self) -> Torus:
        return _env_for_sides(self.sides).torus

    def sigma(self, v: int) -> int:
        return (self.occupied >> v) & 1

    def size(self) -> int:
        return bin(self.occupied).count("1")


def feasible_config(t: Torus, occupied: int) -> FeasibleConfig:
    return FeasibleConfig(t.sides, occupied)


@dataclass(frozen=True)
class Contour:
    """Support + configuration + complement labels, classified small/large."""

    sides: tuple
    support: tuple  # sorted vertex tuple
    sigma: tuple  # 0/1 per support vertex
    labels: tuple  # label per component of T \ support, ordered by min vertex
    klass: str  # "small" | "large"
    ctype: str  # "even" | "odd" (large contours are even by convention)
    energy: int

    @property
    def support_mask(self) -> int:
        return sum(1 << v for v in self.support)

    def extended_occupancy(self) -> int:
        """Occupied mask of sigma-hat: contour values + labeled ground states."""
        env = _env_for_sides(self.sides)
        occ = sum(1 << v for v, s in zip(self.support, self.sigma) if s)
        comps = env.components(env.full_mask & ~self.support_mask)
        comps.sort(key=lambda c: (c & -c).bit_length())
        if len(comps) != len(self.labels):
            raise InconsistentLabelsError("label count does not match components")
        for comp, lab in zip(comps, self.labels):
            occ |= env.ground_mask(lab) & comp
        return occ

    def interior_mask(self, xi: str | None = None) -> int:
        """Union of non-exterior complement components (with label xi if given);
        for large contours every component counts as interior."""
        env = _env_for_sides(self.sides)
        comps = env.components(env.full_mask & ~self.support_mask)
        comps.sort(key=lambda c: (c & -c).bit_length())
        ext = None if self.klass == "large" else _exterior_component(env, self.support_mask, comps)
        out = 0
        for comp, lab in zip(comps, self.labels):
            if comp == ext:
                continue
            if xi is None or lab == xi:
                out |= comp
        return out


def _exterior_component(env: TorusEnv, support_mask: int, comps):
    """The complement component meeting T \\ cl(support)."""
    cl = env.torus.coordinate_closure(env.mask_vertices(support_mask))
    outside = env.full_mask & ~sum(1 << v for v in cl)
    if outside == 0:
        raise ValidationError("coordinate closure covers the torus; no exterior")
    for comp in comps:
        if comp & outside:
            return comp
    raise ValidationError("exterior component not found")


@dataclass(frozen=True)
class MatchingSet:
    """Pairwise-distant contours with a global complement labeling.

    The two empty variants are tagged "even" / "odd"; ``labels`` maps the
    components of the complement of the union of supports (ordered by their
    minimal vertex) to ground states.
    """

    sides: tuple
    contours: tuple
    labels: tuple
    empty_tag: str | None = None

    @property
    def energy(self) -> int:
        return sum(g.energy for g in self.contours)

    def klass(self) -> str:
        """"empty" | "small" | "large" (contains a large contour)."""
        if not self.contours:
            return "empty"
        if any(g.klass == "large" for g in self.contours):
            return "large"
        return "small"


def incorrect_vertices(cfg: FeasibleConfig) -> frozenset:
    """Vertices whose sup-norm window matches neither ground state."""
    env = _env_for_sides(cfg.sides)
    return frozenset(env.mask_vertices(env.incorrect_mask(cfg.occupied)))


def _extract_contours(env: TorusEnv, occ: int):
    """Raw contour decomposition (supports, sigma, labels, class, type)."""
    inc = env.incorrect_mask(occ)
    if inc == 0:
        return []
    comps = env.components(inc)
    small_supports = []
    large_union = 0
    for c in comps:
        if env.box_diameter(c) < env.l1:
            small_supports.append(c)
        else:
            large_union |= c
    supports = sorted(small_supports, key=lambda c: (c & -c).bit_length())
    out = []
    if large_union:
        out.append(_make_contour(env, occ, large_union, "large"))
    for s in supports:
        out.append(_make_contour(env, occ, s, "small"))
    return out


def _make_contour(env: TorusEnv, occ: int, support_mask: int, klass: str) -> Contour:
    support = tuple(env.mask_vertices(support_mask))
    sigma = tuple((occ >> v) & 1 for v in support)
    comps = env.components(env.full_mask & ~support_mask)
    comps.sort(key=lambda c: (c & -c).bit_length())
    labels = []
    for comp in comps:
        # any complement vertex adjacent to the support is correct, so the
        # configuration matches a unique ground state there
        boundary = [u for u in env.mask_vertices(comp) if env.nbr_mask[u] & support_mask]
        lab = env.label_at(occ, boundary[0])
        labels.append(lab)
    if klass == "large":
        ctype = EVEN
    else:
        ext = _exterior_component(env, support_mask, comps)
        ctype = labels[comps.index(ext)]
    energy = _surface_energy(env, occ, support)
    return Contour(
        sides=env.torus.sides,
        support=support,
        sigma=sigma,
        labels=tuple(labels),
        klass=klass,
        ctype=ctype,
        energy=energy,
    )


def _surface_energy(env: TorusEnv, occ: int, support) -> int:
    """(1/4d) sum over unoccupied support vertices of (2d - occupied neighbors)."""
    two_d = 2 * env.torus.d
    total = 0
    for v in support:
        if not (occ >> v) & 1:
            occ_nbrs = bin(env.nbr_mask[v] & occ).count("1")
            total += two_d - occ_nbrs
    q, r = divmod(total, 2 * two_d)
    if r:
        raise ValidationError(f"surface energy {total}/{2*two_d} is not an integer")
    return q


def contours_of(cfg: FeasibleConfig) -> MatchingSet:
    """Decompose a feasible configuration into its matching set of contours."""
    env = _env_for_sides(cfg.sides)
    occ = cfg.occupied
    contours = _extract_contours(env, occ)
    if not contours:
        if occ == env.even_mask:
            return MatchingSet(cfg.sides, (), (), empty_tag=EVEN)
        if occ == env.odd_mask:
            return MatchingSet(cfg.sides, (), (), empty_tag=ODD)
        raise ValidationError("no contours but configuration is not a ground state")
    union = 0
    for g in contours:
        union |= g.support_mask
    comps = env.components(env.full_mask & ~union)
    comps.sort(key=lambda c: (c & -c).bit_length())
    labels = tuple(env.label_at(occ, (c & -c).bit_length() - 1) for c in comps)
    return MatchingSet(cfg.sides, tuple(contours), labels)


def configuration_of(ms: MatchingSet) -> FeasibleConfig:
    """Inverse of contours_of; validates label consistency."""
    env = _env_for_sides(ms.sides)
    if not ms.contours:
        if ms.empty_tag not in (EVEN, ODD):
            raise InconsistentLabelsError("empty matching set needs an even/odd tag")
        return FeasibleConfig(ms.sides, env.ground_mask(ms.empty_tag))
    union = 0
    for g in ms.contours:
        if g.sides != ms.sides:
            raise InconsistentLabelsError("contour belongs to a different torus")
        union |= g.support_mask
    occ = 0
    for g in ms.contours:
        occ |= sum(1 << v for v, s in zip(g.support, g.sigma) if s)
    comps = env.components(env.full_mask & ~union)
    comps.sort(key=lambda c: (c & -c).bit_length())
    if len(comps) != len(ms.labels):
        raise InconsistentLabelsError("global label count mismatch")
    for comp, lab in zip(comps, ms.labels):
        occ |= env.ground_mask(lab) & comp
    # consistency: each contour's own labeling must agree with the global one
    for g in ms.contours:
        own_comps = env.components(env.full_mask & ~g.support_mask)
        own_comps.sort(key=lambda c: (c & -c).bit_length())
        for comp, lab in zip(comps, ms.labels):
            if not any(env.nbr_mask[u] & g.support_mask for u in env.mask_vertices(comp)):
                continue
            for oc, ol in zip(own_comps, g.labels):
                if oc & comp:
                    if ol != lab:
                        raise InconsistentLabelsError(
                            f"component labeled {lab} but contour expects {ol}"
                        )
                    break
    return FeasibleConfig(ms.sides, occ)


# ----------------------------------------------------------------------
# Classification and the split of Z_match
# ----------------------------------------------------------------------


def _config_class(env: TorusEnv, occ: int):
    """("empty"|"small"|"large", type) for a full-torus configuration."""
    contours = _extract_contours(env, occ)
    if not contours:
        return "empty", EVEN if occ == env.even_mask else ODD
    if any(g.klass == "large" for g in contours):
        return "large", None
    # type of an all-small matching set: label of the common exterior
    ext_inter = env.full_mask
    for g in contours:
        comps = env.components(env.full_mask & ~g.support_mask)
        ext_inter &= _exterior_component(env, g.support_mask, comps)
    if ext_inter == 0:
        raise ValidationError("matching set has empty common exterior")
    v = (ext_inter & -ext_inter).bit_length() - 1
    return "small", env.label_at(occ, v)


def z_match_split(t: Torus, cap: int | None = None):
    """(Z_even, Z_odd, Z_large) as polynomials in z; their sum is Z_match."""
    env = env_for(t)
    if cap is None:
        cap = 24
    if t.n_vertices > cap:
        raise TooLargeError(f"{t.n_vertices} vertices exceeds split cap {cap}")
    alpha = env.alpha
    buckets = {EVEN: [0] * (alpha + 1), ODD: [0] * (alpha + 1), "large": [0] * (alpha + 1)}
    for occ in enumerate_independent_masks(t.graph):
        klass, typ = _config_class(env, occ)
        weight_exp = alpha - bin(occ).count("1")
        if klass == "large":
            buckets["large"][weight_exp] += 1
        else:
            buckets[typ][weight_exp] += 1
    return (
        IntPolynomial(buckets[EVEN]),
        IntPolynomial(buckets[ODD]),
        IntPolynomial(buckets["large"]),
    )


@dataclass(frozen=True)
class ContourCatalog:
    """All distinct contours of a torus, grouped for the polymer identities."""

    sides: tuple
    small_even: tuple
    small_odd: tuple
    large: tuple

    def all(self):
        return self.small_even + self.small_odd + self.large


def contour_catalog(t: Torus, cap: int | None = None) -> ContourCatalog:
    """Distinct contours arising from any feasible configuration."""
    env = env_for(t)
    if cap is None:
        cap = 24
    if t.n_vertices > cap:
        raise TooLargeError(f"{t.n_vertices} vertices exceeds catalog cap {cap}")
    seen = {}
    for occ in enumerate_independent_masks(t.graph):
        for g in _extract_contours(env, occ):
            key = (g.support, g.sigma, g.labels, g.klass)
            if key not in seen:
                seen[key] = g
    smalls_e, smalls_o, larges = [], [], []
    for g in seen.values():
        if g.klass == "large":
            larges.append(g)
        elif g.ctype == EVEN:
            smalls_e.append(g)
        else:
            smalls_o.append(g)
    keyf = lambda g: (g.support, g.sigma, g.labels)
    return ContourCatalog(
        sides=t.sides,
        small_even=tuple(sorted(smalls_e, key=keyf)),
        small_odd=tuple(sorted(smalls_o, key=keyf)),
        large=tuple(sorted(larges, key=keyf)),
    )


def torus_compatible(g1: Contour, g2: Contour) -> bool:
    """Supports at distance >= 2 and the small/large type pattern admitted."""
    env = _env_for_sides(g1.sides)
    m1, m2 = g1.support_mask, g2.support_mask
    if m1 & m2:
        return False
    grown = m1
    for v in g1.support:
        grown |= env.nbr_mask[v]
    if grown & m2:
        return False
    if g1.klass == "small" and g2.klass == "small":
        return g1.ctype == g2.ctype
    if g1.klass == "large" and g2.klass == "large":
        return False
    small = g1 if g1.klass == "small" else g2
    return small.ctype == EVEN


# ----------------------------------------------------------------------
# Region partition functions and contour weights
# ----------------------------------------------------------------------


def region_interior(env: TorusEnv, region_mask: int) -> int:
    """Lambda-degree interior: vertices of the region with no outside neighbor."""
    out = 0
    for v in env.mask_vertices(region_mask):
        if not env.nbr_mask[v] & ~region_mask & env.full_mask:
            out |= 1 << v
    return out


def match_region_poly(t: Torus, region, phi: str) -> IntPolynomial:
    """Z^phi_match(Lambda; z) for an induced closed subgraph Lambda.

    Sums z^{||Gamma||} over matching sets of small type-phi contours whose
    supports lie in the interior of the region.  Computed by enumerating the
    configurations that equal sigma_phi outside the interior.
    """
    env = env_for(t)
    if phi not in (EVEN, ODD):
        raise ValidationError("ground state must be 'even' or 'odd'")
    region_mask = region if isinstance(region, int) else sum(1 << v for v in region)
    key = (region_mask, phi)
    memo = env._region_memo
    if key in memo:
        return memo[key]

    interior = region_interior(env, region_mask)
    alpha = env.alpha
    coeffs = [0] * (alpha + 1)
    if interior == 0:
        coeffs[0] = 1
        memo[key] = IntPolynomial(coeffs)
        return memo[key]

    fixed = env.ground_mask(phi) & ~interior
    blocked = 0
    for v in env.mask_vertices(fixed):
        blocked |= env.nbr_mask[v]
    free = [v for v in env.mask_vertices(interior) if not (blocked >> v) & 1]

    # enumerate independent subsets of the free interior vertices
    stack = [(0, 0)]
    subsets = []
    while stack:
        i, occ = stack.pop()
        if i == len(free):
            subsets.append(occ)
            continue
        v = free[i]
        stack.append((i + 1, occ))
        if not (occ & env.nbr_mask[v]):
            stack.append((i + 1, occ | (1 << v)))

    for sub in subsets:
        occ = fixed | sub
        inc = env.incorrect_mask(occ)
        if inc & ~interior:
            continue
        if inc:
            klass, typ = _config_class(env, occ)
            if klass != "small" or typ != phi:
                continue
        coeffs[alpha - bin(occ).count("1")] += 1
    memo[key] = IntPolynomial(coeffs)
    return memo[key]


def contour_weight(g: Contour, z: Fraction) -> Fraction:
    """w(gamma; z) = z^{||gamma||} * Z^{phi-bar}(int_{phi-bar}) / Z^{phi}(int_{phi-bar})."""
    env = _env_for_sides(g.sides)
    z = Fraction(z)
    phi = g.ctype
    other = _other(phi)
    region = g.interior_mask(other)
    num = match_region_poly(env.torus, region, other)(z)
    den = match_region_poly(env.torus, region, phi)(z)
    if den == 0:
        raise DenominatorZeroError(f"weight denominator vanished at z = {z}")
    return z**g.energy * Fraction(num, den)


def weight_polynomial_pair(g: Contour):
    """(numerator_poly, denominator_poly, energy) of the weight as exact data."""
    region = g.interior_mask(_other(g.ctype))
    env = _env_for_sides(g.sides)
    num = match_region_poly(env.torus, region, _other(g.ctype))
    den = match_region_poly(env.torus, region, g.ctype)
    return num, den, g.energy


# ----------------------------------------------------------------------
# Closed-subgraph predicate and counting profile
# ----------------------------------------------------------------------


def is_closed_region(t: Torus, region, catalog: ContourCatalog | None = None) -> bool:
    """True iff every small contour supported in the interior has its
    interior inside the region interior."""
    env = env_for(t)
    region_mask = region if isinstance(region, int) else sum(1 << v for v in region)
    interior = region_interior(env, region_mask)
    if catalog is None:
        catalog = contour_catalog(t)
    for g in catalog.small_even + catalog.small_odd:
        if g.support_mask & ~interior:
            continue
        if g.interior_mask() & ~interior:
            return False
    return True


def contour_count_profile(t: Torus, vertex: int = 0, catalog: ContourCatalog | None = None):
    """Counts of small contours through a vertex, keyed by support size."""
    if catalog is None:
        catalog = contour_catalog(t)
    profile = {}
    for g in catalog.small_even + catalog.small_odd:
        if vertex in g.support:
            m = len(g.support)
            profile[m] = profile.get(m, 0) + 1
    return dict(sorted(profile.items()))


# ----------------------------------------------------------------------
# Zero-freeness radii
# ----------------------------------------------------------------------


def peierls_rho(d: int) -> Fraction:
    """rho(d) = 1 / (2 d 3^d): the Peierls constant."""
    if d < 1:
        raise BadParametersError("dimension must be positive")
    return Fraction(1, 2 * d * 3**d)


def delta_constants(d: int, c_balance: float, c_d: float):
    """(delta_1, delta_2) from the closed formulas; checks delta_2 < delta_1."""
    if d < 2:
        raise BadParametersError("dimension must be at least 2")
    if c_balance <= 0:
        raise BadParametersError("balance constant must be positive")
    if c_d <= 1:
        raise BadParametersError("site-animal growth constant must exceed 1")
    rho = float(peierls_rho(d))
    damp = 5.0 * math.exp(-c_balance * 3**d)
    delta1 = math.exp(-(math.log(2 * c_d) + 4 * d + damp + c_balance) / rho)
    delta2 = math.exp(-(math.log(8 * math.exp(c_balance) * c_d) + 4 * d * math.e**4 + damp) / rho)
    if not delta2 < delta1:
        raise BadParametersError("delta_2 must be smaller than delta_1")
    return delta1, delta2


# ----------------------------------------------------------------------
# JSON catalog export
# ----------------------------------------------------------------------


def catalog_to_json(catalog: ContourCatalog) -> str:
    items = []
    for g in catalog.all():
        items.append(
            {
                "support": list(g.support),
                "sigma": list(g.sigma),
                "class": g.klass,
                "type": g.ctype,
                "energy": g.energy,
            }
        )
    return json.dumps({"torus": list(catalog.sides), "contours": items})
