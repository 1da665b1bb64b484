"""Tori, site graphs and independent-set families.

Vertices of a torus with sides (l_1, ..., l_d) carry coordinates
(v_1, ..., v_d) with v_i in {-l_i/2, ..., l_i/2 - 1} and are indexed
0..n-1 by mixed-radix (row-major) encoding.  All sides must be even, so
the vertex set splits into two equal parity classes; each class is a
maximum independent set of the torus graph.  Sides of length 2 would
create parallel edges under the usual "step by one" adjacency; these are
collapsed, so the graph is always simple.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from itertools import product

from .errors import (
    CycleTooShortError,
    EmptySidesError,
    OddSideError,
    TooLargeError,
    ValidationError,
)

#: Default cap on exhaustive independent-set enumeration (vertex count).
DEFAULT_ENUM_CAP = 36


def enum_cap() -> int:
    """Current enumeration cap; the TZLAB_CAP env var overrides the default."""
    raw = os.environ.get("TZLAB_CAP")
    if raw is None:
        return DEFAULT_ENUM_CAP
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(f"TZLAB_CAP must be an integer, got {raw!r}")


@dataclass(frozen=True)
class SiteGraph:
    """Simple undirected graph with sorted, deduplicated neighbor lists."""

    n: int
    nbrs: tuple  # tuple of tuples of vertex indices

    def __post_init__(self):
        if self.n != len(self.nbrs):
            raise ValidationError("neighbor table size does not match vertex count")
        for v, row in enumerate(self.nbrs):
            for u in row:
                if u == v:
                    raise ValidationError(f"self-loop at vertex {v}")
                if v not in self.nbrs[u]:
                    raise ValidationError(f"asymmetric adjacency {v}->{u}")

    @staticmethod
    def from_edges(n: int, edges) -> "SiteGraph":
        nbrs = [set() for _ in range(n)]
        for u, v in edges:
            if u == v:
                raise ValidationError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValidationError(f"edge ({u},{v}) out of range")
            nbrs[u].add(v)
            nbrs[v].add(u)
        return SiteGraph(n, tuple(tuple(sorted(s)) for s in nbrs))

    @staticmethod
    def single_vertex() -> "SiteGraph":
        return SiteGraph(1, ((),))

    @staticmethod
    def cycle(n: int) -> "SiteGraph":
        """C_n; C_2 degenerates to a single edge, C_1 to a single vertex."""
        if n < 1:
            raise ValidationError("cycle length must be positive")
        if n == 1:
            return SiteGraph.single_vertex()
        return SiteGraph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])

    @staticmethod
    def path(n: int) -> "SiteGraph":
        if n < 1:
            raise ValidationError("path length must be positive")
        return SiteGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])

    def degree(self, v: int) -> int:
        return len(self.nbrs[v])

    def edges(self):
        """Sorted list of edges (u, v) with u < v."""
        return sorted((v, u) for v in range(self.n) for u in self.nbrs[v] if v < u)

    def neighbor_masks(self):
        return [sum(1 << u for u in row) for row in self.nbrs]

    def induced(self, vertices) -> "SiteGraph":
        """Induced subgraph; vertices are relabeled 0..k-1 in sorted order."""
        vs = sorted(set(vertices))
        pos = {v: i for i, v in enumerate(vs)}
        nbrs = tuple(tuple(pos[u] for u in self.nbrs[v] if u in pos) for v in vs)
        return SiteGraph(len(vs), nbrs)

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "edges": [list(e) for e in self.edges()]})

    @staticmethod
    def from_json(text: str) -> "SiteGraph":
        data = json.loads(text)
        return SiteGraph.from_edges(int(data["n"]), [tuple(e) for e in data["edges"]])


@dataclass(frozen=True)
class Torus:
    """Even discrete torus with mixed-radix vertex indexing."""

    sides: tuple
    graph: SiteGraph = field(compare=False)

    @property
    def d(self) -> int:
        return len(self.sides)

    @property
    def n_vertices(self) -> int:
        return self.graph.n

    @property
    def alpha(self) -> int:
        """Half the vertex count: the maximum independent-set size."""
        return self.n_vertices // 2

    # -- coordinates ---------------------------------------------------

    def encode(self, coords) -> int:
        idx = 0
        for l, c in zip(self.sides, coords):
            idx = idx * l + (c % l)
        return idx

    def decode(self, index: int):
        out = []
        for l in reversed(self.sides):
            c = index % l
            index //= l
            out.append(c - l if c >= l // 2 else c)
        return tuple(reversed(out))

    def parity(self, v: int) -> int:
        return sum(self.decode(v)) % 2

    def even_vertices(self):
        return tuple(v for v in range(self.n_vertices) if self.parity(v) == 0)

    def odd_vertices(self):
        return tuple(v for v in range(self.n_vertices) if self.parity(v) == 1)

    def even_mask(self) -> int:
        return sum(1 << v for v in self.even_vertices())

    def odd_mask(self) -> int:
        return sum(1 << v for v in self.odd_vertices())

    # -- geometry used by the contour machinery ------------------------

    def inf_neighborhood(self, v: int):
        """Distinct vertices within sup-distance 1 of v (at most 3^d)."""
        base = self.decode(v)
        seen = []
        for offs in product((-1, 0, 1), repeat=self.d):
            u = self.encode(tuple(c + o for c, o in zip(base, offs)))
            if u not in seen:
                seen.append(u)
        return tuple(seen)

    def box_diameter(self, vertices) -> int:
        """Largest marginal size of the vertex set; 0 for the empty set."""
        if not vertices:
            return 0
        marginals = [set() for _ in range(self.d)]
        for v in vertices:
            for i, c in enumerate(self.decode(v)):
                marginals[i].add(c % self.sides[i])
        return max(len(m) for m in marginals)

    def coordinate_closure(self, vertices):
        """cl(A): the product of the coordinate marginals of A."""
        marginals = [set() for _ in range(self.d)]
        for v in vertices:
            for i, c in enumerate(self.decode(v)):
                marginals[i].add(c % self.sides[i])
        return frozenset(self.encode(c) for c in product(*[sorted(m) for m in marginals]))

    # -- automorphisms --------------------------------------------------

    def reflection_perm(self):
        """Odd involution: first coordinate c -> 1 - c (mod l_1)."""
        perm = []
        for v in range(self.n_vertices):
            c = list(self.decode(v))
            c[0] = 1 - c[0]
            perm.append(self.encode(tuple(c)))
        return tuple(perm)

    def translation_perm(self, shift):
        """Translation automorphism by an integer shift vector."""
        if len(shift) != self.d:
            raise ValidationError("shift dimension mismatch")
        perm = []
        for v in range(self.n_vertices):
            c = self.decode(v)
            perm.append(self.encode(tuple(a + b for a, b in zip(c, shift))))
        return tuple(perm)

    def even_translation_perm(self):
        """A parity-preserving translation: by 2 if d = 1, else by (1,1,0,...)."""
        if self.d == 1:
            return self.translation_perm((2,))
        return self.translation_perm((1, 1) + (0,) * (self.d - 2))


def build_torus(sides) -> Torus:
    """Torus on even side lengths; parallel edges from sides of 2 are collapsed."""
    sides = tuple(int(s) for s in sides)
    if not sides:
        raise EmptySidesError("torus needs at least one side")
    for s in sides:
        if s < 2:
            raise ValidationError(f"side {s} too small; sides must be >= 2")
        if s % 2:
            raise OddSideError(f"side {s} is odd; even tori only")
    sides = tuple(sorted(sides))
    strides = []
    acc = 1
    for l in reversed(sides):
        strides.append(acc)
        acc *= l
    strides.reverse()
    n = acc
    edges = set()
    for idx in range(n):
        coords = [(idx // st) % l for st, l in zip(strides, sides)]
        for k, l in enumerate(sides):
            for dlt in (1, -1):
                c2 = list(coords)
                c2[k] = (c2[k] + dlt) % l
                j = sum(c * st for c, st in zip(c2, strides))
                if j != idx:
                    edges.add((min(idx, j), max(idx, j)))
    return Torus(sides, SiteGraph.from_edges(n, edges))


def cartesian_cycle(n: int, g: SiteGraph) -> SiteGraph:
    """C_n box g with vertex (i, v) indexed i*|V(g)| + v."""
    if n < 3:
        raise CycleTooShortError(f"cycle length {n} < 3")
    m = g.n
    edges = []
    for i in range(n):
        for v in range(m):
            for u in g.nbrs[v]:
                if u > v:
                    edges.append((i * m + v, i * m + u))
            j = (i + 1) % n
            edges.append((min(i * m + v, j * m + v), max(i * m + v, j * m + v)))
    return SiteGraph.from_edges(n * m, edges)


@dataclass(frozen=True)
class IndSetFamily:
    """Exhaustive list of independent sets of a host graph.

    Sets are vertex bitmasks in strictly ascending order, so indices are
    stable across runs.  For tori the positions of the two alternating
    maximum sets are recorded and the deficiency ``alpha - |S|`` is exposed.
    """

    host: SiteGraph
    sets: tuple  # ascending bitmasks
    index_empty: int = 0
    index_even: int | None = None
    index_odd: int | None = None
    alpha: int | None = None

    def __len__(self):
        return len(self.sets)

    @property
    def size(self) -> int:
        return len(self.sets)

    def set_size(self, i: int) -> int:
        return bin(self.sets[i]).count("1")

    def defect(self, i: int) -> int:
        """||S|| = alpha - |S| (torus families only)."""
        if self.alpha is None:
            raise ValidationError("defect is defined only for torus families")
        return self.alpha - self.set_size(i)

    def defects(self):
        return [self.defect(i) for i in range(len(self.sets))]

    def compatible(self, i: int, j: int) -> bool:
        return (self.sets[i] & self.sets[j]) == 0

    def compatible_indices(self, i: int):
        s = self.sets[i]
        return [j for j, t in enumerate(self.sets) if s & t == 0]


def enumerate_independent_masks(g: SiteGraph):
    """All independent sets of g as an ascending list of bitmasks."""
    nbr = g.neighbor_masks()
    sets = [0]
    for v in range(g.n):
        bit = 1 << v
        nv = nbr[v]
        sets += [s | bit for s in sets if not (s & nv)]
    sets.sort()
    return sets


def independent_sets(g, cap: int | None = None) -> IndSetFamily:
    """Exhaustive IndSetFamily of a SiteGraph or Torus (bounded by the cap)."""
    torus = g if isinstance(g, Torus) else None
    graph = torus.graph if torus is not None else g
    limit = enum_cap() if cap is None else cap
    if graph.n > limit:
        raise TooLargeError(f"{graph.n} vertices exceeds enumeration cap {limit}")
    masks = enumerate_independent_masks(graph)
    kw = {}
    if torus is not None:
        lookup = {m: i for i, m in enumerate(masks)}
        kw = {
            "index_even": lookup[torus.even_mask()],
            "index_odd": lookup[torus.odd_mask()],
            "alpha": torus.alpha,
        }
    return IndSetFamily(host=graph, sets=tuple(masks), index_empty=masks.index(0), **kw)


def torus_family(sides, cap: int | None = None) -> IndSetFamily:
    """Convenience: independent_sets(build_torus(sides))."""
    return independent_sets(build_torus(sides), cap=cap)


def compatibility_matrix(fam: IndSetFamily):
    """0/1 matrix A with A[S][T] = 1 iff S and T are disjoint."""
    import numpy as np

    n = len(fam.sets)
    a = np.zeros((n, n), dtype=np.int64)
    for i, s in enumerate(fam.sets):
        for j in range(i, n):
            if s & fam.sets[j] == 0:
                a[i, j] = 1
                a[j, i] = 1
    return a
