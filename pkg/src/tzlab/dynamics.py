"""Recursive graph families as dynamical systems, plus rasterized diagnostics.

The occupation ratio of rooted d-ary trees iterates r -> lambda/(1+r)^d;
Fibonacci trees iterate a two-step variant; diamond hierarchical graphs
renormalize a triple of marked partition sums.  Ratio orbits are tracked in
homogeneous coordinates so passes through infinity are harmless, and
bifurcation-style images map the discrete spherical derivative of a pixel
grid of parameters through log1p.
"""

from __future__ import annotations

import cmath
import json
import math
import struct
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import PoleError, TooLargeError, ValidationError, ZeroLambdaError
from .exactpoly import IntPolynomial, indep_poly
from .lattice import SiteGraph, Torus

# ----------------------------------------------------------------------
# Occupation-ratio iteration
# ----------------------------------------------------------------------


def occupation_map(lam: complex, d: int, r: complex) -> complex:
    """f_lambda(r) = lambda / (1+r)^d."""
    if d < 1:
        raise ValidationError("degree must be positive")
    w = 1 + r
    if w == 0:
        raise PoleError("occupation map has a pole at r = -1")
    return lam / w**d


def occupation_orbit_sphere(lam: complex, d: int, steps: int, r0=None):
    """Orbit of the occupation map in homogeneous coordinates (y : x), r = y/x.

    Starts at r0 (default: lambda, the critical orbit) and renormalizes each
    step, so r = -1 and r = infinity are regular points.
    """
    y, x = (complex(lam), 1.0 + 0j) if r0 is None else (complex(r0), 1.0 + 0j)
    out = [(y, x)]
    for _ in range(steps):
        y, x = lam * x**d, (x + y) ** d
        scale = max(abs(y), abs(x))
        if scale > 1e100 or (0 < scale < 1e-100):
            y, x = y / scale, x / scale
        out.append((y, x))
    return out


def chordal_distance(p1, p2) -> float:
    """Chordal metric on the Riemann sphere for homogeneous pairs (y : x)."""
    y1, x1 = p1
    y2, x2 = p2
    num = 2.0 * abs(y1 * x2 - y2 * x1)
    den = math.hypot(abs(x1), abs(y1)) * math.hypot(abs(x2), abs(y2))
    if den == 0:
        raise ValidationError("zero homogeneous vector")
    return num / den


def lambda_critical(d: int):
    """(lambda_-, lambda_+) = (-d^d/(d+1)^{d+1}, d^d/(d-1)^{d+1}) as Fractions."""
    if d < 2:
        raise ValidationError("need d >= 2")
    return (
        Fraction(-(d**d), (d + 1) ** (d + 1)),
        Fraction(d**d, (d - 1) ** (d + 1)),
    )


# ----------------------------------------------------------------------
# Exact tree polynomials
# ----------------------------------------------------------------------


def dary_tree_poly(d: int, depth: int, coeff_budget: int = 10**7) -> IntPolynomial:
    """Z of the depth-n rooted d-ary tree via x' = (x+y)^d, y' = lambda x^d."""
    if d < 2:
        raise ValidationError("need d >= 2")
    if depth < 0:
        raise ValidationError("depth must be non-negative")
    x, y = IntPolynomial.one(), IntPolynomial.x()
    for _ in range(depth):
        if (x.degree + 1) * d > coeff_budget:
            raise TooLargeError("tree polynomial exceeds the coefficient budget")
        x, y = (x + y) ** d, IntPolynomial.x() * x**d
    return x + y


def dary_tree_ratio_orbit(lam: complex, d: int, depth: int):
    """Ratio orbit r_n = y_n/x_n at a parameter, in homogeneous coordinates."""
    return occupation_orbit_sphere(lam, d, depth)


@dataclass(frozen=True)
class OrbitResult:
    points: tuple
    converged: bool


def fibonacci_ratio_orbit(lam: complex, steps: int, tol: float = 1e-12) -> OrbitResult:
    """Orbit r_{n+2} = lambda / ((1+r_{n+1})(1+r_n)) from (lambda/(1+lambda), lambda).

    Raises PoleError when an iterate hits -1 exactly; sets the convergence
    flag once successive values differ by less than tol.
    """
    if lam == -1:
        raise PoleError("seed r_1 = lambda/(1+lambda) undefined at lambda = -1")
    r_prev = complex(lam)
    r_cur = complex(lam) / (1 + complex(lam))
    pts = [r_prev, r_cur]
    converged = False
    for _ in range(steps):
        d1, d0 = 1 + r_cur, 1 + r_prev
        if d1 == 0 or d0 == 0:
            raise PoleError("ratio orbit hit the pole at -1")
        r_next = complex(lam) / (d1 * d0)
        pts.append(r_next)
        # the recursion looks two steps back, so both gaps must close
        if abs(r_next - r_cur) < tol and abs(r_cur - r_prev) < tol:
            converged = True
            break
        r_prev, r_cur = r_cur, r_next
    return OrbitResult(points=tuple(pts), converged=converged)


# ----------------------------------------------------------------------
# Diamond hierarchical renormalization
# ----------------------------------------------------------------------


def diamond_initial():
    """Exact marked sums of the 4-cycle with antipodal marked vertices:
    (x, y, z) = ((1+lambda)^2, lambda, lambda^2)."""
    lam = IntPolynomial.x()
    return ((IntPolynomial.one() + lam) ** 2, lam, lam * lam)


def diamond_step(lam, state):
    """One renormalization step of the marked partition sums.

    Numeric mode (lam complex): G(x,y,z) =
    ((x^2+y^2/lam)^2, y^2 (x+z/lam)^2 / lam, (y^2+z^2/lam)^2 / lam^2).
    """
    x, y, z = state
    if lam == 0:
        raise ZeroLambdaError("diamond step undefined at lambda = 0")
    x2, y2, z2 = x * x, y * y, z * z
    return (
        (x2 + y2 / lam) ** 2,
        y2 * (x + z / lam) ** 2 / lam,
        (y2 + z2 / lam) ** 2 / lam**2,
    )


def diamond_step_exact(state):
    """Exact polynomial renormalization step; divisions by lambda are exact.

    Input/output triples satisfy lambda | y and lambda^2 | z, which keeps all
    three coordinates integer polynomials.
    """
    x, y, z = state
    x2, y2, z2 = x * x, y * y, z * z
    new_x = (x2 + y2.shifted_down(1)) ** 2
    new_y = (y2 * (x + z.shifted_down(1)) ** 2).shifted_down(1)
    new_z = ((y2 + z2.shifted_down(1)) ** 2).shifted_down(2)
    return new_x, new_y, new_z


def diamond_step_printed(lam: complex, state):
    """The uncorrected renormalization map (numeric only, for experiments):
    F(x,y,z) = ((x^2+y^2/lam)^2, y^2 (x+z/lam)^2, (y^2+z^2/lam)^2).

    Composed with pi(x,y,z) = x+2y+z this map does not reproduce the
    partition function of the next diamond graph; diamond_step does.
    """
    x, y, z = state
    if lam == 0:
        raise ZeroLambdaError("diamond step undefined at lambda = 0")
    return ((x * x + y * y / lam) ** 2, y * y * (x + z / lam) ** 2, (y * y + z * z / lam) ** 2)


def diamond_partition(depth: int) -> IntPolynomial:
    """Z of the level-n diamond graph: pi(x,y,z) = x + 2y + z after n-1 steps."""
    if depth < 1:
        raise ValidationError("diamond graphs start at level 1")
    state = diamond_initial()
    for _ in range(depth - 1):
        state = diamond_step_exact(state)
    x, y, z = state
    return x + y + y + z


def diamond_graph(depth: int) -> SiteGraph:
    """The level-n diamond graph itself (brute-force oracle for small n)."""
    if depth < 1:
        raise ValidationError("diamond graphs start at level 1")
    edges = [(0, 2), (2, 1), (1, 3), (3, 0)]  # marked vertices 0, 1
    n = 4
    for _ in range(depth - 1):
        new_edges = []
        count = n
        # replace each edge by a copy of the level-1 diamond
        for u, v in edges:
            a, b = count, count + 1
            count += 2
            new_edges += [(u, a), (a, v), (v, b), (b, u)]
        edges = new_edges
        n = count
    return SiteGraph.from_edges(n, edges)


# ----------------------------------------------------------------------
# Spherical-derivative rasters
# ----------------------------------------------------------------------

MAX_RASTER_SIDE = 4096


@dataclass(frozen=True)
class Raster:
    """Row-major scalar field over a rectangular parameter window."""

    window: tuple  # (re_min, re_max, im_min, im_max)
    width: int
    height: int
    values: object  # float ndarray of shape (height, width)

    def pixel_center(self, i: int, j: int) -> complex:
        re_min, re_max, im_min, im_max = self.window
        dx = (re_max - re_min) / self.width
        dy = (im_max - im_min) / self.height
        return complex(re_min + (j + 0.5) * dx, im_min + (i + 0.5) * dy)

    def to_pgm(self) -> bytes:
        vals = np.asarray(self.values, dtype=float)
        lo, hi = float(vals.min()), float(vals.max())
        if hi > lo:
            scaled = np.round((vals - lo) / (hi - lo) * 255).astype(np.uint8)
        else:
            scaled = np.zeros_like(vals, dtype=np.uint8)
        header = f"P5\n{self.width} {self.height}\n255\n".encode()
        return header + scaled.tobytes()

    def to_raw(self):
        """(bytes, json_sidecar) with little-endian float64 values."""
        vals = np.asarray(self.values, dtype="<f8")
        sidecar = json.dumps(
            {
                "window": list(self.window),
                "width": self.width,
                "height": self.height,
                "dtype": "<f8",
                "order": "row-major",
            }
        )
        return vals.tobytes(), sidecar


def _parameter_grid(window, width, height):
    re_min, re_max, im_min, im_max = window
    dx = (re_max - re_min) / width
    dy = (im_max - im_min) / height
    xs = re_min + (np.arange(width) + 0.5) * dx
    ys = im_min + (np.arange(height) + 0.5) * dy
    return xs[None, :] + 1j * ys[:, None], dx


def _sphere_iterate_grid(lam, d, iterations):
    """Homogeneous-coordinate iteration of the occupation map on a lambda grid."""
    y = lam.copy()
    x = np.ones_like(lam)
    for _ in range(iterations):
        y, x = lam * x**d, (x + y) ** d
        scale = np.maximum(np.abs(y), np.abs(x))
        bad = (scale > 1e50) | ((scale < 1e-50) & (scale > 0))
        if bad.any():
            y = np.where(bad, y / scale, y)
            x = np.where(bad, x / scale, x)
        dead = scale == 0
        if dead.any():
            x = np.where(dead, 1.0, x)
    return y, x


def _fibonacci_iterate_grid(lam, iterations):
    den = 1 + lam
    y_prev, x_prev = lam, np.ones_like(lam)
    y_cur, x_cur = lam, den
    for _ in range(iterations):
        # r'' = lam / ((1+r')(1+r)) in homogeneous coordinates
        y_next = lam * x_cur * x_prev
        x_next = (x_cur + y_cur) * (x_prev + y_prev)
        scale = np.maximum(np.abs(y_next), np.abs(x_next))
        big = scale > 1e50
        y_next = np.where(big, y_next / scale, y_next)
        x_next = np.where(big, x_next / scale, x_next)
        y_prev, x_prev, y_cur, x_cur = y_cur, x_cur, y_next, x_next
    return y_cur, x_cur


def _chordal_grid(y1, x1, y2, x2):
    num = 2.0 * np.abs(y1 * x2 - y2 * x1)
    den = np.sqrt(np.abs(x1) ** 2 + np.abs(y1) ** 2) * np.sqrt(
        np.abs(x2) ** 2 + np.abs(y2) ** 2
    )
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(den > 0, num / den, 0.0)
    return np.nan_to_num(out, nan=0.0, posinf=0.0, neginf=0.0)


def spherical_raster(
    kind: str,
    params: dict,
    window,
    resolution,
    iterations: int,
    stencil: str = "horizontal",
) -> Raster:
    """Discrete spherical derivative of an iterated family over a pixel grid.

    kind: "dary" (params: d), "fibonacci", "torus_ratio" (params: torus or
    graph plus marked vertex), or "constant" (test fixture).  Per pixel the
    relevant value is computed at the pixel center; the raster value is
    log1p(chordal distance to the neighboring pixel / pixel width).
    """
    width, height = resolution
    if width > MAX_RASTER_SIDE or height > MAX_RASTER_SIDE:
        raise TooLargeError(f"resolution {width}x{height} exceeds {MAX_RASTER_SIDE}")
    lam, dx = _parameter_grid(window, width, height)

    if kind == "dary":
        y, x = _sphere_iterate_grid(lam, int(params["d"]), iterations)
    elif kind == "fibonacci":
        y, x = _fibonacci_iterate_grid(lam, iterations)
    elif kind == "torus_ratio":
        host = params["graph"]
        graph = host.graph if isinstance(host, Torus) else host
        v = int(params.get("vertex", 0))
        keep = [u for u in range(graph.n) if u != v]
        minus_v = graph.induced(keep)
        closed = [u for u in range(graph.n) if u != v and u not in graph.nbrs[v]]
        minus_nv = graph.induced(closed)
        p_num = indep_poly(minus_nv)
        p_den = indep_poly(minus_v)
        num_vals = np.zeros_like(lam)
        den_vals = np.zeros_like(lam)
        for k, c in enumerate(p_num.coeffs):
            num_vals += c * lam**k
        for k, c in enumerate(p_den.coeffs):
            den_vals += c * lam**k
        y, x = lam * num_vals, den_vals
    elif kind == "constant":
        y, x = np.zeros_like(lam), np.ones_like(lam)
    else:
        raise ValidationError(f"unknown raster kind {kind!r}")

    if stencil not in ("horizontal", "symmetric"):
        raise ValidationError("stencil must be 'horizontal' or 'symmetric'")
    right = _chordal_grid(y[:, :-1], x[:, :-1], y[:, 1:], x[:, 1:]) / dx
    deriv = np.zeros((height, width))
    deriv[:, :-1] = right
    deriv[:, -1] = deriv[:, -2] if width > 1 else 0.0
    if stencil == "symmetric" and height > 1:
        down = _chordal_grid(y[:-1, :], x[:-1, :], y[1:, :], x[1:, :]) / dx
        vert = np.zeros((height, width))
        vert[:-1, :] = down
        vert[-1, :] = vert[-2, :]
        deriv = 0.5 * (deriv + vert)
    return Raster(window=tuple(window), width=width, height=height, values=np.log1p(deriv))
