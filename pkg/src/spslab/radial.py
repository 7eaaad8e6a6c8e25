"""Radial meshes, quadrature with the 3-D volume weight, and finite differences.

Everything downstream works with profiles sampled on a grid over [0, r_max]
and integrals of the form 4*pi * int f(r) r^2 dr. The quadrature is composite
Simpson (4th order) with the r^2 weight folded into the integrand, so there is
no endpoint singularity to treat: the weight vanishes at r = 0.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

FOUR_PI = 4.0 * np.pi

# Profiles flagged as decaying must have a relative tail below this.
DECAY_TAIL_REL = 1e-6


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class RadialGrid:
    """1-D mesh on [0, r_max] carrying the radial volume measure.

    nodes[0] is exactly 0 and nodes[-1] exactly r_max. stretch is the
    geometric grading factor h_last/h_first; stretch == 1 means uniform
    spacing. Quadrature weights (plain dr weights, no r^2 factor) are built
    once at construction.
    """

    n: int
    r_max: float
    stretch: float
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def uniform(self) -> bool:
        return self.stretch == 1.0

    @property
    def h(self) -> float:
        """Spacing of the first cell (the uniform spacing when stretch=1)."""
        return float(self.nodes[1] - self.nodes[0])

    def same_nodes(self, other: "RadialGrid") -> bool:
        return self.n == other.n and np.array_equal(self.nodes, other.nodes)


def _simpson_weights(x: np.ndarray) -> np.ndarray:
    """Composite Simpson weights for possibly non-uniform nodes.

    Pairs of intervals get the exact three-point Newton-Cotes weights for
    their actual spacings. An odd interval count leaves one interval at the
    far end, closed with the cubic (4-point) rule over the last three
    intervals restricted to the final one; on the tail of a decaying profile
    this costs nothing measurable.
    """
    n = len(x)
    w = np.zeros(n)
    m = n - 1  # interval count
    pairs = m // 2 if m % 2 == 0 else (m - 1) // 2
    i = 2 * np.arange(pairs)
    h0 = x[i + 1] - x[i]
    h1 = x[i + 2] - x[i + 1]
    s = h0 + h1
    w[i] += s * (2.0 * h0 - h1) / (6.0 * h0)
    w[i + 1] += s ** 3 / (6.0 * h0 * h1)
    w[i + 2] += s * (2.0 * h1 - h0) / (6.0 * h1)
    if m % 2 == 1:
        # last interval [x[-2], x[-1]] integrated with the cubic through the
        # last four nodes (exact for cubics, keeps global 4th order); done in
        # coordinates shifted by x[-4] so the monomial terms stay O(h) and
        # do not cancel catastrophically at large r
        xs = x[-4:] - x[-4]
        a, b = xs[2], xs[3]
        for j in range(4):
            # integral over [a,b] of the j-th Lagrange basis on xs
            others = [xs[i] for i in range(4) if i != j]
            denom = np.prod([xs[j] - o for o in others])
            # expand the cubic basis polynomial and integrate monomials
            c0 = -others[0] * others[1] * others[2]
            c1 = (others[0] * others[1] + others[0] * others[2]
                  + others[1] * others[2])
            c2 = -(others[0] + others[1] + others[2])
            integ = (c0 * (b - a) + c1 * (b * b - a * a) / 2.0
                     + c2 * (b ** 3 - a ** 3) / 3.0
                     + (b ** 4 - a ** 4) / 4.0)
            w[n - 4 + j] += integ / denom
    return w


def make_grid(n: int, r_max: float, stretch: float = 1.0) -> RadialGrid:
    """Build a radial grid with n nodes on [0, r_max].

    stretch >= 1 is the ratio of the last cell width to the first; nodes are
    geometrically graded so that spacing grows by a constant factor per cell.
    """
    if n < 16:
        raise GridError("node count must be at least 16")
    if not np.isfinite(r_max) or r_max <= 0:
        raise GridError("non-positive domain")
    if not np.isfinite(stretch) or stretch < 1.0:
        raise GridError("stretch factor must be >= 1")
    if stretch == 1.0:
        nodes = np.linspace(0.0, r_max, n)
    else:
        q = stretch ** (1.0 / (n - 2))
        steps = q ** np.arange(n - 1)
        nodes = np.concatenate(([0.0], np.cumsum(steps)))
        nodes *= r_max / nodes[-1]
        nodes[0] = 0.0
        nodes[-1] = r_max
    weights = _simpson_weights(nodes)
    return RadialGrid(n=n, r_max=float(r_max), stretch=float(stretch),
                      nodes=nodes, weights=weights)


@dataclass
class RadialFunction:
    """Samples of a radial profile on a grid."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ValueError("profile length does not match grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("profile contains non-finite values")
        self.values = v

    @property
    def is_decaying(self) -> bool:
        """Truncation sanity: relative tail value at r_max below 1e-6."""
        vmax = float(np.max(np.abs(self.values)))
        if vmax == 0.0:
            return True
        return abs(float(self.values[-1])) <= DECAY_TAIL_REL * vmax

    @classmethod
    def from_callable(cls, grid: RadialGrid, fn) -> "RadialFunction":
        return cls(grid, np.asarray(fn(grid.nodes), dtype=float))

    def copy(self) -> "RadialFunction":
        return RadialFunction(self.grid, self.values.copy())

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv_text())

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        buf.write("r,value\n")
        for r, v in zip(self.grid.nodes, self.values):
            buf.write("%.17g,%.17g\n" % (r, v))
        return buf.getvalue()

    @classmethod
    def from_csv(cls, path: str) -> "RadialFunction":
        with open(path, "r", newline="") as fh:
            text = fh.read()
        return cls.from_csv_text(text)

    @classmethod
    def from_csv_text(cls, text: str) -> "RadialFunction":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != "r,value":
            raise ValueError("expected header 'r,value'")
        rs, vs = [], []
        for ln in lines[1:]:
            a, b = ln.split(",")
            rs.append(float(a))
            vs.append(float(b))
        nodes = np.asarray(rs)
        return cls(grid_from_nodes(nodes), np.asarray(vs))


def grid_from_nodes(nodes: np.ndarray) -> RadialGrid:
    """Reconstruct a grid object from an explicit node sequence."""
    nodes = np.asarray(nodes, dtype=float)
    if len(nodes) < 16:
        raise GridError("node count must be at least 16")
    if nodes[0] != 0.0 or np.any(np.diff(nodes) <= 0):
        raise GridError("nodes must increase strictly from 0")
    h_first = nodes[1] - nodes[0]
    h_last = nodes[-1] - nodes[-2]
    stretch = max(1.0, float(h_last / h_first))
    diffs = np.diff(nodes)
    if np.allclose(diffs, diffs[0], rtol=1e-12, atol=0.0):
        stretch = 1.0
    return RadialGrid(n=len(nodes), r_max=float(nodes[-1]), stretch=stretch,
                      nodes=nodes, weights=_simpson_weights(nodes))


def integrate(f: RadialFunction) -> float:
    """Integral of f over R^3 for radial f: 4*pi * int f(r) r^2 dr on [0, r_max]."""
    g = f.grid
    return FOUR_PI * float(np.dot(g.weights, f.values * g.nodes ** 2))


def lp_power(u: RadialFunction, q: float) -> float:
    """int |u|^q over R^3."""
    if q < 1:
        raise ValueError("exponent must be >= 1")
    g = u.grid
    return FOUR_PI * float(np.dot(g.weights, np.abs(u.values) ** q * g.nodes ** 2))


def _deriv_uniform(v: np.ndarray, h: float, regular: bool) -> np.ndarray:
    """4th-order first derivative on a uniform grid.

    regular=True imposes the even-profile condition v'(0) = 0.
    """
    n = len(v)
    out = np.empty(n)
    out[2:-2] = (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * h)
    out[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / (12.0 * h)
    out[-2] = (-v[-5] + 6.0 * v[-4] - 18.0 * v[-3] + 10.0 * v[-2] + 3.0 * v[-1]) / (12.0 * h)
    out[-1] = (3.0 * v[-5] - 16.0 * v[-4] + 36.0 * v[-3] - 48.0 * v[-2] + 25.0 * v[-1]) / (12.0 * h)
    if regular:
        out[0] = 0.0
    else:
        out[0] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h)
    return out


def _deriv_nonuniform(x: np.ndarray, v: np.ndarray, regular: bool) -> np.ndarray:
    """Second-order three-point derivative for graded grids."""
    n = len(v)
    out = np.empty(n)
    h0 = x[1:-1] - x[:-2]
    h1 = x[2:] - x[1:-1]
    out[1:-1] = (-h1 / (h0 * (h0 + h1)) * v[:-2]
                 + (h1 - h0) / (h0 * h1) * v[1:-1]
                 + h0 / (h1 * (h0 + h1)) * v[2:])
    ha = x[1] - x[0]
    hb = x[2] - x[1]
    out[0] = 0.0 if regular else (
        -(2 * ha + hb) / (ha * (ha + hb)) * v[0]
        + (ha + hb) / (ha * hb) * v[1]
        - ha / (hb * (ha + hb)) * v[2])
    ha = x[-2] - x[-3]
    hb = x[-1] - x[-2]
    out[-1] = (hb / (ha * (ha + hb)) * v[-3]
               - (ha + hb) / (ha * hb) * v[-2]
               + (ha + 2 * hb) / (hb * (ha + hb)) * v[-1])
    return out


def derivative(u: RadialFunction, regular: bool = True) -> RadialFunction:
    """Finite-difference radial derivative u'(r).

    On uniform grids the stencil is 4th order (one-sided at the ends); graded
    grids fall back to the 3-point formulas. regular=True enforces u'(0) = 0,
    correct for radial profiles of functions smooth at the origin.
    """
    if u.grid.n < 5:
        raise ValueError("derivative needs at least 5 nodes")
    if u.grid.uniform:
        dv = _deriv_uniform(u.values, u.grid.h, regular)
    else:
        dv = _deriv_nonuniform(u.grid.nodes, u.values, regular)
    return RadialFunction(u.grid, dv)


def apply_laplacian(grid: RadialGrid, v: np.ndarray) -> np.ndarray:
    """Radial Laplacian v'' + (2/r) v' for a regular profile.

    At the origin the even extension gives lap = 3 v''(0). The last entry is
    set to 0 (it sits on the Dirichlet boundary in every PDE use). Uniform
    grids get 4th-order stencils except the penultimate node, which drops to
    the 3-point formula; graded grids are 2nd order throughout.
    """
    n = grid.n
    r = grid.nodes
    out = np.empty(n)
    if grid.uniform:
        h = grid.h
        h2 = h * h
        # origin, even extension: 3*v''(0) with a one-sided 4th-order stencil
        out[0] = 3.0 * (-30.0 * v[0] + 32.0 * v[1] - 2.0 * v[2]) / (12.0 * h2)
        # node 1: centered 5-point using the even image v[-1] := v[1]
        upp = (16.0 * v[0] - 31.0 * v[1] + 16.0 * v[2] - v[3]) / (12.0 * h2)
        up = (v[1] - 8.0 * v[0] + 8.0 * v[2] - v[3]) / (12.0 * h)
        out[1] = upp + 2.0 / r[1] * up
        upp_i = (-v[:-4] + 16.0 * v[1:-3] - 30.0 * v[2:-2]
                 + 16.0 * v[3:-1] - v[4:]) / (12.0 * h2)
        up_i = (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * h)
        out[2:-2] = upp_i + 2.0 / r[2:-2] * up_i
        upp2 = (v[-3] - 2.0 * v[-2] + v[-1]) / h2
        up2 = (v[-1] - v[-3]) / (2.0 * h)
        out[-2] = upp2 + 2.0 / r[-2] * up2
    else:
        x = r
        h0 = x[1:-1] - x[:-2]
        h1 = x[2:] - x[1:-1]
        upp = 2.0 * (h1 * v[:-2] - (h0 + h1) * v[1:-1] + h0 * v[2:]) / (h0 * h1 * (h0 + h1))
        up = (-h1 / (h0 * (h0 + h1)) * v[:-2]
              + (h1 - h0) / (h0 * h1) * v[1:-1]
              + h0 / (h1 * (h0 + h1)) * v[2:])
        out[1:-1] = upp + 2.0 / x[1:-1] * up
        ha, hb = x[1] - x[0], x[2] - x[1]
        v0pp = 2.0 * (hb * v[0] - (ha + hb) * v[1] + ha * v[2]) / (ha * hb * (ha + hb))
        out[0] = 3.0 * v0pp
    out[-1] = 0.0
    return out


def cumulative_integral(x: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Running integral F(x_i) = int_0^{x_i} f, 4th-order accurate.

    Each cell integral is the average of the two quadratic interpolants
    through the neighbouring node triples (one for the first and last cell),
    which is exact on cubics over a uniform mesh and O(h^4) in general.
    """
    n = len(x)
    if n < 3:
        raise ValueError("need at least 3 nodes")

    def quad_piece(xa, xb, xc, fa, fb, fc, s, t):
        d1 = (fb - fa) / (xb - xa)
        d2 = ((fc - fb) / (xc - xb) - d1) / (xc - xa)

        def F(z):
            return (fa * z + d1 * (z - xa) ** 2 / 2.0
                    + d2 * (z ** 3 / 3.0 - (xa + xb) * z ** 2 / 2.0 + xa * xb * z))

        return F(t) - F(s)

    # integral over [x_i, x_{i+1}] from the triple starting at i (right) and
    # from the triple ending at i+1 (left)
    eR = quad_piece(x[:-2], x[1:-1], x[2:], f[:-2], f[1:-1], f[2:],
                    x[:-2], x[1:-1])
    eL = quad_piece(x[:-2], x[1:-1], x[2:], f[:-2], f[1:-1], f[2:],
                    x[1:-1], x[2:])
    iv = np.empty(n - 1)
    iv[0] = eR[0]
    iv[-1] = eL[-1]
    iv[1:-1] = 0.5 * (eL[:-1] + eR[1:])
    out = np.empty(n)
    out[0] = 0.0
    np.cumsum(iv, out=out[1:])
    return out


def resample(u: RadialFunction, grid: RadialGrid, kind: str = "cubic") -> RadialFunction:
    """Resample a profile onto another grid, zero beyond the source r_max.

    kind="cubic" uses a C^2 cubic spline; kind="pchip" uses the monotone
    cubic, which never overshoots and is the right choice for rescaled
    ground-state iterates.
    """
    from scipy.interpolate import CubicSpline, PchipInterpolator

    if kind == "cubic":
        interp = CubicSpline(u.grid.nodes, u.values)
    elif kind == "pchip":
        interp = PchipInterpolator(u.grid.nodes, u.values)
    else:
        raise ValueError("unknown resampling kind %r" % kind)
    vals = np.where(grid.nodes <= u.grid.r_max,
                    interp(np.minimum(grid.nodes, u.grid.r_max)), 0.0)
    return RadialFunction(grid, vals)
