"""Newtonian potential of a radial charge density and the Coulomb energy.

For a radial density rho = u^2 the convolution with the kernel 1/(4*pi*|x|)
collapses to one dimension,

    phi(r) = (1/r) * int_0^r rho(s) s^2 ds + int_r^infty rho(s) s ds,

with the removable singularity at r = 0 given by phi(0) = int rho(s) s ds.
Both running integrals come from the 4th-order cumulative rule, so evaluating
phi on the whole grid is O(n). A direct O(n^2) double quadrature of the same
energy is kept as an independent oracle for tests.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .radial import FOUR_PI, RadialFunction, cumulative_integral, integrate

BRUTE_FORCE_MAX_N = 512


@dataclass
class CoulombPair:
    u: RadialFunction
    phi: RadialFunction
    total_charge: float


def potential_from_density(grid, rho: np.ndarray) -> np.ndarray:
    """phi values on the grid for an arbitrary radial density rho (not u^2).

    Used directly by the solver, whose Jacobian needs the potential of the
    mixed density 2*u*v.
    """
    r = grid.nodes
    inner = cumulative_integral(r, rho * r * r)
    outer_cum = cumulative_integral(r, rho * r)
    outer = outer_cum[-1] - outer_cum
    phi = np.empty(grid.n)
    phi[0] = outer[0]
    phi[1:] = inner[1:] / r[1:] + outer[1:]
    return phi


def newtonian_potential(u: RadialFunction) -> CoulombPair:
    """Potential of the density u^2 plus the total charge Q = int u^2."""
    rho = u.values * u.values
    phi = RadialFunction(u.grid, potential_from_density(u.grid, rho))
    q = integrate(RadialFunction(u.grid, rho))
    return CoulombPair(u=u, phi=phi, total_charge=q)


def coulomb_energy(u: RadialFunction, pair: CoulombPair | None = None) -> float:
    """C = int (I2 * u^2) u^2 = int phi_u u^2 over R^3; nonnegative."""
    if pair is None:
        pair = newtonian_potential(u)
    return integrate(RadialFunction(u.grid, pair.phi.values * u.values ** 2))


def brute_force_coulomb(u: RadialFunction) -> float:
    """O(n^2) oracle for coulomb_energy via the radially averaged kernel.

    C = (4*pi)^2 int int rho(r) rho(s) r^2 s^2 min(1/r, 1/s) dr ds / (4*pi).
    Restricted to coarse grids; it exists to cross-check the fast path, not
    to be fast.
    """
    g = u.grid
    if g.n > BRUTE_FORCE_MAX_N:
        raise ValueError("oracle is for desk-scale cross-checks (n <= %d)"
                         % BRUTE_FORCE_MAX_N)
    r = g.nodes
    rho = u.values * u.values
    f = g.weights * rho * r * r
    with np.errstate(divide="ignore"):
        inv = np.where(r > 0.0, 1.0 / np.maximum(r, 1e-300), 0.0)
    kern = np.minimum.outer(inv, inv)
    # row/column 0 of kern is min(inf, 1/s) -> 1/s, but inv[0] was zeroed;
    # rebuild those entries explicitly
    kern[0, 1:] = inv[1:]
    kern[1:, 0] = inv[1:]
    kern[0, 0] = 0.0  # weighted by r^2 s^2 = 0 anyway
    return FOUR_PI * float(f @ kern @ f)
