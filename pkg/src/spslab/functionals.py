"""Scalar functionals over an energy breakdown.

Every variational quantity used in this project is algebra over four
integrals of a profile u:

    A = |grad u|_2^2,  B = |u|_2^2,  C = int (I2 * u^2) u^2,  D = |u|_p^p.

Working over (A, B, C, D) instead of profiles makes the identities between
the functionals exactly testable with no quadrature noise, and makes the
fiber scaling t -> (t^3 A, t B, t^3 C, t^{2p-3} D) available in closed form.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coulomb import coulomb_energy
from .radial import RadialFunction, derivative, integrate, lp_power


class ManifoldError(ValueError):
    pass


def _check_p(p: float) -> None:
    if not (3.0 < p < 6.0):
        raise ValueError("p outside (3,6)")


def eps_exponent(p: float) -> float:
    """Exponent in eps = lambda**((p-2)/(4*(3-p))); negative for p > 3."""
    return (p - 2.0) / (4.0 * (3.0 - p))


@dataclass(frozen=True)
class EnergyBreakdown:
    A: float
    B: float
    C: float
    D: float
    p: float

    def __post_init__(self):
        _check_p(self.p)
        for name in ("A", "B", "C", "D"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError("%s must be finite and nonnegative" % name)

    @property
    def scale(self) -> float:
        return self.A + self.B + self.C + self.D


@dataclass(frozen=True)
class ProblemParams:
    """Exponent p, rescaled mass coefficient eps, optional original lambda.

    eps = 0 encodes the zero-mass limit equation. When lambda is recorded it
    must be consistent with eps under the rescaling exponent.
    """

    p: float
    eps: float
    lam: float | None = None

    def __post_init__(self):
        _check_p(self.p)
        if not np.isfinite(self.eps) or self.eps < 0:
            raise ValueError("eps must be >= 0")
        if self.lam is not None:
            if self.lam <= 0:
                raise ValueError("lambda must be positive when given")
            expected = self.lam ** eps_exponent(self.p)
            if abs(self.eps - expected) > 1e-12 * max(abs(expected), 1e-300):
                raise ValueError("eps and lambda are inconsistent")

    @classmethod
    def from_lambda(cls, p: float, lam: float) -> "ProblemParams":
        _check_p(p)
        if lam <= 0:
            raise ValueError("lambda must be positive")
        return cls(p=p, eps=lam ** eps_exponent(p), lam=lam)


def breakdown(u: RadialFunction, p: float) -> EnergyBreakdown:
    """Compute (A, B, C, D) for a decaying profile by quadrature."""
    _check_p(p)
    if not u.is_decaying:
        raise ValueError("profile is not decaying on this grid")
    du = derivative(u, regular=True)
    a = integrate(RadialFunction(u.grid, du.values ** 2))
    b = lp_power(u, 2.0)
    c = coulomb_energy(u)
    d = lp_power(u, p)
    return EnergyBreakdown(A=a, B=b, C=max(c, 0.0), D=d, p=p)


def energy(bd: EnergyBreakdown, eps: float) -> float:
    """Free energy A/2 + eps*B/2 + C/4 - D/p."""
    return 0.5 * bd.A + 0.5 * eps * bd.B + 0.25 * bd.C - bd.D / bd.p


def nehari(bd: EnergyBreakdown, eps: float) -> float:
    """<E'(u), u> = A + eps*B + C - D."""
    return bd.A + eps * bd.B + bd.C - bd.D


def pohozaev_identity(bd: EnergyBreakdown, eps: float) -> float:
    """Dilation identity residual A/2 + (3 eps/2) B + (5/4) C - (3/p) D.

    Vanishes on weak solutions of the equation with mass coefficient eps.
    """
    return 0.5 * bd.A + 1.5 * eps * bd.B + 1.25 * bd.C - 3.0 * bd.D / bd.p


def pohozaev_manifold(bd: EnergyBreakdown, eps: float) -> float:
    """Constraint functional P = (3/2)A + (eps/2)B + (3/4)C - ((2p-3)/p)D.

    P = 2*nehari - pohozaev_identity exactly; P = 0 defines the manifold on
    which ground states minimize the energy.
    """
    return (1.5 * bd.A + 0.5 * eps * bd.B + 0.75 * bd.C
            - (2.0 * bd.p - 3.0) / bd.p * bd.D)


def scale_breakdown(bd: EnergyBreakdown, t: float) -> EnergyBreakdown:
    """Breakdown of u_t(x) = t^2 u(t x): (t^3 A, t B, t^3 C, t^{2p-3} D)."""
    if t <= 0:
        raise ValueError("fiber parameter must be positive")
    t3 = t ** 3
    return EnergyBreakdown(A=t3 * bd.A, B=t * bd.B, C=t3 * bd.C,
                           D=t ** (2.0 * bd.p - 3.0) * bd.D, p=bd.p)


def fiber_energy(bd: EnergyBreakdown, eps: float, t: float) -> float:
    """Energy along the fiber, (t^3/2)A + (eps t/2)B + (t^3/4)C - (t^{2p-3}/p)D."""
    if t <= 0:
        raise ValueError("fiber parameter must be positive")
    return energy(scale_breakdown(bd, t), eps)


def _fiber_g(bd: EnergyBreakdown, eps: float, t: np.ndarray | float):
    """g(t) = P(u_t)/t; its unique positive root is the fiber maximizer."""
    c1 = 1.5 * (bd.A + 0.5 * bd.C)
    c2 = 0.5 * eps * bd.B
    c3 = (2.0 * bd.p - 3.0) / bd.p * bd.D
    tt = np.asarray(t, dtype=float)
    q = 2.0 * bd.p - 4.0
    return c1 * tt ** 2 + c2 - c3 * tt ** q, (c1, c2, c3, q)


def fiber_project(bd: EnergyBreakdown, eps: float) -> float:
    """The unique t > 0 with d/dt fiber_energy = 0, i.e. the root of

        g(t) = (3/2)(A + C/2) t^2 + eps B/2 - ((2p-3)/p) D t^{2p-4}.

    Bracket by geometric expansion, bisect, then polish with Newton until
    |g| <= 1e-12 * scale. For eps = 0 the closed form
    t = [3 p (2A + C) / (4 (2p-3) D)]^{1/(2p-6)} is the starting guess.
    """
    if bd.D <= 0.0:
        raise ValueError("fiber map has no maximizer for u=0")
    g0, (c1, c2, c3, q) = _fiber_g(bd, eps, 1.0)

    if eps == 0.0 and bd.B >= 0.0:
        t_closed = (3.0 * bd.p * (2.0 * bd.A + bd.C)
                    / (4.0 * (2.0 * bd.p - 3.0) * bd.D)) ** (1.0 / (2.0 * bd.p - 6.0))
        t = t_closed
    else:
        t = 1.0
    # geometric bracketing: g > 0 left of the root, g < 0 right of it
    gt = c1 * t * t + c2 - c3 * t ** q
    lo, hi = t, t
    if gt > 0:
        while True:
            hi *= 2.0
            if c1 * hi * hi + c2 - c3 * hi ** q <= 0:
                break
            lo = hi
    else:
        while True:
            lo *= 0.5
            if c1 * lo * lo + c2 - c3 * lo ** q >= 0:
                break
            hi = lo
            if lo < 1e-280:
                raise ManifoldError("fiber bracketing failed")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if c1 * mid * mid + c2 - c3 * mid ** q > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-6 * hi:
            break
    t = 0.5 * (lo + hi)
    scale = c1 * t * t + c2 + c3 * t ** q
    for _ in range(12):
        g = c1 * t * t + c2 - c3 * t ** q
        if abs(g) <= 1e-13 * scale:
            break
        dg = 2.0 * c1 * t - q * c3 * t ** (q - 1.0)
        step = g / dg
        t_new = t - step
        if not (lo * 0.5 <= t_new <= hi * 2.0) or t_new <= 0:
            t_new = 0.5 * (lo + hi)  # fall back toward the bracket
        t = t_new
    return float(t)


def manifold_energy(bd: EnergyBreakdown, eps: float, tol: float = 1e-6) -> float:
    """Reduced energy on the manifold,

        ((p-3)/(2p-3)) A + ((p-2)/(2p-3)) eps B + ((p-3)/(2(2p-3))) C,

    equal to energy(bd, eps) when P(bd, eps) = 0. Inputs off the manifold
    (relative to tol * breakdown scale) are rejected.
    """
    pm = pohozaev_manifold(bd, eps)
    sc = bd.scale
    if sc > 0 and abs(pm) > tol * sc:
        raise ManifoldError("breakdown is off the constraint manifold")
    p = bd.p
    d = 2.0 * p - 3.0
    return ((p - 3.0) / d * bd.A + (p - 2.0) / d * eps * bd.B
            + (p - 3.0) / (2.0 * d) * bd.C)


def m_functional(bd: EnergyBreakdown) -> float:
    """M(u) = A + C, the quantity bounded away from zero on the manifold."""
    return bd.A + bd.C


def e_norm(bd: EnergyBreakdown) -> float:
    """Coulomb-Sobolev norm (A + sqrt(C))^{1/2}."""
    return float(np.sqrt(bd.A + np.sqrt(bd.C)))
