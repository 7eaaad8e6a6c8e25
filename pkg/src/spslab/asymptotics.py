"""Small-coupling asymptotics: parameter maps, sweeps in eps, limit diagnostics.

The rescaling v(r) = lambda^{1/(2(3-p))} u(eps r) with eps =
lambda^{(p-2)/(4(3-p))} turns the original equation into the eps-family

    -lap v + eps v + (I2 * v^2) v = |v|^{p-2} v,

whose eps -> 0 limit is the zero-mass equation. A sweep solves the limit
problem first, continues upward in eps, and tabulates every diagnostic of the
limit behavior: the energy gap m_eps - m_inf, the vanishing rescaled mass
eps*|v|_2^2, the fiber parameter projecting v_eps onto the limit manifold,
and the Coulomb-Sobolev distance to the limit profile. A separate small
lambda -> 0 study checks convergence to the local ground state.
"""
from __future__ import annotations

import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .coulomb import coulomb_energy, potential_from_density
from .functionals import (EnergyBreakdown, ProblemParams, e_norm,
                          eps_exponent, fiber_project, manifold_energy,
                          pohozaev_identity, scale_breakdown)
from .radial import RadialFunction, derivative, integrate
from .solver import (ContinuationInit, Solution, SolverConfig, SolverError,
                     ground_state, _effective)

logger = logging.getLogger(__name__)


def eps_of_lambda(lam: float, p: float) -> float:
    """eps = lambda^{(p-2)/(4(3-p))}; strictly decreasing in lambda for p > 3."""
    if not (3.0 < p < 6.0):
        raise ValueError("p outside (3,6)")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    return lam ** eps_exponent(p)


def lambda_of_eps(eps: float, p: float) -> float:
    """Inverse of eps_of_lambda."""
    if not (3.0 < p < 6.0):
        raise ValueError("p outside (3,6)")
    if eps <= 0:
        raise ValueError("eps must be positive")
    return eps ** (1.0 / eps_exponent(p))


def _rescale(u: RadialFunction, amplitude: float, arg_scale: float) -> RadialFunction:
    from scipy.interpolate import CubicSpline
    interp = CubicSpline(u.grid.nodes, u.values)
    q = arg_scale * u.grid.nodes
    vals = np.where(q <= u.grid.r_max,
                    amplitude * interp(np.minimum(q, u.grid.r_max)), 0.0)
    return RadialFunction(u.grid, vals)


def rescale_u_to_v(u: RadialFunction, lam: float, p: float) -> RadialFunction:
    """v(r) = lambda^{1/(2(3-p))} u(eps r), resampled on the same grid."""
    eps = eps_of_lambda(lam, p)
    amp = lam ** (1.0 / (2.0 * (3.0 - p)))
    return _rescale(u, amp, eps)


def rescale_v_to_u(v: RadialFunction, lam: float, p: float) -> RadialFunction:
    """Inverse of rescale_u_to_v (within resampling error)."""
    eps = eps_of_lambda(lam, p)
    amp = lam ** (1.0 / (2.0 * (3.0 - p)))
    return _rescale(v, 1.0 / amp, 1.0 / eps)


@dataclass(frozen=True)
class LimitProjection:
    t_proj: float
    energy_at_projection: float


def project_to_limit_manifold(sol: Solution) -> LimitProjection:
    """Fiber parameter mapping a converged eps>0 solution onto the eps=0
    manifold, plus the limit energy of the projected profile.

    For a solution of the eps-problem P_0(v) = -eps*B/2 < 0, so the
    projection parameter lies in (0,1) and the projected energy sits between
    m_inf and m_eps.
    """
    if sol.params.eps <= 0:
        raise ValueError("projection needs an eps>0 solution")
    bd = _effective(sol.bd, sol.coulomb_coeff)
    t = fiber_project(bd, 0.0)
    e_proj = manifold_energy(scale_breakdown(bd, t), 0.0, tol=1e-6)
    return LimitProjection(t_proj=t, energy_at_projection=e_proj)


@dataclass(frozen=True)
class EDistanceReport:
    value: float
    grad_l2: float
    grad_phi_l2: float


def e_distance(v: RadialFunction, w: RadialFunction, full: bool = False):
    """Coulomb-Sobolev norm of v - w: sqrt(A_{v-w} + sqrt(C_{v-w})).

    With full=True also returns the gradient pair (|grad(v-w)|_2,
    |grad(phi_v - phi_w)|_2) characterizing convergence.
    """
    if not v.grid.same_nodes(w.grid):
        raise ValueError("profiles live on different grids")
    diff = RadialFunction(v.grid, v.values - w.values)
    da = derivative(diff, regular=True)
    a = integrate(RadialFunction(v.grid, da.values ** 2))
    c = max(coulomb_energy(diff), 0.0)
    val = float(np.sqrt(a + np.sqrt(c)))
    if not full:
        return val
    phi_v = potential_from_density(v.grid, v.values ** 2)
    phi_w = potential_from_density(w.grid, w.values ** 2)
    dphi = RadialFunction(v.grid, phi_v - phi_w)
    dphi_da = derivative(dphi, regular=True)
    gphi = float(np.sqrt(integrate(RadialFunction(v.grid, dphi_da.values ** 2))))
    return EDistanceReport(value=val, grad_l2=float(np.sqrt(a)), grad_phi_l2=gphi)


class DecayError(RuntimeError):
    pass


def decay_rate(u: RadialFunction, window: tuple[float, float] = (0.5, 0.8)) -> float:
    """Least-squares slope of -log u(r) over r in [w0*r_max, w1*r_max].

    If the tail underflows inside the window, the window is shrunk once
    toward the midrange before giving up.
    """
    r = u.grid.nodes
    vals = u.values

    def fit(w0, w1):
        mask = (r >= w0 * u.grid.r_max) & (r <= w1 * u.grid.r_max)
        if int(np.count_nonzero(mask)) < 8:
            return None
        seg = vals[mask]
        if np.any(seg <= 0.0):
            return None
        return float(np.polyfit(r[mask], -np.log(seg), 1)[0])

    out = fit(*window)
    if out is None:
        out = fit(window[0], window[0] + 0.5 * (window[1] - window[0]))
    if out is None:
        raise DecayError("tail below floating-point floor in the fit window")
    return out


@dataclass
class SweepRow:
    eps: float
    lam: float | None
    m_eps: float
    gap: float
    eps_times_B: float
    t_proj: float
    e_dist: float
    decay_rate: float
    energy_at_projection: float | None
    min_m: float
    converged: bool


FLAG_ORDER = (
    "gap_positive", "gap_monotone", "final_gap_small", "slope_in_range",
    "eps_times_B_monotone", "eps_times_B_final_small",
    "t_proj_in_unit_interval", "t_proj_monotone", "t_proj_final_close",
    "e_dist_monotone", "e_dist_final_small", "sandwich_ok",
    "reference_identity_ok", "eta_above_floor", "all_converged",
)

# the monotone statements are asymptotic, not exact at finite resolution;
# discrete diagnostics get a 5% slack before a violation is flagged
MONOTONE_SLACK = 1.05
ETA_FLOOR = 1e-3


@dataclass
class SweepReport:
    p: float
    eps_list: tuple[float, ...]
    rows: list[SweepRow]
    m_inf: float
    e_norm_inf: float
    slope_gap_vs_eps: float
    eta_empirical: float
    flags: dict
    partial: bool
    config: SolverConfig
    jobs: int
    solutions: list[Solution] = field(default_factory=list, repr=False)
    reference: Solution | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return (not self.partial) and all(self.flags.values())


def _monotone_nonincreasing(vals: list[float]) -> bool:
    for a, b in zip(vals, vals[1:]):
        limit = a * MONOTONE_SLACK if a > 0 else a + 1e-12
        if b > limit:
            return False
    return True


def sweep(p: float, eps_list, config: SolverConfig | None = None,
          jobs: int = 1) -> SweepReport:
    """Solve the zero-mass reference, then every eps, and tabulate the limit
    diagnostics.

    eps_list must be strictly decreasing and end at 0. With jobs == 1 the
    positive-eps solves run sequentially by continuation from the reference
    upward (staying on one branch); jobs > 1 solves rows independently from
    the configured init, merged back in deterministic eps order.
    """
    if config is None:
        config = SolverConfig()
    eps_list = tuple(float(e) for e in eps_list)
    if len(eps_list) < 2 or eps_list[-1] != 0.0:
        raise ValueError("eps list must end at 0")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps list must be strictly decreasing")
    if not (3.0 < p < 6.0):
        raise ValueError("p outside (3,6)")

    ref = ground_state(ProblemParams(p=p, eps=0.0), config)
    positives = [e for e in eps_list if e > 0.0]
    solutions: dict[float, Solution] = {0.0: ref}
    partial = False

    if jobs > 1:
        def solve_one(eps):
            return ground_state(ProblemParams(p=p, eps=eps,
                                              lam=lambda_of_eps(eps, p)), config)

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futs = {e: pool.submit(solve_one, e) for e in positives}
        for e in positives:
            try:
                solutions[e] = futs[e].result()
            except SolverError:
                logger.exception("sweep row eps=%g failed", e)
                partial = True
    else:
        prev = ref
        for e in sorted(positives):  # continuation upward from the limit
            cfg = replace(config, init=ContinuationInit(prev))
            try:
                sol = ground_state(ProblemParams(p=p, eps=e,
                                                 lam=lambda_of_eps(e, p)), cfg)
                solutions[e] = sol
                prev = sol
            except SolverError:
                logger.exception("sweep row eps=%g failed", e)
                partial = True

    m_inf = ref.m
    enorm_inf = e_norm(ref.bd)
    rows: list[SweepRow] = []
    ordered: list[Solution] = []
    for e in eps_list:
        sol = solutions.get(e)
        if sol is None:
            rows.append(SweepRow(eps=e, lam=lambda_of_eps(e, p) if e > 0 else None,
                                 m_eps=float("nan"), gap=float("nan"),
                                 eps_times_B=float("nan"), t_proj=float("nan"),
                                 e_dist=float("nan"), decay_rate=float("nan"),
                                 energy_at_projection=None, min_m=float("nan"),
                                 converged=False))
            continue
        ordered.append(sol)
        if e > 0:
            proj = project_to_limit_manifold(sol)
            t_proj = proj.t_proj
            e_proj = proj.energy_at_projection
        else:
            t_proj = fiber_project(sol.bd, 0.0)
            e_proj = None
        rows.append(SweepRow(
            eps=e,
            lam=sol.params.lam,
            m_eps=sol.m,
            gap=sol.m - m_inf,
            eps_times_B=e * sol.bd.B,
            t_proj=t_proj,
            e_dist=e_distance(sol.u, ref.u),
            decay_rate=decay_rate(sol.u),
            energy_at_projection=e_proj,
            min_m=sol.min_m_functional,
            converged=sol.converged,
        ))

    ok_rows = [r for r in rows if np.isfinite(r.m_eps)]
    pos_rows = [r for r in ok_rows if r.eps > 0]
    smallest = pos_rows[-1] if pos_rows else None

    fit_rows = [r for r in pos_rows if r.gap > 0][-3:]
    if len(fit_rows) >= 2:
        slope = float(np.polyfit(np.log([r.eps for r in fit_rows]),
                                 np.log([r.gap for r in fit_rows]), 1)[0])
    else:
        slope = float("nan")

    eta = min((r.min_m for r in ok_rows), default=float("nan"))
    ref_poh = abs(pohozaev_identity(ref.bd, 0.0))

    flags = {
        "gap_positive": bool(pos_rows) and all(r.gap > 0 for r in pos_rows),
        "gap_monotone": _monotone_nonincreasing([r.gap for r in ok_rows]),
        "final_gap_small": smallest is not None and smallest.gap < 0.05 * m_inf,
        "slope_in_range": bool(np.isfinite(slope)) and 0.8 <= slope <= 1.2,
        "eps_times_B_monotone": _monotone_nonincreasing(
            [r.eps_times_B for r in ok_rows]),
        "eps_times_B_final_small": (
            len(ok_rows) >= 2
            and ok_rows[-1].eps_times_B < 1e-2 * ok_rows[0].eps_times_B),
        "t_proj_in_unit_interval": all(0.0 < r.t_proj < 1.0 for r in pos_rows),
        "t_proj_monotone": _monotone_nonincreasing(
            [abs(r.t_proj - 1.0) for r in ok_rows]),
        "t_proj_final_close": smallest is not None
            and abs(smallest.t_proj - 1.0) < 1e-2,
        "e_dist_monotone": _monotone_nonincreasing([r.e_dist for r in ok_rows]),
        "e_dist_final_small": smallest is not None
            and smallest.e_dist < 1e-2 * enorm_inf,
        "sandwich_ok": all(
            r.energy_at_projection is not None
            and m_inf <= r.energy_at_projection < r.m_eps
            for r in pos_rows),
        "reference_identity_ok": ref_poh <= config.tol_residual * ref.bd.scale,
        "eta_above_floor": bool(np.isfinite(eta)) and eta > ETA_FLOOR,
        "all_converged": (not partial) and all(r.converged for r in rows),
    }
    flags = {k: bool(flags[k]) for k in FLAG_ORDER}
    logger.info("sweep p=%g: m_inf=%.9g slope=%.3f eta=%.3g flags_ok=%s",
                p, m_inf, slope, eta, all(flags.values()))
    return SweepReport(p=p, eps_list=eps_list, rows=rows, m_inf=m_inf,
                       e_norm_inf=enorm_inf, slope_gap_vs_eps=slope,
                       eta_empirical=eta, flags=flags, partial=partial,
                       config=config, jobs=jobs, solutions=ordered,
                       reference=ref)


# ---------------------------------------------------------------------------
# Sweep serialization

CSV_HEADER = "eps,lambda,m_eps,gap,eps_times_B,t_proj,e_dist,decay_rate"


def _f(x: float) -> str:
    return "%.17g" % float(x)


def sweep_to_csv(report: SweepReport) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for r in report.rows:
        lam = "" if r.lam is None else _f(r.lam)
        buf.write(",".join([_f(r.eps), lam, _f(r.m_eps), _f(r.gap),
                            _f(r.eps_times_B), _f(r.t_proj), _f(r.e_dist),
                            _f(r.decay_rate)]) + "\n")
    return buf.getvalue()


def sweep_to_json(report: SweepReport) -> str:
    parts = ['"version":"%s"' % __version__,
             '"p":%s' % _f(report.p),
             '"m_inf":%s' % _f(report.m_inf),
             '"e_norm_inf":%s' % _f(report.e_norm_inf),
             '"slope_gap_vs_eps":%s' % _f(report.slope_gap_vs_eps),
             '"eta_empirical":%s' % _f(report.eta_empirical),
             '"partial":%s' % ("true" if report.partial else "false")]
    flag_items = ",".join('"%s":%s' % (k, "true" if v else "false")
                          for k, v in report.flags.items())
    parts.append('"flags":{%s}' % flag_items)
    rows = []
    for r in report.rows:
        fields = ['"eps":%s' % _f(r.eps),
                  '"lambda":%s' % ("null" if r.lam is None else _f(r.lam)),
                  '"m_eps":%s' % _f(r.m_eps),
                  '"gap":%s' % _f(r.gap),
                  '"eps_times_B":%s' % _f(r.eps_times_B),
                  '"t_proj":%s' % _f(r.t_proj),
                  '"e_dist":%s' % _f(r.e_dist),
                  '"decay_rate":%s' % _f(r.decay_rate),
                  '"energy_at_projection":%s' % (
                      "null" if r.energy_at_projection is None
                      else _f(r.energy_at_projection)),
                  '"min_m":%s' % _f(r.min_m),
                  '"converged":%s' % ("true" if r.converged else "false")]
        rows.append("{" + ",".join(fields) + "}")
    parts.append('"rows":[%s]' % ",".join(rows))
    c = report.config
    parts.append('"config":{"n":%d,"r_max":%s,"stretch":%s,"tol_residual":%s,'
                 '"max_iters":%d,"jobs":%d}'
                 % (c.n, _f(c.r_max), _f(c.stretch), _f(c.tol_residual),
                    c.max_iters, report.jobs))
    return "{" + ",".join(parts) + "}\n"


def save_sweep(report: SweepReport, csv_path: str) -> tuple[str, str]:
    """Write the CSV table and its JSON companion next to it."""
    json_path = _companion_json_path(csv_path)
    with open(csv_path, "w", newline="") as fh:
        fh.write(sweep_to_csv(report))
    with open(json_path, "w", newline="") as fh:
        fh.write(sweep_to_json(report))
    return csv_path, json_path


def _companion_json_path(csv_path: str) -> str:
    return (csv_path[:-4] if csv_path.endswith(".csv") else csv_path) + ".json"


def read_sweep_csv(path: str) -> list[dict]:
    """Parse a sweep CSV back into row dictionaries (for reporting)."""
    with open(path, "r", newline="") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("%s:1: expected header %r" % (path, CSV_HEADER))
    names = CSV_HEADER.split(",")
    rows = []
    for i, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        if len(cells) != len(names):
            raise ValueError("%s:%d: expected %d fields, got %d"
                             % (path, i, len(names), len(cells)))
        row = {}
        for name, cell in zip(names, cells):
            row[name] = None if cell == "" else float(cell)
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# Local lambda -> 0 limit


@dataclass
class LocalLimitRow:
    lam: float
    m: float
    sup_distance: float
    converged: bool


@dataclass
class LocalLimitReport:
    p: float
    rows: list[LocalLimitRow]
    m_reference: float
    distances_decreasing: bool
    energies_above_reference: bool
    reference: Solution | None = field(default=None, repr=False)
    solutions: list[Solution] = field(default_factory=list, repr=False)


def local_limit_study(p: float, lambda_list, config: SolverConfig | None = None
                      ) -> LocalLimitReport:
    """Solve -lap u + u + lam*(I2*u^2)u = |u|^{p-2}u for each lam and compare
    against the lam=0 local ground state computed by the same machinery.

    The Coulomb coefficient plays the role of the small parameter here; the
    mass coefficient stays 1. Distances to the reference must shrink as lam
    does, and every positive-lam energy sits above the reference energy.
    """
    if config is None:
        config = SolverConfig()
    lams = tuple(float(x) for x in lambda_list)
    if not lams or any(b >= a for a, b in zip(lams, lams[1:])):
        raise ValueError("lambda list must be strictly decreasing")
    if any(x <= 0 or x > 1 for x in lams):
        raise ValueError("lambda values must lie in (0, 1]")
    params = ProblemParams(p=p, eps=1.0)
    ref = ground_state(params, config, coulomb_coeff=0.0)
    rows = []
    sols = []
    for lam in lams:
        cfg = replace(config, init=ContinuationInit(ref))
        sol = ground_state(params, cfg, coulomb_coeff=lam)
        sols.append(sol)
        rows.append(LocalLimitRow(
            lam=lam, m=sol.m,
            sup_distance=float(np.max(np.abs(sol.u.values - ref.u.values))),
            converged=sol.converged))
    dists = [r.sup_distance for r in rows]
    decreasing = all(b < a for a, b in zip(dists, dists[1:]))
    above = all(r.m > ref.m for r in rows)
    return LocalLimitReport(p=p, rows=rows, m_reference=ref.m,
                            distances_decreasing=decreasing,
                            energies_above_reference=above,
                            reference=ref, solutions=sols)
