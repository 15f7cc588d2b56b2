"""Certification and diagnostics built on the flow.

Estimating the constrained infimum, the Lions threshold check, solution
verification against the energy window and the Brezis-Lieb splitting test.
Also here: the peaked cut-off coefficient with its concentrating test
function, and the mu = mu_1 branch (sign of int K e_1^{q+1}, spectral gap).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .diagnostics import Concentration, concentration_monitor, truncated_bubble  # noqa: F401
from .errors import (
    AdmissibilityError,
    ConfigurationError,
    ResolutionError,
    UnsupportedDimensionError,
)
from .flow import FlowConfig, boundary_distances, extract_ps, initial_data, run_flow
from .functionals import (
    LIONS_BAND,
    eval_I,
    grad_I,
    lions_verdict,
    nonlinearity,
    parts,
    quotient_threshold,
)
from .mesh import RadialBall
from .spectral import spectral_gap_constant

VERIFY_TOL = 1e-6


# -- infimum estimate -------------------------------------------------------


@dataclass
class LEstimate:
    L_est: float
    best: np.ndarray  # argmin iterate rescaled so that int K|best|^{q+1} = 1
    runs: list
    labels: list
    best_run: int

    def __iter__(self):
        return iter((self.L_est, self.best))


RANDOM_START_TRIES = 8


def default_starts(data, seed=42, require_m1=True, c_low=None):
    """Eigenfunction, bump at argmax K, bump at a seeded random admissible node.

    Returns (labels, fields, rejected) where rejected maps label -> reason.
    """
    mesh = data.mesh
    labels, fields, rejected = [], [], {}
    for label, strategy in (("eigenfunction", "eigenfunction"), ("bump-argmax-K", "bump")):
        try:
            fields.append(initial_data(data, strategy, c_low=c_low, require_m1=require_m1))
            labels.append(label)
        except AdmissibilityError as exc:
            rejected[label] = str(exc)
    # room for the widest bump scale (reach/2 >= 8h)
    room = boundary_distances(mesh)
    if isinstance(mesh, RadialBall):
        # off-centre radial bumps are shells, bounded by the origin as well
        room = np.where(mesh.radii > 0, np.minimum(room, mesh.radii), room)
    pool = np.flatnonzero((data.K > 0) & (room >= 16 * mesh.spacing))
    rng = np.random.default_rng(seed)
    tried = rng.permutation(pool)[:RANDOM_START_TRIES]
    for node in tried:
        try:
            fields.append(initial_data(data, "bump", center=int(node), c_low=c_low, require_m1=require_m1))
            labels.append(f"bump-node-{int(node)}")
            break
        except AdmissibilityError as exc:
            last = str(exc)
    else:
        rejected["bump-random-node"] = (
            f"none of {len(tried)} seeded nodes admissible: {last}" if len(tried) else "no node with K > 0"
        )
    return labels, fields, rejected


def admissible_starts(data, seed=42, c_low=None):
    """default_starts, dropping the M_1 requirement if nothing qualifies.

    When the Lions condition fails every field has J >= c_inf, so M_1 is
    empty and the flow can only be started from the wider cone.
    """
    labels, fields, rejected = default_starts(data, seed, True, c_low)
    if not fields:
        labels, fields, outside = default_starts(data, seed, False, c_low)
        labels = [f"{lab} (outside M_1)" for lab in labels]
        rejected = {**rejected, **{f"{k} (outside M_1)": v for k, v in outside.items()}}
    if not fields:
        raise AdmissibilityError(f"no admissible start: {rejected}")
    return labels, fields, rejected


def estimate_L(data, config=None, starts=None, labels=None, jobs=1, c_low=None):
    """Run the flow from every start; L_est is the least quotient seen on any run."""
    config = config or FlowConfig()
    if starts is None:
        labels, starts, _ = admissible_starts(data, c_low=c_low)
    starts = list(starts)
    if not starts:
        raise AdmissibilityError("estimate_L needs at least one start")
    labels = list(labels) if labels is not None else [f"start-{i}" for i in range(len(starts))]
    for u in starts:
        if not parts(data, u)[1] > 0:
            raise AdmissibilityError("start outside the cone int K|u|^(q+1) > 0")
    if c_low is None:
        c_low = quotient_threshold(data.n, data.K_inf)
    if jobs > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            runs = list(ex.map(lambda u: run_flow(data, config, u, c_low), starts))
    else:
        runs = [run_flow(data, config, u, c_low) for u in starts]
    mins = [r.L_running for r in runs]
    best_run = int(np.argmin(mins))
    eta = runs[best_run].final
    D = parts(data, eta)[1]
    best = eta / D ** (1.0 / (data.q + 1))
    return LEstimate(float(mins[best_run]), best, runs, labels, best_run)


def check_lions(report, band=LIONS_BAND):
    """True / False for L < S/K_inf^{(n-2)/n}; None when inside the guard band."""
    return lions_verdict(report.L_est, report.S / report.K_inf ** ((report.n - 2) / report.n), band)


# -- solution verification --------------------------------------------------


@dataclass
class SolutionReport:
    residual_norm: float
    pde_residual_norm: float
    min_u: float
    I_value: float
    N_value: float
    D_value: float
    window_low: float
    window_high: float
    in_window: bool
    in_energy_window: bool
    varpi_level: bool
    critical_identity_error: float
    verified: bool
    notes: list = field(default_factory=list)

    def as_dict(self):
        return asdict(self)


def verify_solution(data, report, u, tol=VERIFY_TOL, varpi_rtol=1e-2):
    mesh = data.mesh
    u = mesh.check(u)
    if not np.any(u):
        raise ConfigurationError("verify_solution needs a nonzero field")
    n = data.n
    a = data.a
    notes = []
    residual = mesh.norm_h1(grad_I(data, u))
    pde = mesh.norm_l2(mesh.neg_laplacian(u) - nonlinearity(data, u) - data.mu * u)
    N, D = parts(data, u)
    I_u = eval_I(data, u)
    Da = max(D, 0.0) ** a
    low = Da * report.L_est
    high = report.S * Da / report.K_inf**a
    # the lower end is attained by the minimiser itself; allow for the last bits of rounding
    in_window = bool(low * (1 - 1e-10) <= N < high + 1e-8)
    in_energy = bool(report.varpi * (1 - 1e-10) <= I_u < report.c_sup)
    varpi_level = bool(abs(I_u - report.varpi) <= varpi_rtol * abs(report.varpi))
    ident = math.nan
    ok_ident = True
    if residual <= tol:
        ident = abs(I_u - N / n) / max(abs(I_u), 1e-300)
        ok_ident = ident <= 1e-8
        if not ok_ident:
            notes.append(f"critical-point identity I = N/n off by {ident:.2e}")
    else:
        notes.append("gradient residual too large; critical-point identity not checked")
    min_u = float(u.min())
    if not min_u > 0:
        notes.append("field is not strictly positive")
    if not in_window:
        notes.append("N(u) outside the energy window")
    verified = bool(residual <= tol and min_u > 0 and in_window and ok_ident)
    return SolutionReport(
        residual, pde, min_u, I_u, N, D, low, high, in_window, in_energy, varpi_level, ident, verified, notes
    )


# -- Brezis-Lieb splitting ----------------------------------------------------


def brezis_lieb_check(data, u, eps, center=None, guard=4.0):
    """|int K|u+B|^{q+1} - int K|B|^{q+1} - int K|u|^{q+1}| for a truncated bubble B of scale eps."""
    mesh = data.mesh
    if eps < guard * mesh.spacing:
        raise ResolutionError(f"bubble scale {eps:g} below {guard:g}h = {guard * mesh.spacing:g}")
    u = mesh.check(u)
    B = truncated_bubble(mesh, eps, center)
    p = data.q + 1
    uk = u + B
    return abs(mesh.integrate_power(data.K, uk, p) - mesh.integrate_power(data.K, B, p)
               - mesh.integrate_power(data.K, u, p))


# -- peaked cut-off coefficient --------------------------------------------------


@dataclass(frozen=True)
class Example1Params:
    y0: tuple
    d0: float
    eps0: float
    eta_coef: float = 1.0
    beta_exp: float = 2.0

    def __post_init__(self):
        if not 0 < self.eps0 < self.d0:
            raise ConfigurationError(f"need 0 < eps0 < d0, got eps0={self.eps0}, d0={self.d0}")
        if not 0 < self.eta_coef <= 1:
            raise ConfigurationError(f"need 0 < eta <= 1, got {self.eta_coef}")
        if not self.beta_exp >= 2:
            raise ConfigurationError(f"need beta >= 2, got {self.beta_exp}")

    @property
    def K_inf(self):
        return self.eps0 * self.d0**self.beta_exp


def smoothstep_cutoff(t, d0, eps0):
    """Non-increasing C^1 cut-off: 1 on [0, d0-eps0], 0 on [d0, inf), cubic Hermite between."""
    x = np.clip((np.asarray(t, dtype=float) - (d0 - eps0)) / eps0, 0.0, 1.0)
    return 1.0 - x * x * (3.0 - 2.0 * x)


def _distances_from(mesh, y0):
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    if isinstance(mesh, RadialBall):
        if np.any(y0 != 0):
            raise ConfigurationError("on a radial mesh y0 must be the centre of the ball")
        return mesh.radii, mesh.R
    if y0.shape != (3,):
        raise ConfigurationError(f"box meshes need a 3-D point y0, got {y0}")
    if not (np.all(y0 > 0) and np.all(y0 < [mesh.Lx, mesh.Ly, mesh.Lz])):
        raise ConfigurationError(f"y0={y0.tolist()} is not inside the box")
    dist = float(min(y0[0], mesh.Lx - y0[0], y0[1], mesh.Ly - y0[1], y0[2], mesh.Lz - y0[2]))
    return np.linalg.norm(mesh.coords - y0, axis=1), dist


def build_example1_K(mesh, params):
    t, dist = _distances_from(mesh, params.y0)
    if params.d0 > dist:
        raise ConfigurationError(f"B(y0, d0) with d0={params.d0} is not inside the domain (distance {dist})")
    theta = smoothstep_cutoff(t, params.d0, params.eps0)
    bump = params.d0**params.beta_exp - params.eta_coef * t**params.beta_exp
    return -(1.0 - theta) + params.eps0 * theta * bump


def test_function_ue(mesh, d0, eps):
    """cos(pi r/(4 d0)) / sqrt(eps + (r/(2 d0))^2) on B(0, 2 d0), zero outside."""
    if mesh.n != 3:
        raise UnsupportedDimensionError(f"the test function is defined for n = 3, got n = {mesh.n}")
    if not isinstance(mesh, RadialBall):
        raise ConfigurationError("test_function_ue is sampled on a radial ball mesh")
    if 2 * d0 > mesh.R * (1 + 1e-12):
        raise ConfigurationError(f"B(0, 2 d0) = B(0, {2 * d0}) is not inside the ball of radius {mesh.R}")
    r = mesh.radii
    val = np.cos(np.pi * r / (4 * d0)) / np.sqrt(eps + (r / (2 * d0)) ** 2)
    return np.where(r < 2 * d0, val, 0.0)


def ue_sweep(data, d0, eps_values):
    """[(eps, J(u_eps))] for the concentrating test function."""
    from .functionals import eval_quotient

    return [(float(e), eval_quotient(data, test_function_ue(data.mesh, d0, e))) for e in eps_values]


# -- mu = mu_1 branch ---------------------------------------------------------


@dataclass
class Theorem12Report:
    integral: float
    applicable: bool
    gap: float
    coercivity_min: float = math.nan
    flow_terminal: str = ""
    trace: object = None
    start: str = ""

    def as_dict(self):
        return {
            "integral": self.integral,
            "applicable": self.applicable,
            "gap": self.gap,
            "coercivity_min": self.coercivity_min,
            "flow_terminal": self.flow_terminal,
            "start": self.start,
        }


def check_theorem12(data, basis, run=True, config=None):
    if len(basis) < 2:
        raise ConfigurationError("check_theorem12 needs at least two eigenpairs")
    if abs(data.mu - basis.mu1) > 1e-9 * basis.mu1:
        raise ConfigurationError(f"check_theorem12 needs mu = mu_1 ({basis.mu1!r}), got {data.mu!r}")
    e1 = basis.e1
    integral = data.mesh.integrate_power(data.K, e1, data.q + 1)
    out = Theorem12Report(integral, bool(integral < 0), spectral_gap_constant(basis))
    if out.applicable and run:
        config = config or FlowConfig()
        try:
            start = initial_data(data, "bump")
            out.start = "bump-argmax-K"
        except AdmissibilityError:
            start = initial_data(data, "bump", require_m1=False)
            out.start = "bump-argmax-K (outside M_1)"
        trace = run_flow(data, config, start)
        # coercivity is only claimed on the part of the sphere where int K|u|^{q+1} >= 0;
        # every flow iterate lives there because the quotient needs D > 0
        out.coercivity_min = float(min(r.N for r in trace.rows))
        out.flow_terminal = trace.terminal
        out.trace = trace
    return out


def solve(data, config=None, starts=None, labels=None, jobs=1):
    """estimate_L -> constants -> PS candidate from the best run -> verification."""
    from .functionals import compute_constants

    est = estimate_L(data, config, starts, labels, jobs)
    report = compute_constants(data, est.L_est)
    run = est.runs[est.best_run]
    cand = extract_ps(data, run.final, run.iterations)
    sol = verify_solution(data, report, cand.u)
    return est, report, cand, sol
