"""Discrete flow line of the quotient on the unit H^1 sphere.

Each step moves against the Riesz gradient of J, takes the nodewise absolute
value (J is even in u, so this keeps the level while enforcing eta >= 0),
and renormalises to ||eta|| = 1.  Step sizes come from Armijo backtracking,
with the decrease measured by ``quotient_change`` rather than by subtracting
two quotient values.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .diagnostics import CONCENTRATION_FACTOR, bubble_profile, concentration_monitor, node_distances
from .errors import AdmissibilityError, ConfigurationError, ConsistencyError, DomainError, StagnationError
from .functionals import (
    eval_I,
    grad_I,
    grad_quotient,
    parts,
    quotient_change,
    quotient_from_parts,
    quotient_threshold,
)
from .mesh import RadialBall
from .spectral import first_eigenpair

TERMINALS = ("ps-converged", "concentrated", "stalled", "cap", "left-M2")
PS_THRESHOLDS = tuple(10.0**-j for j in range(2, 9))


@dataclass
class FlowConfig:
    step0: float = 1.0
    shrink: float = 0.5
    c_dec: float = 1e-4
    tol: float = 1e-8
    max_iter: int = 100_000
    project: bool = True
    min_step: float = 1e-14
    concentration_factor: float = CONCENTRATION_FACTOR
    level_rtol: float = 1e-3
    localization_ratio: float = 4.0

    def __post_init__(self):
        for name in ("step0", "c_dec", "tol", "min_step", "concentration_factor", "level_rtol", "localization_ratio"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"FlowConfig.{name} must be positive")
        if not 0 < self.shrink < 1:
            raise ConfigurationError("FlowConfig.shrink must lie in (0, 1)")
        if self.max_iter < 0:
            raise ConfigurationError("FlowConfig.max_iter must be >= 0")


@dataclass
class TraceRow:
    iter: int
    s: float
    J: float
    grad_norm: float
    max_u: float
    half_energy_radius: float
    in_M1: bool
    N: float
    norm: float
    tangency: float
    step: float


CSV_COLUMNS = ("iter", "s", "J", "grad_norm", "max_u", "half_energy_radius", "in_M1")


@dataclass
class FlowTrace:
    rows: list = field(default_factory=list)
    terminal: Optional[str] = None
    message: str = ""
    final: Optional[np.ndarray] = None
    candidates: list = field(default_factory=list)  # (iter, eta) pairs
    c_low: float = math.nan
    sum_h_g2: float = 0.0

    @property
    def iterations(self):
        return len(self.rows) - 1

    @property
    def J(self):
        return np.array([r.J for r in self.rows])

    @property
    def grad_norms(self):
        return np.array([r.grad_norm for r in self.rows])

    @property
    def L_running(self):
        return float(self.J.min())

    @property
    def final_J(self):
        return self.rows[-1].J

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for r in self.rows:
                w.writerow([r.iter, repr(r.s), repr(r.J), repr(r.grad_norm), repr(r.max_u),
                            repr(r.half_energy_radius), int(r.in_M1)])

    def summary(self):
        last = self.rows[-1]
        return {
            "terminal": self.terminal,
            "message": self.message,
            "iterations": self.iterations,
            "final_J": last.J,
            "final_grad_norm": last.grad_norm,
            "final_half_energy_radius": last.half_energy_radius,
            "min_J": self.L_running,
            "pseudo_time": last.s,
            "sum_h_g2": self.sum_h_g2,
            "candidates": [k for k, _ in self.candidates],
        }


@dataclass
class StepResult:
    eta: np.ndarray
    step: float
    dJ: float
    parts: tuple
    converged: bool = False


def _unit(mesh, u):
    return u / mesh.norm_h1(u)


def initial_data(data, strategy="eigenfunction", user_field=None, center=None, c_low=None, require_m1=True):
    """Nonnegative unit-norm starting field in M_1.

    strategy: "eigenfunction" (e_1), "bump" (truncated bubble at the node
    maximising K, or at ``center`` if given as a node index), or "user".
    With ``require_m1=False`` only int K|u|^(q+1) > 0 is required; that is
    how a run is started when M_1 is empty (the Lions inequality fails) and
    the flow is used as a diagnostic.
    """
    mesh = data.mesh
    if not data.K_inf > 0:
        raise AdmissibilityError("K <= 0 everywhere: the cone int K|u|^(q+1) > 0 is empty")
    if c_low is None:
        c_low = quotient_threshold(data.n, data.K_inf)
    if strategy in ("eigenfunction", "eig"):
        _, e1 = first_eigenpair(mesh)
        u = _unit(mesh, np.abs(e1))
        _require_admissible(data, u, c_low, "eigenfunction start", require_m1)
        return u
    if strategy == "user":
        if user_field is None:
            raise AdmissibilityError("user strategy needs a field")
        u = np.abs(mesh.check(user_field))
        if not u.any():
            raise AdmissibilityError("user field is identically zero")
        u = _unit(mesh, u)
        _require_admissible(data, u, c_low, "user field", require_m1)
        return u
    if strategy == "bump":
        idx = peak_node(data) if center is None else int(center)
        return _bump_start(data, idx, c_low, require_m1)
    raise AdmissibilityError(f"unknown initial-data strategy {strategy!r}")


def boundary_distances(mesh):
    if isinstance(mesh, RadialBall):
        return mesh.R - mesh.radii
    c = mesh.coords
    return np.minimum.reduce([c[:, 0], mesh.Lx - c[:, 0], c[:, 1], mesh.Ly - c[:, 1], c[:, 2], mesh.Lz - c[:, 2]])


def peak_node(data):
    """Node maximising K; ties go to the node deepest inside the domain."""
    top = np.flatnonzero(data.K == data.K.max())
    return int(top[np.argmax(boundary_distances(data.mesh)[top])])


def _require_admissible(data, u, c_low, what, require_m1=True):
    N, D = parts(data, u)
    if not D > 0:
        raise AdmissibilityError(f"{what}: int K|u|^(q+1) = {D:.3e} <= 0")
    if require_m1 and not _in_mp(data, 1.0, N, D, 1, c_low):
        raise AdmissibilityError(f"{what} is not in M_1 (J = {N / D ** data.a:.6g} >= c_inf = {c_low:.6g})")


BUMP_SCALES = (0.5, 0.25, 0.125, 0.0625)


def bump_field(mesh, index, scale):
    """Truncated bubble of the given scale around a node, vanishing at the boundary.

    On radial meshes an off-centre node gives a shell profile in |r - r_index|.
    """
    if isinstance(mesh, RadialBall):
        d = np.abs(mesh.radii - mesh.radii[index])
        reach = mesh.boundary_distance(index)
        if index > 0:
            reach = min(reach, mesh.radii[index])
    else:
        d = node_distances(mesh, index)
        reach = mesh.boundary_distance(index)
    return np.maximum(bubble_profile(d, scale, mesh.n) - bubble_profile(reach, scale, mesh.n), 0.0)


def _bump_start(data, index, c_low, require_m1=True):
    """Best admissible bump over scales reach * BUMP_SCALES (smallest quotient wins)."""
    mesh = data.mesh
    reach = mesh.boundary_distance(index)
    if isinstance(mesh, RadialBall) and index > 0:
        reach = min(reach, mesh.radii[index])
    best, best_J, last = None, math.inf, None
    for frac in BUMP_SCALES:
        scale = frac * reach
        if scale < 8 * mesh.spacing:
            break
        u = bump_field(mesh, index, scale)
        if not u.any():
            continue
        u = _unit(mesh, u)
        try:
            _require_admissible(data, u, c_low, f"bump at node {index}", require_m1)
        except AdmissibilityError as exc:
            last = exc
            continue
        J = quotient_from_parts(data, *parts(data, u))
        if J < best_J:
            best, best_J = u, J
    if best is None:
        raise last or AdmissibilityError(f"no resolvable bump fits at node {index}")
    return best


def _in_mp(data, norm, N, D, p, c_low):
    n = data.n
    if not norm > 1.0 / (p + 1):
        return False
    return bool(D > (p * c_low) ** (n / (2 - n)) * max(N, 0.0) ** (n / (n - 2)))


def flow_step(data, config, eta, grad=None, eta_parts=None):
    """One Armijo-backtracked projected descent step; returns a StepResult."""
    mesh = data.mesh
    if eta_parts is None:
        eta_parts = parts(data, eta)
    if grad is None:
        grad = grad_quotient(data, eta, *eta_parts)
    gn = mesh.norm_h1(grad)
    if gn <= config.tol:
        return StepResult(eta, 0.0, 0.0, eta_parts, converged=True)
    h = config.step0
    while h >= config.min_step:
        cand = eta - h * grad
        if config.project:
            cand = np.abs(cand)
        norm = mesh.norm_h1(cand)
        if norm > 0:
            cand = cand / norm
            cp = parts(data, cand)
            if cp[1] > 0:
                dJ = quotient_change(data, eta, cand, eta_parts, cp)
                if dJ <= -config.c_dec * h * gn * gn:
                    return StepResult(cand, h, dJ, cp)
        h *= config.shrink
    raise StagnationError(f"backtracking underflow below {config.min_step:g} at |grad| = {gn:.3e}", h)


def run_flow(data, config, u0, c_low=None):
    mesh = data.mesh
    if c_low is None:
        c_low = quotient_threshold(data.n, data.K_inf)
    eta = np.abs(mesh.check(u0)) if config.project else mesh.check(u0).copy()
    eta = _unit(mesh, eta)
    eta_parts = parts(data, eta)
    J = quotient_from_parts(data, *eta_parts)
    trace = FlowTrace(c_low=c_low)
    thresholds = list(PS_THRESHOLDS)
    s = 0.0
    step = 0.0
    k = 0
    while True:
        grad = grad_quotient(data, eta, *eta_parts)
        gn = mesh.norm_h1(grad)
        norm = mesh.norm_h1(eta)
        mon = concentration_monitor(mesh, eta, config.concentration_factor)
        trace.rows.append(TraceRow(
            k, s, J, gn, mon.peak, mon.half_energy_radius,
            _in_mp(data, norm, *eta_parts, 1, c_low), eta_parts[0], norm,
            mesh.inner_h1(grad, eta), step,
        ))
        while thresholds and gn < thresholds[0]:
            thresholds.pop(0)
            trace.candidates.append((k, eta.copy()))
        if gn <= config.tol:
            trace.terminal, trace.message = "ps-converged", f"|grad J| = {gn:.3e} <= {config.tol:g}"
            break
        if not _in_mp(data, norm, *eta_parts, 2, c_low):
            trace.terminal, trace.message = "left-M2", "iterate left M_2; flow hypotheses violated"
            break
        if mon.flag:
            trace.terminal = "concentrated"
            trace.message = f"half-energy radius {mon.half_energy_radius:.3e} < {config.concentration_factor:g}h"
            break
        if (
            c_low <= J <= c_low * (1 + config.level_rtol)
            and gn > math.sqrt(config.tol)
            and mon.half_energy_radius * config.localization_ratio <= trace.rows[0].half_energy_radius
        ):
            trace.terminal = "concentrated"
            trace.message = (
                f"J = {J:.6g} within {config.level_rtol:g} of c_inf from above, |grad J| = {gn:.3e}, "
                f"half-energy radius down to {mon.half_energy_radius:.3e}"
            )
            break
        if k >= config.max_iter:
            trace.terminal, trace.message = "cap", f"iteration cap {config.max_iter} reached"
            break
        try:
            res = flow_step(data, config, eta, grad, eta_parts)
        except StagnationError as exc:
            trace.terminal, trace.message = "stalled", str(exc)
            break
        step = res.step
        trace.sum_h_g2 += step * gn * gn
        s += step
        J = J + res.dJ
        eta, eta_parts = res.eta, res.parts
        k += 1
    trace.final = eta
    if not trace.candidates or trace.candidates[-1][0] != k:
        trace.candidates.append((k, eta.copy()))
    return trace


@dataclass
class PSCandidate:
    u: np.ndarray
    beta1: float
    beta2: float
    I_value: float
    grad_I_norm: float
    identity_errors: tuple
    iteration: int = -1


IDENTITY_RTOL = 1e-10
IDENTITY_FAIL = 1e-8


def rescaling_identity_errors(data, eta):
    """Relative defects of  dJ(eta) = beta2 dI(beta1 eta)  and  I(beta1 eta) = J(eta)^{n/2}/n.

    The gradient defect is measured against the size of the terms that
    cancel in dJ (the D^{-a} grad N part), so it stays meaningful when eta is
    near a critical point and both sides are tiny.
    """
    mesh = data.mesh
    n = data.n
    N, D = parts(data, eta)
    J = quotient_from_parts(data, N, D)
    beta1 = J ** (n / 4) / math.sqrt(N)
    beta2 = 2 * J ** ((4 - n) / 4) / math.sqrt(N)
    u = beta1 * eta
    gJ = grad_quotient(data, eta, N, D)
    gI = grad_I(data, u)
    scale = max(mesh.norm_h1(gJ), 2 * mesh.norm_h1(eta - data.mu * mesh.poisson_solve(eta)) / D**data.a)
    e_grad = mesh.norm_h1(gJ - beta2 * gI) / scale
    I_u = eval_I(data, u)
    I_ref = J ** (n / 2) / n
    e_level = abs(I_u - I_ref) / abs(I_ref)
    return (e_grad, e_level), beta1, beta2, u, gI, I_u


def extract_ps(data, eta, iteration=-1):
    mesh = data.mesh
    try:
        errs, beta1, beta2, u, gI, I_u = rescaling_identity_errors(data, eta)
    except DomainError as exc:
        raise AdmissibilityError(f"PS extraction needs an admissible field: {exc}") from exc
    if max(errs) > IDENTITY_FAIL:
        raise ConsistencyError(f"rescaling identities violated: gradient {errs[0]:.3e}, level {errs[1]:.3e}")
    return PSCandidate(u, beta1, beta2, I_u, mesh.norm_h1(gI), errs, iteration)


def extract_all(data, trace):
    return [extract_ps(data, eta, k) for k, eta in trace.candidates]
