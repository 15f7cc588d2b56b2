"""Energy functional, Rayleigh-type quotient, thresholds and Riesz gradients.

Notation used throughout the package, for a field u:

    N(u) = ||u||^2 - mu ||u||_2^2          (Dirichlet form minus mass)
    D(u) = int K |u|^{q+1}                 (weighted critical integral)
    J(u) = N(u) / D(u)^{(n-2)/n}           (the quotient, degree-0 homogeneous)
    I(u) = ||u||^2/2 - D(u)/(q+1) - mu ||u||_2^2/2

with q + 1 = 2n/(n-2).  Gradients are H^1_0 Riesz representatives, one
Poisson solve per dual term.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError
from .mesh import abs_power
from .spectral import first_eigenpair


def sobolev_constant(n):
    """Best constant S in ||grad u||_2^2 >= S ||u||_{2n/(n-2)}^2 on R^n."""
    area = 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)  # |S^n|
    return n * (n - 2) / 4.0 * area ** (2.0 / n)


def critical_exponent(n):
    """q with q + 1 = 2n/(n-2)."""
    return (n + 2) / (n - 2)


@dataclass(frozen=True)
class ProblemData:
    """Mesh, coefficient K (sampled at nodes), and mu.

    ``allow_mu1`` opens the mu = mu_1 branch; otherwise 0 <= mu < mu_1 is
    enforced against the discrete first eigenvalue (mu = 0 is the pure
    critical quotient, used for Sobolev-constant checks).
    """

    mesh: object
    K: np.ndarray
    mu: float
    allow_mu1: bool = False
    mu1: float = field(init=False)

    def __post_init__(self):
        K = np.broadcast_to(np.asarray(self.K, dtype=float), (self.mesh.size,)).copy()
        if not np.isfinite(K).all():
            raise ConfigurationError("K must be finite at every node")
        K.setflags(write=False)
        object.__setattr__(self, "K", K)
        mu1, _ = first_eigenpair(self.mesh)
        object.__setattr__(self, "mu1", mu1)
        mu = float(self.mu)
        if not mu >= 0:
            raise ConfigurationError(f"mu must be nonnegative, got {mu}")
        if self.allow_mu1:
            if mu > mu1 * (1 + 1e-12):
                raise ConfigurationError(f"mu={mu} exceeds mu_1={mu1}")
        elif mu >= mu1:
            raise ConfigurationError(f"mu={mu} must be below mu_1={mu1} (mu = mu_1 needs allow_mu1)")

    @property
    def n(self):
        return self.mesh.n

    @property
    def q(self):
        return critical_exponent(self.n)

    @property
    def a(self):
        """Exponent (n-2)/n on D in the quotient."""
        return (self.n - 2) / self.n

    @property
    def K_inf(self):
        return float(self.K.max())


def split_terms(data, u):
    """Return (||u||^2, ||u||_2^2, D(u))."""
    m = data.mesh
    return m.inner_h1(u, u), m.inner_l2(u, u), m.integrate_power(data.K, u, data.q + 1)


def parts(data, u):
    """Return (N(u), D(u))."""
    h1, l2, D = split_terms(data, u)
    return h1 - data.mu * l2, D


def eval_I(data, u):
    h1, l2, D = split_terms(data, u)
    return 0.5 * h1 - D / (data.q + 1) - 0.5 * data.mu * l2


def eval_quotient(data, u):
    N, D = parts(data, u)
    return quotient_from_parts(data, N, D)


def quotient_from_parts(data, N, D):
    if not D > 0:
        raise DomainError(f"int K|u|^(q+1) = {D!r} is not positive; quotient undefined outside the cone")
    return N / D**data.a


def nonlinearity(data, u):
    """K |u|^{q-1} u."""
    return data.K * abs_power(u, data.q) * np.sign(u)


def grad_I(data, u):
    u = data.mesh.check(u)
    return u - data.mesh.poisson_solve(nonlinearity(data, u) + data.mu * u)


def grad_quotient(data, u, N=None, D=None):
    m = data.mesh
    u = m.check(u)
    if N is None or D is None:
        N, D = parts(data, u)
    if not D > 0:
        raise DomainError(f"int K|u|^(q+1) = {D!r} is not positive; quotient undefined outside the cone")
    grad_N = 2.0 * (u - data.mu * m.poisson_solve(u))
    grad_D = (data.q + 1) * m.poisson_solve(nonlinearity(data, u))
    return (grad_N - data.a * (N / D) * grad_D) / D**data.a


def quotient_change(data, old, new, old_parts=None, new_parts=None):
    """J(new) - J(old), computed from differences so it stays accurate when tiny.

    Direct subtraction of two O(1) quotient values loses everything below
    ~1e-16 * J; descent steps near a critical point change J by less than that.
    """
    m = data.mesh
    N0, D0 = old_parts if old_parts is not None else parts(data, old)
    N1, D1 = new_parts if new_parts is not None else parts(data, new)
    delta = new - old
    total = new + old
    dN = m.inner_h1(delta, total) - data.mu * m.inner_l2(delta, total)
    dD = float(np.dot(m.weights * data.K, _power_difference(new, old, data.q + 1)))
    a = data.a
    if not (D0 > 0 and D1 > 0):
        raise DomainError("quotient change across the cone boundary")
    return dN / D1**a + N0 / D0**a * math.expm1(-a * math.log1p(dD / D0))


def _power_difference(x, y, p):
    ax, ay = np.abs(x), np.abs(y)
    out = abs_power(ax, p) - abs_power(ay, p)
    ok = (ay > 0) & (ax > 0)
    rel = (ax[ok] - ay[ok]) / ay[ok]
    out[ok] = abs_power(ay[ok], p) * np.expm1(p * np.log1p(rel))
    return out


@dataclass
class ConstantsReport:
    n: int
    K_inf: float
    S: float
    L_est: float
    c_sup: float
    c_low: float
    varpi: float
    mu1: float
    lions_holds: object  # True / False / None (indeterminate)

    @property
    def lions_threshold(self):
        return self.c_low

    def as_dict(self):
        return {
            "n": self.n,
            "K_inf": self.K_inf,
            "S": self.S,
            "L_est": self.L_est,
            "c_sup": self.c_sup,
            "c_low": self.c_low,
            "varpi": self.varpi,
            "mu1": self.mu1,
            "lions_holds": self.lions_holds,
            "lions_status": lions_status(self.lions_holds),
        }


LIONS_BAND = 1e-9


def lions_verdict(L_est, threshold, band=LIONS_BAND):
    """Strict inequality L < threshold with a relative guard band; None if inside it."""
    if abs(threshold - L_est) <= band * abs(threshold):
        return None
    return bool(L_est < threshold)


def lions_status(verdict):
    return {True: "holds", False: "fails", None: "indeterminate"}[verdict]


def quotient_threshold(n, K_inf):
    """c_infinity = S / K_inf^{(n-2)/n}."""
    if not K_inf > 0:
        raise ConfigurationError(f"K_inf = {K_inf!r} must be positive")
    return sobolev_constant(n) / K_inf ** ((n - 2) / n)


def compute_constants(data, L_est):
    n = data.n
    K_inf = data.K_inf
    if not K_inf > 0:
        raise ConfigurationError(f"K_inf = {K_inf!r}: the sup of K must be positive")
    S = sobolev_constant(n)
    c_sup = S ** (n / 2) / (n * K_inf ** ((n - 2) / 2))
    c_low = (n * c_sup) ** (2.0 / n)
    varpi = max(L_est, 0.0) ** (n / 2) / n
    verdict = lions_verdict(L_est, S / K_inf ** ((n - 2) / n))
    return ConstantsReport(n, K_inf, S, float(L_est), c_sup, c_low, varpi, data.mu1, verdict)


def mp_member(data, u, p, c_low=None):
    """Membership in M_p: ||u|| > 1/(p+1) and D(u) > (p c_low)^{n/(2-n)} N(u)^{n/(n-2)}."""
    if c_low is None:
        c_low = quotient_threshold(data.n, data.K_inf)
    n = data.n
    if not data.mesh.norm_h1(u) > 1.0 / (p + 1):
        return False
    N, D = parts(data, u)
    # the set is written for nonnegative fields where N > 0; clip so the real power is defined
    rhs = (p * c_low) ** (n / (2 - n)) * max(N, 0.0) ** (n / (n - 2))
    return bool(D > rhs)
