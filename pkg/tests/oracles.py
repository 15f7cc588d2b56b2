"""Independent reference computations used only by the test suite."""
import math

import numpy as np
from scipy import integrate, optimize, sparse
import scipy.sparse.linalg  # noqa: F401


def shoot_radial(mu, R=1.0, power=5, dim=3, a_bracket=(1e-3, 50.0)):
    """Positive radial solution of -u'' - (dim-1)/r u' = u^power + mu u on [0, R], u(R) = 0.

    Shooting on u(0) = a with u'(0) = 0; the first zero r0(a) decreases with a
    and we solve r0(a) = R.  Returns a callable profile u(r) and a.
    """

    def rhs(r, y):
        u, v = y
        return [v, -(dim - 1) / r * v - abs(u) ** (power - 1) * u - mu * u]

    def start(a, r0=1e-6):
        # series u = a - (a^p + mu a) r^2 / (2 dim)
        c = (a**power + mu * a) / (2 * dim)
        return [a - c * r0**2, -2 * c * r0], r0

    def first_zero(a, rmax=4.0 * R):
        y0, r0 = start(a)
        ev = lambda r, y: y[0]
        ev.terminal = True
        ev.direction = -1
        sol = integrate.solve_ivp(rhs, (r0, rmax), y0, events=ev, rtol=1e-12, atol=1e-14, method="DOP853")
        return sol.t_events[0][0] if len(sol.t_events[0]) else rmax

    a = optimize.brentq(lambda a: first_zero(a) - R, *a_bracket, xtol=1e-14, rtol=1e-14)
    y0, r0 = start(a)
    sol = integrate.solve_ivp(rhs, (r0, R), y0, rtol=1e-12, atol=1e-14, method="DOP853", dense_output=True)

    def profile(r):
        r = np.asarray(r, dtype=float)
        out = np.where(r < r0, a - (a**power + mu * a) / (2 * dim) * r**2, 0.0)
        inside = (r >= r0) & (r <= R)
        out[inside] = sol.sol(r[inside])[0]
        return out

    return profile, a


def dense_box_laplacian(nx, L=1.0):
    """Dense -Delta_h on the cube with nx intervals per side (Kronecker build)."""
    h = L / nx
    k = nx - 1
    T = sparse.diags([-np.ones(k - 1), 2 * np.ones(k), -np.ones(k - 1)], [-1, 0, 1]) / h**2
    I = sparse.identity(k)
    A = sparse.kron(sparse.kron(T, I), I) + sparse.kron(sparse.kron(I, T), I) + sparse.kron(sparse.kron(I, I), T)
    return A.toarray()


def edge_sum_dirichlet(mesh, u, v):
    """Loop-based sum_e F_e (du)_e (dv)_e for a radial mesh."""
    F = mesh.edge_coefficients[0]
    total = 0.0
    for i in range(mesh.m):
        du = (u[i + 1] if i + 1 < mesh.m else 0.0) - u[i]
        dv = (v[i + 1] if i + 1 < mesh.m else 0.0) - v[i]
        total += F[i] * du * dv
    return total


def talenti_bubble(r, eps, n=3):
    cn = (n * (n - 2)) ** ((n - 2) / 4)
    return cn * (eps / (eps**2 + r**2)) ** ((n - 2) / 2)


def half_energy_fraction_radius(n=3):
    """Radius t (in units of the bubble scale) enclosing half the bubble's Dirichlet energy."""
    dens = lambda t: t ** (n - 1) * (t / (1 + t * t) ** (n / 2)) ** 2
    total = integrate.quad(dens, 0, np.inf)[0]
    return optimize.brentq(lambda T: integrate.quad(dens, 0, T)[0] - 0.5 * total, 1e-3, 1e3)


def closed_form_S(n):
    # |S^n| from the Gamma function, independently of the package
    return n * (n - 2) / 4 * (2 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)) ** (2 / n)


def newton_polish(mesh, mu, u, power=5, iters=20, tol=1e-13):
    """Discrete Newton on A u = W (u^power + mu u) for a radial mesh, from an initial guess."""
    F = mesh.edge_coefficients[0]
    w = mesh.weights
    diag = F.copy()
    diag[1:] += F[:-1]
    A = sparse.diags([-F[:-1], diag, -F[:-1]], [-1, 0, 1], format="csc")
    u = np.array(u, dtype=float)
    for _ in range(iters):
        res = A @ u - w * (np.abs(u) ** (power - 1) * u + mu * u)
        # weighted L2 norm of the nodewise residual
        if np.sqrt(np.dot(res / w, res)) < tol:
            break
        Jac = A - sparse.diags(w * (power * np.abs(u) ** (power - 1) + mu), format="csc")
        u = u - sparse.linalg.spsolve(Jac, res)
    return u


def ue_quotient(eps, mu, d0=0.5):
    """Continuum quotient of cos(pi r/(4 d0)) / sqrt(eps + (r/(2 d0))^2) on B(0, 2 d0) in R^3, by quadrature."""
    k = math.pi / (4 * d0)
    c = 2 * d0
    u = lambda r: math.cos(k * r) / math.sqrt(eps + (r / c) ** 2)

    def du(r):
        s = math.sqrt(eps + (r / c) ** 2)
        return (-k * math.sin(k * r) * s - math.cos(k * r) * r / c**2 / s) / s**2

    pts = [math.sqrt(eps) * c, 10 * math.sqrt(eps) * c]
    q = lambda f: 4 * math.pi * integrate.quad(lambda r: f(r) * r * r, 0, c, points=pts, limit=400,
                                               epsabs=1e-13, epsrel=1e-13)[0]
    H = q(lambda r: du(r) ** 2)
    L2 = q(lambda r: u(r) ** 2)
    L6 = q(lambda r: u(r) ** 6)
    return (H - mu * L2) / L6 ** (1 / 3)
