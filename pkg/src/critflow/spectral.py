"""Leading Dirichlet eigenpairs of -Delta_h by inverse iteration with deflation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import linalg

from .errors import ConfigurationError, InvariantViolation, SolverError
from .mesh import RadialBall

EIGEN_TOL = 1e-10
EIGEN_MAXITER = 10_000


@dataclass(frozen=True)
class EigenBasis:
    """Eigenpairs (mu_s, e_s), s = 1..len(mu), with ||e_s||_{H^1} = 1.

    ``spectrum`` records what the pairs are drawn from: "radial" on a
    RadialBall (radial modes only) or "box".
    """

    mesh: object
    mu: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    spectrum: str

    def __len__(self):
        return len(self.mu)

    @property
    def mu1(self):
        return float(self.mu[0])

    @property
    def e1(self):
        return self.vectors[0]

    @property
    def l2_vectors(self):
        # ||e||_{H^1}^2 = mu ||e||_2^2
        return self.vectors * np.sqrt(self.mu)[:, None]

    def decompose(self, u):
        """Split u = alpha*e_1 + v with v L^2-orthogonal to e_1."""
        e1 = self.e1
        alpha = self.mesh.inner_l2(u, e1) / self.mesh.inner_l2(e1, e1)
        return alpha, u - alpha * e1

    def combine(self, coeffs, start=0):
        coeffs = np.asarray(coeffs, dtype=float)
        return coeffs @ self.vectors[start : start + len(coeffs)]


def eigen_residual(mesh, mu, e):
    return mesh.norm_l2(mesh.neg_laplacian(e) - mu * e) / (mu * mesh.norm_l2(e))


def compute_eigenbasis(mesh, m_basis=8, tol=EIGEN_TOL, maxiter=EIGEN_MAXITER, seed=0):
    if m_basis < 1 or m_basis >= mesh.size // 2:
        raise ConfigurationError(f"m_basis={m_basis} must be >= 1 and well below {mesh.size} unknowns")
    rng = np.random.default_rng(seed)
    found = []  # L^2-normalised vectors
    mus, residuals = [], []
    for s in range(m_basis):
        x = rng.random(mesh.size) if s else np.ones(mesh.size)
        x = _deflate(mesh, x, found)
        x /= mesh.norm_l2(x)
        best = math.inf
        stale = 0
        for _ in range(maxiter):
            y = _deflate(mesh, mesh.poisson_solve(x), found)
            y /= mesh.norm_l2(y)
            mu = mesh.inner_h1(y, y)
            res = eigen_residual(mesh, mu, y)
            x = y
            if res <= tol:
                break
            # accept a roundoff plateau only once it is inside the 1e-8 invariant
            if res < 0.5 * best:
                best, stale = res, 0
            else:
                stale += 1
                if stale > 50 and res <= 1e-8:
                    break
        else:
            raise SolverError(
                f"inverse iteration for eigenpair {s + 1} did not converge in {maxiter} iterations", res
            )
        found.append(x)
        mus.append(mu)
        residuals.append(res)
    mu = np.array(mus)
    order = np.argsort(mu, kind="stable")
    mu = mu[order]
    vecs = np.array(found)[order] / np.sqrt(mu)[:, None]
    if vecs[0].sum() < 0:
        vecs[0] = -vecs[0]
    if not (vecs[0] > 0).all():
        raise InvariantViolation("first eigenfunction is not strictly positive")
    spectrum = "radial" if isinstance(mesh, RadialBall) else mesh.variant
    return EigenBasis(mesh, mu, vecs, np.array(residuals)[order], spectrum)


def _deflate(mesh, x, found):
    for e in found:
        x = x - mesh.inner_l2(e, x) * e
    return x


@lru_cache(maxsize=32)
def first_eigenpair(mesh):
    b = compute_eigenbasis(mesh, 1)
    return b.mu1, b.e1


def spectral_gap_constant(basis):
    """(mu_2 - mu_1)/mu_2: t -> (t - mu_1)/t increases, so s = 2 attains the infimum."""
    mu = np.asarray(basis.mu if hasattr(basis, "mu") else basis, dtype=float)
    if len(mu) < 2:
        raise ConfigurationError("spectral gap needs at least two eigenvalues")
    if not mu[1] > mu[0] * (1 + 1e-12):
        raise InvariantViolation(f"degenerate basis: mu_2={mu[1]!r} <= mu_1={mu[0]!r}")
    return float((mu[1] - mu[0]) / mu[1])


def harmonic_multiplicity(n, ell):
    """Dimension of degree-ell spherical harmonics on S^{n-1}."""
    top = math.comb(ell + n - 1, n - 1)
    return top - (math.comb(ell + n - 3, n - 1) if ell >= 2 else 0)


def ball_full_spectrum(mesh, count=8, max_ell=6):
    """Lowest eigenvalues of the full (non-radial) ball, with multiplicity.

    Separation of variables: each angular degree ell gives the radial operator
    -u'' - (n-1)/r u' + ell(ell+n-2)/r^2 u with u(0) = 0 for ell >= 1.  Only
    eigenvalues are returned (fields are radial-only); they show where the
    non-radial modes sit relative to the radial ones.
    """
    if not isinstance(mesh, RadialBall):
        raise ConfigurationError("full ball spectrum needs a RadialBall mesh")
    F = mesh.edge_coefficients[0]
    w = mesh.weights
    r = mesh.radii
    out = []
    for ell in range(max_ell + 1):
        diag = F.copy()
        diag[1:] += F[:-1]
        off = -F[:-1]
        if ell:
            diag = diag + w * ell * (ell + mesh.n - 2) / np.where(r > 0, r, 1.0) ** 2
            diag, off, ww = diag[1:], off[1:], w[1:]
        else:
            ww = w
        s = 1.0 / np.sqrt(ww)
        vals = linalg.eigh_tridiagonal(
            diag * s * s, off * s[:-1] * s[1:], eigvals_only=True, select="i", select_range=(0, count - 1)
        )
        mult = harmonic_multiplicity(mesh.n, ell)
        out.extend((float(v), ell) for v in vals for _ in range(mult))
    out.sort()
    return out[:count]
