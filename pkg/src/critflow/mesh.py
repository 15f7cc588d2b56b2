"""Structured meshes: the ball (radial reduction, any n >= 3) and the 3-D box.

A field is a plain float array holding the values at the unknown nodes of a
mesh; Dirichlet values are implicit zeros.  Every mesh exposes the same
small surface:

    mesh.size                      number of unknowns
    mesh.weights                   quadrature weights (volume units)
    mesh.neg_laplacian(u)          -Delta_h u
    mesh.poisson_solve(f)          g with -Delta_h g = f
    mesh.inner_h1(u, v)            discrete Dirichlet form
    mesh.inner_l2(u, v)            weighted node product
    mesh.integrate_power(c, u, p)  sum of w * c * |u|^p

The Dirichlet form is assembled edge by edge,
``sum_e F_e (u_j - u_i)(v_j - v_i)``, which equals ``<L u, v>_w`` exactly in
exact arithmetic (summation by parts with zero boundary data) and is
bitwise symmetric in floating point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft, linalg

from .errors import ConfigurationError, MeshMismatchError, SolverError

POISSON_RTOL = 1e-12

# powers are taken in log space past this dynamic range
_LOG_POWER_RANGE = 1e12


def sphere_area(n):
    """Surface area of the unit sphere S^{n-1} in R^n."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def ball_volume(n, R):
    return math.pi ** (n / 2) * R**n / math.gamma(n / 2 + 1)


def abs_power(u, p):
    """|u|**p, switching to exp(p log|u|) when |u| spans many decades."""
    a = np.abs(np.asarray(u, dtype=float))
    nz = a > 0
    if not nz.any():
        return np.zeros_like(a)
    lo, hi = a[nz].min(), a[nz].max()
    if hi <= lo * _LOG_POWER_RANGE:
        return a**p
    out = np.zeros_like(a)
    out[nz] = np.exp(p * np.log(a[nz]))
    return out


class _MeshBase:
    n: int

    def check(self, u):
        u = np.asarray(u, dtype=float)
        if u.shape != (self.size,):
            raise MeshMismatchError(
                f"field of shape {u.shape} does not live on {self.describe()} "
                f"({self.size} unknowns)"
            )
        return u

    def zeros(self):
        return np.zeros(self.size)

    def inner_l2(self, u, v):
        return float(np.dot(self.weights * self.check(u), self.check(v)))

    def norm_l2(self, u):
        return math.sqrt(self.inner_l2(u, u))

    def inner_h1(self, u, v):
        du = self.edge_differences(u)
        dv = self.edge_differences(v)
        # F . (a*b) rather than (F*a) . b keeps the form bitwise symmetric
        return float(sum(np.dot(np.broadcast_to(F, a.shape), a * b)
                         for F, a, b in zip(self.edge_coefficients, du, dv)))

    def norm_h1(self, u):
        return math.sqrt(max(self.inner_h1(u, u), 0.0))

    def neg_laplacian(self, u):
        return self.stiffness(u) / self.weights

    def integrate_power(self, coef, u, p):
        if p < 1:
            raise ConfigurationError(f"integrate_power needs p >= 1, got {p}")
        u = self.check(u)
        return float(np.dot(self.weights * np.broadcast_to(coef, u.shape), abs_power(u, p)))

    def integrate(self, f):
        return float(np.dot(self.weights, self.check(f)))

    def node_energy(self, u):
        """Dirichlet energy split over nodes; sums to inner_h1(u, u)."""
        raise NotImplementedError

    def _backward_error(self, g, f):
        # normwise backward error ||Lg - f|| / (|| |L||g| || + ||f||); rounding in the
        # stencil alone produces residuals of order eps * cond(L) relative to f
        a = np.abs(g)
        scale = self.norm_l2((2.0 * self._diagonal * a - self.stiffness(a)) / self.weights)
        return self.norm_l2(self.neg_laplacian(g) - f) / (scale + self.norm_l2(f))

    def poisson_solve(self, f):
        f = self.check(f)
        fnorm = self.norm_l2(f)
        if fnorm == 0.0:
            return np.zeros_like(f)
        g = self._solve(f)
        rel = self._backward_error(g, f)
        if rel > POISSON_RTOL:
            # one step of iterative refinement against the flux-form residual
            g = g - self._solve(self.neg_laplacian(g) - f)
            rel = self._backward_error(g, f)
        if not np.isfinite(rel) or rel > POISSON_RTOL:
            raise SolverError(f"Poisson solve residual {rel:.3e} above {POISSON_RTOL:g}", rel)
        return g


@dataclass(frozen=True)
class RadialBall(_MeshBase):
    """Radial reduction of the ball B(0, R) in R^n.

    Unknowns sit at r_i = i*h for i = 0..m-1 (the centre included, so the
    regularity condition u'(0) = 0 is built into the stencil); r_m = R
    carries the Dirichlet zero.  Each node owns the exact volume of its
    dual shell [r_{i-1/2}, r_{i+1/2}], which makes the stencil exact on
    quadratics, and at r = 0 reduces to -n u''(0) with a reflected ghost.
    """

    n: int
    R: float
    m: int

    MIN_NODES = 16

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ConfigurationError(f"ball dimension must be an integer >= 3, got {self.n}")
        if int(self.m) != self.m or self.m < self.MIN_NODES:
            raise ConfigurationError(f"radial mesh needs at least {self.MIN_NODES} nodes, got {self.m}")
        if not self.R > 0:
            raise ConfigurationError(f"radius must be positive, got {self.R}")

    variant = "radial"

    @property
    def size(self):
        return self.m

    @cached_property
    def h(self):
        return self.R / self.m

    @property
    def spacing(self):
        return self.h

    @cached_property
    def radii(self):
        return self.h * np.arange(self.m)

    @property
    def distances_from_center(self):
        return self.radii

    @cached_property
    def _faces(self):
        return self.h * (np.arange(self.m) + 0.5)

    @cached_property
    def weights(self):
        outer = self._faces
        inner = np.concatenate(([0.0], outer[:-1]))
        return sphere_area(self.n) / self.n * (outer**self.n - inner**self.n)

    @cached_property
    def edge_coefficients(self):
        return (sphere_area(self.n) * self._faces ** (self.n - 1) / self.h,)

    @cached_property
    def volume(self):
        return ball_volume(self.n, self.R)

    def edge_differences(self, u):
        u = self.check(u)
        du = np.empty_like(u)
        du[:-1] = u[1:] - u[:-1]
        du[-1] = -u[-1]
        return (du,)

    def stiffness(self, u):
        (du,) = self.edge_differences(u)
        flux = self.edge_coefficients[0] * du
        out = -flux
        out[1:] += flux[:-1]
        return out

    def node_energy(self, u):
        (du,) = self.edge_differences(u)
        e = self.edge_coefficients[0] * du**2
        out = 0.5 * e
        out[1:] += 0.5 * e[:-1]
        out[-1] += 0.5 * e[-1]
        return out

    @cached_property
    def _diagonal(self):
        F = self.edge_coefficients[0]
        diag = F.copy()
        diag[1:] += F[:-1]
        return diag

    @cached_property
    def _cholesky(self):
        F = self.edge_coefficients[0]
        ab = np.zeros((2, self.m))
        ab[0, 1:] = -F[:-1]
        ab[1] = self._diagonal
        return linalg.cholesky_banded(ab, lower=False)

    def _solve(self, f):
        return linalg.cho_solve_banded((self._cholesky, False), self.weights * f)

    def sample(self, func):
        """Evaluate a radial profile func(r) at the unknown nodes."""
        return np.asarray(func(self.radii), dtype=float) * np.ones(self.m)

    def boundary_distance(self, index):
        return self.R - self.radii[index]

    def describe(self):
        return f"radial {self.n} {self.R!r} {self.m}"


@dataclass(frozen=True)
class Box3(_MeshBase):
    """Uniform grid on (0,Lx) x (0,Ly) x (0,Lz) with the 7-point stencil.

    ``nx`` counts intervals, so there are nx-1 unknowns along x.
    Fields are flattened in C order over (x, y, z).
    """

    Lx: float
    Ly: float
    Lz: float
    nx: int
    ny: int
    nz: int

    MIN_NODES = 8
    n = 3
    variant = "box"

    def __post_init__(self):
        for c in (self.nx, self.ny, self.nz):
            if int(c) != c or c < self.MIN_NODES:
                raise ConfigurationError(f"box mesh needs at least {self.MIN_NODES} nodes per axis, got {c}")
        for L in (self.Lx, self.Ly, self.Lz):
            if not L > 0:
                raise ConfigurationError(f"edge lengths must be positive, got {L}")

    @cached_property
    def shape(self):
        return (self.nx - 1, self.ny - 1, self.nz - 1)

    @cached_property
    def size(self):
        return int(np.prod(self.shape))

    @cached_property
    def spacings(self):
        return (self.Lx / self.nx, self.Ly / self.ny, self.Lz / self.nz)

    @property
    def spacing(self):
        return max(self.spacings)

    @property
    def h(self):
        return self.spacing

    @cached_property
    def weights(self):
        hx, hy, hz = self.spacings
        return np.full(self.size, hx * hy * hz)

    @cached_property
    def volume(self):
        return self.Lx * self.Ly * self.Lz

    @cached_property
    def edge_coefficients(self):
        cell = float(np.prod(self.spacings))
        return tuple(cell / hh**2 for hh in self.spacings)

    @cached_property
    def coords(self):
        axes = [hh * np.arange(1, c) for hh, c in zip(self.spacings, (self.nx, self.ny, self.nz))]
        X, Y, Z = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])

    def edge_differences(self, u):
        U = self.check(u).reshape(self.shape)
        P = np.pad(U, 1)
        return tuple(np.diff(P, axis=ax)[_interior_slices(ax)].ravel() for ax in range(3))

    def stiffness(self, u):
        U = self.check(u).reshape(self.shape)
        P = np.pad(U, 1)
        out = np.zeros(self.shape)
        for ax, F in enumerate(self.edge_coefficients):
            flux = F * np.diff(P, axis=ax)[_interior_slices(ax)]
            lo = [slice(None)] * 3
            hi = [slice(None)] * 3
            lo[ax] = slice(0, -1)
            hi[ax] = slice(1, None)
            out += flux[tuple(lo)] - flux[tuple(hi)]
        return out.ravel()

    def node_energy(self, u):
        U = self.check(u).reshape(self.shape)
        P = np.pad(U, 1)
        out = np.zeros(self.shape)
        for ax, F in enumerate(self.edge_coefficients):
            e = F * np.diff(P, axis=ax)[_interior_slices(ax)] ** 2
            lo = [slice(None)] * 3
            hi = [slice(None)] * 3
            lo[ax] = slice(0, -1)
            hi[ax] = slice(1, None)
            half = 0.5 * e
            out += half[tuple(lo)] + half[tuple(hi)]
            # edges touching the boundary belong wholly to their interior end
            first = [slice(None)] * 3
            last = [slice(None)] * 3
            first[ax] = slice(0, 1)
            last[ax] = slice(-1, None)
            out[tuple(first)] += half[tuple(first)]
            out[tuple(last)] += half[tuple(last)]
        return out.ravel()

    @cached_property
    def _diagonal(self):
        return 2.0 * sum(self.edge_coefficients)

    @cached_property
    def _symbol(self):
        lams = []
        for hh, c in zip(self.spacings, (self.nx, self.ny, self.nz)):
            j = np.arange(1, c)
            lams.append(4.0 / hh**2 * np.sin(np.pi * j / (2 * c)) ** 2)
        return lams[0][:, None, None] + lams[1][None, :, None] + lams[2][None, None, :]

    def _solve(self, f):
        F = fft.dstn(f.reshape(self.shape), type=1)
        return fft.idstn(F / self._symbol, type=1).ravel()

    def sample(self, func):
        """Evaluate func(x, y, z) at the unknown nodes."""
        c = self.coords
        return np.asarray(func(c[:, 0], c[:, 1], c[:, 2]), dtype=float) * np.ones(self.size)

    def boundary_distance(self, index):
        x = self.coords[index]
        return float(min(x[0], self.Lx - x[0], x[1], self.Ly - x[1], x[2], self.Lz - x[2]))

    def describe(self):
        return f"box {self.Lx!r} {self.Ly!r} {self.Lz!r} {self.nx} {self.ny} {self.nz}"


def _interior_slices(ax):
    # after np.diff along ax on the zero-padded array, keep only rows that are
    # interior in the two other directions
    s = [slice(1, -1)] * 3
    s[ax] = slice(None)
    return tuple(s)


def mesh_from_description(text):
    parts = text.split()
    if parts and parts[0] == "mesh":
        parts = parts[1:]
    if not parts:
        raise ConfigurationError("empty mesh description")
    kind, args = parts[0], parts[1:]
    try:
        if kind == "radial" and len(args) == 3:
            return RadialBall(int(args[0]), float(args[1]), int(args[2]))
        if kind == "box" and len(args) == 6:
            return Box3(*map(float, args[:3]), *map(int, args[3:]))
    except ValueError as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"bad mesh description {text!r}: {exc}") from exc
    raise ConfigurationError(f"bad mesh description {text!r}")


def dump_field(path, mesh, u):
    u = mesh.check(u)
    with open(path, "w") as fh:
        fh.write(f"mesh {mesh.describe()}\n")
        for x in u:
            fh.write(f"{float(x)!r}\n")


def load_field(path):
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("mesh "):
            raise ConfigurationError(f"{path}: first line must start with 'mesh', got {header.strip()!r}")
        mesh = mesh_from_description(header)
        values = np.array([float(line) for line in fh if line.strip()])
    return mesh, mesh.check(values)
