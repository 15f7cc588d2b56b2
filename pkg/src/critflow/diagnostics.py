"""Concentration detection and bubble profiles."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import RadialBall

CONCENTRATION_FACTOR = 4.0


@dataclass(frozen=True)
class Concentration:
    half_energy_radius: float
    peak: float
    flag: bool


def energy_center(mesh, u):
    """Index of the node with the largest Dirichlet-energy density."""
    return int(np.argmax(mesh.node_energy(u) / mesh.weights))


def node_distances(mesh, center_index):
    if isinstance(mesh, RadialBall):
        # a radial field can only concentrate at the origin
        return mesh.radii
    c = mesh.coords
    return np.linalg.norm(c - c[center_index], axis=1)


def half_energy_radius(mesh, u):
    e = mesh.node_energy(u)
    total = e.sum()
    if not total > 0:
        return float("nan")
    d = node_distances(mesh, energy_center(mesh, u))
    order = np.argsort(d, kind="stable")
    cum = np.cumsum(e[order])
    k = int(np.searchsorted(cum, 0.5 * total))
    return float(d[order][min(k, len(d) - 1)])


def concentration_monitor(mesh, u, factor=CONCENTRATION_FACTOR):
    """Half-energy radius around the energy peak; flagged when below factor*h."""
    u = mesh.check(u)
    radius = half_energy_radius(mesh, u)
    return Concentration(radius, float(np.abs(u).max()), bool(radius < factor * mesh.spacing))


def bubble_profile(rho, eps, n):
    """Aubin-Talenti bubble c_n (eps/(eps^2 + rho^2))^{(n-2)/2}, solving -Delta U = U^q on R^n."""
    cn = (n * (n - 2)) ** ((n - 2) / 4)
    return cn * (eps / (eps**2 + rho**2)) ** ((n - 2) / 2)


def truncated_bubble(mesh, eps, center=None):
    """Bubble of scale eps, shifted down by its value at the boundary distance and clipped at 0."""
    n = mesh.n
    if isinstance(mesh, RadialBall):
        if center is not None and np.any(np.asarray(center, dtype=float) != 0):
            raise ValueError("radial meshes only carry bubbles centred at the origin")
        rho = mesh.radii
        reach = mesh.R
    else:
        center = np.asarray(center if center is not None else [mesh.Lx / 2, mesh.Ly / 2, mesh.Lz / 2], dtype=float)
        rho = np.linalg.norm(mesh.coords - center, axis=1)
        reach = float(min(center[0], mesh.Lx - center[0], center[1], mesh.Ly - center[1], center[2], mesh.Lz - center[2]))
    return np.maximum(bubble_profile(rho, eps, n) - bubble_profile(reach, eps, n), 0.0)
