import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from critflow.errors import ConfigurationError, MeshMismatchError
from critflow.mesh import (
    Box3,
    RadialBall,
    abs_power,
    ball_volume,
    dump_field,
    load_field,
    mesh_from_description,
    sphere_area,
)
from oracles import dense_box_laplacian, edge_sum_dirichlet


@pytest.mark.parametrize("n", [3, 4, 5, 7])
def test_radial_stencil_exact_on_quadratics(n):
    mesh = RadialBall(n, 1.0, 300)
    u = mesh.sample(lambda r: 1 - r**2)
    assert np.allclose(mesh.neg_laplacian(u), 2 * n, rtol=1e-8)


@pytest.mark.parametrize("m", [64, 2000, 4000])
def test_radial_poisson_inverts_stencil(m):
    mesh = RadialBall(3, 2.0, m)
    u = mesh.sample(lambda r: np.cos(np.pi * r / 4) * (1 + r))
    assert np.allclose(mesh.poisson_solve(mesh.neg_laplacian(u)), u, rtol=0, atol=1e-9 * np.abs(u).max())


def test_dirichlet_form_matches_loop_oracle(rng):
    mesh = RadialBall(3, 1.0, 50)
    u, v = rng.standard_normal((2, mesh.size))
    assert mesh.inner_h1(u, v) == pytest.approx(edge_sum_dirichlet(mesh, u, v), rel=1e-13)
    # summation by parts
    assert mesh.inner_h1(u, v) == pytest.approx(mesh.inner_l2(mesh.neg_laplacian(u), v), rel=1e-10)


def test_dirichlet_energy_of_paraboloid(ball):
    # int |grad(1 - r^2)|^2 over the unit ball = 16 pi / 5
    u = ball.sample(lambda r: 1 - r**2)
    assert ball.inner_h1(u, u) == pytest.approx(16 * math.pi / 5, rel=1e-6)
    assert ball.integrate(u**2) == pytest.approx(32 * math.pi / 105, rel=1e-5)


def test_node_energy_sums_to_form(ball, box48, rng):
    for mesh in (ball, box48):
        u = rng.standard_normal(mesh.size)
        assert mesh.node_energy(u).sum() == pytest.approx(mesh.inner_h1(u, u), rel=1e-12)


def test_radial_volume_converges(ball):
    assert ball.weights.sum() == pytest.approx(ball_volume(3, 1.0), rel=2e-3)


def test_sphere_area_and_volume():
    # area of the unit sphere S^{n-1} bounding the n-ball
    assert sphere_area(3) == pytest.approx(4 * math.pi)
    assert sphere_area(4) == pytest.approx(2 * math.pi**2)
    assert ball_volume(3, 2.0) == pytest.approx(32 * math.pi / 3)


def test_box_stencil_matches_dense_oracle(rng):
    mesh = Box3(1.0, 1.0, 1.0, 8, 8, 8)
    A = dense_box_laplacian(8)
    u = rng.standard_normal(mesh.size)
    assert np.allclose(mesh.neg_laplacian(u), A @ u, rtol=1e-12, atol=1e-9)
    f = rng.standard_normal(mesh.size)
    assert np.allclose(mesh.poisson_solve(f), np.linalg.solve(A, f), rtol=1e-9, atol=1e-12)


def test_box_anisotropic_symmetry(rng):
    mesh = Box3(1.0, 2.0, 0.5, 10, 12, 9)
    u, v = rng.standard_normal((2, mesh.size))
    assert mesh.inner_h1(u, v) == mesh.inner_h1(v, u)
    assert mesh.inner_h1(u, v) == pytest.approx(mesh.inner_l2(mesh.neg_laplacian(u), v), rel=1e-10)
    assert np.allclose(mesh.neg_laplacian(mesh.poisson_solve(u)), u, atol=1e-9)


@pytest.mark.parametrize(
    "make",
    [lambda: RadialBall(3, 1.0, 8), lambda: RadialBall(2, 1.0, 100), lambda: Box3(1, 1, 1, 4, 8, 8),
     lambda: Box3(0, 1, 1, 8, 8, 8), lambda: RadialBall(3, -1.0, 100)],
)
def test_invalid_meshes(make):
    with pytest.raises(ConfigurationError):
        make()


def test_field_length_checked(ball):
    with pytest.raises(MeshMismatchError):
        ball.inner_l2(np.ones(3), np.ones(3))


def test_integrate_power_requires_p_at_least_one(ball):
    with pytest.raises(ConfigurationError):
        ball.integrate_power(1.0, np.ones(ball.size), 0.5)


def test_abs_power_extreme_range():
    x = np.array([1e-200, 1.0, 1e200])
    out = abs_power(x, 1.5)
    assert np.all(np.isfinite(out[:2]))
    assert out[1] == 1.0


@pytest.mark.parametrize("mesh", [RadialBall(4, 1.5, 40), Box3(1.0, 2.0, 3.0, 8, 9, 10)])
def test_field_roundtrip_is_exact(tmp_path, rng, mesh):
    u = rng.standard_normal(mesh.size)
    dump_field(tmp_path / "u.field", mesh, u)
    mesh2, u2 = load_field(tmp_path / "u.field")
    assert mesh2 == mesh
    assert np.array_equal(u, u2)
    assert mesh_from_description(mesh.describe()) == mesh


def test_load_rejects_bad_header(tmp_path):
    p = tmp_path / "bad.field"
    p.write_text("grid 3 1\n0.0\n")
    with pytest.raises(ConfigurationError):
        load_field(p)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, 60, elements=st.floats(-1e3, 1e3)), arrays(np.float64, 60, elements=st.floats(-1e3, 1e3)))
def test_dirichlet_form_symmetric_nonnegative(u, v):
    mesh = RadialBall(3, 1.0, 60)
    assert mesh.inner_h1(u, v) == mesh.inner_h1(v, u)
    assert mesh.inner_h1(u, u) >= 0


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, 60, elements=st.floats(-10, 10)), st.floats(-5, 5))
def test_poisson_solve_linear(f, c):
    mesh = RadialBall(3, 1.0, 60)
    g = mesh.poisson_solve(f)
    assert np.allclose(mesh.poisson_solve(c * f), c * g, atol=1e-9 * (1 + np.abs(g).max()))
