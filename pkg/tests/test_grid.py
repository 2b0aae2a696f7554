import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anisoflow.grid import Grid, divergence, gradient, inner_l2, laplacian0, norm_l2, rotate


def center_bump(n=3):
    f = np.zeros((n, n))
    f[n // 2, n // 2] = 1.0
    return f


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(0, 3)
    with pytest.raises(ValueError):
        Grid(3, 3, hx=0.0)
    assert Grid(4, 5).vector_shape == (2, 5, 6)


def test_gradient_of_zero():
    g = Grid(4, 3)
    assert np.all(gradient(g, g.zeros()) == 0)


def test_gradient_center_stencil():
    # vector node (a, b) holds the forward difference at grid node (a-1, b-1)
    grad = gradient(Grid(3, 3), center_bump())
    gx = np.zeros((4, 4))
    gx[1, 2], gx[2, 2] = 1.0, -1.0  # edge entering the center from the left, edge leaving it
    gy = np.zeros((4, 4))
    gy[2, 1], gy[2, 2] = 1.0, -1.0
    np.testing.assert_array_equal(grad[0], gx)
    np.testing.assert_array_equal(grad[1], gy)


def test_gradient_linear(rng):
    g = Grid(4, 4)
    f = rng.standard_normal(g.shape)
    np.testing.assert_allclose(gradient(g, 2.5 * f), 2.5 * gradient(g, f), rtol=1e-15)


def test_divergence_of_zero():
    g = Grid(3, 5)
    assert np.all(divergence(g, g.vector_zeros()) == 0)


@pytest.mark.parametrize("h", [1.0, 0.5])
def test_divergence_single_edge(h):
    g = Grid(3, 3, h, h)
    v = g.vector_zeros()
    v[0, 2, 2] = 1.0  # x-edge leaving the center node
    expected = np.zeros((3, 3))
    expected[1, 1], expected[2, 1] = 1.0 / h, -1.0 / h
    np.testing.assert_allclose(divergence(g, v), expected, rtol=1e-15)


def test_adjointness_random(rng):
    g = Grid(5, 5, 0.7, 1.3)
    for _ in range(100):
        f = rng.standard_normal(g.shape)
        v = rng.standard_normal(g.vector_shape)
        lhs = inner_l2(g, gradient(g, f), v)
        rhs = -inner_l2(g, f, divergence(g, v))
        scale = norm_l2(g, gradient(g, f)) * norm_l2(g, v)
        assert abs(lhs - rhs) <= 1e-12 * scale


def test_laplacian_center_stencil():
    lap = laplacian0(Grid(3, 3), center_bump())
    expected = np.array([[0, 1, 0], [1, -4, 1], [0, 1, 0]], dtype=float)
    np.testing.assert_array_equal(lap, expected)


def test_laplacian_single_node_eigenvalue():
    assert laplacian0(Grid(1, 1), np.ones((1, 1)))[0, 0] == -4.0


def test_laplacian_is_div_grad(rng):
    g = Grid(6, 4, 0.3, 0.9)
    f = rng.standard_normal(g.shape)
    assert np.array_equal(laplacian0(g, f), divergence(g, gradient(g, f)))


def test_laplacian_five_point_interior(rng):
    g = Grid(7, 6)
    f = rng.standard_normal(g.shape)
    p = np.pad(f, 1)
    five = p[2:, 1:-1] + p[:-2, 1:-1] + p[1:-1, 2:] + p[1:-1, :-2] - 4 * p[1:-1, 1:-1]
    np.testing.assert_allclose(laplacian0(g, f), five, atol=1e-13)


def test_minus_laplacian_positive_definite(rng):
    g = Grid(5, 4)
    for _ in range(20):
        f = rng.standard_normal(g.shape)
        q = -inner_l2(g, laplacian0(g, f), f)
        assert q > 0
        assert q == pytest.approx(inner_l2(g, gradient(g, f), gradient(g, f)), rel=1e-13)


def test_rotate_identity_and_half_turn(rng):
    g = Grid(3, 4)
    v = rng.standard_normal(g.vector_shape)
    np.testing.assert_array_equal(rotate(g, g.zeros(), v), v)
    flipped = rotate(g, np.full(g.shape, np.pi), v)
    # the ring keeps alpha = 0, so only interior vector nodes flip
    np.testing.assert_allclose(flipped[:, 1:, 1:], -v[:, 1:, 1:], atol=1e-15)
    np.testing.assert_array_equal(flipped[:, 0, :], v[:, 0, :])


def test_rotate_quarter_turn():
    g = Grid(2, 2)
    v = g.vector_zeros()
    v[0] = 1.0
    r = rotate(g, np.full(g.shape, np.pi / 2), v)
    np.testing.assert_allclose(r[0, 1:, 1:], 0.0, atol=1e-15)
    np.testing.assert_allclose(r[1, 1:, 1:], 1.0, atol=1e-15)


def test_rotate_preserves_norm(rng):
    g = Grid(8, 8)
    v = rng.standard_normal(g.vector_shape)
    a = rng.uniform(-10, 10, g.shape)
    r = rotate(g, a, v)
    np.testing.assert_allclose(np.hypot(*r), np.hypot(*v), rtol=0, atol=1e-14 * np.abs(v).max())


def test_rotate_derivative_is_quarter_turn(rng):
    g = Grid(5, 5)
    v = rng.standard_normal(g.vector_shape)
    a = rng.uniform(-3, 3, g.shape)
    h = 1e-6
    fd = (rotate(g, a + h, v) - rotate(g, a - h, v)) / (2 * h)
    exact = rotate(g, a + np.pi / 2, v)
    np.testing.assert_allclose(fd[:, 1:, 1:], exact[:, 1:, 1:], atol=1e-8)


def test_inner_product_basics(rng):
    g = Grid(3, 3, 0.5, 2.0)
    f = rng.standard_normal(g.shape)
    assert inner_l2(g, f, g.zeros()) == 0
    e = g.zeros()
    e[1, 2] = 1.0
    assert inner_l2(g, e, e) == pytest.approx(g.hx * g.hy)


@settings(max_examples=50, deadline=None)
@given(
    st.integers(1, 6),
    st.integers(1, 6),
    st.floats(0.1, 3.0),
    st.floats(0.1, 3.0),
    st.integers(0, 2**32 - 1),
)
def test_cauchy_schwarz_and_symmetry(nx, ny, hx, hy, seed):
    g = Grid(nx, ny, hx, hy)
    r = np.random.default_rng(seed)
    f, h = r.standard_normal(g.shape), r.standard_normal(g.shape)
    assert inner_l2(g, f, h) == inner_l2(g, h, f)
    assert abs(inner_l2(g, f, h)) <= norm_l2(g, f) * norm_l2(g, h) * (1 + 1e-14)
