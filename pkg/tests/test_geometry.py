import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from hypertess.geometry import (
    IsometrySpec,
    VolumeSpec,
    angle_at_origin,
    apply_isometry,
    ball_volume_dV,
    bracket_sq,
    cosh_distance,
    distance_from_origin,
    euclidean_ball_to_hyperbolic,
    euclidean_ball_volume_dV,
    from_hyperboloid,
    hyperbolic_ball_to_euclidean,
    hyperbolic_distance,
    hyperbolic_midpoint,
    invert_isometry,
    klein_convert,
    mobius_apply,
    mobius_modulus,
    pairwise_distances,
    radius_to_norm,
    random_isometry,
    to_hyperboloid,
    unit_ball_volume,
)


def ball_point(d, max_norm=0.95):
    return st.tuples(
        st.lists(st.floats(-1, 1), min_size=d, max_size=d).filter(lambda v: np.linalg.norm(v) > 1e-3),
        st.floats(0.0, max_norm),
    ).map(lambda t: np.asarray(t[0]) / np.linalg.norm(t[0]) * t[1])


dims = st.sampled_from([2, 3, 4])


@st.composite
def point_pairs(draw, n=2):
    d = draw(dims)
    return [draw(ball_point(d)) for _ in range(n)]


# --- examples ---------------------------------------------------------------


def test_bracket_examples():
    x = np.array([0.3, -0.4])
    assert bracket_sq(x, np.zeros(2)) == pytest.approx(1.0)
    assert bracket_sq(x, x) == pytest.approx((1 - x @ x) ** 2)
    assert bracket_sq(np.array([0.5, 0.0]), np.array([0.0, 0.5])) == pytest.approx(1.0625, abs=1e-15)


def test_mobius_examples():
    a = np.array([0.2, 0.5, -0.1])
    x = np.array([-0.3, 0.1, 0.4])
    np.testing.assert_allclose(mobius_apply(np.zeros(3), x), -x, atol=1e-15)
    np.testing.assert_allclose(mobius_apply(a, a), 0.0, atol=1e-15)
    np.testing.assert_allclose(mobius_apply(a, np.zeros(3)), a, atol=1e-15)


def test_distance_examples():
    x = np.array([0.5, 0.0])
    assert hyperbolic_distance(x, x) == 0.0
    assert hyperbolic_distance(np.zeros(2), x) == pytest.approx(np.log(3), abs=1e-14)
    assert np.cosh(hyperbolic_distance(np.zeros(2), x)) == pytest.approx(5 / 3, abs=1e-14)
    assert cosh_distance(np.zeros(2), x) == pytest.approx(5 / 3, abs=1e-14)


def test_klein_examples():
    np.testing.assert_allclose(klein_convert(np.zeros(2)), 0.0)
    k = klein_convert(np.array([0.5, 0.0]), "to-klein")
    assert np.linalg.norm(k) == pytest.approx(0.8, abs=1e-15)
    with pytest.raises(ValueError):
        klein_convert(np.zeros(2), "sideways")


def test_isometry_examples():
    x = np.array([0.1, -0.7])
    np.testing.assert_allclose(apply_isometry(IsometrySpec.identity(2), x), x, atol=1e-15)
    a = np.array([0.3, 0.2])
    np.testing.assert_allclose(apply_isometry(IsometrySpec(a, np.eye(2)), a), 0.0, atol=1e-15)
    with pytest.raises(ValueError):
        IsometrySpec(a, np.array([[1.0, 0.1], [0.0, 1.0]]))


def test_ball_volume_examples():
    assert ball_volume_dV(0.0, 2) == 0.0
    for r in (0.3, 1.0, 4.0):
        assert ball_volume_dV(r, 2) == pytest.approx(np.sinh(r / 2) ** 2, rel=1e-12)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_ball_volume_matches_radial_quadrature(d):
    # dV = c_d^{-1} (2/(1-|x|^2))^d dx / 2^d ... integrate the density radially in |x|
    c = unit_ball_volume(d)
    for r in (0.5, 2.0, 5.0):
        rho = np.tanh(r / 2)
        val, _ = integrate.quad(lambda t: d * c * t ** (d - 1) / (1 - t * t) ** d, 0, rho, epsrel=1e-13)
        assert ball_volume_dV(r, VolumeSpec(d)) == pytest.approx(val / c, rel=1e-9)
        assert euclidean_ball_volume_dV(rho, d) == pytest.approx(val / c, rel=1e-9)


def test_ball_volume_monotone():
    r = np.linspace(0, 8, 50)
    for d in (2, 3, 4):
        v = [ball_volume_dV(x, d) for x in r]
        assert np.all(np.diff(v) > 0)


def test_documented_errors():
    with pytest.raises(ValueError):
        bracket_sq(np.zeros(2), np.zeros(3))
    with pytest.raises(ValueError):
        ball_volume_dV(-1.0, 2)


# --- properties -------------------------------------------------------------


@given(point_pairs(2))
def test_mobius_involution(pair):
    a, x = pair
    np.testing.assert_allclose(mobius_apply(a, mobius_apply(a, x)), x, atol=1e-9)


@given(point_pairs(2))
def test_mobius_modulus_identity(pair):
    a, x = pair
    lhs = 1 - np.sum(mobius_apply(a, x) ** 2)
    rhs = (1 - a @ a) * (1 - x @ x) / bracket_sq(x, a)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)
    assert mobius_modulus(a, x) == pytest.approx(np.linalg.norm(mobius_apply(a, x)), abs=1e-12)


@given(point_pairs(3))
def test_mobius_invariance(triple):
    a, x, y = triple
    assert hyperbolic_distance(mobius_apply(a, x), mobius_apply(a, y)) == pytest.approx(
        hyperbolic_distance(x, y), rel=1e-7, abs=1e-9)


@given(point_pairs(2))
def test_cosh_identity(pair):
    x, y = pair
    t2 = np.sum(mobius_apply(x, y) ** 2)
    dist = hyperbolic_distance(x, y)
    assert np.cosh(dist) == pytest.approx((1 + t2) / (1 - t2), rel=1e-9)
    assert 1 / (1 - t2) == pytest.approx(bracket_sq(x, y) / ((1 - x @ x) * (1 - y @ y)), rel=1e-9)


@given(point_pairs(3))
def test_triangle_inequality(triple):
    x, y, z = triple
    assert hyperbolic_distance(x, z) <= hyperbolic_distance(x, y) + hyperbolic_distance(y, z) + 1e-9


@given(point_pairs(2), st.integers(0, 2**31))
def test_random_isometry_preserves_distance(pair, seed):
    x, y = pair
    g = random_isometry(len(x), seed)
    assert hyperbolic_distance(apply_isometry(g, x), apply_isometry(g, y)) == pytest.approx(
        hyperbolic_distance(x, y), rel=1e-7, abs=1e-9)
    np.testing.assert_allclose(invert_isometry(g, apply_isometry(g, x)), x, atol=1e-9)


@given(point_pairs(1))
def test_klein_round_trip(p):
    (x,) = p
    np.testing.assert_allclose(klein_convert(klein_convert(x, "to-klein"), "from-klein"), x, atol=1e-12)


@given(point_pairs(1))
def test_hyperboloid_round_trip(p):
    (x,) = p
    X = to_hyperboloid(x)
    assert X[0] ** 2 - np.sum(X[1:] ** 2) == pytest.approx(1.0, rel=1e-9)
    np.testing.assert_allclose(from_hyperboloid(X), x, atol=1e-12)


@given(point_pairs(2))
def test_law_of_cosines_at_origin(pair):
    x, y = pair
    a, b = distance_from_origin(x), distance_from_origin(y)
    th = angle_at_origin(x, y)
    c = np.cosh(a) * np.cosh(b) - np.sinh(a) * np.sinh(b) * np.cos(th)
    assert np.cosh(hyperbolic_distance(x, y)) == pytest.approx(c, rel=1e-8)


@given(point_pairs(2))
def test_midpoint_is_equidistant(pair):
    x, y = pair
    m = hyperbolic_midpoint(x, y)
    dxy = hyperbolic_distance(x, y)
    assert hyperbolic_distance(x, m) == pytest.approx(dxy / 2, abs=1e-7)
    assert hyperbolic_distance(y, m) == pytest.approx(dxy / 2, abs=1e-7)


@given(point_pairs(1), st.floats(0.05, 3.0))
def test_ball_conversions_round_trip(p, r):
    (x,) = p
    c, R = hyperbolic_ball_to_euclidean(x, r)
    x2, r2 = euclidean_ball_to_hyperbolic(c, R)
    np.testing.assert_allclose(x2, x, atol=1e-8)
    assert r2 == pytest.approx(r, rel=1e-8)
    # the Euclidean sphere is the set of points at hyperbolic distance r from x
    u = np.zeros_like(c)
    u[0] = 1.0
    assert hyperbolic_distance(x, c + R * u) == pytest.approx(r, rel=1e-6)


def test_radius_to_norm_inverse():
    r = np.linspace(0, 10, 11)
    np.testing.assert_allclose(distance_from_origin(radius_to_norm(r)[:, None] * np.array([[1.0, 0.0]])), r,
                               atol=1e-9)


def test_pairwise_distances_matches_loop():
    rng = np.random.default_rng(1)
    X = rng.uniform(-0.6, 0.6, (7, 2))
    D = pairwise_distances(X)
    for i in range(7):
        for j in range(7):
            assert D[i, j] == pytest.approx(hyperbolic_distance(X[i], X[j]), abs=1e-9)
