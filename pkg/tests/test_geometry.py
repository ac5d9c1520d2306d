import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from torsionlab.errors import DomainError
from torsionlab.geometry import (
    AnnulusPoint,
    PlanePoint,
    angles_from_vertical,
    lift_point,
    nearest_lift,
    oriented_angle,
    project_point,
    unwrap_chain,
    wrap_turns,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)
vec = st.tuples(st.floats(-100, 100), st.floats(-100, 100)).filter(lambda v: math.hypot(*v) > 1e-6)


@pytest.mark.parametrize("u, v, expected", [
    ((0, 1), (0, 1), 0.0),
    ((0, 1), (1, 0), -0.25),
    ((0, 1), (-1, 0), 0.25),
    ((0, 1), (0, -1), 0.5),
    ((0, 1), (1, 1), -0.125),
])
def test_oriented_angle_examples(u, v, expected):
    assert oriented_angle(u, v) == pytest.approx(expected, abs=1e-15)


def test_oriented_angle_zero_vector():
    with pytest.raises(DomainError):
        oriented_angle((0, 0), (1, 0))
    with pytest.raises(DomainError):
        oriented_angle((0, 1), (0.0, 0.0))


@given(vec, vec)
def test_oriented_angle_antisymmetric(u, v):
    a, b = oriented_angle(u, v), oriented_angle(v, u)
    assert -0.5 < a <= 0.5 and -0.5 < b <= 0.5
    s = a + b
    assert abs(s - round(s)) < 1e-12


def test_angles_from_vertical_matches_scalar():
    rng = np.random.default_rng(3)
    V = rng.normal(size=(50, 2))
    got = angles_from_vertical(V)
    ref = [oriented_angle((0, 1), v) for v in V]
    np.testing.assert_allclose(wrap_turns(got - ref), 0, atol=1e-14)


@pytest.mark.parametrize("prev, principal, expected", [
    (0.4, -0.45, 0.55),
    (0.0, 0.1, 0.1),
    (3.2, 0.25, 3.25),
    (0.0, 0.5, 0.5),
    (0.0, -0.5, 0.5),  # tie goes up
])
def test_nearest_lift_examples(prev, principal, expected):
    assert nearest_lift(prev, principal) == pytest.approx(expected, abs=1e-12)


@given(finite, st.floats(-0.5, 0.5, exclude_min=True))
def test_nearest_lift_properties(prev, a):
    L = nearest_lift(prev, a)
    assert abs(L - prev) <= 0.5 + 1e-9 * max(1.0, abs(prev))
    d = L - a
    assert abs(d - round(d)) < 1e-12 * max(1.0, abs(prev))


@given(st.lists(st.floats(-0.2, 0.2), min_size=1, max_size=60), st.integers(-5, 5))
def test_unwrap_chain_recovers_slow_path(steps, k):
    path = np.cumsum(steps) + k
    lifts = unwrap_chain(wrap_turns(path), start_lift=path[0])
    np.testing.assert_allclose(lifts, path, atol=1e-9)


def test_unwrap_chain_integer_offsets_exact():
    principal = np.array([0.4, -0.45, -0.2, 0.1, 0.45, -0.4])
    lifts = unwrap_chain(principal)
    assert np.all(np.abs(np.diff(lifts)) <= 0.5)
    assert np.array_equal(lifts - principal, np.round(lifts - principal))


@pytest.mark.parametrize("p, sheet, expected", [
    ((0.25, 2.0), 3, (3.25, 2.0)),
    ((0.0, -1.0), -2, (-2.0, -1.0)),
])
def test_lift_point(p, sheet, expected):
    assert tuple(lift_point(AnnulusPoint(*p), sheet)) == expected


@pytest.mark.parametrize("P, expected", [
    ((-0.75, 1.0), (0.25, 1.0)),
    ((5.0, 0.0), (0.0, 0.0)),
    ((2.5, -3.0), (0.5, -3.0)),
])
def test_project_point(P, expected):
    assert tuple(project_point(PlanePoint(*P))) == expected


@given(st.integers(0, (1 << 20) - 1), finite, st.integers(-1000, 1000))
def test_round_trip_exact_on_dyadic(num, y, k):
    p = AnnulusPoint(num / (1 << 20), y)
    assert project_point(lift_point(p, k)) == p


@given(st.floats(0, 1, exclude_max=True), finite, st.integers(-1000, 1000))
def test_round_trip_close(x, y, k):
    p = AnnulusPoint(x, y)
    q = project_point(lift_point(p, k))
    assert q.y == p.y
    assert min(abs(q.x - p.x), 1 - abs(q.x - p.x)) < 1e-12


@given(st.floats(-1e3, 1e3), finite)
def test_lift_of_projection(X, Y):
    # X - floor(X) rounding up to 1.0 leaves no representable x in [0, 1)
    assume(X - math.floor(X) < 1.0)
    P = PlanePoint(X, Y)
    Q = lift_point(project_point(P), math.floor(X))
    assert abs(Q.X - X) < 1e-12 and Q.Y == Y


@pytest.mark.parametrize("x, y", [(1.0, 0.0), (-0.1, 0.0), (0.5, math.inf), (math.nan, 0.0)])
def test_annulus_point_rejects(x, y):
    with pytest.raises(DomainError):
        AnnulusPoint(x, y)


def test_projection_carry_at_rounding_edge():
    q = project_point(PlanePoint(-1e-300, 0.0))
    assert q.x == 0.0


def test_wrap():
    assert AnnulusPoint.wrap(-0.25, 1.0) == AnnulusPoint(0.75, 1.0)
