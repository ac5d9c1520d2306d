import math
import warnings

import numpy as np
import pytest

from torsionlab.curves import (
    EssentialCurve,
    angle_variation,
    circle_curve,
    complexity,
    fourier_loop,
    graph_curve,
    height_argmax,
    is_graph,
    max_height_argmax,
    maxheight_var_zero_check,
    pendulum_level_curve,
    phi,
    self_intersects,
)
from torsionlab.errors import DegeneracyError, DomainError
from torsionlab.geometry import angles_from_vertical
from torsionlab.models import IdentityModel, PendulumModel, TwistMapModel

TWIST = TwistMapModel(0.3)
SINE = graph_curve(cos=(0.0,), sin=(0.0, 1.0))
TWO_HUMP = graph_curve(cos=(0.0, 0.0, 1.0))


def test_curve_rejects_non_essential():
    with pytest.raises(DomainError):
        EssentialCurve(lambda S: np.column_stack((np.cos(S), np.sin(S))),
                       lambda S: np.column_stack((-np.sin(S), np.cos(S))))
    with pytest.raises(DomainError):
        EssentialCurve(lambda S: np.column_stack((2 * S, 0 * S)),
                       lambda S: np.column_stack((2 + 0 * S, 0 * S)))


def test_homotopy_sign():
    assert circle_curve(0.0).homotopy_sign == 1
    assert fourier_loop(orientation=-1).homotopy_sign == -1


def test_degenerate_tangent():
    c = EssentialCurve(lambda S: np.column_stack((S - np.sin(2 * np.pi * S) / (2 * np.pi), 0 * S)),
                       lambda S: np.column_stack((1 - np.cos(2 * np.pi * S), 0 * S)))
    with pytest.raises(DegeneracyError):
        angle_variation(c, 0.1, 0.3)


@pytest.mark.parametrize("s1, s2", [(0.0, 0.3), (0.7, 0.2), (0.5, 0.5)])
def test_circle_variation_zero(s1, s2):
    assert angle_variation(circle_curve(1.0), s1, s2) == 0.0


def test_variation_same_point(fourier_loops):
    for c in fourier_loops:
        assert angle_variation(c, 0.37, 0.37) == 0.0
        assert c.loop_winding == 0.0


def test_variation_additive(fourier_loops):
    rng = np.random.default_rng(2)
    for c in fourier_loops:
        s1, s2, s3 = np.sort(rng.uniform(0, 1, 3))
        total = angle_variation(c, s1, s3)
        assert angle_variation(c, s1, s2) + angle_variation(c, s2, s3) == pytest.approx(total, abs=1e-9)


def test_variation_lift_shift(fourier_loops):
    c = fourier_loops[0]
    for k in (-2, 1, 3):
        assert angle_variation(c, 0.2 + k, 0.9) == pytest.approx(angle_variation(c, 0.2, 0.9), abs=1e-12)


def test_variation_matches_dense_integration(fourier_loops):
    c = fourier_loops[1]
    S = np.linspace(0.15, 0.8, 200001)
    a = np.unwrap(2 * np.pi * angles_from_vertical(c.tangent_lift(S))) / (2 * np.pi)
    assert angle_variation(c, 0.15, 0.8) == pytest.approx(a[-1] - a[0], abs=1e-12)


def test_theta_lift_periodic(fourier_loops):
    for c in fourier_loops:
        S = np.linspace(0, 1, 17)
        np.testing.assert_allclose(c.theta_lift(S + 1) - c.theta_lift(S), c.loop_winding, atol=1e-12)


# complexity


def test_complexity_circle():
    assert complexity(circle_curve(0.0)) == 0.0


@pytest.mark.parametrize("eps", [0.01, 0.05, 0.1, 0.3])
def test_complexity_sine_graph(eps):
    c = graph_curve(sin=(0.0, eps))
    S = np.arange(100000) / 100000
    dense = np.max(np.abs(np.arctan(2 * np.pi * eps * np.cos(2 * np.pi * S)))) / (2 * np.pi)
    assert complexity(c) == pytest.approx(dense, abs=1e-9)
    assert complexity(c) == pytest.approx(math.atan(2 * math.pi * eps) / (2 * math.pi), abs=1e-12)
    assert complexity(c) < 0.25


def test_complexity_monotone_in_amplitude():
    vals = [complexity(graph_curve(sin=(0.0, e))) for e in (0.01, 0.05, 0.1, 0.3, 1.0)]
    assert np.all(np.diff(vals) > 0)


def test_complexity_anchor_independent():
    am = height_argmax(TWO_HUMP)
    np.testing.assert_allclose(sorted(am.params), [0.0, 0.5], atol=1e-9)
    a, b = (complexity(TWO_HUMP, anchor=s) for s in am.params)
    assert a == pytest.approx(b, abs=1e-9)


def test_complexity_dominates_variation(fourier_loops):
    for c in fourier_loops:
        C = complexity(c)
        s0 = height_argmax(c).first
        for s in np.linspace(0, 1, 41):
            assert abs(angle_variation(c, s0, s)) <= C + 1e-12


# argmax


def test_argmax_sine():
    am = height_argmax(SINE)
    np.testing.assert_allclose(am.params, [0.25], atol=1e-9)
    assert am.height == pytest.approx(1.0, abs=1e-15)
    assert not am.plateau


def test_argmax_circle_plateau():
    am = height_argmax(circle_curve(0.4))
    assert am.plateau
    assert len(am.params) == circle_curve(0.4).resolution
    assert am.height == 0.4


def test_argmax_pendulum_circle():
    m = PendulumModel()
    c = circle_curve(2.0)
    am = max_height_argmax(m, c, 1.0)
    S = np.arange(10000) / 10000
    Q, _ = m.lifted_flow(1.0, c.lift(S))
    assert len(am.params) >= 1
    assert am.height >= Q[:, 1].max() - 1e-12
    assert am.height <= Q[:, 1].max() + 1e-6
    assert am.height >= 2.0 - 0.05


def test_argmax_under_twist(fourier_loops):
    for c in fourier_loops:
        am = max_height_argmax(TWIST, c, 3)
        S = np.arange(20000) / 20000
        Q, _ = TWIST.iterate(3, c.lift(S))
        assert am.height == pytest.approx(Q[:, 1].max(), abs=1e-6)
        assert am.height >= Q[:, 1].max() - 1e-12


# phi


def test_phi_time_zero():
    assert phi(TWIST, SINE, 0) == 0.0


@pytest.mark.parametrize("t", [1, 2, 3])
def test_phi_vanishes(fourier_loops, t):
    for c in fourier_loops:
        assert abs(phi(TWIST, c, t)) < 1e-6


def test_phi_real_times(fourier_loops):
    c = fourier_loops[2]
    for t in (0.5, 1.25, 2.7):
        assert abs(phi(TWIST, c, t)) < 1e-6


def test_phi_choice_of_argmax():
    # a map commuting with the half-period shift keeps both humps at equal height
    m = TwistMapModel(0.0, kick_cos=(0.0, 0.05))
    am = max_height_argmax(m, TWO_HUMP, 2)
    assert len(am.params) == 2
    a, b = (phi(m, TWO_HUMP, 2, s_t=s) for s in am.params)
    assert a == pytest.approx(b, abs=1e-6)
    assert abs(a) < 1e-6


def test_phi_plateau_warns():
    with pytest.warns(UserWarning):
        v = phi(IdentityModel(), circle_curve(0.0), 1.0)
    assert v == 0.0


# graph test


def test_is_graph_circle():
    g = is_graph(circle_curve(0.2))
    assert g.is_graph and g.margin == 1.0


def test_is_graph_sine():
    assert is_graph(SINE).is_graph


def test_is_graph_vertical_tangent():
    # x(s) = s + sin(2 pi s)/(2 pi): x'(s) = 1 + cos(2 pi s) vanishes at s* = 1/2
    c = fourier_loop(x_sin=(1 / (2 * np.pi),), y_sin=(0.0, 0.3))
    g = is_graph(c)
    assert not g.is_graph
    assert g.witness == pytest.approx(0.5, abs=1e-6)


def test_is_graph_pendulum_level():
    m = PendulumModel()
    assert is_graph(pendulum_level_curve(m.c, m.c + 0.5)).is_graph


def test_pendulum_level_curve_below_separatrix():
    with pytest.raises(DomainError):
        pendulum_level_curve(1.0, 0.5)


# max-height variation


def test_maxheight_var_two_hump():
    r = maxheight_var_zero_check(TWO_HUMP)
    assert r.status == "pass" and r.ok
    assert all(abs(v) < 1e-9 for *_, v in r.variations)


def test_maxheight_var_single():
    assert maxheight_var_zero_check(SINE).status == "vacuous"


def test_maxheight_var_unequal_humps():
    r = maxheight_var_zero_check(graph_curve(cos=(0.0, 0.01, 1.0)))
    assert r.status == "vacuous" and len(r.params) == 1


def test_maxheight_var_plateau():
    assert maxheight_var_zero_check(circle_curve(0.0)).status == "skipped"


# families


def _shapely_simple(x_sin, y_sin, m=2000):
    geometry = pytest.importorskip("shapely.geometry")
    S = np.arange(3 * m + 1) / m - 1
    x = S + sum(c * np.sin(2 * np.pi * (j + 1) * S) for j, c in enumerate(x_sin))
    y = sum(c * np.sin(2 * np.pi * j * S) for j, c in enumerate(y_sin))
    return geometry.LineString(np.column_stack((x, y))).is_simple


@pytest.mark.parametrize("x_sin, y_sin", [
    ((0.5,), (0.0, 0.05)),
    ((0.5,), (0.0, 0.0, 0.2)),
    ((0.4,), (0.0, 0.0, 0.3)),
    ((0.1,), (0.0, 0.2)),
])
def test_fourier_loop_embeddedness_matches_oracle(x_sin, y_sin):
    try:
        fourier_loop(x_sin=x_sin, y_sin=y_sin)
        accepted = True
    except DomainError:
        accepted = False
    assert accepted == _shapely_simple(x_sin, y_sin)


def test_self_intersects_negative():
    assert not self_intersects(SINE)
