import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torsionlab.errors import DegeneracyError, DomainError, NormalizationError, RotationTooFastError
from torsionlab.geometry import oriented_angle, wrap_turns
from torsionlab.models import (
    IdentityModel,
    PendulumModel,
    RigidRotationModel,
    TwistMapModel,
    isotopy_variant,
    orbit_period,
)
from torsionlab.geometry import AnnulusPoint
from torsionlab.torsion import (
    angle_determination,
    linking_determination,
    linking_finite,
    tilt_determination,
    torsion_asymptotic,
    torsion_finite,
    torsion_profile,
    torsion_via_tilt,
)

CHI = (0.0, 1.0)
H = (1.0, 0.0)
PEND = PendulumModel()
UNIT = PendulumModel("unit")
TWIST = TwistMapModel(0.3)

angle = st.floats(0, 1)
point = st.tuples(st.floats(0, 1, exclude_max=True), st.floats(-2, 2))


def unit(a):
    return (-math.sin(2 * math.pi * a), math.cos(2 * math.pi * a))


def test_rigid_rotation_determination():
    det = angle_determination(RigidRotationModel(0.3), (0.2, 0.1), CHI, 2.0)
    assert det.variation() == pytest.approx(0.6, abs=1e-12)
    assert det.variation(2) == pytest.approx(0.6, abs=1e-12)


def test_identity_determination_constant():
    det = angle_determination(IdentityModel(), (0.5, 0.5), (1.0, 2.0), 3.0)
    assert np.all(det.lifts == det.lifts[0])
    assert det.lifts[0] == pytest.approx(oriented_angle(CHI, (1.0, 2.0)))


def test_unit_pendulum_elliptic_turn():
    det = angle_determination(UNIT, (0.0, 0.0), CHI, 1.0)
    assert det.variation() == pytest.approx(-1.0, abs=1e-6)


@pytest.mark.parametrize("model", [TWIST, PEND, RigidRotationModel(-0.7)], ids=repr)
def test_determination_invariants(model):
    xi = (0.3, -1.0)
    det = angle_determination(model, (0.31, 0.2), xi, 3.0)
    assert np.all(np.abs(np.diff(det.lifts)) < 0.25)
    assert det.max_step_rotation < 0.25
    P = np.array([0.31, 0.2])
    for t, L in zip(det.times[::7], det.lifts[::7]):
        _, J = model.lifted_flow(float(t), P)
        principal = oriented_angle(CHI, J @ np.array(xi))
        assert abs(wrap_turns(L - principal)) < 1e-9


def test_zero_vector_rejected():
    with pytest.raises(DomainError):
        torsion_finite(TWIST, (0.1, 0.1), (0.0, 0.0), 1)


def test_rotation_too_fast():
    # 0.45 turn per unit: halving once gives dt = 0.5 < floor with steps still >= 0.1
    with pytest.raises(RotationTooFastError) as info:
        angle_determination(RigidRotationModel(0.45), (0.0, 0.0), CHI, 1.0,
                            samples_per_unit=1, step_bound=0.1, dt_floor=0.6)
    assert info.value.time == 0.0


@pytest.mark.parametrize("n", [1, 3, 10])
def test_identity_torsion_zero(n):
    assert torsion_finite(IdentityModel(), (0.4, -1.0), (2.0, 1.0), n).value == 0.0


@pytest.mark.parametrize("order", TwistMapModel.ORDERS)
@pytest.mark.parametrize("z", [(0.0, 0.0), (0.37, 1.5), (0.9, -2.0)])
def test_shear_torsion(order, z):
    t = torsion_finite(TwistMapModel(0.0, order=order), z, CHI, 1)
    assert t.value == pytest.approx(-0.125, abs=1e-12)
    assert t.total_variation == pytest.approx(t.value * t.n, abs=1e-12)


@pytest.mark.parametrize("x", [0.1, 0.3])
def test_pendulum_torsion_period_law(x):
    T = orbit_period(PEND, AnnulusPoint(x, 0.0))
    n = 10 * math.ceil(T)
    assert torsion_finite(PEND, (x, 0.0), CHI, n).value == pytest.approx(-1 / T, abs=5e-3)


def test_asymptotic_unit_elliptic():
    est = torsion_asymptotic(UNIT, (0.0, 0.0), CHI, 40)
    assert est.estimate == pytest.approx(-1.0, abs=1e-3)
    assert est.converged


def test_asymptotic_default_elliptic():
    est = torsion_asymptotic(PEND, (0.0, 0.0), CHI, 60)
    assert est.estimate == pytest.approx(-1 / (2 * math.pi), abs=1e-3)


@pytest.mark.parametrize("alpha", [0.3, -0.45])
def test_asymptotic_rotation_exact(alpha):
    totals = torsion_profile(RigidRotationModel(alpha), (1.0, 1.0), CHI, 25)
    np.testing.assert_allclose(totals / np.arange(1, 26), alpha, atol=1e-12)
    assert torsion_asymptotic(RigidRotationModel(alpha), (1.0, 1.0), CHI, 25).converged


def test_asymptotic_window_precondition():
    with pytest.raises(DomainError):
        torsion_asymptotic(TWIST, (0, 0), CHI, 15, window=10)


def test_pendulum_exterior_decay():
    totals = torsion_profile(PEND, (0.0, 0.6), CHI, 200)
    # bounded total rotation: |Torsion_n| <= C/n
    assert np.max(np.abs(totals)) < 1.0
    assert abs(totals[-1] / 200) < 5e-3


# vector independence, order, persistence


@given(point, angle, angle, st.integers(1, 30))
@settings(max_examples=60, deadline=None)
def test_vector_independence(z, a, b, n):
    ta = torsion_finite(TWIST, z, unit(a), n).value
    tb = torsion_finite(TWIST, z, unit(b), n).value
    assert abs(ta - tb) < 1 / (2 * n)


@given(point, st.floats(-0.49, 0.0), st.floats(0.001, 0.49))
@settings(max_examples=40, deadline=None)
def test_order_preservation(z, a, gap):
    # principal start lifts a < a + gap < 1/2
    d1 = angle_determination(TWIST, z, unit(a + gap), 8)
    d2 = angle_determination(TWIST, z, unit(a), 8)
    for n in range(9):
        assert d1.integer_lifts[n] > d2.integer_lifts[n]


@given(point)
@settings(max_examples=30, deadline=None)
def test_monotone_persistence(z):
    totals = torsion_profile(TwistMapModel(0.8), z, CHI, 30)
    for m in range(30):
        # largest integer k with m Torsion_m < -k/2
        k = math.ceil(-2 * totals[m]) - 1
        assert np.all(totals[m:] < -k / 2)


@given(point, st.lists(st.integers(1, 5), min_size=1, max_size=6), angle)
@settings(max_examples=40, deadline=None)
def test_accumulation_inequality(z, lengths, a):
    model = TwistMapModel(1.5)
    P = np.array(z, dtype=float)
    Ks = []
    for length in lengths:
        w = torsion_profile(model, P, CHI, length)[-1]
        # largest integer K with w < -K/2
        K = math.ceil(-2 * w) - 1
        assert w < -K / 2
        Ks.append(K)
        P, _ = model.iterate(length, P)
    total = sum(lengths)
    bound = -sum(Ks) / 2
    assert torsion_profile(model, z, CHI, total)[-1] < bound
    assert torsion_profile(model, z, unit(a), total)[-1] < bound + 0.5


@given(point, st.integers(1, 20))
@settings(max_examples=40, deadline=None)
def test_isotopy_independence(z, n):
    a = torsion_finite(TWIST, z, CHI, n).value
    b = torsion_finite(isotopy_variant(TWIST, "horizontal-first"), z, CHI, n).value
    assert a == pytest.approx(b, abs=1e-9)


@pytest.mark.parametrize("shift", [-3, 1, 7])
def test_branch_independence(shift):
    a = angle_determination(TWIST, (0.2, 0.3), (1.0, 1.0), 5)
    b = angle_determination(TWIST, (0.2, 0.3), (1.0, 1.0), 5, start_lift=a.lifts[0] + shift)
    assert b.variation(5) == a.variation(5)
    np.testing.assert_array_equal(b.lifts - a.lifts, shift)


# linking


@pytest.mark.parametrize("model", [TWIST, PEND, IdentityModel(), TwistMapModel(1.1)], ids=repr)
@pytest.mark.parametrize("r", [-1.0, 0.5])
@pytest.mark.parametrize("n", [1, 4])
def test_linking_of_translates(model, r, n):
    assert linking_finite(model, (0.0, r), (1.0, r), n) == pytest.approx(0.0, abs=1e-9)


def test_linking_rotation_about_midpoint():
    m = RigidRotationModel(0.3, center=(0.5, 1.0))
    assert linking_finite(m, (0.0, 1.0), (1.0, 1.0), 3) == pytest.approx(0.3, abs=1e-12)


def test_linking_collision():
    with pytest.raises(DegeneracyError):
        linking_determination(TWIST, (0.2, 0.2), (0.2, 0.2), 1)


# tilt


def _line(direction, base=(0.0, 0.0)):
    d = np.asarray(direction, dtype=float)

    def psi(tau):
        pos = np.asarray(base) + tau[:, None] * d
        return pos, np.broadcast_to(d, pos.shape).copy()
    return psi


def test_tilt_vertical_line():
    assert tilt_determination(_line((0.0, 1.0)), 0.7) == 0.0


def test_tilt_slope_line():
    assert tilt_determination(_line((1.0, 1.0)), -3.0) == pytest.approx(-0.125, abs=1e-15)


def test_tilt_no_record():
    with pytest.raises(NormalizationError):
        tilt_determination(_line((0.0, -1.0)), 0.0, max_extensions=2)


def test_tilt_needs_extension():
    # height peaks at tau = -12, outside the initial window [-5, 0]; the tangent
    # then turns clockwise past -1/2, so only the record fixes the branch
    def psi(tau):
        u = tau + 12
        pos = np.column_stack((0.3 * u - 0.025 * u ** 2, -0.1 * u ** 2))
        return pos, np.column_stack((0.3 - 0.05 * u, -0.2 * u))
    expected = -0.5 - math.atan2(0.3, 2.4) / (2 * math.pi)
    assert tilt_determination(psi, 0.0) == pytest.approx(expected, abs=1e-12)


def test_tilt_pendulum_vertical_image():
    assert torsion_via_tilt(PEND, (0.25, 0.0)) == pytest.approx(
        torsion_finite(PEND, (0.25, 0.0), CHI, 1).value, abs=1e-6)


@pytest.mark.parametrize("z", [(0.1, 0.2), (0.6, -1.3)])
def test_tilt_twist_and_identity(z):
    assert torsion_via_tilt(TwistMapModel(0.0), z) == pytest.approx(-0.125, abs=1e-12)
    assert torsion_via_tilt(IdentityModel(), z) == 0.0
