"""Continuous angle determinations, finite-time and asymptotic torsion,
linking numbers of lifted orbits, and tilt determinations of curves.

Angles are tracked against the vertical vector chi = (0, 1).  Along each unit
of time the isotopy is sampled on a coarse grid; any interval whose principal
angle increment reaches ``step_bound`` (1/4 turn by default) is bisected until
the bound holds, and the sampled path is then lifted by nearest-branch
unwrapping.  Integer times always carry the chain-rule value
``DF(F^k x) ... DF(x) xi``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DegeneracyError, DomainError, NormalizationError, RotationTooFastError
from .geometry import (
    AnnulusPoint,
    PlanePoint,
    TangentVector,
    angles_from_vertical,
    as_plane_array,
    oriented_angle,
    unwrap_chain,
    wrap_turns,
)
from .models import IsotopyModel

STEP_BOUND = 0.25
DT_FLOOR = 1e-9
COLLISION_FLOOR = 1e-12


@dataclass
class AngleDetermination:
    """Sampled continuous lift of t -> theta(chi, v(t)) in turns.

    Lifts are stored relative to the principal start and shifted by the
    integer ``shift`` on access, so the branch choice never perturbs a
    variation.
    """

    times: np.ndarray
    base_lifts: np.ndarray = field(repr=False)
    base_point: PlanePoint
    base_vector: TangentVector
    max_step_rotation: float
    base_integer_lifts: np.ndarray = field(repr=False)
    shift: int = 0

    @property
    def lifts(self):
        return self.base_lifts + self.shift

    @property
    def integer_lifts(self):
        return self.base_integer_lifts + self.shift

    @property
    def integer_totals(self):
        """``lift(m) - lift(0)`` for m = 1, 2, ..."""
        return self.base_integer_lifts[1:] - self.base_integer_lifts[0]

    @property
    def horizon(self):
        return float(self.times[-1])

    def variation(self, n=None):
        """``lift(n) - lift(0)``; ``n`` defaults to the horizon."""
        L = self.base_lifts
        if n is None:
            return float(L[-1] - L[0])
        I = self.base_integer_lifts
        if float(n).is_integer() and int(n) < len(I):
            return float(I[int(n)] - I[0])
        idx = np.searchsorted(self.times, n)
        if idx >= len(self.times) or self.times[idx] != n:
            raise DomainError(f"time {n} is not a sample of this determination")
        return float(L[idx] - L[0])


@dataclass
class TorsionValue:
    n: float
    value: float
    total_variation: float
    determination: AngleDetermination = field(repr=False, default=None)


class AsymptoticTorsion(NamedTuple):
    estimate: float
    converged: bool
    tail: np.ndarray


def _as_point(x):
    if isinstance(x, AnnulusPoint):
        return np.array([x.x, x.y])
    return as_plane_array(x)


def _as_vector(xi):
    v = as_plane_array(xi)
    if not np.any(v):
        raise DomainError("tangent vector must be nonzero")
    return v


class _TangentLegs:
    """Df_t(x) xi along the extended isotopy, one unit of time per leg."""

    def __init__(self, model, P, xi):
        self.model = model
        self.P = P
        self.w = xi / np.hypot(*xi)

    def begin(self, full):
        self.end = self.model.iterate(1, self.P) if full else None

    def vectors(self, s):
        out = np.empty((len(s), 2))
        inner = s < 1.0
        if np.any(inner):
            _, J = self.model.stage_path(self.P, s[inner])
            out[inner] = J @ self.w
        if not np.all(inner):
            out[~inner] = self.end[1] @ self.w
        return out

    def advance(self):
        P, J = self.end
        w = J @ self.w
        self.P = P
        self.w = w / np.hypot(*w)


class _ChordLegs:
    """F_t(y) - F_t(x) for two lifted orbits."""

    def __init__(self, model, Px, Py):
        self.model = model
        self.Px = Px
        self.Py = Py

    def begin(self, full):
        if full:
            Q, _ = self.model.iterate(1, np.vstack([self.Px, self.Py]))
            self.end = Q
        else:
            self.end = None

    def vectors(self, s):
        out = np.empty((len(s), 2))
        inner = s < 1.0
        if np.any(inner):
            qx, _ = self.model.stage_path(self.Px, s[inner])
            qy, _ = self.model.stage_path(self.Py, s[inner])
            out[inner] = qy - qx
        if not np.all(inner):
            out[~inner] = self.end[1] - self.end[0]
        if np.any(np.hypot(out[:, 0], out[:, 1]) < COLLISION_FLOOR):
            raise DegeneracyError("orbits collided: chord shorter than 1e-12")
        return out

    def advance(self):
        self.Px, self.Py = self.end[0], self.end[1]


def _refined_leg(legs, t0, length, density, a_prev, step_bound, dt_floor):
    m = max(1, math.ceil(density * length))
    s = np.linspace(0.0, length, m + 1)[1:]
    if length == 1.0:
        s[-1] = 1.0
    vec = legs.vectors(s)
    while True:
        a = angles_from_vertical(vec)
        steps = np.abs(wrap_turns(np.diff(np.concatenate(([a_prev], a)))))
        bad = np.nonzero(steps >= step_bound)[0]
        if bad.size == 0:
            return s, a, float(steps.max(initial=0.0))
        left = np.concatenate(([0.0], s))[bad]
        right = s[bad]
        if np.any(right - left < dt_floor):
            i = int(np.argmax(right - left < dt_floor))
            raise RotationTooFastError(
                f"angle step still >= {step_bound} turn at t={t0 + left[i]:.12g} "
                f"after refining to dt < {dt_floor}", time=t0 + left[i])
        mid = 0.5 * (left + right)
        new = legs.vectors(mid)
        s = np.concatenate((s, mid))
        vec = np.concatenate((vec, new))
        order = np.argsort(s, kind="stable")
        s, vec = s[order], vec[order]


def _track(legs, a0, horizon, density, start_lift, step_bound, dt_floor):
    if not horizon > 0:
        raise DomainError(f"horizon must be positive, got {horizon!r}")
    shift = 0
    if start_lift is not None:
        if abs(wrap_turns(float(start_lift) - a0)) > 1e-12:
            raise DomainError("start_lift is not a measure of the initial angle")
        shift = round(float(start_lift) - a0)
    lift0 = a0
    times = [np.array([0.0])]
    lifts = [np.array([lift0])]
    integer_lifts = [lift0]
    a_prev, l_prev = a0, lift0
    max_step = 0.0
    n_full = int(math.floor(horizon))
    rest = horizon - n_full
    legs_spec = [(k, 1.0) for k in range(n_full)]
    if rest > 0:
        legs_spec.append((n_full, rest))
    for k, length in legs_spec:
        legs.begin(length == 1.0)
        s, a, step = _refined_leg(legs, k, length, density, a_prev, step_bound, dt_floor)
        chain = unwrap_chain(np.concatenate(([a_prev], a)), l_prev)[1:]
        times.append(k + s)
        lifts.append(chain)
        max_step = max(max_step, step)
        a_prev, l_prev = a[-1], chain[-1]
        if length == 1.0:
            integer_lifts.append(l_prev)
            legs.advance()
    return np.concatenate(times), np.concatenate(lifts), np.array(integer_lifts), max_step, shift


def angle_determination(model: IsotopyModel, x, xi, horizon, *, start_lift=None,
                        samples_per_unit=None, step_bound=STEP_BOUND, dt_floor=DT_FLOOR):
    """Continuous determination of ``theta(chi, Df_t(x) xi)`` for ``t`` in ``[0, horizon]``.

    The initial lift is the principal measure of ``theta(chi, xi)`` unless
    ``start_lift`` (congruent to it mod 1) is given.
    """
    P = _as_point(x)
    v = _as_vector(xi)
    density = samples_per_unit or model.samples_per_unit
    a0 = oriented_angle((0.0, 1.0), v)
    times, lifts, ints, max_step, shift = _track(
        _TangentLegs(model, P, v), a0, horizon, density, start_lift, step_bound, dt_floor)
    return AngleDetermination(times, lifts, PlanePoint(*P), TangentVector(*v), max_step, ints,
                              shift)


def torsion_finite(model, x, xi, n, **opts) -> TorsionValue:
    """Torsion at finite time ``n``: ``(lift(n) - lift(0)) / n`` in turns per unit time.

    ``n`` may be a real horizon; ``total_variation`` is then ``t Torsion_t``.
    """
    det = angle_determination(model, x, xi, n, **opts)
    total = det.variation(n)
    return TorsionValue(n, total / n, total, det)


def torsion_profile(model, x, xi, n_max, **opts):
    """``m Torsion_m`` for m = 1..n_max from a single determination."""
    det = angle_determination(model, x, xi, int(n_max), **opts)
    return det.integer_totals


def torsion_asymptotic(model, x, xi, n_max, window=10, tolerance=1e-3, **opts) -> AsymptoticTorsion:
    """Estimate ``lim Torsion_n`` by ``Torsion_{n_max}``.

    ``converged`` is true when the last ``window`` values of ``Torsion_n``
    spread by less than ``tolerance``; it never asserts that the limit exists.
    """
    if n_max < 2 * window:
        raise DomainError("n_max must be at least twice the window")
    totals = torsion_profile(model, x, xi, n_max, **opts)
    values = totals / np.arange(1, int(n_max) + 1)
    tail = values[-window:]
    spread = float(tail.max() - tail.min())
    return AsymptoticTorsion(float(values[-1]), spread < tolerance, tail)


def linking_determination(model, x, y, horizon, *, samples_per_unit=None,
                          step_bound=STEP_BOUND, dt_floor=DT_FLOOR):
    """Continuous determination of ``theta(chi, F_t(y) - F_t(x))`` for lifted points."""
    Px = _as_point(x)
    Py = _as_point(y)
    d = Py - Px
    if np.hypot(*d) < COLLISION_FLOOR:
        raise DegeneracyError("linking number needs two distinct points")
    density = samples_per_unit or model.samples_per_unit
    a0 = oriented_angle((0.0, 1.0), d)
    times, lifts, ints, max_step, shift = _track(
        _ChordLegs(model, Px, Py), a0, horizon, density, None, step_bound, dt_floor)
    return AngleDetermination(times, lifts, PlanePoint(*Px), TangentVector(*d), max_step, ints,
                              shift)


def linking_finite(model, x, y, n, **opts) -> float:
    """``Linking_n(I, x, y)``: mean turning speed of the chord from x to y."""
    det = linking_determination(model, x, y, n, **opts)
    return det.variation(n) / n


def tilt_determination(psi, t_star, *, window=5.0, max_extensions=8, samples_per_unit=16,
                       step_bound=STEP_BOUND, dt_floor=DT_FLOOR):
    """Value at ``t_star`` of the tilt determination of the curve ``psi``.

    ``psi(tau)`` maps an array of parameters to ``(positions, derivatives)``,
    both of shape ``(m, 2)``.  The branch is fixed at the latest strict
    height record before ``t_star``, where the lift must lie in
    ``[-1/4, 1/4]``.  The curve is sampled on ``[t_star - L, t_star]``, with
    ``L = window`` doubled up to ``max_extensions`` times until a record shows.
    """
    length = float(window)
    for _ in range(max_extensions + 1):
        tau, pos, der = _sample_curve(psi, t_star - length, t_star, samples_per_unit,
                                      step_bound, dt_floor)
        heights = pos[:, 1]
        running = np.maximum.accumulate(heights)
        records = np.nonzero(heights[1:] > running[:-1])[0] + 1
        if records.size:
            r = int(records[-1])
            a = angles_from_vertical(der)
            chain = unwrap_chain(a[r:])
            base = chain[0] - round(chain[0])
            return float(base + chain[-1] - chain[0])
        length *= 2.0
    raise NormalizationError(
        f"no height record on [{t_star - length / 2:.6g}, {t_star:.6g}] after "
        f"{max_extensions} extensions")


def _sample_curve(psi, lo, hi, density, step_bound, dt_floor):
    m = max(2, math.ceil(density * (hi - lo)))
    tau = np.linspace(lo, hi, m + 1)
    pos, der = psi(tau)
    while True:
        if np.any(np.hypot(der[:, 0], der[:, 1]) == 0.0):
            raise DegeneracyError("curve derivative vanishes")
        a = angles_from_vertical(der)
        bad = np.nonzero(np.abs(wrap_turns(np.diff(a))) >= step_bound)[0]
        if bad.size == 0:
            return tau, pos, der
        if np.any(tau[bad + 1] - tau[bad] < dt_floor):
            raise RotationTooFastError("curve tangent turns too fast to sample",
                                       time=float(tau[bad[0]]))
        mid = 0.5 * (tau[bad] + tau[bad + 1])
        p2, d2 = psi(mid)
        tau = np.concatenate((tau, mid))
        pos = np.concatenate((pos, p2))
        der = np.concatenate((der, d2))
        order = np.argsort(tau, kind="stable")
        tau, pos, der = tau[order], pos[order], der[order]


def vertical_line_image(model, x):
    """``tau -> F(x, tau)`` with derivative ``DF(x, tau) chi``, for :func:`tilt_determination`."""
    def psi(tau):
        pts = np.column_stack((np.full(len(tau), float(x)), tau))
        out, jac = model.iterate(1, pts)
        return out, jac[:, :, 1]
    return psi


def torsion_via_tilt(model, z, **opts) -> float:
    """``Torsion_1(f, z, chi)`` computed as the tilt of the image of the vertical through z."""
    P = _as_point(z)
    return tilt_determination(vertical_line_image(model, P[0]), float(P[1]), **opts)
