"""C^1 essential curves: tangent angle variation, complexity, max-height
parameters of pushed curves, the Phi function, and the graph test.

A curve is given by its lift ``Gamma: R -> R^2`` together with ``Gamma'``;
both callables take an array of parameters ``S`` and return ``(m, 2)``
arrays, with ``Gamma(S + 1) = Gamma(S) + (sign, 0)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import DegeneracyError, DomainError, StepUnderflowError
from .geometry import TWO_PI, AnnulusPoint, TangentVector, angles_from_vertical, wrap_turns
from .models import IdentityModel, IsotopyModel
from .torsion import angle_determination

VAR_STEP_BOUND = 0.125
MAX_RESOLUTION = 1 << 22


class EssentialCurve:
    """Embedded essential C^1 curve on the annulus, stored through its lift."""

    def __init__(self, position, derivative, *, name="curve", resolution=4096):
        self._position = position
        self._derivative = derivative
        self.name = name
        self.resolution = int(resolution)
        ends = self.lift(np.array([0.0, 1.0]))
        disp = ends[1] - ends[0]
        if abs(abs(disp[0]) - 1.0) > 1e-9 or abs(disp[1]) > 1e-9:
            raise DomainError(
                f"lifted displacement over one period is {tuple(disp)}, expected (+-1, 0)")
        self.homotopy_sign = 1 if disp[0] > 0 else -1

    def lift(self, S):
        return np.asarray(self._position(np.atleast_1d(np.asarray(S, dtype=float))), dtype=float)

    def tangent_lift(self, S):
        return np.asarray(self._derivative(np.atleast_1d(np.asarray(S, dtype=float))), dtype=float)

    def point(self, s) -> AnnulusPoint:
        X, Y = self.lift(s)[0]
        return AnnulusPoint.wrap(X, Y)

    def tangent(self, s) -> TangentVector:
        dx, dy = self.tangent_lift(s)[0]
        return TangentVector(dx, dy)

    def __repr__(self):
        return f"EssentialCurve({self.name!r})"

    @cached_property
    def _angle_table(self):
        m = self.resolution
        while m <= MAX_RESOLUTION:
            S = np.arange(m + 1) / m
            d = self.tangent_lift(S)
            if np.any(np.hypot(d[:, 0], d[:, 1]) < 1e-12):
                raise DegeneracyError(f"derivative of {self.name} vanishes")
            a = angles_from_vertical(d)
            steps = wrap_turns(np.diff(a))
            if np.all(np.abs(steps) < VAR_STEP_BOUND):
                table = a[0] + np.concatenate(([0.0], np.cumsum(steps)))
                return m, table
            m *= 2
        raise StepUnderflowError(f"tangent of {self.name} turns too fast to sample")

    @property
    def loop_winding(self):
        """Tangent winding over one period, in whole turns (0 for embedded essential curves)."""
        _, table = self._angle_table
        return float(round(table[-1] - table[0]))

    def theta_lift(self, S):
        """Continuous determination of ``theta(chi, Gamma'(S))`` on R, anchored on the grid."""
        S = np.atleast_1d(np.asarray(S, dtype=float))
        m, table = self._angle_table
        k = np.floor(S)
        j = np.minimum(((S - k) * m).astype(np.int64), m - 1)
        ref = table[j] + k * self.loop_winding
        a = angles_from_vertical(self.tangent_lift(S))
        return a + np.floor(ref - a + 0.5)


def angle_variation(curve: EssentialCurve, s1, s2) -> float:
    """``Var_gamma(gamma(s1), gamma(s2))``: tangent turning from s1 forward to s2.

    ``s1`` is used as its own lift ``S1``; ``s2`` is lifted into ``(S1, S1 + 1]``.
    """
    S1 = float(s1)
    d = (float(s2) - S1) % 1.0
    if d == 0.0:
        return curve.loop_winding
    th = curve.theta_lift(np.array([S1, S1 + d]))
    return float(th[1] - th[0])


@dataclass
class ArgmaxResult:
    params: np.ndarray
    height: float
    plateau: bool = False
    samples: int = 0
    resolved: bool = True

    @property
    def first(self):
        return float(self.params[0])


def _pushed(model, t, curve, S):
    pts = curve.lift(S)
    if t == 0:
        return pts, curve.tangent_lift(S)
    Q, J = model.lifted_flow(t, pts)
    return Q, np.einsum("mij,mj->mi", J, curve.tangent_lift(S))


PUSH_TURN_BOUND = 0.125
PUSH_CHORD_BOUND = 0.05
PUSH_SAMPLE_CAP = 1 << 18


def _resolve_pushed(model, t, curve, S, Q, V, cap):
    """Sample ``f_t o gamma`` on [0, 1), bisecting every interval across which
    the pushed tangent turns by 1/8 turn or more or the image chord exceeds
    ``PUSH_CHORD_BOUND``, starting from the samples ``S, Q, V``.
    Returns ``S, Q, V, resolved``."""
    while True:
        a = angles_from_vertical(V)
        S1 = np.append(S[1:], S[0] + 1.0)
        Q1 = np.vstack((Q[1:], Q[:1] + curve.lift(np.array([1.0])) - curve.lift(np.array([0.0]))))
        turn = np.abs(wrap_turns(np.roll(a, -1) - a))
        chord = np.hypot(*(Q1 - Q).T)
        bad = (turn >= PUSH_TURN_BOUND) | (chord > PUSH_CHORD_BOUND)
        if not bad.any():
            return S, Q, V, True
        # parameter spacing at the double-precision floor cannot be split further
        if np.any(bad & ((S1 - S) < 1e-13)) or len(S) + np.count_nonzero(bad) > cap:
            return S, Q, V, False
        mid = (S[bad] + S1[bad]) / 2 % 1.0
        Qm, Vm = _pushed(model, t, curve, mid)
        S = np.concatenate((S, mid))
        order = np.argsort(S, kind="stable")
        S, Q, V = S[order], np.vstack((Q, Qm))[order], np.vstack((V, Vm))[order]


def max_height_argmax(model: IsotopyModel, curve: EssentialCurve, t, *, resolution=None,
                      tol=1e-9, cap=PUSH_SAMPLE_CAP) -> ArgmaxResult:
    """All parameters where ``p2 o f_t o gamma`` reaches its maximum ``M^h(t)``.

    Uniform scan refined until the pushed curve is resolved (tangent turns
    < 1/8 and chords short between samples), then each candidate peak is
    polished by a root of the vertical tangent component (golden-section on
    the height if the bracket does not change sign).  A run of three or more
    uniform samples within ``tol`` of the maximum is reported as a
    degenerate plateau.  ``resolved`` is False when ``cap`` samples did not
    suffice or the parameter spacing hit the double-precision floor,
    e.g. for very stretched images near resonances.
    """
    m = int(resolution or curve.resolution)
    S = np.arange(m) / m
    Q, V = _pushed(model, t, curve, S)
    h = Q[:, 1]
    top = h.max()
    near = h >= top - tol
    if np.count_nonzero(near & np.roll(near, 1) & np.roll(near, -1)) > 0:
        return ArgmaxResult(S[near], float(top), plateau=True, samples=m)
    S, Q, V, resolved = _resolve_pushed(model, t, curve, S, Q, V, max(cap, m))
    m = len(S)
    h = Q[:, 1]
    top = h.max()

    def height(s):
        return float(_pushed(model, t, curve, np.array([s]))[0][0, 1])

    def slope(s):
        return float(_pushed(model, t, curve, np.array([s]))[1][0, 1])

    span = top - h.min()
    local = (h >= np.roll(h, 1)) & (h >= np.roll(h, -1)) & (h >= top - 1e-3 * span - 1e-9)
    found = []
    for j in np.nonzero(local)[0]:
        a = S[j - 1] - (1.0 if j == 0 else 0.0)
        b = S[(j + 1) % m] + (1.0 if j == m - 1 else 0.0)
        s = None
        if V[j - 1, 1] > 0 > V[(j + 1) % m, 1]:
            s = brentq(slope, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        else:
            try:
                res = minimize_scalar(lambda u: -height(u), bracket=(a, S[j], b),
                                      method="golden", tol=1e-10)
                s = float(res.x)
            except ValueError:
                s = float(S[j])
        hs = height(s)
        if hs < h[j]:
            s, hs = float(S[j]), float(h[j])
        found.append((s % 1.0, hs))
    best = max(v for _, v in found)
    params = sorted({round(s, 12) % 1.0 for s, v in found if v >= best - tol})
    params = _dedupe_circular(np.array(params), 1e-9)
    # at a true top point of an embedded image the tangent runs along the
    # homotopy direction; a backward tangent means the image lost embeddedness
    forward = _pushed(model, t, curve, params[:1])[1][0, 0] * curve.homotopy_sign > 0
    return ArgmaxResult(params, best, samples=m, resolved=bool(resolved and forward))


def _dedupe_circular(params, eps):
    keep = []
    for p in params:
        if not keep or p - keep[-1] > eps:
            keep.append(p)
    if len(keep) > 1 and keep[0] + 1.0 - keep[-1] <= eps:
        keep.pop()
    return np.array(keep)


def height_argmax(curve: EssentialCurve, **opts) -> ArgmaxResult:
    """Max-height parameters of the curve itself."""
    return max_height_argmax(IdentityModel(), curve, 0.0, **opts)


def complexity(curve: EssentialCurve, anchor=None) -> float:
    """``C(gamma) = max_t |Var(gamma(s0), gamma(s0 + t))|`` over one period.

    ``anchor`` defaults to the first max-height parameter.
    """
    s0 = height_argmax(curve).first if anchor is None else float(anchor)
    m, table = curve._angle_table
    th0 = float(curve.theta_lift(s0)[0])
    S = np.arange(m + 1) / m
    vals = table + np.where(S < s0, curve.loop_winding, 0.0) - th0
    j = int(np.argmax(np.abs(vals)))

    def dev(u):
        return -abs(float(curve.theta_lift(s0 + ((u - s0) % 1.0))[0]) - th0)

    res = minimize_scalar(dev, bounds=(S[j] - 1.0 / m, S[j] + 1.0 / m), method="bounded",
                          options={"xatol": 1e-13})
    return max(float(abs(vals[j])), -float(res.fun))


def phi(model: IsotopyModel, curve: EssentialCurve, t, s0=None, s_t=None) -> float:
    """``t Torsion_t(f, gamma(s_t), gamma'(s_t)) + Var(gamma(s0), gamma(s_t))``.

    ``s0`` defaults to a max-height parameter of gamma and ``s_t`` to a
    max-height parameter of ``f_t o gamma``.  The value is an integer (zero
    for the curves this library can build) up to rounding.
    """
    if s0 is None:
        s0 = height_argmax(curve).first
    if t == 0:
        if s_t is None or float(s_t) % 1.0 == float(s0) % 1.0:
            return 0.0
        return angle_variation(curve, s0, s_t)
    if s_t is None:
        am = max_height_argmax(model, curve, t)
        if am.plateau:
            warnings.warn(f"max-height set of f_{t}(gamma) is a plateau; using a representative",
                          stacklevel=2)
        s_t = am.first
    det = angle_determination(model, curve.lift(s_t)[0], curve.tangent_lift(s_t)[0], t)
    return det.variation(t) + angle_variation(curve, s0, s_t)


@dataclass
class GraphTest:
    is_graph: bool
    margin: float
    witness: float | None = None


def is_graph(curve: EssentialCurve, resolution=None) -> GraphTest:
    """Transversality to the vertical: the horizontal tangent component keeps one sign.

    ``margin`` is the minimum of ``sign * dx / |gamma'|`` over the samples;
    on failure ``witness`` is a parameter where the tangent is vertical or
    the sign flips.
    """
    m = int(resolution or curve.resolution)
    S = np.arange(m + 1) / m
    d = curve.tangent_lift(S)
    ratio = curve.homotopy_sign * d[:, 0] / np.hypot(d[:, 0], d[:, 1])
    margin = float(ratio.min())
    if margin > 0:
        return GraphTest(True, margin)
    j = int(np.argmax(ratio <= 0))
    witness = float(S[j])
    if j > 0 and ratio[j] < 0 < ratio[j - 1]:
        witness = brentq(lambda u: float(curve.tangent_lift(u)[0, 0]), S[j - 1], S[j],
                         xtol=1e-15)
    return GraphTest(False, margin, witness % 1.0)


@dataclass
class MaxHeightVarReport:
    status: str  # "pass", "fail", "vacuous", "skipped"
    params: np.ndarray
    variations: list = field(default_factory=list)
    tol: float = 1e-6

    @property
    def ok(self):
        return self.status in ("pass", "vacuous")


def maxheight_var_zero_check(curve: EssentialCurve, tol=1e-6) -> MaxHeightVarReport:
    """Angle variation between any two max-height parameters must vanish."""
    am = height_argmax(curve)
    if am.plateau:
        return MaxHeightVarReport("skipped", am.params, tol=tol)
    if len(am.params) < 2:
        return MaxHeightVarReport("vacuous", am.params, tol=tol)
    pairs = []
    for i, a in enumerate(am.params):
        for b in am.params[i + 1:]:
            pairs.append((float(a), float(b), angle_variation(curve, a, b)))
    ok = all(abs(v) < tol for _, _, v in pairs)
    return MaxHeightVarReport("pass" if ok else "fail", am.params, pairs, tol)


# built-in families


def _trig(coeffs_cos, coeffs_sin, S, start):
    val = np.zeros_like(S)
    der = np.zeros_like(S)
    for j, c in enumerate(coeffs_cos, start=start):
        w = TWO_PI * j
        val += c * np.cos(w * S)
        der -= c * w * np.sin(w * S)
    for j, c in enumerate(coeffs_sin, start=start):
        w = TWO_PI * j
        val += c * np.sin(w * S)
        der += c * w * np.cos(w * S)
    return val, der


def circle_curve(r, resolution=4096) -> EssentialCurve:
    """The circle T x {r}."""
    r = float(r)
    return EssentialCurve(lambda S: np.column_stack((S, np.full_like(S, r))),
                          lambda S: np.column_stack((np.ones_like(S), np.zeros_like(S))),
                          name=f"circle(r={r:g})", resolution=resolution)


def graph_curve(cos=(0.0,), sin=(), resolution=4096, name=None) -> EssentialCurve:
    """Graph of ``psi(s) = sum_j cos[j] cos(2 pi j s) + sin[j] sin(2 pi j s)``, j >= 0."""
    cos, sin = tuple(map(float, cos)), tuple(map(float, sin))

    def pos(S):
        return np.column_stack((S, _trig(cos, sin, S, 0)[0]))

    def der(S):
        return np.column_stack((np.ones_like(S), _trig(cos, sin, S, 0)[1]))

    return EssentialCurve(pos, der, name=name or f"graph(cos={cos}, sin={sin})",
                          resolution=resolution)


def fourier_loop(x_cos=(), x_sin=(), y_cos=(0.0,), y_sin=(), orientation=1, resolution=4096,
                 check_resolution=512, name=None) -> EssentialCurve:
    """Loop ``(orientation*s + sum_j>=1 ..., sum_j>=0 ...)`` with trigonometric coefficients.

    Rejected unless the derivative stays nonzero and the sampled polygon is
    free of self-intersections on the annulus.
    """
    if orientation not in (1, -1):
        raise DomainError("orientation must be +1 or -1")
    xc, xs = tuple(map(float, x_cos)), tuple(map(float, x_sin))
    yc, ys = tuple(map(float, y_cos)), tuple(map(float, y_sin))

    def pos(S):
        return np.column_stack((orientation * S + _trig(xc, xs, S, 1)[0], _trig(yc, ys, S, 0)[0]))

    def der(S):
        return np.column_stack((orientation + _trig(xc, xs, S, 1)[1], _trig(yc, ys, S, 0)[1]))

    curve = EssentialCurve(pos, der, name=name or f"fourier(x_cos={xc}, x_sin={xs}, "
                                                  f"y_cos={yc}, y_sin={ys})",
                           resolution=resolution)
    S = np.arange(check_resolution) / check_resolution
    d = curve.tangent_lift(S)
    if np.any(np.hypot(d[:, 0], d[:, 1]) < 1e-12):
        raise DegeneracyError("Fourier loop derivative vanishes")
    if self_intersects(curve, check_resolution):
        raise DomainError("Fourier loop is not embedded at the sampling resolution")
    return curve


def self_intersects(curve: EssentialCurve, m=512) -> bool:
    """Proper crossings between sampled segments of the curve on the annulus."""
    S = np.arange(m + 1) / m
    p = curve.lift(S)
    a, b = p[:-1], p[1:]
    span = p[:, 0].max() - p[:, 0].min()
    reach = int(math.ceil(span)) + 1
    sigma = curve.homotopy_sign
    idx = np.arange(m)
    for shift in range(-reach, reach + 1):
        c = a + (shift, 0.0)
        d = b + (shift, 0.0)
        o1 = _orient(a[:, None], b[:, None], c[None, :])
        o2 = _orient(a[:, None], b[:, None], d[None, :])
        o3 = _orient(c[None, :], d[None, :], a[:, None])
        o4 = _orient(c[None, :], d[None, :], b[:, None])
        hit = (o1 * o2 < 0) & (o3 * o4 < 0)
        if shift == 0:
            hit &= np.abs(idx[:, None] - idx[None, :]) > 1
        if shift == sigma:
            hit[m - 1, 0] = False
        if shift == -sigma:
            hit[0, m - 1] = False
        if np.any(hit):
            return True
    return False


def _orient(p, q, r):
    return (q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1]) - (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0])


def pendulum_level_curve(stiffness, energy, branch=1, resolution=4096) -> EssentialCurve:
    """Rotational level set ``H = energy`` (> stiffness) of the pendulum, as a graph."""
    c = float(stiffness)
    E = float(energy)
    if E <= c:
        raise DomainError("level curve must lie above the separatrix energy")
    sgn = 1.0 if branch > 0 else -1.0

    def y(S):
        return sgn * np.sqrt(2.0 * (E + c * np.cos(TWO_PI * S)))

    def pos(S):
        return np.column_stack((S, y(S)))

    def der(S):
        return np.column_stack((np.ones_like(S), -TWO_PI * c * np.sin(TWO_PI * S) / y(S)))

    return EssentialCurve(pos, der, name=f"pendulum-level(E={E:g})", resolution=resolution)
