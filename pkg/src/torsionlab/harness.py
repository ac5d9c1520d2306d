"""Executable checks built on the torsion engine and the curve tools.

Each routine returns a report dataclass; refusals (failed preconditions)
raise :class:`~torsionlab.errors.PreconditionError` with the offending
report or certificate attached.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .curves import (
    EssentialCurve,
    angle_variation,
    circle_curve,
    complexity,
    is_graph,
    max_height_argmax,
)
from .errors import NoBracketError, PreconditionError, TorsionLabError
from .geometry import TWO_PI, PlanePoint, as_plane_array
from .models import IsotopyModel
from .torsion import angle_determination, linking_finite, torsion_finite, torsion_profile

CHI = (0.0, 1.0)
HORIZONTAL = (1.0, 0.0)


def parallel_map(func, items, threads=1):
    """Ordered map, spread over ``threads`` worker processes when > 1."""
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [func(it) for it in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def K_proof(C):
    """Constant of the zero-torsion window, ``floor(2C + 1) + 2``."""
    return math.floor(2 * C + 1) + 2


def K_bounded(C):
    """Constant of the bounded-before window, ``floor(2C) + 2``."""
    return math.floor(2 * C) + 2


# negative-torsion certification


@dataclass
class TorsionCertificate:
    nx: int
    ny: int
    y_range: tuple
    values: np.ndarray = field(repr=False)
    min: float
    max: float
    margin: float
    margin_floor: float
    passed: bool
    note: str = ""

    def summary(self):
        return f"{'pass' if self.passed else 'fail'}, margin {self.margin:.17g}"

    def to_dict(self):
        return {"nx": self.nx, "ny": self.ny, "y_min": self.y_range[0], "y_max": self.y_range[1],
                "min": self.min, "max": self.max, "margin": self.margin,
                "margin_floor": self.margin_floor, "passed": self.passed, "note": self.note}


def _row_torsion(model, xs, y):
    return [torsion_finite(model, (x, y), CHI, 1).value for x in xs]


def certify_negative_torsion(model: IsotopyModel, nx=64, ny=64, y_range=(-3.0, 3.0),
                             margin_floor=0.0, threads=1) -> TorsionCertificate:
    """``Torsion_1(f, z, chi)`` on an ``nx`` x ``ny`` grid of ``[0, 1) x [y_min, y_max]``.

    Passes iff the grid maximum is below ``-margin_floor``.  Nothing is
    claimed outside the grid.
    """
    if nx < 1 or ny < 1:
        raise ValueError("grid resolutions must be positive")
    xs = np.arange(nx) / nx
    ys = np.linspace(y_range[0], y_range[1], ny) if ny > 1 else np.array([float(y_range[0])])
    rows = parallel_map(partial(_row_torsion, model, xs), ys, threads)
    values = np.array(rows)
    vmax = float(values.max())
    note = ""
    passed = vmax < -margin_floor
    if model.plane_only:
        passed = False
        note = "plane-only model is not an annulus map"
    return TorsionCertificate(nx, ny, (float(y_range[0]), float(y_range[1])), values,
                              float(values.min()), vmax, 0.0 - vmax, margin_floor, passed, note)


def _iterate_range(model, curve, n_max, samples=64):
    pts = curve.lift(np.arange(samples) / samples)
    lo, hi = pts[:, 1].min(), pts[:, 1].max()
    for _ in range(int(n_max)):
        pts, _ = model.iterate(1, pts)
        lo, hi = min(lo, pts[:, 1].min()), max(hi, pts[:, 1].max())
    return float(lo), float(hi)


def certify_for_curve(model, curve, n_max, grid=16, pad=0.5):
    """Certificate on the band swept by the first ``n_max`` iterates of the curve."""
    lo, hi = _iterate_range(model, curve, n_max)
    return certify_negative_torsion(model, grid, grid, (lo - pad, hi + pad))


# zero-torsion point on a curve


@dataclass
class ZeroTorsionReport:
    curve: str
    n_max: int
    complexity: float
    K: int
    K_bounded: int
    s_n: np.ndarray
    building: np.ndarray
    building_chi: np.ndarray
    s_inf: float
    witness: tuple
    cluster_cell: int
    cluster_size: int
    residual_torsion: np.ndarray
    certificate: TorsionCertificate | None = None
    tol: float = 1e-6
    resolved: np.ndarray | None = None

    @property
    def unresolved_horizons(self):
        """Horizons whose pushed curve could not be resolved in double precision."""
        if self.resolved is None:
            return []
        return (np.nonzero(~self.resolved)[0] + 1).tolist()

    @property
    def building_ok(self):
        return bool(np.all(np.abs(self.building) <= self.complexity + self.tol))

    @property
    def window_lower(self):
        return -self.K / (2.0 * np.arange(1, self.n_max + 1))

    @property
    def in_window(self):
        r = self.residual_torsion
        return (r >= self.window_lower) & (r < 0)

    @property
    def final_residual(self):
        return float(self.residual_torsion[-1])

    @property
    def passed(self):
        return self.building_ok and bool(self.in_window[-1])

    def table(self):
        """Rows ``(n, s_n, n Torsion_n(gamma'), n Torsion_n(chi), Torsion_n(s_inf, chi), lower, in_window)``."""
        ns = np.arange(1, self.n_max + 1)
        return list(zip(ns.tolist(), self.s_n.tolist(), self.building.tolist(),
                        self.building_chi.tolist(), self.residual_torsion.tolist(),
                        self.window_lower.tolist(), self.in_window.tolist()))

    def to_dict(self):
        return {
            "curve": self.curve, "n_max": self.n_max, "complexity": self.complexity,
            "K": self.K, "K_label": "floor(2C+1)+2", "K_bounded": self.K_bounded,
            "K_bounded_label": "floor(2C)+2", "s_inf": self.s_inf,
            "witness": list(self.witness), "cluster_cell": self.cluster_cell,
            "cluster_size": self.cluster_size, "building_ok": self.building_ok,
            "unresolved_horizons": self.unresolved_horizons,
            "final_torsion": self.final_residual,
            "final_window": [float(self.window_lower[-1]), 0.0],
            "passed": self.passed,
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
        }


def cluster_point(s_values, resolution=1024):
    """Deterministic accumulation point of a sequence on the circle.

    The densest cell of width ``1/resolution`` wins (ties go to the cell
    holding the latest term); the latest term inside that cell is returned
    together with the cell index and its population.
    """
    s = np.asarray(s_values, dtype=float) % 1.0
    cells = np.minimum((s * resolution).astype(np.int64), resolution - 1)
    counts = np.bincount(cells, minlength=resolution)
    best = counts.max()
    candidates = np.nonzero(counts == best)[0]
    last_index = {c: int(np.nonzero(cells == c)[0][-1]) for c in candidates}
    cell = max(candidates, key=lambda c: last_index[c])
    return float(s[last_index[cell]]), int(cell), int(best)


def find_zero_torsion_on_curve(model: IsotopyModel, curve: EssentialCurve, n_max, *,
                               assume_negative_torsion=False, certificate=None,
                               cluster_resolution=1024, tol=1e-6) -> ZeroTorsionReport:
    """Max-height preimages ``s_n`` for n = 1..n_max and their cluster point ``s_inf``.

    Refuses (``PreconditionError``) unless the model is certified
    negative-torsion on the band visited by the iterates of the curve, or
    ``assume_negative_torsion`` is set.
    """
    n_max = int(n_max)
    if not assume_negative_torsion:
        if certificate is None:
            certificate = certify_for_curve(model, curve, n_max)
        if not certificate.passed:
            raise PreconditionError("model is not certified negative-torsion on the curve's band",
                                    report=certificate)
    C = complexity(curve)
    s_n = np.empty(n_max)
    building = np.empty(n_max)
    building_chi = np.empty(n_max)
    resolved = np.ones(n_max, dtype=bool)
    cap = None
    for i, n in enumerate(range(1, n_max + 1)):
        # images only stretch further once resolution is lost, so later
        # horizons get a small refinement budget instead of the full one
        am = max_height_argmax(model, curve, n, **({} if cap is None else {"cap": cap}))
        s = am.first
        resolved[i] = am.resolved
        if not am.resolved and cap is None:
            cap = 4 * curve.resolution
        P = curve.lift(s)[0]
        s_n[i] = s
        building[i] = angle_determination(model, P, curve.tangent_lift(s)[0], n).variation(n)
        building_chi[i] = angle_determination(model, P, CHI, n).variation(n)
    s_inf, cell, size = cluster_point(s_n, cluster_resolution)
    witness = curve.point(s_inf)
    totals = torsion_profile(model, tuple(witness), CHI, n_max)
    residual = totals / np.arange(1, n_max + 1)
    return ZeroTorsionReport(curve.name, n_max, C, K_proof(C), K_bounded(C), s_n, building,
                             building_chi, s_inf, tuple(witness), cell, size, residual,
                             certificate, tol, resolved)


# bounded-before window


@dataclass
class BoundedBeforeReport:
    n: int
    C: float
    K: int
    totals: np.ndarray
    precondition_ok: bool
    failed_side: str | None
    window_ok: bool

    @property
    def passed(self):
        return self.precondition_ok and self.window_ok


def bounded_before_check(model, z, n, C_bound) -> BoundedBeforeReport:
    """With ``|n Torsion_n(f,z,chi)| <= C``: ``m Torsion_m in [-K/2, 0)`` for m = 1..n, K = floor(2C)+2."""
    n = int(n)
    K = K_bounded(C_bound)
    totals = torsion_profile(model, z, CHI, n)
    failed = None
    if abs(totals[-1]) > C_bound:
        failed = f"|n Torsion_n| = {abs(totals[-1]):.6g} exceeds C = {C_bound:.6g}"
    elif np.any(totals >= 0):
        m = int(np.argmax(totals >= 0)) + 1
        failed = f"m Torsion_m >= 0 at m = {m}: model not negative-torsion along this orbit"
    window = bool(np.all((totals >= -K / 2.0) & (totals < 0)))
    return BoundedBeforeReport(n, float(C_bound), K, totals, failed is None, failed, window)


# linking number and the segment root


@dataclass
class SegmentRoot:
    point: PlanePoint
    sigma: float
    torsion: float
    target: float
    residual: float


def segment_torsion_root(model, x, y, n, l=None, *, tol=1e-8, scan=33, max_scan=4097) -> SegmentRoot:
    """Point ``z`` of the segment ``[x, y]`` with ``Torsion_n(z, y - x) = l``.

    ``l`` defaults to ``Linking_n(x, y)``.  Sign changes on a scan of the
    segment are bisected (Brent); the scan is densified up to ``max_scan``
    points before falling back to minimizing ``|residual|``.
    """
    Px, Py = as_plane_array(x), as_plane_array(y)
    d = Py - Px
    if l is None:
        l = linking_finite(model, Px, Py, n)

    def g(sig):
        return torsion_finite(model, Px + sig * d, d, n).value - l

    def done(sig, val):
        z = Px + sig * d
        return SegmentRoot(PlanePoint(float(z[0]), float(z[1])), float(sig), val + l, float(l),
                           abs(val))

    m = scan
    while m <= max_scan:
        sig = np.linspace(0.0, 1.0, m)
        vals = np.array([g(s) for s in sig])
        j = int(np.argmin(np.abs(vals)))
        if abs(vals[j]) < tol:
            return done(sig[j], vals[j])
        flips = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
        if flips.size:
            i = int(flips[0])
            root = brentq(g, sig[i], sig[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
            return done(root, g(root))
        m = 2 * m - 1
    res = minimize_scalar(lambda s: abs(g(s)), bounds=(max(0.0, sig[j] - 1 / m), min(1.0, sig[j] + 1 / m)),
                          method="bounded", options={"xatol": 1e-14})
    if res.fun < tol:
        return done(res.x, g(res.x))
    raise NoBracketError(f"no z on the segment reaches Torsion_n = {l:.12g}; "
                         f"closest residual {res.fun:.3g}")


# graph curves


@dataclass
class QuarterBoundReport:
    n_max: int
    s_n: np.ndarray
    values: np.ndarray
    slack: float

    @property
    def passed(self):
        return bool(np.all(np.abs(self.values) <= 0.25 + self.slack))


def graph_quarter_bound(model, curve: EssentialCurve, n_max, slack=1e-6) -> QuarterBoundReport:
    """``n Torsion_n(f, gamma(s_n), chi)`` at the max-height preimage, for n = 1..n_max."""
    test = is_graph(curve)
    if not test.is_graph:
        raise PreconditionError(f"{curve.name} is not a graph (vertical tangent near s={test.witness})",
                                report=test)
    s_n = np.empty(n_max)
    values = np.empty(n_max)
    for i, n in enumerate(range(1, n_max + 1)):
        s = max_height_argmax(model, curve, n).first
        s_n[i] = s
        values[i] = angle_determination(model, curve.lift(s)[0], CHI, n).variation(n)
    return QuarterBoundReport(n_max, s_n, values, slack)


# vertical cone bound


@dataclass
class ConeReport:
    eps_est: float
    delta: float
    delta_ok: bool
    worst: np.ndarray
    passed: bool


def cone_vectors(delta, directions=9):
    """Vectors whose angle to chi or to -chi has a measure in ``(-delta, delta)``."""
    if delta > 0:
        a = delta * (1.0 - 1e-9) * np.linspace(-1.0, 1.0, directions)
    else:
        a = np.array([0.0])
    v = np.column_stack((-np.sin(TWO_PI * a), np.cos(TWO_PI * a)))
    return np.vstack((v, -v))


def cone_torsion_bound(model, samples, delta, n_max, directions=9) -> tuple:
    """Estimate ``eps = -max Torsion_1(f, x, v)`` over samples and cone vectors, then
    check ``N Torsion_N(f, x, v) < -eps/2`` for N = 1..n_max.

    Returns ``(eps_est, report)``.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    vecs = cone_vectors(delta, directions)
    profiles = np.array([[torsion_profile(model, p, v, n_max) for v in vecs] for p in samples])
    eps = -float(profiles[:, :, 0].max())
    if eps <= 0:
        raise PreconditionError(f"Torsion_1 reaches {-eps:.6g} >= 0 on the set: not negative-torsion")
    worst = profiles.max(axis=(0, 1))
    report = ConeReport(eps, float(delta), delta < eps / 4, worst, bool(np.all(worst < -eps / 2)))
    return eps, report


# Birkhoff-type check


def curve_parameter(curve: EssentialCurve, points, resolution=None):
    """Parameters of the closest curve points (annulus distance) and the distances."""
    Q = np.atleast_2d(np.asarray(points, dtype=float))
    m = int(resolution or curve.resolution)
    S = np.arange(m) / m
    G = curve.lift(S)
    dx = (Q[:, None, 0] - G[None, :, 0] + 0.5) % 1.0 - 0.5
    dy = Q[:, None, 1] - G[None, :, 1]
    j = np.argmin(dx * dx + dy * dy, axis=1)
    params = np.empty(len(Q))
    dist = np.empty(len(Q))
    for i, q in enumerate(Q):
        def d2(u, q=q):
            g = curve.lift(u)[0]
            ex = (q[0] - g[0] + 0.5) % 1.0 - 0.5
            return ex * ex + (q[1] - g[1]) ** 2
        res = minimize_scalar(d2, bounds=(S[j[i]] - 1 / m, S[j[i]] + 1 / m), method="bounded",
                              options={"xatol": 1e-14})
        params[i] = res.x % 1.0
        dist[i] = math.sqrt(res.fun)
    return params, dist


def invariance_distance(model, curve: EssentialCurve, samples=256):
    """Sampled Hausdorff-type distance between ``f(gamma)`` and ``gamma``."""
    S = np.arange(samples) / samples
    img, _ = model.iterate(1, curve.lift(S))
    _, d_forward = curve_parameter(curve, img)
    pushed = EssentialCurve(lambda u: model.iterate(1, curve.lift(u))[0],
                            lambda u: np.einsum("mij,mj->mi", model.iterate(1, curve.lift(u))[1],
                                                curve.tangent_lift(u)),
                            name=f"f({curve.name})", resolution=curve.resolution)
    _, d_back = curve_parameter(pushed, curve.lift(S))
    return float(max(d_forward.max(), d_back.max()))


@dataclass
class BirkhoffReport:
    curve: str
    invariance: float
    n_max: int
    samples: np.ndarray
    residuals: np.ndarray = field(repr=False)
    max_residual: float
    identity_tol: float
    graph: object
    complexity: float
    max_torsion: np.ndarray = field(repr=False)
    non_wandering_assumed: bool

    @property
    def identity_ok(self):
        return self.max_residual < self.identity_tol

    @property
    def decay_ok(self):
        """``|Torsion_N| <= 2 C(gamma) / N``: Var between two arbitrary points is at most 2C."""
        N = np.arange(1, self.n_max + 1)
        return bool(np.all(self.max_torsion <= 2 * self.complexity / N + self.identity_tol))

    @property
    def decay_ratio(self):
        """``max N |Torsion_N| / C``; values up to 2 are expected away from max-height anchors."""
        N = np.arange(1, self.n_max + 1)
        peak = float((self.max_torsion * N).max())
        return peak / self.complexity if self.complexity > 0 else (0.0 if peak == 0 else math.inf)

    @property
    def verdict(self):
        if not self.identity_ok:
            return "identity-violated"
        if self.graph.is_graph:
            return "graph"
        return "not-graph-contradiction" if self.non_wandering_assumed else "not-graph-wandering-possible"

    def to_dict(self):
        return {"curve": self.curve, "invariance": self.invariance, "n_max": self.n_max,
                "max_residual": self.max_residual, "identity_tol": self.identity_tol,
                "identity_ok": self.identity_ok, "is_graph": self.graph.is_graph,
                "graph_margin": self.graph.margin, "complexity": self.complexity,
                "decay_ok": self.decay_ok, "decay_ratio": self.decay_ratio,
                "non_wandering_assumed": self.non_wandering_assumed,
                "verdict": self.verdict}


def birkhoff_check(model, curve: EssentialCurve, invariance_tol=1e-6, n_max=20, samples=32,
                   non_wandering=False, identity_tol=1e-5) -> BirkhoffReport:
    """For an invariant curve: ``N Torsion_N(gamma(s), gamma'(s)) = Var(gamma(s), gamma(s_N))``
    at sampled s, plus the graph test.

    Non-wandering of the restricted dynamics is never checked; pass
    ``non_wandering=True`` to record it as an assumption.
    """
    dist = invariance_distance(model, curve)
    if not dist < invariance_tol:
        raise PreconditionError(f"curve is not invariant: distance {dist:.3g} >= {invariance_tol:.3g}",
                                report={"invariance": dist})
    S = np.arange(samples) / samples
    residuals = np.empty((samples, n_max))
    max_torsion = np.zeros(n_max)
    N = np.arange(1, n_max + 1)
    for i, s in enumerate(S):
        P = curve.lift(s)[0]
        totals = torsion_profile(model, P, curve.tangent_lift(s)[0], n_max)
        orbit = []
        Q = P
        for _ in range(n_max):
            Q, _ = model.iterate(1, Q)
            orbit.append(Q)
        s_N, _ = curve_parameter(curve, np.array(orbit))
        var = np.array([angle_variation(curve, s, sn) for sn in s_N])
        residuals[i] = np.abs(totals - var)
        max_torsion = np.maximum(max_torsion, np.abs(totals) / N)
    return BirkhoffReport(curve.name, dist, n_max, S, residuals, float(residuals.max()),
                          identity_tol, is_graph(curve), complexity(curve), max_torsion,
                          bool(non_wandering))


# sweep over circles


@dataclass
class SweepRow:
    r: float
    witness_x: float
    torsion: float
    residual: float
    bound: float
    passed: bool
    error: str = ""


def _sweep_row(model, n, assume, K, r):
    try:
        rep = find_zero_torsion_on_curve(model, circle_curve(r), n, assume_negative_torsion=assume)
    except TorsionLabError as exc:
        return SweepRow(r, float("nan"), float("nan"), float("nan"), K / (2 * n), False,
                        f"{type(exc).__name__}: {exc}")
    t = rep.final_residual
    note = ""
    if rep.unresolved_horizons:
        note = f"argmax unresolved from n={rep.unresolved_horizons[0]}"
    if not rep.building_ok:
        note = "; ".join(filter(None, [note, "building bound violated"]))
    return SweepRow(r, rep.witness[0], t, abs(t), K / (2 * n), bool(-K / (2 * n) <= t < 0), note)


def zero_torsion_sweep(model, r_lo, r_hi, steps, n, *, threads=1,
                       assume_negative_torsion=False, K=3) -> list:
    """Zero-torsion witness on each circle ``T x {r}``; failures are recorded per row."""
    rs = np.linspace(r_lo, r_hi, steps) if steps > 1 else np.array([float(r_lo)])
    func = partial(_sweep_row, model, int(n), assume_negative_torsion, K)
    return parallel_map(func, [float(r) for r in rs], threads)
