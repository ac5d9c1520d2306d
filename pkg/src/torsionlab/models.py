"""Isotopy models: each exposes f_t and Df_t on the universal cover for t >= 0.

Every model implements the isotopy on one unit of time through
:meth:`IsotopyModel.stage` and extends it to all t >= 0 by
``f_t = f_{frac(t)} o f^{floor(t)}``.  Points are handled in batches of shape
``(m, 2)``; single points of shape ``(2,)`` are accepted everywhere.
"""
from __future__ import annotations

import math

import numpy as np

from . import _kernels
from .errors import DomainError
from .geometry import TWO_PI, AnnulusPoint, PlanePoint, as_plane_array, lift_point, project_point

DEFAULT_STIFFNESS = 1.0 / (4.0 * math.pi ** 2)
STIFFNESS_PRESETS = {"default": DEFAULT_STIFFNESS, "unit": 1.0}


def _batch(P):
    P = np.asarray(P, dtype=float)
    single = P.ndim == 1
    return np.atleast_2d(P), single


def _unbatch(out, jac, single):
    if single:
        return out[0], jac[0]
    return out, jac


class IsotopyModel:
    """Base class.  Subclasses implement :meth:`stage` and set ``name``.

    ``samples_per_unit`` is the coarse sampling density used when tracking
    angles along one unit of time; refinement adds points where needed.
    """

    name = "abstract"
    samples_per_unit = 8
    plane_only = False

    def stage(self, s, P):
        """Isotopy on [0, 1]: returns ``(f_s(P), Df_s(P))`` for a batch of points.

        ``s`` is a scalar or an array broadcast against the batch.
        """
        raise NotImplementedError

    @property
    def params(self):
        return {}

    @property
    def descriptor(self):
        return {"name": self.name, **self.params}

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{type(self).__name__}({args})"

    # generic machinery

    def iterate(self, n, P):
        """``(F^n(P), DF^n(P))`` by repeated time-one maps and the chain rule."""
        Pb, single = _batch(P)
        jac = np.broadcast_to(np.eye(2), (Pb.shape[0], 2, 2)).copy()
        for _ in range(int(n)):
            Pb, J = self.stage(1.0, Pb)
            jac = J @ jac
        return _unbatch(Pb, jac, single)

    def stage_path(self, P, s_values):
        """Stage values along sorted times ``s_values`` for one point ``P``."""
        s = np.asarray(s_values, dtype=float)
        Pb = np.broadcast_to(np.asarray(P, dtype=float), (s.shape[0], 2))
        return self.stage(s, Pb)

    def lifted_map(self, P):
        return self.iterate(1, P)

    def lifted_evaluate(self, t, P):
        return self.lifted_flow(t, P)[0]

    def lifted_jacobian(self, t, P):
        return self.lifted_flow(t, P)[1]

    def lifted_flow(self, t, P):
        """``(F_t(P), DF_t(P))`` following the extension rule."""
        if not t >= 0.0:
            raise DomainError(f"isotopy time must be >= 0, got {t!r}")
        n = math.floor(t)
        s = t - n
        Q, J = self.iterate(n, P)
        if s > 0.0:
            Qb, single = _batch(Q)
            Qs, Js = self.stage(s, Qb)
            Q, Js = _unbatch(Qs, Js, single)
            J = Js @ J
        return Q, J

    def evaluate(self, t, p: AnnulusPoint) -> AnnulusPoint:
        Q = self.lifted_evaluate(t, as_plane_array(lift_point(p, 0)))
        return project_point(PlanePoint(float(Q[0]), float(Q[1])))

    def jacobian(self, t, p: AnnulusPoint):
        return self.lifted_jacobian(t, as_plane_array(lift_point(p, 0)))


class TwistMapModel(IsotopyModel):
    """Positive twist map F(X, Y) = (X + Y', Y') with Y' = Y - g(X).

    The kick is ``g(X) = sum_j a_j cos(2 pi j X) + b_j sin(2 pi j X)``
    (j >= 1).  ``TwistMapModel(k)`` is the standard map,
    ``g(X) = k/(2 pi) sin(2 pi X)``.

    Two isotopies join the identity to F, both as two shear stages on
    ``[0, 1/2]`` and ``[1/2, 1]``:

    * ``vertical-first``: vertical shear by the kick, then horizontal shear
      ``(X + uY, Y)``;
    * ``horizontal-first``: horizontal shear ``(X + uY, Y)``, then the shear
      along (1, 1) by ``v g(U - W)`` in the sheared coordinates.
    """

    name = "twist"
    ORDERS = ("vertical-first", "horizontal-first")

    def __init__(self, k=0.0, kick_cos=(), kick_sin=(), order="vertical-first"):
        if order not in self.ORDERS:
            raise DomainError(f"unknown isotopy order {order!r}")
        n = max(len(kick_cos), len(kick_sin), 1)
        cos_c = np.zeros(n)
        sin_c = np.zeros(n)
        cos_c[: len(kick_cos)] = kick_cos
        sin_c[: len(kick_sin)] = kick_sin
        sin_c[0] += k / TWO_PI
        if not (np.all(np.isfinite(cos_c)) and np.all(np.isfinite(sin_c))):
            raise DomainError("kick coefficients must be finite")
        self.k = float(k)
        self.order = order
        self.kick_cos = cos_c
        self.kick_sin = sin_c
        self._extra = (tuple(kick_cos), tuple(kick_sin))

    @property
    def params(self):
        out = {"k": self.k, "order": self.order}
        if any(self._extra):
            out["kick_cos"] = list(self._extra[0])
            out["kick_sin"] = list(self._extra[1])
        return out

    def kick(self, X):
        X = np.atleast_1d(np.asarray(X, dtype=float))
        return _kernels.twist_kick(X, self.kick_cos, self.kick_sin)

    def stage(self, s, P):
        Pb, single = _batch(P)
        s = np.broadcast_to(np.asarray(s, dtype=float), (Pb.shape[0],))
        X, Y = Pb[:, 0], Pb[:, 1]
        g, dg = self.kick(X)
        first = s <= 0.5
        a = np.where(first, 2.0 * s, 1.0)
        u = np.where(first, 0.0, 2.0 * s - 1.0)
        out = np.empty_like(Pb)
        jac = np.empty((Pb.shape[0], 2, 2))
        if self.order == "vertical-first":
            Y1 = Y - a * g
            out[:, 0] = X + u * Y1
            out[:, 1] = Y1
            jac[:, 0, 0] = 1.0 - u * a * dg
            jac[:, 0, 1] = u
            jac[:, 1, 0] = -a * dg
            jac[:, 1, 1] = 1.0
        else:
            out[:, 0] = X + a * Y - u * g
            out[:, 1] = Y - u * g
            jac[:, 0, 0] = 1.0 - u * dg
            jac[:, 0, 1] = a
            jac[:, 1, 0] = -u * dg
            jac[:, 1, 1] = 1.0
        return _unbatch(out, jac, single)

    def iterate(self, n, P):
        Pb, single = _batch(P)
        out, jac = _kernels.twist_iterate(
            np.ascontiguousarray(Pb[:, 0]), np.ascontiguousarray(Pb[:, 1]),
            int(n), self.kick_cos, self.kick_sin)
        return _unbatch(out, jac, single)


def isotopy_variant(model: TwistMapModel, order) -> TwistMapModel:
    """Same twist map, joined to the identity by the isotopy named ``order``."""
    return TwistMapModel(model.k, model._extra[0], model._extra[1], order=order)


class PendulumModel(IsotopyModel):
    """Flow of H(x, y) = y^2/2 - c cos(2 pi x); the isotopy is the flow itself.

    ``stiffness`` is ``c``; the presets are ``"default"`` (1/(4 pi^2)) and
    ``"unit"`` (1).  Integration is RK4 with fixed step ``step``.
    """

    name = "pendulum"
    samples_per_unit = 32

    def __init__(self, stiffness=DEFAULT_STIFFNESS, step=1e-3):
        if isinstance(stiffness, str):
            try:
                stiffness = STIFFNESS_PRESETS[stiffness]
            except KeyError:
                raise DomainError(f"unknown stiffness preset {stiffness!r}") from None
        if not stiffness > 0:
            raise DomainError("pendulum stiffness must be positive")
        if not step > 0:
            raise DomainError("integrator step must be positive")
        self.c = float(stiffness)
        self.h = float(step)

    @property
    def params(self):
        return {"stiffness": self.c, "step": self.h}

    def energy(self, P):
        P = np.asarray(P, dtype=float)
        return 0.5 * P[..., 1] ** 2 - self.c * np.cos(TWO_PI * P[..., 0])

    @property
    def separatrix_energy(self):
        return self.c

    def stage(self, s, P):
        Pb, single = _batch(P)
        s = np.broadcast_to(np.asarray(s, dtype=float), (Pb.shape[0],))
        out, jac = _kernels.pendulum_flow_batch(
            np.ascontiguousarray(Pb[:, 0]), np.ascontiguousarray(Pb[:, 1]),
            np.ascontiguousarray(s), self.h, self.c)
        return _unbatch(out, jac, single)

    def stage_path(self, P, s_values):
        s = np.asarray(s_values, dtype=float)
        if s.size > 1 and np.any(np.diff(s) < 0):
            return super().stage_path(P, s)
        P = np.asarray(P, dtype=float)
        return _kernels.pendulum_flow_path(float(P[0]), float(P[1]), s, self.h, self.c)

    def iterate(self, n, P):
        Pb, single = _batch(P)
        ts = np.full(Pb.shape[0], float(n))
        out, jac = _kernels.pendulum_flow_batch(
            np.ascontiguousarray(Pb[:, 0]), np.ascontiguousarray(Pb[:, 1]), ts, self.h, self.c)
        return _unbatch(out, jac, single)


def flow_with_variational(model: PendulumModel, p: AnnulusPoint, t):
    """Pendulum flow and its derivative: ``(phi_t(p), D phi_t(p))``."""
    if not (math.isfinite(t) and t >= 0):
        raise DomainError(f"flow time must be finite and >= 0, got {t!r}")
    P = as_plane_array(lift_point(p, 0))
    out, jac = _kernels.pendulum_flow_batch(
        P[:1].copy(), P[1:].copy(), np.array([float(t)]), model.h, model.c)
    return AnnulusPoint.wrap(out[0, 0], out[0, 1]), jac[0]


def orbit_period(model: PendulumModel, p: AnnulusPoint, t_max=None):
    """Period of a libration orbit (strictly inside the separatrices, not the centre)."""
    x = p.x if p.x <= 0.5 else p.x - 1.0
    H = 0.5 * p.y ** 2 - model.c * math.cos(TWO_PI * x)
    if H >= model.c:
        raise DomainError(f"point {p} is not inside the separatrix region (H={H:.6g} >= {model.c:.6g})")
    if x == 0.0 and p.y == 0.0:
        raise DomainError("the elliptic point is an equilibrium, it has no period")
    if t_max is None:
        # generous multiple of the small-oscillation period
        t_max = 200.0 / math.sqrt(model.c)
    T = _kernels.pendulum_first_return(x, p.y, model.h, model.c, float(t_max))
    if T < 0:
        raise DomainError(f"no return to the section through {p} before t={t_max}")
    return T


class RigidRotationModel(IsotopyModel):
    """Rotation of the plane by ``2 pi rate t`` about ``center``; plane-only oracle."""

    name = "rotation"
    plane_only = True

    def __init__(self, rate, center=(0.0, 0.0)):
        self.rate = float(rate)
        self.center = np.asarray(center, dtype=float)

    @property
    def params(self):
        return {"rate": self.rate, "center": [float(c) for c in self.center]}

    def _rotate(self, angle, Pb):
        c, s = np.cos(angle), np.sin(angle)
        d = Pb - self.center
        out = np.empty_like(Pb)
        out[:, 0] = self.center[0] + c * d[:, 0] - s * d[:, 1]
        out[:, 1] = self.center[1] + s * d[:, 0] + c * d[:, 1]
        jac = np.empty((Pb.shape[0], 2, 2))
        jac[:, 0, 0] = c
        jac[:, 0, 1] = -s
        jac[:, 1, 0] = s
        jac[:, 1, 1] = c
        return out, jac

    def stage(self, s, P):
        Pb, single = _batch(P)
        s = np.broadcast_to(np.asarray(s, dtype=float), (Pb.shape[0],))
        return _unbatch(*self._rotate(TWO_PI * self.rate * s, Pb), single)

    def iterate(self, n, P):
        Pb, single = _batch(P)
        return _unbatch(*self._rotate(np.full(Pb.shape[0], TWO_PI * self.rate * n), Pb), single)


class TranslationModel(IsotopyModel):
    """Horizontal translation f_t(x, y) = (x + rate t, y)."""

    name = "translation"

    def __init__(self, rate=0.0):
        self.rate = float(rate)

    @property
    def params(self):
        return {"rate": self.rate}

    def stage(self, s, P):
        Pb, single = _batch(P)
        s = np.broadcast_to(np.asarray(s, dtype=float), (Pb.shape[0],))
        out = Pb.copy()
        out[:, 0] += self.rate * s
        jac = np.broadcast_to(np.eye(2), (Pb.shape[0], 2, 2)).copy()
        return _unbatch(out, jac, single)

    def iterate(self, n, P):
        return self.stage(float(n), P)


class IdentityModel(TranslationModel):
    name = "identity"

    def __init__(self):
        super().__init__(0.0)

    @property
    def params(self):
        return {}
