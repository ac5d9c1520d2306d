"""Points of the annulus and its universal cover, oriented angles in turns,
and nearest-branch unwrapping.

All angles are measured in turns (one revolution = 1), counterclockwise
positive.  Principal measures live in ``(-1/2, 1/2]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * math.pi

#: Turn angles are plain floats; the alias documents intent.
TurnAngle = float


@dataclass(frozen=True)
class AnnulusPoint:
    """Point of T x R with angular coordinate ``x`` in ``[0, 1)``."""

    x: float
    y: float

    def __post_init__(self):
        if not (0.0 <= self.x < 1.0):
            raise DomainError(f"annulus coordinate x={self.x!r} outside [0, 1)")
        if not math.isfinite(self.y):
            raise DomainError(f"annulus height y={self.y!r} is not finite")

    def __iter__(self):
        yield self.x
        yield self.y

    @classmethod
    def wrap(cls, x, y):
        """Build a point from any real ``x`` by reducing it mod 1."""
        return cls(_frac(float(x)), float(y))


@dataclass(frozen=True)
class PlanePoint:
    """Point of the universal cover R^2."""

    X: float
    Y: float

    def __post_init__(self):
        if not (math.isfinite(self.X) and math.isfinite(self.Y)):
            raise DomainError(f"plane point ({self.X!r}, {self.Y!r}) is not finite")

    def __iter__(self):
        yield self.X
        yield self.Y

    def as_array(self):
        return np.array([self.X, self.Y], dtype=float)


@dataclass(frozen=True)
class TangentVector:
    dx: float
    dy: float

    def __iter__(self):
        yield self.dx
        yield self.dy

    def as_array(self):
        return np.array([self.dx, self.dy], dtype=float)


VERTICAL = TangentVector(0.0, 1.0)
HORIZONTAL = TangentVector(1.0, 0.0)


def _frac(x):
    r = x % 1.0
    # tiny negatives round up to exactly 1.0
    return 0.0 if r >= 1.0 else r


def wrap_turns(d):
    """Reduce ``d`` (scalar or array) to its principal measure in ``(-1/2, 1/2]``."""
    return d + np.floor(0.5 - d)


def oriented_angle(u, v) -> TurnAngle:
    """Principal counterclockwise angle from ``u`` to ``v``, in turns.

    >>> oriented_angle((0, 1), (1, 0))
    -0.25
    """
    ux, uy = (float(c) for c in u)
    vx, vy = (float(c) for c in v)
    if (ux == 0.0 and uy == 0.0) or (vx == 0.0 and vy == 0.0):
        raise DomainError("oriented angle undefined for a zero vector")
    a = math.atan2(ux * vy - uy * vx, ux * vx + uy * vy) / TWO_PI
    return 0.5 if a <= -0.5 else a


def angles_from_vertical(vectors):
    """Vectorized ``oriented_angle(chi, v)`` for an ``(m, 2)`` array of vectors."""
    v = np.asarray(vectors, dtype=float)
    a = np.arctan2(-v[..., 0], v[..., 1]) / TWO_PI
    return np.where(a <= -0.5, a + 1.0, a)


def nearest_lift(previous_lift: float, new_principal: TurnAngle) -> float:
    """Real number congruent to ``new_principal`` mod 1 within 1/2 of ``previous_lift``.

    Ties at exactly 1/2 resolve upward.
    """
    return new_principal + math.floor(previous_lift - new_principal + 0.5)


def unwrap_chain(principal, start_lift=None):
    """Chain :func:`nearest_lift` along a sequence of principal angles.

    Integer branch offsets are accumulated exactly, so long chains do not
    drift.  ``start_lift`` must be congruent to ``principal[0]``; by default
    the principal value itself is used.
    """
    a = np.asarray(principal, dtype=float)
    if a.size == 0:
        return a.copy()
    k0 = 0.0 if start_lift is None else float(round(start_lift - a[0]))
    jumps = np.floor(a[:-1] - a[1:] + 0.5)
    offsets = np.concatenate(([k0], k0 + np.cumsum(jumps)))
    return a + offsets


def lift_point(p: AnnulusPoint, sheet: int) -> PlanePoint:
    return PlanePoint(sheet + p.x, p.y)


def project_point(P: PlanePoint) -> AnnulusPoint:
    return AnnulusPoint(_frac(P.X), P.Y)


def as_plane_array(point):
    """Coordinates of an annulus/plane point (or pair) as a float array of shape (2,)."""
    if isinstance(point, (AnnulusPoint, PlanePoint, TangentVector)):
        return np.array(tuple(point), dtype=float)
    arr = np.asarray(point, dtype=float)
    if arr.shape != (2,):
        raise DomainError(f"expected a point with two coordinates, got shape {arr.shape}")
    return arr
