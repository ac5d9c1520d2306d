"""Compiled inner loops.

Pendulum: H(x, y) = y**2/2 - c*cos(2*pi*x), integrated with classical RK4 on
the state together with the variational matrix J' = A(x) J.  Every target
time is reached by whole steps of size h from t = 0 followed by one partial
step, so the value at a given time never depends on which other times were
requested in the same call.
"""
import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi


@njit(cache=True, nogil=True)
def _rhs(x, y, j00, j01, j10, j11, c):
    arg = TWO_PI * x
    force = -TWO_PI * c * math.sin(arg)
    a10 = -TWO_PI * TWO_PI * c * math.cos(arg)
    # J' = [[0, 1], [a10, 0]] J
    return y, force, j10, j11, a10 * j00, a10 * j01


@njit(cache=True, nogil=True)
def _rk4(x, y, j00, j01, j10, j11, h, c):
    k1 = _rhs(x, y, j00, j01, j10, j11, c)
    hh = 0.5 * h
    k2 = _rhs(x + hh * k1[0], y + hh * k1[1], j00 + hh * k1[2], j01 + hh * k1[3],
              j10 + hh * k1[4], j11 + hh * k1[5], c)
    k3 = _rhs(x + hh * k2[0], y + hh * k2[1], j00 + hh * k2[2], j01 + hh * k2[3],
              j10 + hh * k2[4], j11 + hh * k2[5], c)
    k4 = _rhs(x + h * k3[0], y + h * k3[1], j00 + h * k3[2], j01 + h * k3[3],
              j10 + h * k3[4], j11 + h * k3[5], c)
    w = h / 6.0
    return (x + w * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y + w * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            j00 + w * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
            j01 + w * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3]),
            j10 + w * (k1[4] + 2.0 * k2[4] + 2.0 * k3[4] + k4[4]),
            j11 + w * (k1[5] + 2.0 * k2[5] + 2.0 * k3[5] + k4[5]))


@njit(cache=True, nogil=True)
def _split(t, h):
    n = int(math.floor(t / h + 1e-9))
    rem = t - n * h
    if rem < 1e-13:
        rem = 0.0
    return n, rem


@njit(cache=True, nogil=True)
def pendulum_flow_batch(xs, ys, ts, h, c):
    """Flow each point (xs[i], ys[i]) for its own time ts[i] >= 0."""
    m = xs.shape[0]
    out = np.empty((m, 2))
    jac = np.empty((m, 2, 2))
    for i in range(m):
        n, rem = _split(ts[i], h)
        s = (xs[i], ys[i], 1.0, 0.0, 0.0, 1.0)
        for _ in range(n):
            s = _rk4(s[0], s[1], s[2], s[3], s[4], s[5], h, c)
        if rem > 0.0:
            s = _rk4(s[0], s[1], s[2], s[3], s[4], s[5], rem, c)
        out[i, 0] = s[0]
        out[i, 1] = s[1]
        jac[i, 0, 0] = s[2]
        jac[i, 0, 1] = s[3]
        jac[i, 1, 0] = s[4]
        jac[i, 1, 1] = s[5]
    return out, jac


@njit(cache=True, nogil=True)
def pendulum_flow_path(x0, y0, ts, h, c):
    """Flow one point to every time in the sorted array ``ts`` in a single pass."""
    m = ts.shape[0]
    out = np.empty((m, 2))
    jac = np.empty((m, 2, 2))
    s = (x0, y0, 1.0, 0.0, 0.0, 1.0)
    done = 0
    for i in range(m):
        n, rem = _split(ts[i], h)
        while done < n:
            s = _rk4(s[0], s[1], s[2], s[3], s[4], s[5], h, c)
            done += 1
        q = s
        if rem > 0.0:
            q = _rk4(s[0], s[1], s[2], s[3], s[4], s[5], rem, c)
        out[i, 0] = q[0]
        out[i, 1] = q[1]
        jac[i, 0, 0] = q[2]
        jac[i, 0, 1] = q[3]
        jac[i, 1, 0] = q[4]
        jac[i, 1, 1] = q[5]
    return out, jac


@njit(cache=True, nogil=True)
def _section(x, y, x0, y0, nx, ny):
    return (x - x0) * nx + (y - y0) * ny


@njit(cache=True, nogil=True)
def pendulum_first_return(x0, y0, h, c, t_max):
    """First return time to the line through (x0, y0) normal to the flow.

    Returns -1.0 if no return happens before ``t_max``.  The crossing is
    located by a sign change of the section function between grid steps and
    then bisected inside the step.
    """
    nx = y0
    ny = -TWO_PI * c * math.sin(TWO_PI * x0)
    norm = math.sqrt(nx * nx + ny * ny)
    nx /= norm
    ny /= norm
    s = (x0, y0, 1.0, 0.0, 0.0, 1.0)
    t = 0.0
    went_negative = False
    g_prev = 0.0
    nmax = int(t_max / h) + 1
    for i in range(nmax):
        s_new = _rk4(s[0], s[1], s[2], s[3], s[4], s[5], h, c)
        g_new = _section(s_new[0], s_new[1], x0, y0, nx, ny)
        if g_new < 0.0:
            went_negative = True
        elif went_negative and g_prev < 0.0:
            lo = 0.0
            hi = h
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if mid <= lo or mid >= hi:
                    break
                q = _rk4(s[0], s[1], s[2], s[3], s[4], s[5], mid, c)
                if _section(q[0], q[1], x0, y0, nx, ny) < 0.0:
                    lo = mid
                else:
                    hi = mid
            return i * h + 0.5 * (lo + hi)
        g_prev = g_new
        s = s_new
    return -1.0


@njit(cache=True, nogil=True)
def _kick(x, cos_c, sin_c):
    g = 0.0
    dg = 0.0
    for j in range(cos_c.shape[0]):
        w = TWO_PI * (j + 1)
        cj = math.cos(w * x)
        sj = math.sin(w * x)
        g += cos_c[j] * cj + sin_c[j] * sj
        dg += w * (sin_c[j] * cj - cos_c[j] * sj)
    return g, dg


@njit(cache=True, nogil=True)
def twist_iterate(xs, ys, n, cos_c, sin_c):
    """Apply F(X, Y) = (X + Y', Y'), Y' = Y - g(X), n times with Jacobian products."""
    m = xs.shape[0]
    out = np.empty((m, 2))
    jac = np.empty((m, 2, 2))
    for i in range(m):
        x = xs[i]
        y = ys[i]
        a, b, cc, d = 1.0, 0.0, 0.0, 1.0
        for _ in range(n):
            g, dg = _kick(x, cos_c, sin_c)
            # DF = [[1 - dg, 1], [-dg, 1]]
            na = (1.0 - dg) * a + cc
            nb = (1.0 - dg) * b + d
            nc = -dg * a + cc
            nd = -dg * b + d
            a, b, cc, d = na, nb, nc, nd
            y = y - g
            x = x + y
        out[i, 0] = x
        out[i, 1] = y
        jac[i, 0, 0] = a
        jac[i, 0, 1] = b
        jac[i, 1, 0] = cc
        jac[i, 1, 1] = d
    return out, jac


@njit(cache=True, nogil=True)
def twist_kick(xs, cos_c, sin_c):
    m = xs.shape[0]
    g = np.empty(m)
    dg = np.empty(m)
    for i in range(m):
        g[i], dg[i] = _kick(xs[i], cos_c, sin_c)
    return g, dg
