"""Compiled inner loops shared by the motion, geometry and filter modules."""

from __future__ import annotations

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi
STRAIGHT_TURN_RATE = 1e-6
GEOM_EPS = 1e-9


@njit(cache=True)
def wrap(a):
    if -math.pi < a <= math.pi:
        return a
    return math.pi - ((math.pi - a) % TWO_PI)


@njit(cache=True)
def propagate_rows(states, speed, turn_rate, noise, dt, out):
    for i in range(states.shape[0]):
        x, y, th, g = states[i, 0], states[i, 1], states[i, 2], states[i, 3]
        vs = speed + noise[i, 0]
        vt = turn_rate + noise[i, 1]
        th_new = th + vt * dt
        if abs(vt) < STRAIGHT_TURN_RATE:
            out[i, 0] = x + vs * dt * math.cos(th)
            out[i, 1] = y + vs * dt * math.sin(th)
        else:
            r = vs / vt
            out[i, 0] = x - r * math.sin(th) + r * math.sin(th_new)
            out[i, 1] = y + r * math.cos(th) - r * math.cos(th_new)
        out[i, 2] = wrap(th_new + noise[i, 2] * dt)
        out[i, 3] = max(g + noise[i, 3], 0.0)
    return out


@njit(cache=True)
def cholesky_lower(a, out):
    """In-place lower Cholesky factor; returns False if ``a`` is not PD."""
    n = a.shape[0]
    for i in range(n):
        for j in range(n):
            out[i, j] = 0.0
    for j in range(n):
        s = a[j, j]
        for k in range(j):
            s -= out[j, k] * out[j, k]
        if not s > 0.0:
            return False
        d = math.sqrt(s)
        out[j, j] = d
        for i in range(j + 1, n):
            s = a[i, j]
            for k in range(j):
                s -= out[i, k] * out[j, k]
            out[i, j] = s / d
    return True


@njit(cache=True)
def cholesky_jitter(a, jitter, retries):
    """Cholesky with escalating diagonal jitter; returns (factor, ok)."""
    n = a.shape[0]
    out = np.empty_like(a)
    if cholesky_lower(a, out):
        return out, True
    b = a.copy()
    for _ in range(retries):
        for i in range(n):
            b[i, i] = a[i, i] + jitter
        if cholesky_lower(b, out):
            return out, True
        jitter *= 10.0
    return out, False


@njit(cache=True)
def weighted_moments(points, weights, heading):
    """Weighted mean/covariance, circular statistics on column ``heading``."""
    n, d = points.shape
    mean = np.zeros(d)
    s = 0.0
    c = 0.0
    for i in range(n):
        w = weights[i]
        for k in range(d):
            mean[k] += w * points[i, k]
        s += w * math.sin(points[i, heading])
        c += w * math.cos(points[i, heading])
    mean[heading] = math.atan2(s, c)
    cov = np.zeros((d, d))
    r = np.empty(d)
    for i in range(n):
        w = weights[i]
        for k in range(d):
            r[k] = points[i, k] - mean[k]
        r[heading] = wrap(r[heading])
        for a in range(d):
            wa = w * r[a]
            for b in range(a, d):
                cov[a, b] += wa * r[b]
    for a in range(d):
        for b in range(a + 1, d):
            cov[b, a] = cov[a, b]
    return mean, cov


@njit(cache=True)
def clip_local(x, y, sh, ch, half, cx, cy, ct, st, hl, hw):
    """Clip the swath of a vehicle at (x, y) against one rectangle.

    ``sh, ch`` are the sine/cosine of the heading, ``half`` the swath
    half-width and ``ct, st, hl, hw`` the rectangle's rotation and half sizes.
    Returns ``(hit, t0, t1)`` with t running from the port end (0) to the
    starboard end (1).
    """
    px = x - sh * half
    py = y + ch * half
    dx = 2.0 * sh * half
    dy = -2.0 * ch * half
    rx = px - cx
    ry = py - cy
    lpx = rx * ct + ry * st
    lpy = -rx * st + ry * ct
    ldx = dx * ct + dy * st
    ldy = -dx * st + dy * ct
    t0 = 0.0
    t1 = 1.0
    for axis in range(2):
        if axis == 0:
            p, d, h = lpx, ldx, hl
        else:
            p, d, h = lpy, ldy, hw
        if abs(d) < GEOM_EPS:
            if abs(p) > h:
                return False, t0, t1
        else:
            ta = (-h - p) / d
            tb = (h - p) / d
            if ta > tb:
                ta, tb = tb, ta
            if ta > t0:
                t0 = ta
            if tb < t1:
                t1 = tb
    return (t1 - t0) * 2.0 * half > GEOM_EPS, t0, t1


@njit(cache=True)
def clip_one(x, y, heading, altitude, lm, r_max):
    """Clip one swath against one rectangle ``[cx, cy, theta, l, w]``.

    Returns ``(hit, t0, t1, half)``.
    """
    g2 = altitude * altitude
    rr = r_max * r_max
    if g2 > rr:
        return False, 0.0, 1.0, 0.0
    half = math.sqrt(rr - g2)
    hit, t0, t1 = clip_local(x, y, math.sin(heading), math.cos(heading), half,
                             lm[0], lm[1], math.cos(lm[2]), math.sin(lm[2]), 0.5 * lm[3], 0.5 * lm[4])
    return hit, t0, t1, half


@njit(cache=True)
def clip_table(states, landmarks, r_max, hit, t0, t1, half):
    for i in range(states.shape[0]):
        for j in range(landmarks.shape[0]):
            h, a, b, hw = clip_one(states[i, 0], states[i, 1], states[i, 2], states[i, 3],
                                   landmarks[j], r_max)
            hit[i, j] = h
            t0[i, j] = a
            t1[i, j] = b
            half[i] = hw


@njit(cache=True)
def slant_pair(t0, t1, half, altitude):
    g2 = altitude * altitude
    da = (t0 - 0.5) * 2.0 * half
    db = (t1 - 0.5) * 2.0 * half
    ra = math.sqrt(da * da + g2)
    rb = math.sqrt(db * db + g2)
    if ra <= rb:
        return ra, rb
    return rb, ra


@njit(cache=True)
def moment_match(normals):
    """Shift and whiten ``normals`` in place to zero mean, unit sample covariance.

    The covariance uses the ``n - 1`` normalisation so that the unbiased
    weighted covariance of uniformly weighted particles reproduces the
    proposal covariance exactly.  Returns False if the draws are rank deficient.
    """
    n, d = normals.shape
    if n <= d:
        return False
    mu = np.zeros(d)
    for i in range(n):
        for a in range(d):
            mu[a] += normals[i, a]
    for a in range(d):
        mu[a] /= n
    s = np.zeros((d, d))
    for i in range(n):
        for a in range(d):
            normals[i, a] -= mu[a]
        for a in range(d):
            for b in range(a + 1):
                s[a, b] += normals[i, a] * normals[i, b]
    for a in range(d):
        for b in range(a + 1):
            s[a, b] /= n - 1
            s[b, a] = s[a, b]
    ls = np.empty((d, d))
    if not cholesky_lower(s, ls):
        return False
    # z <- L_s^{-1} z per row (forward substitution)
    for i in range(n):
        for a in range(d):
            v = normals[i, a]
            for b in range(a):
                v -= ls[a, b] * normals[i, b]
            normals[i, a] = v / ls[a, a]
    return True


@njit(cache=True)
def sample_particles(mean, root, normals):
    """``mean + normals @ root.T`` plus the x/y bounding box of the result."""
    n, d = normals.shape
    out = np.empty((n, d))
    x_lo = np.inf
    x_hi = -np.inf
    y_lo = np.inf
    y_hi = -np.inf
    for i in range(n):
        for a in range(d):
            s = mean[a]
            for b in range(a + 1):
                s += root[a, b] * normals[i, b]
            out[i, a] = s
        x_lo = min(x_lo, out[i, 0])
        x_hi = max(x_hi, out[i, 0])
        y_lo = min(y_lo, out[i, 1])
        y_hi = max(y_hi, out[i, 1])
    return out, x_lo, x_hi, y_lo, y_hi


@njit(cache=True)
def joint_loglik(states, z_a, z_c, var_a, var_c, landmarks, z1, z2, detected, r_max, var_r, out):
    """Joint log-likelihood per state; landmark rows are the candidates only."""
    c_a = -0.5 * math.log(TWO_PI * var_a)
    c_c = -0.5 * math.log(TWO_PI * var_c)
    c_r = -math.log(TWO_PI * var_r)
    m = landmarks.shape[0]
    ct = np.empty(m)
    st = np.empty(m)
    reach = np.empty(m)
    for j in range(m):
        ct[j] = math.cos(landmarks[j, 2])
        st[j] = math.sin(landmarks[j, 2])
        reach[j] = 0.5 * math.sqrt(landmarks[j, 3] ** 2 + landmarks[j, 4] ** 2)
    rr = r_max * r_max
    for i in range(states.shape[0]):
        x, y, g = states[i, 0], states[i, 1], states[i, 3]
        rc = wrap(z_c - states[i, 2])
        ra = z_a - g
        acc = c_c - rc * rc / (2.0 * var_c)
        acc += c_a - ra * ra / (2.0 * var_a)
        if m > 0:
            in_range = g * g <= rr
            half = math.sqrt(rr - g * g) if in_range else 0.0
            sh = math.sin(states[i, 2])
            ch = math.cos(states[i, 2])
            for j in range(m):
                hit = False
                a = 0.0
                b = 1.0
                if in_range:
                    ddx = x - landmarks[j, 0]
                    ddy = y - landmarks[j, 1]
                    lim = half + reach[j] + GEOM_EPS
                    if ddx * ddx + ddy * ddy <= lim * lim:
                        hit, a, b = clip_local(x, y, sh, ch, half, landmarks[j, 0], landmarks[j, 1],
                                               ct[j], st[j], 0.5 * landmarks[j, 3], 0.5 * landmarks[j, 4])
                if hit:
                    near, far = slant_pair(a, b, half, g)
                    e1 = z1[j] - near
                    e2 = z2[j] - far
                    acc += c_r - (e1 * e1 + e2 * e2) / (2.0 * var_r)
                elif detected[j]:
                    acc = -np.inf
                    break
        out[i] = acc
    return out


@njit(cache=True)
def normalized_weights(logw):
    """Max-shifted linear weights normalised to one; ok=False if all are zero."""
    n = logw.shape[0]
    top = -np.inf
    for i in range(n):
        if logw[i] > top:
            top = logw[i]
    w = np.zeros(n)
    if not np.isfinite(top):
        return w, False
    total = 0.0
    for i in range(n):
        w[i] = math.exp(logw[i] - top)
        total += w[i]
    if total < 1e-300:
        return w, False
    for i in range(n):
        w[i] /= total
    return w, True
