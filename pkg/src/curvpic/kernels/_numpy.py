"""Pure-NumPy implementations of the hot kernels (import-time fallback)."""

from __future__ import annotations

import numpy as np


def _locate(r, theta, r0, dr, dth, n_r, n_theta):
    theta = np.mod(theta, 2.0 * np.pi)
    i = np.clip(((r - r0) / dr).astype(np.int64), 0, n_r - 1)
    j = np.clip((theta / dth).astype(np.int64), 0, n_theta - 1)
    xi = (r - r0) / dr - i
    eta = theta / dth - j
    return i, j, xi, eta


def deposit_cic(r, theta, weights, r0, dr, dth, n_r, n_theta):
    """Bilinear (cloud-in-cell) deposition onto the (n_r+1, n_theta) node grid."""
    out = np.zeros((n_r + 1, n_theta))
    if len(r) == 0:
        return out
    i, j, xi, eta = _locate(r, theta, r0, dr, dth, n_r, n_theta)
    jp = (j + 1) % n_theta
    np.add.at(out, (i, j), weights * (1 - xi) * (1 - eta))
    np.add.at(out, (i + 1, j), weights * xi * (1 - eta))
    np.add.at(out, (i, jp), weights * (1 - xi) * eta)
    np.add.at(out, (i + 1, jp), weights * xi * eta)
    return out


def gather_gradient(node_vals, r, theta, r0, dr, dth, n_r, n_theta):
    """Gradient (d/dr, d/dtheta) of the bilinear nodal field at each point."""
    i, j, xi, eta = _locate(r, theta, r0, dr, dth, n_r, n_theta)
    jp = (j + 1) % n_theta
    f00 = node_vals[i, j]
    f10 = node_vals[i + 1, j]
    f01 = node_vals[i, jp]
    f11 = node_vals[i + 1, jp]
    gr = ((f10 - f00) * (1 - eta) + (f11 - f01) * eta) / dr
    gth = ((f01 - f00) * (1 - xi) + (f11 - f10) * xi) / dth
    return gr, gth


def boris_orbit(x0, v0, eps, dt, n_steps, field_kind=0):
    """Boris integration of eps*xdot = v, eps*vdot = E + (b/eps) K v.

    Half electric kick, half-angle Boris rotation (tangent of half the gyro
    angle dt*b/eps^2; exact ExB drift for uniform fields at any step), half
    kick, then drift x += (dt/eps) v. Scalar python loop; the compiled core
    replaces this.
    """
    x = np.array(x0, float)
    v = np.array(v0, float)
    he = 0.5 * dt / eps
    hx = dt / eps
    w = dt / (eps * eps)
    for _ in range(int(n_steps)):
        if field_kind == 0:
            ex, ey = -x[0], -x[1]
        else:
            ex, ey = -x[0] * x[0], -x[1] * x[1]
        b = 1.0 + eps * np.sin(np.hypot(x[0], x[1]))
        vx = v[0] + he * ex
        vy = v[1] + he * ey
        t = 0.5 * w * b
        d = 1.0 + t * t
        c, s = (1.0 - t * t) / d, 2.0 * t / d
        # rotation by 2*atan(t) about the out-of-plane axis
        rx = c * vx + s * vy
        ry = -s * vx + c * vy
        v[0] = rx + he * ex
        v[1] = ry + he * ey
        x[0] += hx * v[0]
        x[1] += hx * v[1]
    return x, v
