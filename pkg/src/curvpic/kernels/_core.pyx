# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: CIC deposition, field gather, Boris reference orbit."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, sqrt, floor, fmod

cnp.import_array()

DEF TWO_PI = 6.283185307179586476925286766559


cdef inline void _locate(double r, double theta, double r0, double dr,
                         double dth, long n_r, long n_theta,
                         long* i, long* j, double* xi, double* eta) nogil:
    cdef double t = fmod(theta, TWO_PI)
    if t < 0:
        t += TWO_PI
    cdef double a = (r - r0) / dr
    cdef double b = t / dth
    cdef long ii = <long>floor(a)
    cdef long jj = <long>floor(b)
    if ii < 0:
        ii = 0
    elif ii > n_r - 1:
        ii = n_r - 1
    if jj < 0:
        jj = 0
    elif jj > n_theta - 1:
        jj = n_theta - 1
    i[0] = ii
    j[0] = jj
    xi[0] = a - ii
    eta[0] = b - jj


def deposit_cic(double[::1] r, double[::1] theta, double[::1] weights,
                double r0, double dr, double dth, long n_r, long n_theta):
    """Bilinear deposition onto the (n_r+1, n_theta) node grid."""
    out_arr = np.zeros((n_r + 1, n_theta))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t s, n = r.shape[0]
    cdef long i, j, jp
    cdef double xi, eta, w
    for s in range(n):
        _locate(r[s], theta[s], r0, dr, dth, n_r, n_theta, &i, &j, &xi, &eta)
        jp = j + 1
        if jp == n_theta:
            jp = 0
        w = weights[s]
        out[i, j] += w * (1 - xi) * (1 - eta)
        out[i + 1, j] += w * xi * (1 - eta)
        out[i, jp] += w * (1 - xi) * eta
        out[i + 1, jp] += w * xi * eta
    return out_arr


def gather_gradient(double[:, ::1] node_vals, double[::1] r, double[::1] theta,
                    double r0, double dr, double dth, long n_r, long n_theta):
    """Gradient (d/dr, d/dtheta) of the bilinear nodal field at each point."""
    cdef Py_ssize_t s, n = r.shape[0]
    gr_arr = np.empty(n)
    gth_arr = np.empty(n)
    cdef double[::1] gr = gr_arr
    cdef double[::1] gth = gth_arr
    cdef long i, j, jp
    cdef double xi, eta, f00, f10, f01, f11
    for s in range(n):
        _locate(r[s], theta[s], r0, dr, dth, n_r, n_theta, &i, &j, &xi, &eta)
        jp = j + 1
        if jp == n_theta:
            jp = 0
        f00 = node_vals[i, j]
        f10 = node_vals[i + 1, j]
        f01 = node_vals[i, jp]
        f11 = node_vals[i + 1, jp]
        gr[s] = ((f10 - f00) * (1 - eta) + (f11 - f01) * eta) / dr
        gth[s] = ((f01 - f00) * (1 - xi) + (f11 - f10) * xi) / dth
    return gr_arr, gth_arr


def boris_orbit(x0, v0, double eps, double dt, long n_steps, int field_kind=0):
    """Boris integration of eps*xdot = v, eps*vdot = E + (b/eps) K v."""
    cdef double x = x0[0], y = x0[1]
    cdef double vx = v0[0], vy = v0[1]
    cdef double he = 0.5 * dt / eps
    cdef double hx = dt / eps
    cdef double w = dt / (eps * eps)
    cdef double ex, ey, b, t, c, s, d, ax, ay
    cdef long n
    with nogil:
        for n in range(n_steps):
            if field_kind == 0:
                ex = -x
                ey = -y
            else:
                ex = -x * x
                ey = -y * y
            b = 1.0 + eps * sin(sqrt(x * x + y * y))
            ax = vx + he * ex
            ay = vy + he * ey
            # half-angle Boris rotation: exact ExB drift for uniform fields
            t = 0.5 * w * b
            d = 1.0 + t * t
            c = (1.0 - t * t) / d
            s = 2.0 * t / d
            vx = c * ax + s * ay + he * ex
            vy = -s * ax + c * ay + he * ey
            x += hx * vx
            y += hx * vy
    return np.array([x, y]), np.array([vx, vy])
