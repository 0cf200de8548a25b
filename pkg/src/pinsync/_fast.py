"""Compiled fixed-step integration kernels.

numba is optional: when it is missing, ``HAVE_NUMBA`` is False and the
integrator falls back to the pure-numpy reference path in ``sim``.  The
kernels implement exactly the protocol right-hand sides of ``dynamics``;
the test suite asserts agreement between the two routes.

Dynamics codes: 0 = zero field, 1 = linear + activation.
Activation codes: 0 = identity, 1 = piecewise-linear saturation, 2 = tanh.
Method: RK4 when ``use_rk4`` else explicit Euler.
"""
from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):  # type: ignore[misc]
        def wrap(func):
            return func

        return wrap

DYN_ZERO = 0
DYN_LINEAR_ACTIVATION = 1
ACT_IDENTITY = 0
ACT_PWL_SATURATION = 1
ACT_TANH = 2


@njit(cache=True)
def _sig(v, r, dz):
    a = abs(v)
    if r < 1.0 and a < dz:
        return 0.0
    if r == 1.0:
        s = a
    elif r == 0.5:
        s = math.sqrt(a)
    elif r == 2.0:
        s = a * a
    else:
        s = a**r
    return s if v >= 0.0 else -s


@njit(cache=True)
def _f_eval(out, v, dyn_kind, act_kind, w1, w2, bias):
    n = v.shape[0]
    if dyn_kind == 0:
        for l in range(n):
            out[l] = 0.0
        return
    for l in range(n):
        acc = bias[l]
        for l2 in range(n):
            u = v[l2]
            if act_kind == 0:
                phi = u
            elif act_kind == 1:
                phi = 0.5 * (abs(u + 1.0) - abs(u - 1.0))
            else:
                phi = math.tanh(u)
            acc += w1[l, l2] * u + w2[l, l2] * phi
        out[l] = acc


@njit(cache=True)
def _network_rhs(dx, ds, x, s, a, b, cluster_of, pinned,
                 alpha, beta, eps1, eps2, p, q, dz,
                 dyn_kind, act_kind, w1, w2, bias, freeze_targets, za, zb):
    n_nodes, n = x.shape
    m = s.shape[0]
    for k in range(m):
        if freeze_targets:
            for l in range(n):
                ds[k, l] = 0.0
        else:
            _f_eval(ds[k], s[k], dyn_kind, act_kind, w1, w2, bias)
    for i in range(n_nodes):
        ci = cluster_of[i]
        _f_eval(dx[i], x[i], dyn_kind, act_kind, w1, w2, bias)
        for k in range(m):
            for l in range(n):
                za[k, l] = 0.0
                zb[k, l] = 0.0
        for j in range(n_nodes):
            cj = cluster_of[j]
            if cj == ci:
                if j != i:
                    for l in range(n):
                        d = x[j, l] - x[i, l]
                        dx[i, l] += alpha * a[i, j] * _sig(d, p, dz)
                        dx[i, l] += beta * b[i, j] * _sig(d, q, dz)
            else:
                for l in range(n):
                    d_a = a[i, j] * (x[j, l] - x[i, l])
                    d_b = b[i, j] * (x[j, l] - x[i, l])
                    za[cj, l] += d_a
                    zb[cj, l] += d_b
        for k in range(m):
            if k != ci:
                for l in range(n):
                    dx[i, l] += _sig(za[k, l], p, dz)
                    dx[i, l] += _sig(zb[k, l], q, dz)
        if pinned[i]:
            for l in range(n):
                e = x[i, l] - s[ci, l]
                dx[i, l] -= eps1 * _sig(e, p, dz) + eps2 * _sig(e, q, dz)


@njit(cache=True)
def _integrate_network(x0, s0, a, b, cluster_of, pinned,
                       alpha, beta, eps1, eps2, p, q, dz,
                       dyn_kind, act_kind, w1, w2, bias, freeze_targets,
                       h, n_steps, stride, use_rk4):
    """Integrate and record every ``stride`` steps.

    Returns ``(xs, ss, blow)``: recorded node and target states and the
    record index of the first non-finite sample (-1 if the run stayed
    finite).  Rows past a blow-up are unspecified.
    """
    n_nodes, n = x0.shape
    m = s0.shape[0]
    n_rec = n_steps // stride + 1
    xs = np.empty((n_rec, n_nodes, n))
    ss = np.empty((n_rec, m, n))
    x = x0.copy()
    s = s0.copy()
    dx1 = np.empty((n_nodes, n))
    dx2 = np.empty((n_nodes, n))
    dx3 = np.empty((n_nodes, n))
    dx4 = np.empty((n_nodes, n))
    ds1 = np.empty((m, n))
    ds2 = np.empty((m, n))
    ds3 = np.empty((m, n))
    ds4 = np.empty((m, n))
    xt = np.empty((n_nodes, n))
    st = np.empty((m, n))
    za = np.empty((m, n))
    zb = np.empty((m, n))
    xs[0] = x
    ss[0] = s
    blow = -1
    rec = 1
    for step in range(1, n_steps + 1):
        _network_rhs(dx1, ds1, x, s, a, b, cluster_of, pinned, alpha, beta,
                     eps1, eps2, p, q, dz, dyn_kind, act_kind, w1, w2, bias,
                     freeze_targets, za, zb)
        if use_rk4:
            xt[:] = x + (0.5 * h) * dx1
            st[:] = s + (0.5 * h) * ds1
            _network_rhs(dx2, ds2, xt, st, a, b, cluster_of, pinned, alpha,
                         beta, eps1, eps2, p, q, dz, dyn_kind, act_kind, w1,
                         w2, bias, freeze_targets, za, zb)
            xt[:] = x + (0.5 * h) * dx2
            st[:] = s + (0.5 * h) * ds2
            _network_rhs(dx3, ds3, xt, st, a, b, cluster_of, pinned, alpha,
                         beta, eps1, eps2, p, q, dz, dyn_kind, act_kind, w1,
                         w2, bias, freeze_targets, za, zb)
            xt[:] = x + h * dx3
            st[:] = s + h * ds3
            _network_rhs(dx4, ds4, xt, st, a, b, cluster_of, pinned, alpha,
                         beta, eps1, eps2, p, q, dz, dyn_kind, act_kind, w1,
                         w2, bias, freeze_targets, za, zb)
            x += (h / 6.0) * (dx1 + 2.0 * dx2 + 2.0 * dx3 + dx4)
            s += (h / 6.0) * (ds1 + 2.0 * ds2 + 2.0 * ds3 + ds4)
        else:
            x += h * dx1
            s += h * ds1
        if step % stride == 0:
            xs[rec] = x
            ss[rec] = s
            total = 0.0
            for i in range(n_nodes):
                for l in range(n):
                    total += x[i, l] * x[i, l]
            for k in range(m):
                for l in range(n):
                    total += s[k, l] * s[k, l]
            if not np.isfinite(total):
                blow = rec
                break
            rec += 1
    return xs, ss, blow
