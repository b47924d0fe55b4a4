"""Scalar mean-field kernels: vector fields, Jacobians, RK stepping, Newton.

Everything here is written in the numba subset and compiled through
:func:`ptdtc._accel.kernel`; with the fallback flag the same code runs as
plain Python on NumPy arrays.

Model ids and parameter layout (``p`` is a float64 array of length 4):

====  ==========  ========================
id    model       p
====  ==========  ========================
0     ddm         g, omega, kappa, -
1     lmg         g, kappa, -, -
2     waveguide   g, omega, gamma, -
3     lattice     g, omega, kappa, d
====  ==========  ========================

Spin models use ``q = (m_x, m_y, m_z)`` on the unit sphere, the lattice model
``q = (r_A, r_B, dtheta)`` with ``r_A^2 + r_B^2 = 1``.
"""
import math

import numpy as np

from ._accel import kernel

DDM = 0
LMG = 1
WAVEGUIDE = 2
LATTICE = 3

OK = 0
STEP_UNDERFLOW = 1
MAX_STEPS = 2
DRIFT_ABORT = 3
NONFINITE = 4

# DOP853 tableau (Hairer, Norsett & Wanner), taken as data from scipy
from scipy.integrate._ivp import dop853_coefficients as _dop

N_STAGES = _dop.N_STAGES
TAB_A = np.ascontiguousarray(_dop.A[:N_STAGES, :N_STAGES])
TAB_B = np.ascontiguousarray(_dop.B)
TAB_E3 = np.ascontiguousarray(_dop.E3)
TAB_E5 = np.ascontiguousarray(_dop.E5)


@kernel
def rhs(model, p, q, out):
    x = q[0]
    y = q[1]
    z = q[2]
    if model == DDM:
        g, w, k = p[0], p[1], p[2]
        out[0] = 2.0 * (-w * y * z + k * x * z)
        out[1] = 2.0 * (w * x * z - g * z + k * y * z)
        out[2] = 2.0 * (g * y - k * (1.0 - z * z))
    elif model == LMG:
        g, k = p[0], p[1]
        out[0] = 2.0 * (-g * y * z + k * x * z)
        out[1] = 2.0 * (-g * x * z + k * y * z)
        out[2] = 2.0 * (2.0 * g * x * y - k * (x * x + y * y))
    elif model == WAVEGUIDE:
        g, w, gam = p[0], p[1], p[2]
        kk = 2.0 * w + 1.0
        out[0] = 2.0 * gam * x * z
        out[1] = 2.0 * (-g * z + gam * kk * y * z)
        out[2] = 2.0 * (g * y - gam * x * x - gam * kk * y * y)
    else:
        g, w, k, c = p[0], p[1], p[2], 2.0 * p[3]
        ra, rb, th = x, y, z
        s = math.sin(th)
        out[0] = -c * (k * ra * rb * rb + g * rb * s)
        out[1] = c * (k * ra * ra * rb + g * ra * s)
        out[2] = -c * (g * (rb / ra - ra / rb) * math.cos(th) + w * (ra * ra - rb * rb))


@kernel
def jac3(model, p, q, J):
    """Full 3x3 Jacobian of :func:`rhs` (ambient coordinates)."""
    x = q[0]
    y = q[1]
    z = q[2]
    if model == DDM:
        g, w, k = p[0], p[1], p[2]
        J[0, 0] = 2.0 * k * z
        J[0, 1] = -2.0 * w * z
        J[0, 2] = 2.0 * (-w * y + k * x)
        J[1, 0] = 2.0 * w * z
        J[1, 1] = 2.0 * k * z
        J[1, 2] = 2.0 * (w * x - g + k * y)
        J[2, 0] = 0.0
        J[2, 1] = 2.0 * g
        J[2, 2] = 4.0 * k * z
    elif model == LMG:
        g, k = p[0], p[1]
        J[0, 0] = 2.0 * k * z
        J[0, 1] = -2.0 * g * z
        J[0, 2] = 2.0 * (-g * y + k * x)
        J[1, 0] = -2.0 * g * z
        J[1, 1] = 2.0 * k * z
        J[1, 2] = 2.0 * (-g * x + k * y)
        J[2, 0] = 4.0 * (g * y - k * x)
        J[2, 1] = 4.0 * (g * x - k * y)
        J[2, 2] = 0.0
    elif model == WAVEGUIDE:
        g, w, gam = p[0], p[1], p[2]
        kk = 2.0 * w + 1.0
        J[0, 0] = 2.0 * gam * z
        J[0, 1] = 0.0
        J[0, 2] = 2.0 * gam * x
        J[1, 0] = 0.0
        J[1, 1] = 2.0 * gam * kk * z
        J[1, 2] = 2.0 * (-g + gam * kk * y)
        J[2, 0] = -4.0 * gam * x
        J[2, 1] = 2.0 * (g - 2.0 * gam * kk * y)
        J[2, 2] = 0.0
    else:
        g, w, k, c = p[0], p[1], p[2], 2.0 * p[3]
        ra, rb, th = x, y, z
        s = math.sin(th)
        co = math.cos(th)
        J[0, 0] = -c * k * rb * rb
        J[0, 1] = -c * (2.0 * k * ra * rb + g * s)
        J[0, 2] = -c * g * rb * co
        J[1, 0] = c * (2.0 * k * ra * rb + g * s)
        J[1, 1] = c * k * ra * ra
        J[1, 2] = c * g * ra * co
        J[2, 0] = -c * (g * (-rb / (ra * ra) - 1.0 / rb) * co + 2.0 * w * ra)
        J[2, 1] = -c * (g * (1.0 / ra + ra / (rb * rb)) * co - 2.0 * w * rb)
        J[2, 2] = c * g * (rb / ra - ra / rb) * s


@kernel
def conserved(model, q):
    """Quantity fixed by the flow: ``|m|^2`` or ``r_A^2 + r_B^2``."""
    if model == LATTICE:
        return q[0] * q[0] + q[1] * q[1]
    return q[0] * q[0] + q[1] * q[1] + q[2] * q[2]


@kernel
def apply_parity(model, q, out):
    if model == LATTICE:
        a = q[0]
        out[0] = q[1]
        out[1] = a
        out[2] = q[2]
    else:
        out[0] = q[0]
        out[1] = q[1]
        out[2] = -q[2]


@kernel
def field(model, p, q, mode, out, tmp):
    """``f(q)`` for mode 0; ``-P f(P q)`` for mode 1; ``P f(P q)`` for mode 2."""
    if mode == 0:
        rhs(model, p, q, out)
        return
    sign = -1.0 if mode == 1 else 1.0
    apply_parity(model, q, tmp)
    rhs(model, p, tmp, out)
    tmp[0] = out[0]
    tmp[1] = out[1]
    tmp[2] = out[2]
    apply_parity(model, tmp, out)
    out[0] = sign * out[0]
    out[1] = sign * out[1]
    out[2] = sign * out[2]


@kernel
def integrate_dop853(model, p, q0, t_out, rtol, atol, h_init, h_min, h_max, max_steps,
                     mode, drift_abort, tab_a, tab_b, tab_e3, tab_e5):
    """Adaptive DOP853 with steps clipped onto the sample times ``t_out``.

    Returns ``(states, status, n_accepted, n_rejected, max_drift)``; rows
    past a failure stay NaN. ``t_out[0]`` is the initial time.
    """
    ns = tab_b.shape[0]
    n_out = t_out.shape[0]
    ys = np.full((n_out, 3), np.nan)
    y = q0.copy()
    ys[0, :] = y
    c0 = conserved(model, y)
    K = np.empty((ns + 1, 3))
    yt = np.empty(3)
    yn = np.empty(3)
    tmp = np.empty(3)
    kk = np.empty(3)
    field(model, p, y, mode, kk, tmp)
    K[0, :] = kk

    t = t_out[0]
    h = h_init
    if h <= 0.0:
        fn = math.sqrt(kk[0] * kk[0] + kk[1] * kk[1] + kk[2] * kk[2])
        h = 1e-3 if fn == 0.0 else min(1e-1, 1e-2 / fn)
    status = OK
    n_acc = 0
    n_rej = 0
    max_drift = 0.0
    idx = 1
    while idx < n_out:
        t_next = t_out[idx]
        if n_acc + n_rej >= max_steps:
            status = MAX_STEPS
            break
        clipped = False
        h = min(h, h_max)
        h_step = h
        if t + h_step >= t_next:
            h_step = t_next - t
            clipped = True
        if h_step < h_min and not clipped:
            status = STEP_UNDERFLOW
            break

        for s in range(1, ns):
            for i in range(3):
                acc = 0.0
                for j in range(s):
                    acc += tab_a[s, j] * K[j, i]
                yt[i] = y[i] + h_step * acc
            field(model, p, yt, mode, kk, tmp)
            K[s, :] = kk
        for i in range(3):
            acc = 0.0
            for j in range(ns):
                acc += tab_b[j] * K[j, i]
            yn[i] = y[i] + h_step * acc
        field(model, p, yn, mode, kk, tmp)
        K[ns, :] = kk

        e5 = 0.0
        e3 = 0.0
        for i in range(3):
            a5 = 0.0
            a3 = 0.0
            for j in range(ns + 1):
                a5 += tab_e5[j] * K[j, i]
                a3 += tab_e3[j] * K[j, i]
            sc = atol + rtol * max(abs(y[i]), abs(yn[i]))
            e5 += (a5 / sc) ** 2
            e3 += (a3 / sc) ** 2
        den = e5 + 0.01 * e3
        err = 0.0 if den == 0.0 else abs(h_step) * e5 / math.sqrt(den * 3.0)
        if not math.isfinite(err):
            status = NONFINITE
            break

        if err <= 1.0:
            t = t_next if clipped else t + h_step
            for i in range(3):
                y[i] = yn[i]
            K[0, :] = K[ns, :]
            n_acc += 1
            drift = abs(conserved(model, y) - c0)
            if drift > max_drift:
                max_drift = drift
            if drift > drift_abort:
                status = DRIFT_ABORT
                break
            if clipped:
                ys[idx, :] = y
                idx += 1
            fac = 10.0 if err == 0.0 else min(10.0, max(0.2, 0.9 * err ** -0.125))
            h_new = h_step * fac
            # a step shortened to hit a sample time says nothing about the natural size
            h = max(h, h_new) if clipped else h_new
        else:
            n_rej += 1
            h = h_step * max(0.2, 0.9 * err ** -0.125)
    return ys, status, n_acc, n_rej, max_drift


@kernel
def project(model, q):
    """Map ``q`` back onto the constraint manifold (in place)."""
    if model == LATTICE:
        ra = q[0]
        rb = q[1]
        th = q[2]
        if ra < 0.0:
            ra = -ra
            th += math.pi
        if rb < 0.0:
            rb = -rb
            th -= math.pi
        n = math.sqrt(ra * ra + rb * rb)
        q[0] = ra / n
        q[1] = rb / n
        q[2] = math.atan2(math.sin(th), math.cos(th))
    else:
        n = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2])
        q[0] /= n
        q[1] /= n
        q[2] /= n


@kernel
def _residual4(model, p, q, F, tmp):
    rhs(model, p, q, tmp)
    F[0] = tmp[0]
    F[1] = tmp[1]
    F[2] = tmp[2]
    F[3] = conserved(model, q) - 1.0
    return math.sqrt(F[0] * F[0] + F[1] * F[1] + F[2] * F[2] + F[3] * F[3])


@kernel
def _solve3(A, b, x):
    """Cramer's rule for a symmetric positive definite 3x3 system."""
    det = (A[0, 0] * (A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
           - A[0, 1] * (A[1, 0] * A[2, 2] - A[1, 2] * A[2, 0])
           + A[0, 2] * (A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0]))
    x[0] = (b[0] * (A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
            - A[0, 1] * (b[1] * A[2, 2] - A[1, 2] * b[2])
            + A[0, 2] * (b[1] * A[2, 1] - A[1, 1] * b[2])) / det
    x[1] = (A[0, 0] * (b[1] * A[2, 2] - A[1, 2] * b[2])
            - b[0] * (A[1, 0] * A[2, 2] - A[1, 2] * A[2, 0])
            + A[0, 2] * (A[1, 0] * b[2] - b[1] * A[2, 0])) / det
    x[2] = (A[0, 0] * (A[1, 1] * b[2] - b[1] * A[2, 1])
            - A[0, 1] * (A[1, 0] * b[2] - b[1] * A[2, 0])
            + b[0] * (A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0])) / det


@kernel
def newton_manifold(model, p, q0, max_iter, tol):
    """Damped Gauss-Newton for ``f(q) = 0`` together with the constraint.

    Returns ``(q, residual, iterations, converged)`` with
    ``residual = |f(q)|``.
    """
    q = q0.copy()
    project(model, q)
    F = np.empty(4)
    Ft = np.empty(4)
    tmp = np.empty(3)
    J3 = np.empty((3, 3))
    J4 = np.zeros((4, 3))
    A = np.empty((3, 3))
    b = np.empty(3)
    delta = np.empty(3)
    qt = np.empty(3)
    nrm = _residual4(model, p, q, F, tmp)
    it = 0
    converged = False
    while it < max_iter:
        if not math.isfinite(nrm):
            break
        rhs(model, p, q, tmp)
        fn = math.sqrt(tmp[0] * tmp[0] + tmp[1] * tmp[1] + tmp[2] * tmp[2])
        if fn < tol:
            converged = True
            break
        jac3(model, p, q, J3)
        for i in range(3):
            for j in range(3):
                J4[i, j] = J3[i, j]
        J4[3, 0] = 2.0 * q[0]
        J4[3, 1] = 2.0 * q[1]
        J4[3, 2] = 0.0 if model == LATTICE else 2.0 * q[2]
        for i in range(3):
            b[i] = 0.0
            for k in range(4):
                b[i] -= J4[k, i] * F[k]
            for j in range(3):
                acc = 0.0
                for k in range(4):
                    acc += J4[k, i] * J4[k, j]
                A[i, j] = acc
        mu = 1e-14 * (A[0, 0] + A[1, 1] + A[2, 2]) + 1e-300
        for i in range(3):
            A[i, i] += mu
        _solve3(A, b, delta)
        lam = 1.0
        accepted = False
        while lam > 1e-8:
            for i in range(3):
                qt[i] = q[i] + lam * delta[i]
            project(model, qt)
            nt = _residual4(model, p, qt, Ft, tmp)
            if math.isfinite(nt) and nt < nrm:
                accepted = True
                break
            lam *= 0.5
        it += 1
        if not accepted:
            break
        step = 0.0
        for i in range(3):
            step = max(step, abs(qt[i] - q[i]))
            q[i] = qt[i]
            F[i] = Ft[i]
        F[3] = Ft[3]
        nrm = nt
        if step < 1e-15:
            break
    rhs(model, p, q, tmp)
    res = math.sqrt(tmp[0] * tmp[0] + tmp[1] * tmp[1] + tmp[2] * tmp[2])
    if res < tol:
        converged = True
    return q, res, it, converged


@kernel
def newton_batch(model, p, seeds, max_iter, tol):
    n = seeds.shape[0]
    out = np.empty((n, 3))
    res = np.empty(n)
    ok = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        q, r, _, conv = newton_manifold(model, p, seeds[i], max_iter, tol)
        out[i, :] = q
        res[i] = r
        ok[i] = conv
    return out, res, ok
