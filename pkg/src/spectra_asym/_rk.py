"""Compiled DOP853 stepper for ``u'' = (V(z) - lam) u`` on a straight segment.

The segment ``z = za + t * w`` (``|w| = 1``, ``0 <= t <= L``) is traversed in
the direction of increasing ``t``; the state is ``(u, du/dt)``.  Whenever the
state magnitude exceeds ``renorm`` it is divided by that magnitude and the
logarithm of the factor is added to ``log_scale``, so the true state equals
``state * exp(log_scale)``.
"""

import numpy as np
from numba import njit
from scipy.integrate._ivp import dop853_coefficients as _dop

_NS = _dop.N_STAGES
_A = np.ascontiguousarray(_dop.A[:_NS, :_NS])
_B = np.ascontiguousarray(_dop.B)
_C = np.ascontiguousarray(_dop.C[:_NS])
_E3 = np.ascontiguousarray(_dop.E3)
_E5 = np.ascontiguousarray(_dop.E5)

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_MAX_STEPS = 2


@njit(cache=True, nogil=True)
def horner(coef, z):
    acc = 0j
    for c in coef:
        acc = acc * z + c
    return acc


@njit(cache=True, nogil=True)
def _rhs(t, u, du, coef, za, w, w2, lam):
    return du, w2 * (horner(coef, za + t * w) - lam) * u


@njit(cache=True, nogil=True)
def integrate_segment(coef, lam, za, w, L, u0, du0, rtol, atol, renorm,
                      h0, max_steps):
    """Advance ``(u, du/dt)`` from ``t = 0`` to ``t = L``.

    Returns ``(u, du, log_scale, n_steps, status, t_fail)``.
    """
    w2 = w * w
    ku = np.empty(_NS + 1, dtype=np.complex128)
    kd = np.empty(_NS + 1, dtype=np.complex128)
    u = u0
    du = du0
    log_scale = 0.0
    t = 0.0
    if L <= 0.0:
        return u, du, log_scale, 0, STATUS_OK, 0.0
    h = min(h0, L)
    fu, fd = _rhs(0.0, u, du, coef, za, w, w2, lam)
    n_steps = 0
    hmin = 1e-14 * L
    while t < L:
        if n_steps >= max_steps:
            return u, du, log_scale, n_steps, STATUS_MAX_STEPS, t
        last = False
        if t + h >= L:
            h = L - t
            last = True
        elif h < hmin:
            return u, du, log_scale, n_steps, STATUS_STEP_UNDERFLOW, t
        ku[0] = fu
        kd[0] = fd
        for i in range(1, _NS):
            su = 0j
            sd = 0j
            for j in range(i):
                a = _A[i, j]
                if a != 0.0:
                    su += a * ku[j]
                    sd += a * kd[j]
            ku[i], kd[i] = _rhs(t + _C[i] * h, u + h * su, du + h * sd,
                                coef, za, w, w2, lam)
        su = 0j
        sd = 0j
        for j in range(_NS):
            su += _B[j] * ku[j]
            sd += _B[j] * kd[j]
        un = u + h * su
        dun = du + h * sd
        fun_, fdn = _rhs(t + h, un, dun, coef, za, w, w2, lam)
        ku[_NS] = fun_
        kd[_NS] = fdn

        # tolerances are relative to the size of the whole state, so the
        # rescaling below does not change step selection
        nrm = max(max(abs(u), abs(du)), max(abs(un), abs(dun)))
        sc_u = atol * nrm + rtol * max(abs(u), abs(un))
        sc_d = atol * nrm + rtol * max(abs(du), abs(dun))
        e5u = 0j
        e5d = 0j
        e3u = 0j
        e3d = 0j
        for j in range(_NS + 1):
            e5u += _E5[j] * ku[j]
            e5d += _E5[j] * kd[j]
            e3u += _E3[j] * ku[j]
            e3d += _E3[j] * kd[j]
        e5 = (abs(e5u) / sc_u) ** 2 + (abs(e5d) / sc_d) ** 2
        e3 = (abs(e3u) / sc_u) ** 2 + (abs(e3d) / sc_d) ** 2
        if e5 == 0.0 and e3 == 0.0:
            err = 0.0
        else:
            err = h * e5 / np.sqrt((e5 + 0.01 * e3) * 2.0)

        if err <= 1.0:
            t = L if last else t + h
            u = un
            du = dun
            fu = fun_
            fd = fdn
            n_steps += 1
            mag = max(abs(u), abs(du))
            if mag > renorm:
                u /= mag
                du /= mag
                fu /= mag
                fd /= mag
                log_scale += np.log(mag)
            if err == 0.0:
                fac = 10.0
            else:
                fac = min(10.0, 0.9 * err ** (-1.0 / 8.0))
            h *= fac
        else:
            h *= max(0.2, 0.9 * err ** (-1.0 / 8.0))
    return u, du, log_scale, n_steps, STATUS_OK, 0.0
