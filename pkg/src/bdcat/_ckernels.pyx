# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: tridiagonal sweep and the two event-driven simulators.

Mirrors ``_pykernels`` statement for statement.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, NAN

cnp.import_array()

cdef double SMALL_PIVOT = 1e-13
cdef double TINY_PIVOT = 1e-300


def thomas(const double complex[::1] lower, const double complex[::1] diag,
           const double complex[::1] upper, rhs):
    cdef Py_ssize_t n = diag.shape[0]
    x_arr = np.array(rhs, dtype=np.complex128, order="C", copy=True)
    cdef double complex[:, ::1] x = x_arr
    cdef Py_ssize_t k = x.shape[1]
    cdef double complex[::1] cp = np.empty(n, dtype=np.complex128)
    cdef double complex piv, m
    cdef double scale
    cdef Py_ssize_t i, c
    piv = diag[0]
    scale = abs(diag[0]) + (abs(upper[0]) if n > 1 else 0.0)
    if abs(piv) <= TINY_PIVOT or abs(piv) < SMALL_PIVOT * scale:
        return x_arr, 0
    for i in range(n):
        if i > 0:
            m = lower[i - 1]
            piv = diag[i] - m * cp[i - 1]
            scale = abs(diag[i]) + abs(m) + (abs(upper[i]) if i < n - 1 else 0.0)
            if abs(piv) <= TINY_PIVOT or abs(piv) < SMALL_PIVOT * scale:
                return x_arr, i
            for c in range(k):
                x[i, c] = (x[i, c] - m * x[i - 1, c]) / piv
        else:
            for c in range(k):
                x[0, c] = x[0, c] / piv
        if i < n - 1:
            cp[i] = upper[i] / piv
    for i in range(n - 2, -1, -1):
        for c in range(k):
            x[i, c] = x[i, c] - cp[i] * x[i + 1, c]
    return x_arr, -1


cdef inline void _rates(long i, const double[::1] birth_tab, const double[::1] death_tab,
                        const double[::1] tail, double* lam, double* mu) noexcept nogil:
    if i < birth_tab.shape[0]:
        lam[0] = birth_tab[i]
        mu[0] = death_tab[i]
    else:
        lam[0] = tail[0] * (i + 1) + tail[1]
        mu[0] = tail[2] * i + tail[3]


def first_catastrophe(const double[::1] birth_tab, const double[::1] death_tab,
                      const double[::1] tail, double alpha, double beta, long j,
                      Py_ssize_t n_reps, const double[::1] u, long cap,
                      double[::1] out_time, long[::1] out_kind, long[::1] out_events):
    cdef Py_ssize_t nu = u.shape[0]
    cdef Py_ssize_t pos = 0, start, done = 0
    cdef long state, events, kind
    cdef double t, lam = 0, mu = 0, total, r
    with nogil:
        while done < n_reps:
            start = pos
            state = j
            t = 0.0
            events = 0
            kind = -1
            while events < cap:
                if pos + 2 > nu:
                    with gil:
                        return done, start
                _rates(state, birth_tab, death_tab, tail, &lam, &mu)
                total = lam + mu + alpha + beta
                t += -log(1.0 - u[pos]) / total
                r = u[pos + 1] * total
                pos += 2
                events += 1
                if r < lam:
                    state += 1
                elif r < lam + mu:
                    state -= 1
                elif r < lam + mu + alpha:
                    if state >= 1:
                        kind = 0
                        break
                else:
                    if state != 1:
                        kind = 1
                        break
            out_time[done] = t if kind >= 0 else NAN
            out_kind[done] = kind
            out_events[done] = events
            done += 1
    return done, pos


def state_at_time(const double[::1] birth_tab, const double[::1] death_tab,
                  const double[::1] tail, double alpha, double beta, long j, double horizon,
                  Py_ssize_t n_reps, const double[::1] u, long cap, long[::1] out_state):
    cdef Py_ssize_t nu = u.shape[0]
    cdef Py_ssize_t pos = 0, start, done = 0
    cdef long state, events
    cdef double t, lam = 0, mu = 0, total, r
    with nogil:
        while done < n_reps:
            start = pos
            state = j
            t = 0.0
            events = 0
            while True:
                if events >= cap:
                    state = -1
                    break
                if pos + 2 > nu:
                    with gil:
                        return done, start
                _rates(state, birth_tab, death_tab, tail, &lam, &mu)
                total = lam + mu + alpha + beta
                t += -log(1.0 - u[pos]) / total
                r = u[pos + 1] * total
                pos += 2
                if t > horizon:
                    break
                events += 1
                if r < lam:
                    state += 1
                elif r < lam + mu:
                    state -= 1
                elif r < lam + mu + alpha:
                    state = 0
                else:
                    state = 1
            out_state[done] = state
            done += 1
    return done, pos
