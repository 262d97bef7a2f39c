# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the kernels in ``_pykernels``.

Same signatures and semantics; the divergence/entropy/margin signals are
fused into a single pass over the vocabulary.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()

cdef double EPS = 1e-12
cdef double LOG_EPS = log(1e-12)


cdef inline double _fmax(double a, double b) nogil:
    return a if a > b else b


cdef tuple _normalize(const double[::1] x):
    cdef Py_ssize_t n = x.shape[0], i
    cdef double mx = x[0], s = 0.0, s2 = 0.0, lse, v
    out_lp = np.empty(n, dtype=np.float64)
    out_p = np.empty(n, dtype=np.float64)
    cdef double[::1] lp = out_lp
    cdef double[::1] p = out_p
    with nogil:
        for i in range(1, n):
            if x[i] > mx:
                mx = x[i]
        for i in range(n):
            v = exp(x[i] - mx)
            p[i] = v
            s += v
        lse = mx + log(s)
        for i in range(n):
            v = _fmax(p[i] / s, EPS)
            p[i] = v
            s2 += v
            lp[i] = _fmax(x[i] - lse, LOG_EPS)
        v = log(s2)
        for i in range(n):
            p[i] /= s2
            lp[i] -= v
    return out_lp, out_p


def normalize(const double[::1] x):
    """Log-softmax of ``x`` with the probability floor applied."""
    return _normalize(x)


def blend(const double[::1] lp_a, const double[::1] lp_b, double wa, double wb):
    cdef Py_ssize_t n = lp_a.shape[0], i
    buf = np.empty(n, dtype=np.float64)
    cdef double[::1] t = buf
    with nogil:
        for i in range(n):
            t[i] = wa * lp_a[i] + wb * lp_b[i]
    return _normalize(t)


def renyi(const double[::1] lp, const double[::1] lq, double alpha):
    cdef Py_ssize_t n = lp.shape[0], i
    cdef double t, mx, s = 1.0
    cdef double b = 1.0 - alpha
    with nogil:
        mx = alpha * lp[0] + b * lq[0]
        for i in range(1, n):
            t = alpha * lp[i] + b * lq[i]
            if t > mx:
                s = s * exp(mx - t) + 1.0
                mx = t
            else:
                s += exp(t - mx)
    return _fmax((mx + log(s)) / (alpha - 1.0), 0.0)


def kl(const double[::1] p, const double[::1] lp, const double[::1] lq):
    cdef Py_ssize_t n = p.shape[0], i
    cdef double acc = 0.0
    with nogil:
        for i in range(n):
            acc += p[i] * (lp[i] - lq[i])
    return _fmax(acc, 0.0)


def jsd(const double[::1] p, const double[::1] lp,
        const double[::1] q, const double[::1] lq):
    cdef Py_ssize_t n = p.shape[0], i
    cdef double acc = 0.0, lm
    with nogil:
        for i in range(n):
            lm = log(0.5 * (p[i] + q[i]))
            acc += p[i] * (lp[i] - lm) + q[i] * (lq[i] - lm)
    return _fmax(0.5 * acc, 0.0)


def entropy(const double[::1] p, const double[::1] lp):
    cdef Py_ssize_t n = p.shape[0], i
    cdef double acc = 0.0
    with nogil:
        for i in range(n):
            acc -= p[i] * lp[i]
    return _fmax(acc, 0.0)


def top2(const double[::1] p):
    cdef Py_ssize_t n = p.shape[0], i, i1 = 0, i2 = -1
    with nogil:
        for i in range(1, n):
            if p[i] > p[i1]:
                i2 = i1
                i1 = i
            elif i2 < 0 or p[i] > p[i2]:
                i2 = i
    return int(i1), int(i2)


def gate_signals(const double[::1] p, const double[::1] lp,
                 const double[::1] q, const double[::1] lq, double order):
    """Divergence, JSD, both entropies and the top two of ``q`` in one pass."""
    cdef Py_ssize_t n = p.shape[0], i, i1 = 0, i2 = -1
    cdef bint use_kl = order == 1.0
    cdef double b = 1.0 - order
    cdef double t, mx = 0.0, s = 0.0, d
    cdef double acc_kl = 0.0, acc_js = 0.0, hp = 0.0, hq = 0.0, lm
    with nogil:
        if not use_kl:
            mx = order * lp[0] + b * lq[0]
            s = 1.0
        for i in range(n):
            lm = log(0.5 * (p[i] + q[i]))
            acc_js += p[i] * (lp[i] - lm) + q[i] * (lq[i] - lm)
            hp -= p[i] * lp[i]
            hq -= q[i] * lq[i]
            if use_kl:
                acc_kl += p[i] * (lp[i] - lq[i])
            elif i > 0:
                t = order * lp[i] + b * lq[i]
                if t > mx:
                    s = s * exp(mx - t) + 1.0
                    mx = t
                else:
                    s += exp(t - mx)
            if i > 0:
                if q[i] > q[i1]:
                    i2 = i1
                    i1 = i
                elif i2 < 0 or q[i] > q[i2]:
                    i2 = i
        if use_kl:
            d = acc_kl
        else:
            d = (mx + log(s)) / (order - 1.0)
    return (_fmax(d, 0.0), _fmax(0.5 * acc_js, 0.0), _fmax(hp, 0.0),
            _fmax(hq, 0.0), int(i1), int(i2))
