# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the hot kernels in ibdiar._fallback.

Semantics, including tie-breaking, must match the fallback exactly;
tests/test_kernels.py enforces parity.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, log

cnp.import_array()

BACKEND_NAME = "compiled"


cdef inline double _xlogx(double x) noexcept nogil:
    return x * log(x) if x > 0.0 else 0.0


def merge_cost_row(double[::1] q_i, double p_i, double[:, ::1] q_others,
                   double[::1] p_others, double h_i, double[::1] h_others,
                   double beta):
    """See ibdiar._fallback.merge_cost_row."""
    cdef Py_ssize_t n = q_others.shape[0]
    cdef Py_ssize_t dims = q_others.shape[1]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t row, d
    cdef double p_sum, w_i, w_o, mix, h_mix, js, h_pi
    with nogil:
        for row in range(n):
            p_sum = p_i + p_others[row]
            w_i = p_i / p_sum
            w_o = p_others[row] / p_sum
            h_mix = 0.0
            for d in range(dims):
                mix = w_i * q_i[d] + w_o * q_others[row, d]
                h_mix -= _xlogx(mix)
            js = h_mix - w_i * h_i - w_o * h_others[row]
            h_pi = -(_xlogx(w_i) + _xlogx(w_o))
            out[row] = p_sum * (js - h_pi / beta)
    return out_arr


def viterbi_min_duration(costs, Py_ssize_t min_frames):
    """See ibdiar._fallback.viterbi_min_duration."""
    costs_arr = np.ascontiguousarray(costs, dtype=np.float64)
    cdef double[:, ::1] c = costs_arr
    cdef Py_ssize_t n_frames = c.shape[0]
    cdef Py_ssize_t n_labels = c.shape[1]
    cdef Py_ssize_t t, k, s, s_new, lead, runner, best_k
    cdef double total, acc, best, second, other, cand, score

    if n_frames == 0:
        return np.empty(0, dtype=np.int32), 0.0
    if min_frames < 1:
        min_frames = 1

    labels_arr = np.empty(n_frames, dtype=np.int32)
    cdef int[::1] labels = labels_arr

    if n_frames < min_frames or n_labels == 1:
        best = INFINITY
        best_k = 0
        for k in range(n_labels):
            acc = 0.0
            for t in range(n_frames):
                acc += c[t, k]
            if acc < best:
                best = acc
                best_k = k
        for t in range(n_frames):
            labels[t] = <int> best_k
        return labels_arr, best

    cdef Py_ssize_t d = min_frames
    prefix_arr = np.zeros((n_frames + 1, n_labels), dtype=np.float64)
    cdef double[:, ::1] prefix = prefix_arr
    best_end_arr = np.full((n_frames, n_labels), np.inf)
    cdef double[:, ::1] best_end = best_end_arr
    run_start_arr = np.full((n_frames, n_labels), -1, dtype=np.int64)
    cdef long long[:, ::1] run_start = run_start_arr
    run_min_arr = np.full(n_labels, np.inf)
    cdef double[::1] run_min = run_min_arr
    run_arg_arr = np.full(n_labels, -1, dtype=np.int64)
    cdef long long[::1] run_arg = run_arg_arr

    with nogil:
        for t in range(n_frames):
            for k in range(n_labels):
                prefix[t + 1, k] = prefix[t, k] + c[t, k]

        for t in range(n_frames):
            s_new = t - d + 1
            if s_new >= d:
                # best and second-best of best_end[s_new - 1] with the
                # lowest index winning ties (matches stable argsort).
                lead = 0
                best = best_end[s_new - 1, 0]
                second = INFINITY
                runner = -1
                for k in range(1, n_labels):
                    if best_end[s_new - 1, k] < best:
                        second = best
                        runner = lead
                        best = best_end[s_new - 1, k]
                        lead = k
                    elif best_end[s_new - 1, k] < second:
                        second = best_end[s_new - 1, k]
                        runner = k
                for k in range(n_labels):
                    other = second if k == lead else best
                    cand = other - prefix[s_new, k]
                    if cand < run_min[k]:
                        run_min[k] = cand
                        run_arg[k] = s_new
            if t >= d - 1:
                for k in range(n_labels):
                    if run_min[k] < 0.0:
                        best_end[t, k] = prefix[t + 1, k] + run_min[k]
                        run_start[t, k] = run_arg[k]
                    else:
                        best_end[t, k] = prefix[t + 1, k]
                        run_start[t, k] = 0
            else:
                for k in range(n_labels):
                    best_end[t, k] = prefix[t + 1, k] + run_min[k]
                    run_start[t, k] = run_arg[k]

        best_k = 0
        best = best_end[n_frames - 1, 0]
        for k in range(1, n_labels):
            if best_end[n_frames - 1, k] < best:
                best = best_end[n_frames - 1, k]
                best_k = k
        total = best
        t = n_frames - 1
        k = best_k
        while True:
            s = <Py_ssize_t> run_start[t, k]
            for s_new in range(s, t + 1):
                labels[s_new] = <int> k
            if s == 0:
                break
            best = INFINITY
            best_k = 0
            for s_new in range(n_labels):
                if s_new != k and best_end[s - 1, s_new] < best:
                    best = best_end[s - 1, s_new]
                    best_k = s_new
            k = best_k
            t = s - 1
    return labels_arr, total
