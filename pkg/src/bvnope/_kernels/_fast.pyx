# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled batch kernels; see ``pure`` for the shared contracts.

Row-at-a-time loops over preallocated scratch buffers; outputs are
bit-identical to the numpy fallback by construction (integer logic plus
the same float comparisons on the same caller-supplied uniforms).
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def apply_pin_rules_batch(
    cnp.int64_t[:, ::1] rankings,
    cnp.int64_t[::1] rule_items,
    cnp.int64_t[::1] rule_targets,
    cnp.float64_t[::1] rule_probs,
    cnp.float64_t[:, ::1] u_rules,
):
    cdef Py_ssize_t n_logs = rankings.shape[0]
    cdef Py_ssize_t n = rankings.shape[1]
    cdef Py_ssize_t n_rules = rule_items.shape[0]

    displayed_arr = np.empty((n_logs, n), dtype=np.int64)
    applied_arr = np.zeros((n_logs, n_rules), dtype=np.uint8)
    if n_rules == 0:
        displayed_arr[:] = np.asarray(rankings)
        return displayed_arr, applied_arr

    cdef cnp.int64_t[:, ::1] displayed = displayed_arr
    cdef cnp.uint8_t[:, ::1] applied = applied_arr

    target_arr = np.empty(n, dtype=np.int64)
    taken_arr = np.empty(n, dtype=np.uint8)
    cdef cnp.int64_t[::1] target_of_item = target_arr
    cdef cnp.uint8_t[::1] taken = taken_arr

    cdef Py_ssize_t i, s, r, cursor
    cdef cnp.int64_t item, tgt
    for i in range(n_logs):
        for s in range(n):
            target_of_item[s] = -1
            taken[s] = 0
        for r in range(n_rules):
            if u_rules[i, r] < rule_probs[r]:
                applied[i, r] = 1
                target_of_item[rule_items[r]] = rule_targets[r]
                taken[rule_targets[r]] = 1
        cursor = 0
        for s in range(n):
            item = rankings[i, s]
            tgt = target_of_item[item]
            if tgt >= 0:
                displayed[i, tgt] = item
            else:
                while taken[cursor]:
                    cursor += 1
                displayed[i, cursor] = item
                cursor += 1
    return displayed_arr, applied_arr


def bernoulli_clicks_batch(
    cnp.int64_t[:, ::1] displayed,
    cnp.float64_t[:, ::1] relevance,
    cnp.float64_t[::1] bias,
    cnp.float64_t[:, ::1] u_clicks,
):
    cdef Py_ssize_t n_logs = displayed.shape[0]
    cdef Py_ssize_t n = displayed.shape[1]
    clicks_arr = np.zeros((n_logs, n), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] clicks = clicks_arr
    cdef Py_ssize_t i, k
    for i in range(n_logs):
        for k in range(n):
            if u_clicks[i, k] < bias[k] * relevance[i, displayed[i, k]]:
                clicks[i, k] = 1
    return clicks_arr


def display_counts(cnp.int64_t[:, ::1] displayed):
    cdef Py_ssize_t n_logs = displayed.shape[0]
    cdef Py_ssize_t n = displayed.shape[1]
    counts_arr = np.zeros((n, n), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] counts = counts_arr
    cdef Py_ssize_t i, k
    for i in range(n_logs):
        for k in range(n):
            counts[displayed[i, k], k] += 1.0
    return counts_arr
