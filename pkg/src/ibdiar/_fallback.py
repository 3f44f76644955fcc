"""Pure-numpy implementations of the hot kernels.

These are the reference semantics; ibdiar._native provides compiled
twins with identical tie-breaking. Keep both in lockstep.
"""

from __future__ import annotations

import numpy as np
from scipy.special import xlogy

BACKEND_NAME = "python"


def entropy_rows(p: np.ndarray) -> np.ndarray:
    """Natural-log entropy of each row, with 0 log 0 = 0."""
    return -xlogy(p, p).sum(axis=-1)


def merge_cost_row(q_i: np.ndarray, p_i: float, q_others: np.ndarray,
                   p_others: np.ndarray, h_i: float, h_others: np.ndarray,
                   beta: float) -> np.ndarray:
    """Objective losses for merging one cluster with each of a set.

    For clusters (i, j) with priors (p_i, p_j) and conditionals
    (q_i, q_j), the loss is (p_i + p_j) * (JS_pi(q_i, q_j) - H(pi)/beta)
    where pi is the normalized prior pair. Row entropies of q_i and
    q_others are passed in so callers can cache them across calls.
    """
    p_sum = p_i + p_others
    w_i = p_i / p_sum
    w_o = p_others / p_sum
    mix = w_i[:, None] * q_i[None, :] + w_o[:, None] * q_others
    js = entropy_rows(mix) - w_i * h_i - w_o * h_others
    h_pi = -(xlogy(w_i, w_i) + xlogy(w_o, w_o))
    return p_sum * (js - h_pi / beta)


def viterbi_min_duration(costs: np.ndarray,
                         min_frames: int) -> tuple[np.ndarray, float]:
    """Minimum-cost frame labeling where every label run lasts at least
    min_frames frames.

    Sequences shorter than min_frames collapse to the single best label.
    Ties prefer, in order: the earlier run start, then the lower label
    index. Returns (labels, total_cost).
    """
    costs = np.ascontiguousarray(costs, dtype=np.float64)
    n_frames, n_labels = costs.shape
    if n_frames == 0:
        return np.empty(0, dtype=np.int32), 0.0
    if min_frames < 1:
        min_frames = 1
    totals = costs.sum(axis=0)
    if n_frames < min_frames or n_labels == 1:
        label = int(np.argmin(totals))
        return np.full(n_frames, label, dtype=np.int32), float(totals[label])

    d = min_frames
    prefix = np.vstack([np.zeros(n_labels), np.cumsum(costs, axis=0)])
    best_end = np.full((n_frames, n_labels), np.inf)   # best cost, run ends at t
    run_start = np.full((n_frames, n_labels), -1, dtype=np.int64)
    # Running minimum over feasible earlier run starts s in [d, t - d + 1]
    # of min_{k' != k} best_end[s-1, k'] - prefix[s, k].
    run_min = np.full(n_labels, np.inf)
    run_arg = np.full(n_labels, -1, dtype=np.int64)

    for t in range(n_frames):
        s_new = t - d + 1
        if s_new >= d:
            prev = best_end[s_new - 1]
            order = np.argsort(prev, kind="stable")
            lead, runner = order[0], order[1]
            other = np.where(np.arange(n_labels) == lead, prev[runner],
                             prev[lead])
            cand = other - prefix[s_new]
            take = cand < run_min
            run_min[take] = cand[take]
            run_arg[take] = s_new
        row = prefix[t + 1].copy()
        if t >= d - 1:
            # Starting the whole sequence with this run (s = 0) competes
            # with continuing after an earlier run; prefer s = 0 on ties.
            use_mid = run_min < 0.0
            score = np.where(use_mid, run_min, 0.0)
            best_end[t] = row + score
            run_start[t] = np.where(use_mid, run_arg, 0)
        else:
            best_end[t] = row + run_min
            run_start[t] = run_arg

    labels = np.empty(n_frames, dtype=np.int32)
    k = int(np.argmin(best_end[n_frames - 1]))
    total = float(best_end[n_frames - 1, k])
    t = n_frames - 1
    while True:
        s = int(run_start[t, k])
        labels[s:t + 1] = k
        if s == 0:
            break
        prev = best_end[s - 1].copy()
        prev[k] = np.inf
        k = int(np.argmin(prev))
        t = s - 1
    return labels, total
