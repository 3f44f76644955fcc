"""Greedy agglomerative information-bottleneck clustering.

Segments start as singleton clusters; each step merges the pair whose
merge costs the least of the objective I(Y,C) - I(C,X)/beta. For hard
clusterings I(C,X) equals the cluster-prior entropy H(C), so the cost
of merging clusters (i, j) has the closed form

    (p_i + p_j) * (JS_pi(q_i, q_j) - H(pi) / beta)

with pi the normalized prior pair, q the cluster conditionals, and
JS_pi the pi-weighted Jensen-Shannon divergence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from .backend import entropy_rows, merge_cost_row
from .errors import StoppingUnsatisfiableError
from .gmm import PosteriorMatrix

#: Below this much total mutual information the input carries no
#: clustering evidence; NMI is defined as 1 and no merging happens.
ZERO_INFORMATION_TOL = 1e-12


@dataclass(frozen=True)
class StoppingRule:
    kind: str  # "nmi_threshold" | "cluster_count"
    nmi: float = 0.4
    count: int = 20

    def __post_init__(self):
        if self.kind not in ("nmi_threshold", "cluster_count"):
            raise ValueError(f"unknown stopping rule {self.kind!r}")

    @classmethod
    def nmi_threshold(cls, value: float = 0.4) -> "StoppingRule":
        return cls(kind="nmi_threshold", nmi=value)

    @classmethod
    def cluster_count(cls, count: int) -> "StoppingRule":
        return cls(kind="cluster_count", count=count)


@dataclass(frozen=True)
class TrajectoryPoint:
    n_clusters: int
    i_yc: float
    i_cx: float
    nmi: float
    merged_pair: tuple[int, int] | None = None
    delta: float | None = None


class IbState:
    """Clustering state: priors, conditionals, and the merge history.

    Cluster ids are segment indices; a merge keeps the smaller id alive.
    """

    def __init__(self, seg_rows: np.ndarray, p_x: np.ndarray, beta: float):
        n = seg_rows.shape[0]
        self.seg_rows = seg_rows
        self.p_x = p_x
        self.beta = beta
        joint = p_x[:, None] * seg_rows
        self.p_y = joint.sum(axis=0)
        self.i_xy = _joint_mutual_information(joint, p_x, self.p_y)
        self.zero_information = self.i_xy < ZERO_INFORMATION_TOL

        self.pc = p_x.copy()
        self.qc = seg_rows.copy()
        self.hq = entropy_rows(self.qc)
        self.alive = np.ones(n, dtype=bool)
        self.assignment = np.arange(n)
        self.members: list[list[int]] = [[i] for i in range(n)]
        self.i_yc = self.i_xy
        self.i_cx = float(-xlogy(p_x, p_x).sum())
        self.trajectory: list[TrajectoryPoint] = [
            TrajectoryPoint(n, self.i_yc, self.i_cx, 1.0)
        ]

    @property
    def n_segments(self) -> int:
        return len(self.assignment)

    @property
    def n_live(self) -> int:
        return int(self.alive.sum())

    @property
    def live_ids(self) -> np.ndarray:
        return np.flatnonzero(self.alive)

    @property
    def nmi(self) -> float:
        """I(Y,C)/I(X,Y), clamped to [0, 1]; 1 for zero-information input."""
        if self.zero_information:
            return 1.0
        return float(min(max(self.i_yc / self.i_xy, 0.0), 1.0))

    def cluster_priors(self) -> np.ndarray:
        return self.pc[self.alive]

    def cluster_conditionals(self) -> np.ndarray:
        return self.qc[self.alive]

    def labels(self) -> np.ndarray:
        """Segment labels renumbered 0..C-1 in order of first appearance."""
        remap: dict[int, int] = {}
        out = np.empty(self.n_segments, dtype=np.int64)
        for seg, cid in enumerate(self.assignment):
            out[seg] = remap.setdefault(int(cid), len(remap))
        return out

    def partition(self) -> set[frozenset[int]]:
        return {frozenset(m) for cid, m in enumerate(self.members)
                if self.alive[cid]}


def init_ib_state(seg_post: PosteriorMatrix, weighting: str = "uniform",
                  durations: np.ndarray | None = None,
                  beta: float = 10.0) -> IbState:
    """One singleton cluster per segment; segment priors uniform or
    proportional to duration."""
    if seg_post.level != "segment":
        raise ValueError("expected segment-level posteriors")
    if beta <= 0:
        raise ValueError("beta must be positive")
    rows = np.asarray(seg_post.rows, dtype=np.float64)
    n = rows.shape[0]
    if n < 2:
        raise ValueError("need at least 2 segments to cluster")
    if weighting == "uniform":
        p_x = np.full(n, 1.0 / n)
    elif weighting == "duration":
        if durations is None:
            raise ValueError("duration weighting needs segment durations")
        durations = np.asarray(durations, dtype=np.float64)
        p_x = durations / durations.sum()
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    return IbState(rows, p_x, float(beta))


def _pair_terms(state: IbState, i: int, j: int):
    """(p_sum, merged_row, js, h_pi) for a candidate merge."""
    p_i, p_j = state.pc[i], state.pc[j]
    p_sum = p_i + p_j
    w_i, w_j = p_i / p_sum, p_j / p_sum
    merged = w_i * state.qc[i] + w_j * state.qc[j]
    js = float(entropy_rows(merged) - w_i * state.hq[i] - w_j * state.hq[j])
    h_pi = float(-(xlogy(w_i, w_i) + xlogy(w_j, w_j)))
    return p_sum, merged, js, h_pi


def merge_delta(state: IbState, i: int, j: int) -> float:
    """Objective loss of merging live clusters i and j (may be negative
    when the compression term dominates)."""
    if i == j:
        raise ValueError("cannot merge a cluster with itself")
    if not (state.alive[i] and state.alive[j]):
        raise ValueError(f"cluster {i if not state.alive[i] else j} is dead")
    p_sum, _, js, h_pi = _pair_terms(state, i, j)
    return float(p_sum * (js - h_pi / state.beta))


def _delta_against(state: IbState, i: int, others: np.ndarray) -> np.ndarray:
    return merge_cost_row(state.qc[i], float(state.pc[i]), state.qc[others],
                          state.pc[others], float(state.hq[i]),
                          state.hq[others], state.beta)


def _apply_merge(state: IbState, i: int, j: int, delta: float) -> None:
    p_sum, merged, js, h_pi = _pair_terms(state, i, j)
    state.pc[i] = p_sum
    state.qc[i] = merged
    state.hq[i] = float(entropy_rows(merged))
    state.alive[j] = False
    state.members[i] = state.members[i] + state.members[j]
    state.members[j] = []
    state.assignment[state.assignment == j] = i
    state.i_yc -= p_sum * max(js, 0.0)
    state.i_cx -= p_sum * h_pi
    state.trajectory.append(
        TrajectoryPoint(state.n_live, state.i_yc, state.i_cx, state.nmi,
                        merged_pair=(i, j), delta=delta)
    )


def run_aib(state: IbState, stop: StoppingRule) -> IbState:
    """Merge greedily until the stopping rule fires; mutates the state.

    For an NMI threshold, the returned state is the last one whose NMI
    is still at or above the threshold (the crossing merge is not
    applied). Ties on the merge cost pick the lowest (i, j) pair.
    Zero-information input is returned unmerged.
    """
    if stop.kind == "cluster_count":
        if not 1 <= stop.count <= state.n_live:
            raise StoppingUnsatisfiableError(
                f"cannot stop at {stop.count} clusters with {state.n_live} live"
            )
    if state.zero_information:
        return state

    n = state.n_segments
    deltas = np.full((n, n), np.inf)
    live = state.live_ids
    for pos, i in enumerate(live[:-1]):
        others = live[pos + 1:]
        deltas[i, others] = _delta_against(state, int(i), others)

    while state.n_live > 1:
        if stop.kind == "cluster_count" and state.n_live <= stop.count:
            break
        flat = int(np.argmin(deltas))
        i, j = divmod(flat, n)
        delta = float(deltas[i, j])
        if stop.kind == "nmi_threshold":
            p_sum, _, js, _ = _pair_terms(state, i, j)
            i_yc_after = state.i_yc - p_sum * max(js, 0.0)
            if i_yc_after / state.i_xy < stop.nmi:
                break
        _apply_merge(state, i, j, delta)
        deltas[j, :] = np.inf
        deltas[:, j] = np.inf
        live = state.live_ids
        others = live[live != i]
        if others.size:
            row = _delta_against(state, i, others)
            lo = others < i
            deltas[others[lo], i] = row[lo]
            deltas[i, others[~lo]] = row[~lo]
    return state


def recompute_information(state: IbState) -> tuple[float, float]:
    """I(Y,C) and I(C,X) from scratch, for bookkeeping checks."""
    live = state.live_ids
    joint = np.stack([
        (state.p_x[state.members[c], None] * state.seg_rows[state.members[c]])
        .sum(axis=0)
        for c in live
    ])
    p_c = joint.sum(axis=1)
    i_yc = _joint_mutual_information(joint, p_c, state.p_y)
    i_cx = float(-xlogy(p_c, p_c).sum())
    return i_yc, i_cx


def _joint_mutual_information(joint: np.ndarray, p_rows: np.ndarray,
                              p_cols: np.ndarray) -> float:
    outer = p_rows[:, None] * p_cols[None, :]
    mask = joint > 0
    return float(np.sum(joint[mask] * np.log(joint[mask] / outer[mask])))


def write_trajectory_csv(state: IbState, path) -> None:
    """Merge trajectory as CSV (num_clusters, i_yc, i_cx, nmi, delta)."""
    with open(path, "w") as handle:
        handle.write("num_clusters,i_yc,i_cx,nmi,merged_i,merged_j,delta\n")
        for pt in state.trajectory:
            pair = pt.merged_pair or ("", "")
            delta = "" if pt.delta is None else repr(pt.delta)
            handle.write(
                f"{pt.n_clusters},{pt.i_yc!r},{pt.i_cx!r},{pt.nmi!r},"
                f"{pair[0]},{pair[1]},{delta}\n"
            )
