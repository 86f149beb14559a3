"""Hot numeric kernels, each with a numba-jitted and a pure-numpy twin.

Both twins of a kernel produce the same results (bit-identical for the
integer/branch kernels, within float ulps for the distance kernels). The
active backend is resolved from the SIMTRACK_DISABLE_NUMBA environment
variable once per lookup and can be forced at runtime with set_backend()
or the use_backend() context manager; benchmarks/backend_bench.py compares
the two paths.
"""
from __future__ import annotations

import os
from contextlib import contextmanager

import numpy as np

try:
    import numba as nb

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    nb = None
    NUMBA_AVAILABLE = False

ENV_FLAG = "SIMTRACK_DISABLE_NUMBA"

_backend_override: str | None = None


def _env_disabled() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() in ("1", "true", "yes", "on")


def active_backend() -> str:
    """Name of the backend the next kernel call will use."""
    if _backend_override is not None:
        return _backend_override
    if NUMBA_AVAILABLE and not _env_disabled():
        return "numba"
    return "numpy"


def set_backend(name: str | None) -> None:
    """Force 'numba' or 'numpy'; None restores environment-based resolution."""
    global _backend_override
    if name not in (None, "numba", "numpy"):
        raise ValueError(f"unknown kernel backend {name!r}")
    if name == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("numba backend requested but numba is not importable")
    _backend_override = name


@contextmanager
def use_backend(name: str):
    prev = _backend_override
    set_backend(name)
    try:
        yield
    finally:
        set_backend(prev)


def set_thread_cap(n: int) -> None:
    """Cap numba's worker threads; no-op on the numpy backend."""
    if NUMBA_AVAILABLE and n >= 1:
        nb.set_num_threads(min(n, nb.config.NUMBA_NUM_THREADS))


# --------------------------------------------------------------------------
# pairwise box geometry (boxes are (left, top, width, height) rows)
# --------------------------------------------------------------------------


def _iou_matrix_np(a, b):
    # areas use the same corner arithmetic as the intersection, so the
    # iou of a box with itself is exactly 1.0
    ax2 = (a[:, 0] + a[:, 2])[:, None]
    ay2 = (a[:, 1] + a[:, 3])[:, None]
    bx2 = (b[:, 0] + b[:, 2])[None, :]
    by2 = (b[:, 1] + b[:, 3])[None, :]
    ax1 = a[:, 0][:, None]
    ay1 = a[:, 1][:, None]
    bx1 = b[:, 0][None, :]
    by1 = b[:, 1][None, :]
    iw = np.minimum(ax2, bx2) - np.maximum(ax1, bx1)
    ih = np.minimum(ay2, by2) - np.maximum(ay1, by1)
    inter = np.where((iw > 0.0) & (ih > 0.0), iw * ih, 0.0)
    area_a = (ax2 - ax1) * (ay2 - ay1)
    area_b = (bx2 - bx1) * (by2 - by1)
    return inter / (area_a + area_b - inter)


def _iou_matrix_loop(a, b):
    n = a.shape[0]
    m = b.shape[0]
    out = np.empty((n, m), dtype=np.float64)
    for i in range(n):
        ax1 = a[i, 0]
        ay1 = a[i, 1]
        ax2 = a[i, 0] + a[i, 2]
        ay2 = a[i, 1] + a[i, 3]
        area_a = (ax2 - ax1) * (ay2 - ay1)
        for j in range(m):
            bx2 = b[j, 0] + b[j, 2]
            by2 = b[j, 1] + b[j, 3]
            iw = min(ax2, bx2) - max(ax1, b[j, 0])
            ih = min(ay2, by2) - max(ay1, b[j, 1])
            inter = iw * ih if (iw > 0.0 and ih > 0.0) else 0.0
            area_b = (bx2 - b[j, 0]) * (by2 - b[j, 1])
            out[i, j] = inter / (area_a + area_b - inter)
    return out


def _area_ratio_matrix_np(a, b):
    area_a = (a[:, 2] * a[:, 3])[:, None]
    area_b = (b[:, 2] * b[:, 3])[None, :]
    return np.minimum(area_a, area_b) / np.maximum(area_a, area_b)


def _area_ratio_matrix_loop(a, b):
    n = a.shape[0]
    m = b.shape[0]
    out = np.empty((n, m), dtype=np.float64)
    for i in range(n):
        area_a = a[i, 2] * a[i, 3]
        for j in range(m):
            area_b = b[j, 2] * b[j, 3]
            out[i, j] = min(area_a, area_b) / max(area_a, area_b)
    return out


def _pairwise_euclidean_np(x, y):
    diff = x[:, None, :] - y[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def _pairwise_euclidean_loop(x, y):
    n = x.shape[0]
    m = y.shape[0]
    d = x.shape[1]
    out = np.empty((n, m), dtype=np.float64)
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for k in range(d):
                t = x[i, k] - y[j, k]
                acc += t * t
            out[i, j] = np.sqrt(acc)
    return out


# --------------------------------------------------------------------------
# stable argsort of uint64 keys (LSD radix in the jitted twin)
# --------------------------------------------------------------------------


def _stable_argsort_u64_np(keys):
    return np.argsort(keys, kind="stable").astype(np.int64)


def _stable_argsort_u64_loop(keys):
    n = keys.shape[0]
    work = keys.copy()
    idx = np.arange(n, dtype=np.int64)
    tmp_keys = np.empty(n, dtype=np.uint64)
    tmp_idx = np.empty(n, dtype=np.int64)
    for shift in range(0, 64, 8):
        counts = np.zeros(257, dtype=np.int64)
        for i in range(n):
            counts[((work[i] >> shift) & np.uint64(0xFF)) + np.uint64(1)] += 1
        for d in range(1, 257):
            counts[d] += counts[d - 1]
        for i in range(n):
            d = (work[i] >> shift) & np.uint64(0xFF)
            pos = counts[d]
            counts[d] = pos + 1
            tmp_keys[pos] = work[i]
            tmp_idx[pos] = idx[i]
        work, tmp_keys = tmp_keys, work
        idx, tmp_idx = tmp_idx, idx
    return idx


# --------------------------------------------------------------------------
# greedy score-sorted assignment scan
# --------------------------------------------------------------------------
# Visits pairs in the given order. A pair (track e, detection t) is skipped
# when e is ineligible or t already claimed; assigned when e is free; when e
# is busy at a lower recorded score, e switches to t and its abandoned
# detection is re-homed once to the best remaining free track.


def _greedy_scan_loop(track_of, det_of, scores, order, eligible, n_tracks, n_dets):
    track_det = np.full(n_tracks, -1, dtype=np.int64)
    det_track = np.full(n_dets, -1, dtype=np.int64)
    track_score = np.zeros(n_tracks, dtype=np.float64)
    n_pairs = order.shape[0]
    for k in range(n_pairs):
        p = order[k]
        e = track_of[p]
        t = det_of[p]
        if not eligible[e]:
            continue
        if det_track[t] != -1:
            continue
        if track_det[e] == -1:
            track_det[e] = t
            det_track[t] = e
            track_score[e] = scores[p]
        elif scores[p] > track_score[e]:
            t_prev = track_det[e]
            det_track[t_prev] = -1
            track_det[e] = t
            det_track[t] = e
            track_score[e] = scores[p]
            for k2 in range(n_pairs):
                p2 = order[k2]
                if det_of[p2] == t_prev:
                    e2 = track_of[p2]
                    if eligible[e2] and track_det[e2] == -1:
                        track_det[e2] = t_prev
                        det_track[t_prev] = e2
                        track_score[e2] = scores[p2]
                        break
    return track_det, det_track


# --------------------------------------------------------------------------
# Hungarian assignment (classic Munkres star/prime on a square cost matrix)
# --------------------------------------------------------------------------


def _munkres_loop(cost_in):
    n = cost_in.shape[0]
    cost = cost_in.copy()
    starred = np.zeros((n, n), dtype=np.bool_)
    primed = np.zeros((n, n), dtype=np.bool_)
    row_cov = np.zeros(n, dtype=np.bool_)
    col_cov = np.zeros(n, dtype=np.bool_)

    for i in range(n):
        mn = cost[i, 0]
        for j in range(1, n):
            if cost[i, j] < mn:
                mn = cost[i, j]
        for j in range(n):
            cost[i, j] -= mn

    for i in range(n):
        for j in range(n):
            if cost[i, j] == 0.0 and not row_cov[i] and not col_cov[j]:
                starred[i, j] = True
                row_cov[i] = True
                col_cov[j] = True
    for i in range(n):
        row_cov[i] = False
        col_cov[i] = False

    path_row = np.empty(2 * n + 2, dtype=np.int64)
    path_col = np.empty(2 * n + 2, dtype=np.int64)

    while True:
        covered = 0
        for j in range(n):
            col_cov[j] = False
            for i in range(n):
                if starred[i, j]:
                    col_cov[j] = True
                    break
            if col_cov[j]:
                covered += 1
        if covered == n:
            break

        while True:
            zr = -1
            zc = -1
            for i in range(n):
                if row_cov[i]:
                    continue
                for j in range(n):
                    if not col_cov[j] and cost[i, j] == 0.0:
                        zr = i
                        zc = j
                        break
                if zr >= 0:
                    break
            if zr < 0:
                mn = np.inf
                for i in range(n):
                    if row_cov[i]:
                        continue
                    for j in range(n):
                        if not col_cov[j] and cost[i, j] < mn:
                            mn = cost[i, j]
                for i in range(n):
                    for j in range(n):
                        if row_cov[i]:
                            cost[i, j] += mn
                        if not col_cov[j]:
                            cost[i, j] -= mn
                continue
            primed[zr, zc] = True
            sc = -1
            for j in range(n):
                if starred[zr, j]:
                    sc = j
                    break
            if sc < 0:
                cnt = 0
                path_row[0] = zr
                path_col[0] = zc
                while True:
                    sr = -1
                    for i in range(n):
                        if starred[i, path_col[cnt]]:
                            sr = i
                            break
                    if sr < 0:
                        break
                    cnt += 1
                    path_row[cnt] = sr
                    path_col[cnt] = path_col[cnt - 1]
                    pc = -1
                    for j in range(n):
                        if primed[path_row[cnt], j]:
                            pc = j
                            break
                    cnt += 1
                    path_row[cnt] = path_row[cnt - 1]
                    path_col[cnt] = pc
                for k in range(cnt + 1):
                    starred[path_row[k], path_col[k]] = not starred[path_row[k], path_col[k]]
                for i in range(n):
                    row_cov[i] = False
                    col_cov[i] = False
                    for j in range(n):
                        primed[i, j] = False
                break
            row_cov[zr] = True
            col_cov[sc] = False

    col_of_row = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        for j in range(n):
            if starred[i, j]:
                col_of_row[i] = j
                break
    return col_of_row


if NUMBA_AVAILABLE:
    _iou_matrix_nb = nb.njit(cache=True)(_iou_matrix_loop)
    _area_ratio_matrix_nb = nb.njit(cache=True)(_area_ratio_matrix_loop)
    _pairwise_euclidean_nb = nb.njit(cache=True)(_pairwise_euclidean_loop)
    _stable_argsort_u64_nb = nb.njit(cache=True)(_stable_argsort_u64_loop)
    _greedy_scan_nb = nb.njit(cache=True)(_greedy_scan_loop)
    _munkres_nb = nb.njit(cache=True)(_munkres_loop)
else:  # pragma: no cover
    _iou_matrix_nb = None
    _area_ratio_matrix_nb = None
    _pairwise_euclidean_nb = None
    _stable_argsort_u64_nb = None
    _greedy_scan_nb = None
    _munkres_nb = None

_IMPLS = {
    "iou_matrix": {"numpy": _iou_matrix_np, "numba": _iou_matrix_nb},
    "area_ratio_matrix": {"numpy": _area_ratio_matrix_np, "numba": _area_ratio_matrix_nb},
    "pairwise_euclidean": {"numpy": _pairwise_euclidean_np, "numba": _pairwise_euclidean_nb},
    "stable_argsort_u64": {"numpy": _stable_argsort_u64_np, "numba": _stable_argsort_u64_nb},
    "greedy_scan": {"numpy": _greedy_scan_loop, "numba": _greedy_scan_nb},
    "munkres": {"numpy": _munkres_loop, "numba": _munkres_nb},
}


def _impl(name):
    return _IMPLS[name][active_backend()]


def _as_f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def iou_matrix(boxes_a: np.ndarray, boxes_b: np.ndarray) -> np.ndarray:
    """Pairwise IoU of (left, top, w, h) box rows; shape (len(a), len(b))."""
    a = _as_f64(np.atleast_2d(boxes_a))
    b = _as_f64(np.atleast_2d(boxes_b))
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((a.shape[0], b.shape[0]), dtype=np.float64)
    return _impl("iou_matrix")(a, b)


def area_ratio_matrix(boxes_a: np.ndarray, boxes_b: np.ndarray) -> np.ndarray:
    """Pairwise min/max area ratio of (left, top, w, h) box rows."""
    a = _as_f64(np.atleast_2d(boxes_a))
    b = _as_f64(np.atleast_2d(boxes_b))
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((a.shape[0], b.shape[0]), dtype=np.float64)
    return _impl("area_ratio_matrix")(a, b)


def pairwise_euclidean(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Matrix of L2 distances between rows of x and rows of y."""
    xa = _as_f64(np.atleast_2d(x))
    ya = _as_f64(np.atleast_2d(y))
    if xa.shape[1] != ya.shape[1]:
        raise ValueError(f"dimension mismatch: {xa.shape[1]} vs {ya.shape[1]}")
    if xa.shape[0] == 0 or ya.shape[0] == 0:
        return np.zeros((xa.shape[0], ya.shape[0]), dtype=np.float64)
    return _impl("pairwise_euclidean")(xa, ya)


def sortable_key_desc(scores: np.ndarray) -> np.ndarray:
    """uint64 keys whose ascending stable order is descending score order.

    IEEE doubles map monotonically to uint64 by flipping the sign bit for
    positives and all bits for negatives; complementing reverses the order
    while a stable sort preserves the caller's tie-break arrangement.
    """
    s = _as_f64(scores)
    bits = s.view(np.uint64).copy()
    neg = s < 0.0
    bits[neg] = ~bits[neg]
    bits[~neg] |= np.uint64(1) << np.uint64(63)
    return ~bits


def stable_argsort_u64(keys: np.ndarray) -> np.ndarray:
    """Stable ascending argsort of uint64 keys."""
    k = np.ascontiguousarray(keys, dtype=np.uint64)
    if k.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    return _impl("stable_argsort_u64")(k)


def greedy_scan(
    track_of: np.ndarray,
    det_of: np.ndarray,
    scores: np.ndarray,
    order: np.ndarray,
    eligible: np.ndarray,
    n_tracks: int,
    n_dets: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Run the greedy assignment scan over pairs in the given visit order.

    Returns (track_det, det_track) index arrays with -1 for unassigned.
    """
    track_det = np.full(n_tracks, -1, dtype=np.int64)
    det_track = np.full(n_dets, -1, dtype=np.int64)
    if order.shape[0] == 0:
        return track_det, det_track
    return _impl("greedy_scan")(
        np.ascontiguousarray(track_of, dtype=np.int64),
        np.ascontiguousarray(det_of, dtype=np.int64),
        _as_f64(scores),
        np.ascontiguousarray(order, dtype=np.int64),
        np.ascontiguousarray(eligible, dtype=np.bool_),
        n_tracks,
        n_dets,
    )


def munkres(cost: np.ndarray) -> np.ndarray:
    """Minimum-cost assignment on a square matrix; returns col_of_row."""
    c = _as_f64(cost)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError(f"munkres needs a square matrix, got {c.shape}")
    n = c.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    if not np.isfinite(c).all():
        raise ValueError("munkres cost matrix must be finite")
    return _impl("munkres")(c)


def warmup() -> None:
    """Trigger jit compilation of all kernels on tiny inputs."""
    if active_backend() != "numba":
        return
    boxes = np.array([[0.0, 0.0, 1.0, 1.0], [0.5, 0.5, 1.0, 1.0]])
    iou_matrix(boxes, boxes)
    area_ratio_matrix(boxes, boxes)
    pairwise_euclidean(boxes[:, :2], boxes[:, :2])
    keys = sortable_key_desc(np.array([0.3, 0.1, 0.2]))
    order = stable_argsort_u64(keys)
    greedy_scan(
        np.array([0, 0, 1], dtype=np.int64),
        np.array([0, 1, 0], dtype=np.int64),
        np.array([0.3, 0.1, 0.2]),
        order,
        np.ones(2, dtype=np.bool_),
        2,
        2,
    )
    munkres(np.array([[1.0, 2.0], [2.0, 1.0]]))
