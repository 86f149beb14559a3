"""Track-to-detection assignment: greedy score-sorted matching with one-step
conflict switching, plus a Hungarian baseline for quality/runtime comparison.

The greedy matcher visits pairs in descending score (ties broken by lower
frame gap, then lower track id, then lower detection index), assigns when
both sides are free, switches an already-busy track to a strictly better
pair at most one level deep (re-homing the abandoned detection to its best
remaining free track), and hands fresh ids to leftover detections.

The Hungarian baseline maximizes total score at maximum cardinality over
the admissible pairs, via the classic Munkres kernel on a padded square
cost matrix.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import kernels
from .errors import InputIntegrityError, ValidationError
from .scoring import ScoreMatrix


@dataclass
class Assignment:
    """Result of one matching round.

    Every current detection appears exactly once across pairs and
    new_track_ids; every track id at most once in pairs.
    """

    pairs: set[tuple[int, int]] = field(default_factory=set)
    new_track_ids: list[tuple[int, int]] = field(default_factory=list)

    def detection_of(self, track_id: int) -> Optional[int]:
        for t, d in self.pairs:
            if t == track_id:
                return d
        return None

    def check_partition(self, n_detections: int) -> None:
        tracks = [t for t, _ in self.pairs]
        if len(tracks) != len(set(tracks)):
            raise ValidationError("a track id appears in more than one pair")
        dets = sorted([d for _, d in self.pairs] + [d for d, _ in self.new_track_ids])
        if dets != list(range(n_detections)):
            raise ValidationError("detections are not partitioned across pairs and new ids")


@dataclass(frozen=True)
class MatcherConfig:
    f_n: int = 1
    algorithm: str = "greedy"

    def __post_init__(self):
        if self.f_n < 1:
            raise ValidationError("f_n must be >= 1")
        if self.algorithm not in ("greedy", "hungarian"):
            raise ValidationError(f"unknown matcher algorithm {self.algorithm!r}")


def _prepare(matrix: ScoreMatrix, active: set, known_tracks: Optional[set]):
    known = set(active) if known_tracks is None else set(known_tracks) | set(active)
    present = set(np.unique(matrix.track_ids).tolist())
    unknown = present - known
    if unknown:
        raise InputIntegrityError(f"score matrix references unknown track ids {sorted(unknown)}")
    return known


def _active_mask(track_ids: np.ndarray, active: set) -> np.ndarray:
    if not active:
        return np.zeros(len(track_ids), dtype=bool)
    return np.isin(track_ids, np.fromiter(active, dtype=np.int64))


def _fresh_ids(
    matched_dets: Iterable[int], n_detections: int, next_track_id: Optional[int], known: set
) -> list[tuple[int, int]]:
    if next_track_id is None:
        next_track_id = max(known) + 1 if known else 1
    taken = set(matched_dets)
    out = []
    for d in range(n_detections):
        if d not in taken:
            out.append((d, next_track_id))
            next_track_id += 1
    return out


def match_greedy(
    matrix: ScoreMatrix,
    active: set,
    known_tracks: Optional[set] = None,
    next_track_id: Optional[int] = None,
    min_score: float = -math.inf,
) -> Assignment:
    """Algorithm-1 style greedy assignment over the score matrix.

    Pairs whose track is known but outside the active window are skipped;
    unknown track ids raise. min_score (default disabled) gates which pairs
    may match at all.
    """
    known = _prepare(matrix, active, known_tracks)
    n_dets = matrix.n_detections
    if len(matrix) == 0:
        return Assignment(new_track_ids=_fresh_ids([], n_dets, next_track_id, known))

    keep = matrix.scores >= min_score
    track_ids = matrix.track_ids[keep]
    det_idx = matrix.det_indices[keep]
    scores = matrix.scores[keep]

    uniq, compact = np.unique(track_ids, return_inverse=True) if len(track_ids) else (
        np.zeros(0, dtype=np.int64),
        np.zeros(0, dtype=np.int64),
    )
    eligible = _active_mask(uniq, active)

    order = kernels.stable_argsort_u64(kernels.sortable_key_desc(scores))
    track_det, det_track = kernels.greedy_scan(
        compact, det_idx, scores, order, eligible, len(uniq), n_dets
    )

    pairs = {(int(uniq[det_track[d]]), d) for d in range(n_dets) if det_track[d] != -1}
    matched = [d for _, d in pairs]
    return Assignment(pairs=pairs, new_track_ids=_fresh_ids(matched, n_dets, next_track_id, known))


def match_hungarian(
    matrix: ScoreMatrix,
    active: set,
    known_tracks: Optional[set] = None,
    next_track_id: Optional[int] = None,
    min_score: float = -math.inf,
) -> Assignment:
    """Maximum-total-score assignment at maximum cardinality.

    Missing and gated pairs are forbidden; the score matrix is negated into
    costs and padded square for the Munkres kernel, with forbidden and dummy
    cells priced above any full admissible assignment so cardinality wins
    first and total score second.
    """
    known = _prepare(matrix, active, known_tracks)
    n_dets = matrix.n_detections
    if len(matrix):
        keep = (matrix.scores >= min_score) & _active_mask(matrix.track_ids, active)
    else:
        keep = np.zeros(0, dtype=bool)
    if not keep.any():
        return Assignment(new_track_ids=_fresh_ids([], n_dets, next_track_id, known))

    track_ids = matrix.track_ids[keep]
    det_idx = matrix.det_indices[keep]
    scores = matrix.scores[keep]
    uniq, rows = np.unique(track_ids, return_inverse=True)
    n = len(uniq)
    size = max(n, n_dets)

    hi = float(scores.max())
    lo = float(scores.min())
    big = size * (hi - lo) + 1.0
    cost = np.full((size, size), big, dtype=np.float64)
    admissible = np.zeros((size, size), dtype=bool)
    cost[rows, det_idx] = hi - scores
    admissible[rows, det_idx] = True

    col_of_row = kernels.munkres(cost)
    pairs = set()
    for i in range(n):
        j = int(col_of_row[i])
        if j < n_dets and admissible[i, j]:
            pairs.add((int(uniq[i]), j))
    matched = [d for _, d in pairs]
    return Assignment(pairs=pairs, new_track_ids=_fresh_ids(matched, n_dets, next_track_id, known))


def assignment_total_score(matrix: ScoreMatrix, assignment: Assignment) -> float:
    """Exact (fsum) total score of the assigned pairs."""
    table = {
        (int(t), int(d)): float(s)
        for t, d, s in zip(matrix.track_ids, matrix.det_indices, matrix.scores)
    }
    return math.fsum(table[p] for p in sorted(assignment.pairs))


# --------------------------------------------------------------------------
# benchmark harness
# --------------------------------------------------------------------------

BENCH_CSV_COLUMNS = ("n", "trial", "algorithm", "nanoseconds")


@dataclass
class BenchReport:
    rows: list[tuple[int, int, str, int]]

    def medians(self) -> dict[tuple[int, str], float]:
        acc: dict[tuple[int, str], list[int]] = {}
        for n, _, alg, ns in self.rows:
            acc.setdefault((n, alg), []).append(ns)
        return {key: float(np.median(v)) for key, v in acc.items()}

    def sizes(self) -> list[int]:
        return sorted({n for n, _, _, _ in self.rows})

    def ratios(self) -> dict[int, float]:
        med = self.medians()
        return {n: med[(n, "hungarian")] / med[(n, "greedy")] for n in self.sizes()}

    def slopes(self) -> dict[str, float]:
        """Least-squares log-log slope of median time vs n per algorithm."""
        med = self.medians()
        ns = self.sizes()
        out = {}
        for alg in ("greedy", "hungarian"):
            x = np.log([float(n) for n in ns])
            y = np.log([med[(n, alg)] for n in ns])
            out[alg] = float(np.polyfit(x, y, 1)[0])
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(BENCH_CSV_COLUMNS)
            writer.writerows(self.rows)

    @classmethod
    def from_csv(cls, path) -> "BenchReport":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != BENCH_CSV_COLUMNS:
                raise ValidationError(f"unexpected bench CSV header {header}")
            rows = [(int(n), int(t), alg, int(ns)) for n, t, alg, ns in reader]
        return cls(rows)

    def summary_text(self) -> str:
        med = self.medians()
        lines = [f"{'n':>6} {'greedy_ms':>12} {'hungarian_ms':>14} {'ratio':>8}"]
        for n, ratio in self.ratios().items():
            lines.append(
                f"{n:>6} {med[(n, 'greedy')] / 1e6:>12.3f} "
                f"{med[(n, 'hungarian')] / 1e6:>14.3f} {ratio:>8.2f}"
            )
        slopes = self.slopes()
        lines.append(
            f"log-log slopes: greedy={slopes['greedy']:.2f} "
            f"hungarian={slopes['hungarian']:.2f} "
            f"(gap {slopes['hungarian'] - slopes['greedy']:.2f})"
        )
        return "\n".join(lines)


def bench_matchers(
    n_range: Sequence[int], trials: int, seed: int = 42, backend: Optional[str] = None
) -> BenchReport:
    """Time both matchers on dense uniform random n x n score matrices."""
    if list(n_range) != sorted(n_range):
        raise ValidationError("n_range must be sorted ascending")
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    rows = []
    matchers = {"greedy": match_greedy, "hungarian": match_hungarian}
    ctx = kernels.use_backend(backend) if backend else None
    if ctx:
        ctx.__enter__()
    try:
        kernels.warmup()
        for n in n_range:
            for trial in range(trials):
                matrix = ScoreMatrix.from_dense(rng.random((n, n)))
                active = set(range(n))
                for alg, fn in matchers.items():
                    t0 = time.perf_counter_ns()
                    fn(matrix, active)
                    rows.append((n, trial, alg, time.perf_counter_ns() - t0))
    finally:
        if ctx:
            ctx.__exit__(None, None, None)
    return BenchReport(rows)
