"""CLEAR-MOT evaluation and the pair-classification report.

Hypotheses are matched to ground truth frame by frame: correspondences from
earlier frames persist while both boxes are present and overlap at least the
IoU threshold; the remainder is matched by maximum total IoU (same Hungarian
routine as the matcher). MOTA = 1 - (FP+FN+IDs)/GT; MOTP is the mean IoU of
matched pairs (reported x100, the MOT16 convention). Trajectory coverage
uses the MOTChallenge thresholds: mostly tracked >= 80%, mostly lost < 20%.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import ValidationError
from .io import GroundTruthEntry, ResultEntry


@dataclass(frozen=True)
class MotReport:
    mota: float
    motp: float
    fp: int
    fn: int
    id_switches: int
    fragmentations: int
    mostly_tracked: float
    partially_tracked: float
    mostly_lost: float
    faf: float
    recall: float
    precision: float
    matches: int = 0
    total_gt: int = 0
    n_frames: int = 0
    n_trajectories: int = 0

    def to_json_line(self, **extra) -> str:
        payload = asdict(self)
        payload.update(extra)
        return json.dumps(payload, sort_keys=True)


@dataclass(frozen=True)
class PairReport:
    precision: float
    recall: float
    f1: float


def evaluate(
    results: Sequence[ResultEntry],
    ground_truth: Sequence[GroundTruthEntry],
    iou_threshold: float = 0.5,
) -> MotReport:
    """CLEAR-MOT metrics of a result set against ground truth."""
    if not 0 < iou_threshold < 1:
        raise ValidationError("iou_threshold must be in (0, 1)")
    seen = set()
    for r in results:
        key = (r.frame, r.track_id)
        if key in seen:
            raise ValidationError(f"duplicate (frame, id) in results: {key}")
        seen.add(key)

    gt_by_frame: dict[int, list[GroundTruthEntry]] = {}
    for e in ground_truth:
        gt_by_frame.setdefault(e.frame, []).append(e)
    res_by_frame: dict[int, list[ResultEntry]] = {}
    for r in results:
        res_by_frame.setdefault(r.frame, []).append(r)
    frames = sorted(set(gt_by_frame) | set(res_by_frame))

    fp = fn = switches = matches = 0
    motp_sum = 0.0
    # persistent gt id -> hyp id correspondence; also the switch reference
    mapping: dict[int, int] = {}
    presence: dict[int, int] = {}
    covered: dict[int, int] = {}
    flags: dict[int, list[bool]] = {}

    for frame in frames:
        gts = sorted(gt_by_frame.get(frame, []), key=lambda e: e.identity)
        hyps = sorted(res_by_frame.get(frame, []), key=lambda r: r.track_id)
        gt_ids = [e.identity for e in gts]
        hyp_ids = [r.track_id for r in hyps]
        for g in gt_ids:
            presence[g] = presence.get(g, 0) + 1

        overlaps = kernels.iou_matrix(
            np.array([e.box.as_ltwh() for e in gts], dtype=np.float64).reshape(len(gts), 4),
            np.array([r.box.as_ltwh() for r in hyps], dtype=np.float64).reshape(len(hyps), 4),
        )

        pair_of_gt: dict[int, int] = {}  # gt index -> hyp index this frame
        used_hyp = set()
        hyp_index = {h: j for j, h in enumerate(hyp_ids)}
        for i, g in enumerate(gt_ids):
            h = mapping.get(g)
            if h is None or h not in hyp_index:
                continue
            j = hyp_index[h]
            if j not in used_hyp and overlaps[i, j] >= iou_threshold:
                pair_of_gt[i] = j
                used_hyp.add(j)

        free_gt = [i for i in range(len(gt_ids)) if i not in pair_of_gt]
        free_hyp = [j for j in range(len(hyp_ids)) if j not in used_hyp]
        if free_gt and free_hyp:
            sub = overlaps[np.ix_(free_gt, free_hyp)]
            admissible = sub >= iou_threshold
            if admissible.any():
                size = max(len(free_gt), len(free_hyp))
                big = size * 1.0 + 1.0
                cost = np.full((size, size), big)
                cost[: len(free_gt), : len(free_hyp)] = np.where(admissible, 1.0 - sub, big)
                col_of_row = kernels.munkres(cost)
                for a, i in enumerate(free_gt):
                    b = int(col_of_row[a])
                    if b < len(free_hyp) and admissible[a, b]:
                        pair_of_gt[i] = free_hyp[b]
                        used_hyp.add(free_hyp[b])

        for i, j in pair_of_gt.items():
            g, h = gt_ids[i], hyp_ids[j]
            matches += 1
            motp_sum += float(overlaps[i, j])
            if g in mapping and mapping[g] != h:
                switches += 1
            mapping[g] = h
            covered[g] = covered.get(g, 0) + 1
        for i, g in enumerate(gt_ids):
            flags.setdefault(g, []).append(i in pair_of_gt)
        fn += len(gt_ids) - len(pair_of_gt)
        fp += len(hyp_ids) - len(pair_of_gt)

    total_gt = len(ground_truth)
    mota = 1.0 - (fp + fn + switches) / total_gt if total_gt else 1.0
    motp = motp_sum / matches if matches else 0.0
    mt = pt = ml = 0
    for g, n_present in presence.items():
        coverage = covered.get(g, 0) / n_present
        if coverage >= 0.8:
            mt += 1
        elif coverage < 0.2:
            ml += 1
        else:
            pt += 1
    n_traj = len(presence)
    frag = 0
    for series in flags.values():
        tracked = False
        gap = False
        for matched in series:
            if matched:
                if tracked and gap:
                    frag += 1
                tracked = True
                gap = False
            elif tracked:
                gap = True

    return MotReport(
        mota=mota,
        motp=motp,
        fp=fp,
        fn=fn,
        id_switches=switches,
        fragmentations=frag,
        mostly_tracked=mt / n_traj if n_traj else 0.0,
        partially_tracked=pt / n_traj if n_traj else 0.0,
        mostly_lost=ml / n_traj if n_traj else 0.0,
        faf=fp / len(frames) if frames else 0.0,
        recall=matches / total_gt if total_gt else 0.0,
        precision=matches / (matches + fp) if matches + fp else 0.0,
        matches=matches,
        total_gt=total_gt,
        n_frames=len(frames),
        n_trajectories=n_traj,
    )


def pair_classification(distances: Sequence[tuple[float, int]], threshold: float) -> PairReport:
    """Precision/recall/F1 of 'distance < threshold means matching pair'."""
    if threshold <= 0:
        raise ValidationError("threshold must be > 0")
    tp = fp = fn = 0
    for d, y in distances:
        predicted = d < threshold
        if predicted and y == 1:
            tp += 1
        elif predicted and y == 0:
            fp += 1
        elif not predicted and y == 1:
            fn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return PairReport(precision=precision, recall=recall, f1=f1)


def format_table(report: MotReport, hz: float | None = None, name: str = "seq") -> str:
    """Human-readable metric row in the benchmark-table column order."""
    header = (
        f"{'Name':<12} {'MOTA':>6} {'MOTP':>6} {'Hz':>8} {'FAF':>6} "
        f"{'MT':>6} {'ML':>6} {'FP':>7} {'FN':>7} {'IDs':>6} {'Frag':>6} "
        f"{'Rcll':>6} {'Prcn':>6}"
    )
    hz_text = f"{hz:.1f}" if hz is not None else "-"
    row = (
        f"{name:<12} {report.mota * 100:>6.1f} {report.motp * 100:>6.1f} {hz_text:>8} "
        f"{report.faf:>6.2f} {report.mostly_tracked * 100:>5.1f}% {report.mostly_lost * 100:>5.1f}% "
        f"{report.fp:>7} {report.fn:>7} {report.id_switches:>6} {report.fragmentations:>6} "
        f"{report.recall * 100:>6.1f} {report.precision * 100:>6.1f}"
    )
    return header + "\n" + row
