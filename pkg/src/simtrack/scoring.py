"""Pairwise similarity scores between existing tracks and new detections.

    s_dist = alpha * log_0.1(max(gamma, d_siam))   (= -alpha*log10, documented
                                                     identity; no upper clamp)
    s_iou  = 1 + iou
    s_arat = exp(area_ratio - delta)
    s_new  = s_dist + s_iou * s_arat

The base network scores with s_new; the enhanced ("esnn") network scores with
s_dist alone, geometry being already folded into its embeddings.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from . import kernels
from .embedding import NEUTRAL_GEO, EmbeddingModel, embed_batch
from .errors import ValidationError
from .geometry import BoundingBox, area_ratio, iou

if TYPE_CHECKING:  # pragma: no cover
    from .io import Detection
    from .tracker import TrackState

NET_KINDS = ("base", "esnn")


@dataclass(frozen=True)
class ScoreParams:
    alpha: float = 0.8
    gamma: float = 1e-5
    delta: float = 0.2
    net_kind: str = "base"

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValidationError("alpha must be > 0")
        if not 0 < self.gamma < 1:
            raise ValidationError("gamma must be in (0, 1)")
        if not 0 <= self.delta < 1:
            raise ValidationError("delta must be in [0, 1)")
        if self.net_kind not in NET_KINDS:
            raise ValidationError(f"net_kind must be one of {NET_KINDS}, got {self.net_kind!r}")


@dataclass(frozen=True)
class ScoredPair:
    track_id: int
    detection_index: int
    score: float
    frame_gap: int


@dataclass
class ScoreMatrix:
    """Sparse pair list over (active tracks x current detections).

    Rows are stored in (frame_gap, track_id, detection_index) ascending
    order, which is exactly the tie-break the matcher's stable descending
    score sort must respect.
    """

    track_ids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    det_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    scores: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.float64))
    frame_gaps: np.ndarray = field(default_factory=lambda: np.ones(0, dtype=np.int64))
    n_detections: int = 0

    def __post_init__(self):
        if not (
            len(self.track_ids) == len(self.det_indices) == len(self.scores) == len(self.frame_gaps)
        ):
            raise ValidationError("score matrix arrays must have equal length")
        if len(self.scores) and not np.isfinite(self.scores).all():
            raise ValidationError("scores must be finite")

    def __len__(self) -> int:
        return len(self.scores)

    @property
    def pairs(self) -> list[ScoredPair]:
        return [
            ScoredPair(int(t), int(d), float(s), int(g))
            for t, d, s, g in zip(self.track_ids, self.det_indices, self.scores, self.frame_gaps)
        ]

    @classmethod
    def from_pairs(cls, pairs: Sequence[ScoredPair], n_detections: int) -> "ScoreMatrix":
        ordered = sorted(pairs, key=lambda p: (p.frame_gap, p.track_id, p.detection_index))
        if len({(p.track_id, p.detection_index) for p in ordered}) != len(ordered):
            raise ValidationError("duplicate (track, detection) pair in score matrix")
        return cls(
            track_ids=np.array([p.track_id for p in ordered], dtype=np.int64),
            det_indices=np.array([p.detection_index for p in ordered], dtype=np.int64),
            scores=np.array([p.score for p in ordered], dtype=np.float64),
            frame_gaps=np.array([p.frame_gap for p in ordered], dtype=np.int64),
            n_detections=n_detections,
        )

    @classmethod
    def from_dense(cls, scores: np.ndarray, track_ids: Optional[Sequence[int]] = None) -> "ScoreMatrix":
        """Dense (n_tracks, n_dets) score array to a full pair list."""
        s = np.asarray(scores, dtype=np.float64)
        n, m = s.shape
        ids = np.arange(n, dtype=np.int64) if track_ids is None else np.asarray(track_ids, np.int64)
        return cls(
            track_ids=np.repeat(ids, m),
            det_indices=np.tile(np.arange(m, dtype=np.int64), n),
            scores=s.ravel().copy(),
            frame_gaps=np.ones(n * m, dtype=np.int64),
            n_detections=m,
        )


# --------------------------------------------------------------------------
# scalar score functions
# --------------------------------------------------------------------------


def s_dist(d_siam: float, p: ScoreParams) -> float:
    """Appearance score; caps at 5*alpha once d_siam falls below gamma."""
    if d_siam < 0:
        raise ValidationError("d_siam must be >= 0")
    return -p.alpha * math.log10(max(p.gamma, d_siam)) + 0.0


def s_iou(a: BoundingBox, b: BoundingBox) -> float:
    return 1.0 + iou(a, b)


def s_arat(a: BoundingBox, b: BoundingBox, p: ScoreParams) -> float:
    return math.exp(area_ratio(a, b) - p.delta)


def s_new(a: BoundingBox, b: BoundingBox, d_siam: float, p: ScoreParams) -> float:
    return s_dist(d_siam, p) + s_iou(a, b) * s_arat(a, b, p)


def score_pair(track_box: BoundingBox, det_box: BoundingBox, d_siam: float, p: ScoreParams) -> float:
    if p.net_kind == "base":
        return s_new(track_box, det_box, d_siam, p)
    return s_dist(d_siam, p)


def s_dist_array(d_siam: np.ndarray, p: ScoreParams) -> np.ndarray:
    return -p.alpha * np.log10(np.maximum(p.gamma, d_siam))


# --------------------------------------------------------------------------
# score matrix construction
# --------------------------------------------------------------------------


def enhanced_pair_distances(
    model: EmbeddingModel,
    track_descriptors: np.ndarray,
    det_embeddings: np.ndarray,
    iou_mat: np.ndarray,
    arat_mat: np.ndarray,
) -> np.ndarray:
    """d_siam matrix for the enhanced head: each track descriptor is embedded
    at the pair's geometry against the detection's neutral-geometry embedding."""
    hid = model.hidden_dim
    h = np.tanh(track_descriptors @ model.w1.T + model.b1)
    w2_desc = model.w2[:, :hid]
    w2_geo = model.w2[:, hid:]
    trunk = h @ w2_desc.T + model.b2
    geos = np.stack([iou_mat, arat_mat], axis=-1)
    u = np.tanh(geos @ model.p.T + model.q)
    f_pairs = trunk[:, None, :] + u @ w2_geo.T
    diff = f_pairs - det_embeddings[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def neutral_embeddings(model: EmbeddingModel, descriptors: np.ndarray) -> np.ndarray:
    """Per-detection embeddings at neutral geometry (plain embeddings for
    the base head)."""
    descs = np.atleast_2d(np.asarray(descriptors, dtype=np.float64))
    if descs.shape[0] == 0:
        return np.zeros((0, model.output_dim))
    if model.head_kind == "enhanced":
        return embed_batch(model, descs, np.tile(NEUTRAL_GEO, (descs.shape[0], 1)))
    return embed_batch(model, descs)


def build_score_matrix(
    tracks: Sequence["TrackState"],
    detections: Sequence["Detection"],
    descriptors: np.ndarray,
    model: EmbeddingModel,
    params: ScoreParams,
    frame_index: int,
    f_n: int,
    det_embeddings: Optional[np.ndarray] = None,
) -> ScoreMatrix:
    """One scored pair per (active track, current detection).

    A track is admissible while frame_index - last_frame <= f_n. Detection
    embeddings are computed once each (or passed in by the caller); for the
    esnn net kind the track side is re-embedded at each pair's geometry.
    """
    if f_n < 1:
        raise ValidationError("f_n must be >= 1")
    active = [t for t in tracks if 1 <= frame_index - t.last_frame <= f_n]
    active.sort(key=lambda t: (frame_index - t.last_frame, t.track_id))
    n, m = len(active), len(detections)
    if n == 0 or m == 0:
        return ScoreMatrix(n_detections=m)

    track_boxes = np.array([t.last_box.as_ltwh() for t in active], dtype=np.float64)
    det_boxes = np.array([d.box.as_ltwh() for d in detections], dtype=np.float64)
    iou_mat = kernels.iou_matrix(track_boxes, det_boxes)
    arat_mat = kernels.area_ratio_matrix(track_boxes, det_boxes)

    det_embs = det_embeddings if det_embeddings is not None else neutral_embeddings(model, descriptors)
    if params.net_kind == "base":
        track_embs = np.stack([t.last_embedding for t in active])
        d_mat = kernels.pairwise_euclidean(track_embs, det_embs)
        score_mat = s_dist_array(d_mat, params) + (1.0 + iou_mat) * np.exp(
            arat_mat - params.delta
        )
    else:
        track_descs = np.stack([t.last_descriptor for t in active])
        d_mat = enhanced_pair_distances(model, track_descs, det_embs, iou_mat, arat_mat)
        score_mat = s_dist_array(d_mat, params)

    ids = np.array([t.track_id for t in active], dtype=np.int64)
    gaps = np.array([frame_index - t.last_frame for t in active], dtype=np.int64)
    return ScoreMatrix(
        track_ids=np.repeat(ids, m),
        det_indices=np.tile(np.arange(m, dtype=np.int64), n),
        scores=score_mat.ravel(),
        frame_gaps=np.repeat(gaps, m),
        n_detections=m,
    )
