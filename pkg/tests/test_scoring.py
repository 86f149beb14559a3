import math

import numpy as np
import pytest

from simtrack.embedding import init_base_model, init_enhanced_model, oracle_descriptor
from simtrack.errors import ValidationError
from simtrack.geometry import BoundingBox
from simtrack.scoring import (
    ScoreMatrix,
    ScoreParams,
    ScoredPair,
    build_score_matrix,
    neutral_embeddings,
    s_arat,
    s_dist,
    s_iou,
    s_new,
    score_pair,
)
from simtrack.tracker import TrackState

P = ScoreParams()
B10 = BoundingBox(0, 0, 10, 10)


@pytest.mark.parametrize(
    ("d", "expected"),
    [
        (1.0, 0.0),  # log of 1 is zero
        (0.1, 0.8),  # log_0.1(0.1) = 1
        (0.0, 4.0),  # clamped at gamma=1e-5: 0.8 * 5
        (10.0, -0.8),  # no upper clamp, score goes negative
    ],
)
def test_s_dist(d, expected):
    assert s_dist(d, P) == pytest.approx(expected, abs=1e-6)


def test_s_iou():
    assert s_iou(B10, BoundingBox(50, 50, 10, 10)) == pytest.approx(1.0, abs=1e-6)
    assert s_iou(B10, B10) == pytest.approx(2.0, abs=1e-6)
    assert s_iou(B10, BoundingBox(5, 0, 10, 10)) == pytest.approx(4 / 3, abs=1e-6)


def test_s_arat():
    assert s_arat(B10, BoundingBox(3, 7, 10, 10), P) == pytest.approx(2.225541, abs=1e-6)
    assert s_arat(B10, BoundingBox(0, 0, 2, 10), P) == pytest.approx(1.0, abs=1e-6)  # ratio 0.2
    assert s_arat(B10, BoundingBox(0, 0, 5, 10), P) == pytest.approx(1.349859, abs=1e-6)


def test_s_new():
    assert s_new(B10, B10, 1.0, P) == pytest.approx(4.451082, abs=1e-6)
    far_equal = BoundingBox(100, 100, 10, 10)
    assert s_new(B10, far_equal, 0.1, P) == pytest.approx(3.025541, abs=1e-6)
    ratio_02 = BoundingBox(100, 100, 2, 10)  # disjoint, area ratio exactly delta
    assert s_new(B10, ratio_02, 1.0, P) == pytest.approx(1.0, abs=1e-6)


def test_score_pair_selects_by_net_kind():
    esnn = ScoreParams(net_kind="esnn")
    assert score_pair(B10, B10, 1.0, P) == pytest.approx(4.451082, abs=1e-6)
    assert score_pair(B10, B10, 1.0, esnn) == pytest.approx(0.0, abs=1e-6)
    assert score_pair(B10, BoundingBox(3, 2, 7, 9), 0.1, esnn) == pytest.approx(0.8, abs=1e-6)


@pytest.mark.parametrize("net", ["base", "esnn"])
def test_score_strictly_decreasing_in_distance(net):
    params = ScoreParams(net_kind=net)
    track, det = B10, BoundingBox(2, 1, 9, 11)
    ds = np.linspace(2e-5, 5.0, 40)
    scores = [score_pair(track, det, d, params) for d in ds]
    assert all(a > b for a, b in zip(scores, scores[1:]))


def test_s_new_non_decreasing_in_iou():
    det_boxes = [BoundingBox(shift, 0, 10, 10) for shift in (9, 6, 3, 0)]  # rising overlap
    scores = [s_new(B10, b, 0.5, P) for b in det_boxes]
    assert all(b >= a for a, b in zip(scores, scores[1:]))


def test_score_bounds():
    assert s_dist(0.0, P) <= 5 * P.alpha + 1e-12
    for boxes in ((B10, B10), (B10, BoundingBox(100, 0, 3, 3))):
        prod = s_iou(*boxes) * s_arat(*boxes, P)
        assert math.exp(-P.delta) < prod <= 2 * math.exp(1 - P.delta) + 1e-12


def test_score_params_validation():
    with pytest.raises(ValidationError):
        ScoreParams(alpha=0.0)
    with pytest.raises(ValidationError):
        ScoreParams(gamma=0.0)
    with pytest.raises(ValidationError):
        ScoreParams(delta=1.0)
    with pytest.raises(ValidationError):
        ScoreParams(net_kind="cnn")


def _track(model, track_id, box, frame, ident):
    desc = oracle_descriptor(ident)
    emb = neutral_embeddings(model, desc.reshape(1, -1))[0]
    return TrackState(track_id, box, frame, emb, desc)


def _dets_with_descriptors(boxes, idents, frame):
    from simtrack.io import Detection

    dets = [Detection(frame, b, 1.0) for b in boxes]
    descs = np.stack([oracle_descriptor(i) for i in idents])
    return dets, descs


@pytest.mark.parametrize("net", ["base", "esnn"])
def test_build_score_matrix_shapes(net):
    model = init_base_model(seed=0) if net == "base" else init_enhanced_model(seed=0)
    params = ScoreParams(net_kind=net)
    dets, descs = _dets_with_descriptors([B10, BoundingBox(30, 0, 10, 10), BoundingBox(0, 30, 8, 8)], [1, 2, 3], 5)

    empty = build_score_matrix([], dets, descs, model, params, 5, 1)
    assert len(empty) == 0 and empty.n_detections == 3

    tracks = [_track(model, 1, B10, 4, 1), _track(model, 2, BoundingBox(28, 0, 10, 10), 4, 2)]
    matrix = build_score_matrix(tracks, dets, descs, model, params, 5, 1)
    assert len(matrix) == 6  # full bipartite product
    assert matrix.n_detections == 3
    assert np.isfinite(matrix.scores).all()


def test_build_score_matrix_window_exclusion():
    model = init_base_model(seed=0)
    dets, descs = _dets_with_descriptors([B10], [1], 10)
    stale = [_track(model, 1, B10, 7, 1)]  # last seen 3 frames ago
    assert len(build_score_matrix(stale, dets, descs, model, P, 10, 2)) == 0
    assert len(build_score_matrix(stale, dets, descs, model, P, 10, 3)) == 1
    with pytest.raises(ValidationError):
        build_score_matrix(stale, dets, descs, model, P, 10, 0)


def test_build_score_matrix_ordering_and_gaps():
    model = init_base_model(seed=0)
    dets, descs = _dets_with_descriptors([B10, BoundingBox(5, 5, 10, 10)], [1, 2], 10)
    tracks = [
        _track(model, 7, B10, 9, 1),
        _track(model, 3, BoundingBox(2, 2, 10, 10), 8, 2),
        _track(model, 5, BoundingBox(4, 4, 10, 10), 9, 3),
    ]
    matrix = build_score_matrix(tracks, dets, descs, model, P, 10, 5)
    # rows ordered by (frame_gap, track_id, detection_index)
    assert list(matrix.track_ids) == [5, 5, 7, 7, 3, 3]
    assert list(matrix.frame_gaps) == [1, 1, 1, 1, 2, 2]
    assert list(matrix.det_indices) == [0, 1, 0, 1, 0, 1]


def test_base_scores_match_scalar_path():
    model = init_base_model(seed=0)
    dets, descs = _dets_with_descriptors([B10, BoundingBox(6, 2, 12, 9)], [1, 2], 3)
    tracks = [_track(model, 1, BoundingBox(1, 1, 10, 10), 2, 1)]
    matrix = build_score_matrix(tracks, dets, descs, model, P, 3, 1)
    det_embs = neutral_embeddings(model, descs)
    for k in range(len(matrix)):
        d = float(np.linalg.norm(tracks[0].last_embedding - det_embs[matrix.det_indices[k]]))
        expected = score_pair(tracks[0].last_box, dets[matrix.det_indices[k]].box, d, P)
        assert matrix.scores[k] == pytest.approx(expected, rel=1e-9)


def test_esnn_matrix_matches_per_pair_embed():
    from simtrack.embedding import NEUTRAL_GEO, embed
    from simtrack.geometry import area_ratio, iou

    model = init_enhanced_model(seed=3)
    params = ScoreParams(net_kind="esnn")
    dets, descs = _dets_with_descriptors([B10, BoundingBox(4, 0, 11, 10)], [1, 2], 8)
    track = _track(model, 2, BoundingBox(1, 0, 10, 10), 7, 1)
    matrix = build_score_matrix([track], dets, descs, model, params, 8, 1)
    for k in range(len(matrix)):
        det = dets[matrix.det_indices[k]]
        g = (iou(track.last_box, det.box), area_ratio(track.last_box, det.box))
        f_track = embed(model, track.last_descriptor, g)
        f_det = embed(model, descs[matrix.det_indices[k]], NEUTRAL_GEO)
        d = float(np.linalg.norm(f_track - f_det))
        assert matrix.scores[k] == pytest.approx(s_dist(d, params), rel=1e-9)


def test_from_pairs_rejects_duplicates():
    pair = ScoredPair(1, 0, 0.5, 1)
    with pytest.raises(ValidationError):
        ScoreMatrix.from_pairs([pair, ScoredPair(1, 0, 0.9, 1)], 1)
    with pytest.raises(ValidationError):
        ScoreMatrix.from_dense(np.array([[np.nan]]))


def test_from_dense_layout():
    matrix = ScoreMatrix.from_dense(np.array([[1.0, 2.0], [3.0, 4.0]]), track_ids=[10, 20])
    assert list(matrix.track_ids) == [10, 10, 20, 20]
    assert list(matrix.det_indices) == [0, 1, 0, 1]
    assert list(matrix.scores) == [1.0, 2.0, 3.0, 4.0]
    assert matrix.n_detections == 2
    assert [p.score for p in matrix.pairs] == [1.0, 2.0, 3.0, 4.0]
