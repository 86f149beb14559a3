"""Online per-frame tracking loop.

Each step ingests one frame's detections, computes descriptors and
embeddings once per detection, scores them against tracks seen within the
look-back window, runs the configured matcher, and updates track states.
Tracks unseen for more than f_n frames retire permanently; ids are never
reused. Output depends only on frames already seen.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .embedding import EmbeddingModel
from .errors import SequencingError, ValidationError
from .geometry import BoundingBox
from .io import Detection, ResultEntry
from .matcher import Assignment, MatcherConfig, match_greedy, match_hungarian
from .scoring import ScoreParams, build_score_matrix, neutral_embeddings

DescriptorProvider = Callable[[int, Sequence[Detection]], np.ndarray]


@dataclass
class TrackState:
    """Matcher-facing state of one identity."""

    track_id: int
    last_box: BoundingBox
    last_frame: int
    last_embedding: np.ndarray
    last_descriptor: np.ndarray
    history: list[tuple[int, int]] = field(default_factory=list)

    def is_active(self, frame_index: int, f_n: int) -> bool:
        return frame_index - self.last_frame <= f_n


@dataclass(frozen=True)
class TrackerConfig:
    f_n: int = 1
    score_params: ScoreParams = field(default_factory=ScoreParams)
    matcher: MatcherConfig = field(default_factory=MatcherConfig)
    provider: str = "oracle"
    min_confidence: float = 0.0

    def __post_init__(self):
        if self.f_n < 1:
            raise ValidationError("f_n must be >= 1")
        if self.provider not in ("handcrafted", "oracle", "file"):
            raise ValidationError(f"unknown provider {self.provider!r}")
        # the tracker's look-back window is authoritative
        object.__setattr__(
            self, "matcher", MatcherConfig(f_n=self.f_n, algorithm=self.matcher.algorithm)
        )


@dataclass
class SequenceStats:
    frames: int = 0
    detections: int = 0
    tracks_created: int = 0
    hz: float = 0.0


class Tracker:
    """Sequential state machine over frames; one instance per sequence."""

    def __init__(
        self,
        config: TrackerConfig,
        model: EmbeddingModel,
        provider: DescriptorProvider,
        min_score: float = -math.inf,
    ):
        self.config = config
        self.model = model
        self.provider = provider
        self.min_score = min_score
        self.tracks: dict[int, TrackState] = {}
        self.next_id = 1
        self.last_frame_index: Optional[int] = None

    def active_ids(self, frame_index: int) -> set:
        return {
            tid
            for tid, t in self.tracks.items()
            if t.is_active(frame_index, self.config.f_n)
        }

    def step(
        self, frame_index: int, detections: Sequence[Detection]
    ) -> tuple[Assignment, list[ResultEntry]]:
        """Process one frame; returns the assignment and the output rows."""
        if self.last_frame_index is not None and frame_index <= self.last_frame_index:
            raise SequencingError(
                f"frame {frame_index} not after previous frame {self.last_frame_index}"
            )
        self.last_frame_index = frame_index
        for det in detections:
            if det.frame != frame_index:
                raise SequencingError(
                    f"detection frame {det.frame} fed to step for frame {frame_index}"
                )
        kept = [d for d in detections if d.confidence >= self.config.min_confidence]

        descriptors = self.provider(frame_index, kept)
        embeddings = neutral_embeddings(self.model, descriptors)
        matrix = build_score_matrix(
            list(self.tracks.values()),
            kept,
            descriptors,
            self.model,
            self.config.score_params,
            frame_index,
            self.config.f_n,
            det_embeddings=embeddings,
        )
        match = match_greedy if self.config.matcher.algorithm == "greedy" else match_hungarian
        assignment = match(
            matrix,
            self.active_ids(frame_index),
            known_tracks=set(self.tracks),
            next_track_id=self.next_id,
            min_score=self.min_score,
        )

        for track_id, det_index in assignment.pairs:
            track = self.tracks[track_id]
            track.last_box = kept[det_index].box
            track.last_frame = frame_index
            track.last_embedding = embeddings[det_index]
            track.last_descriptor = descriptors[det_index]
            track.history.append((frame_index, det_index))
        for det_index, new_id in assignment.new_track_ids:
            self.tracks[new_id] = TrackState(
                track_id=new_id,
                last_box=kept[det_index].box,
                last_frame=frame_index,
                last_embedding=embeddings[det_index],
                last_descriptor=descriptors[det_index],
                history=[(frame_index, det_index)],
            )
            self.next_id = max(self.next_id, new_id + 1)

        emitted = sorted(
            list(assignment.pairs) + [(tid, d) for d, tid in assignment.new_track_ids]
        )
        rows = [
            ResultEntry(frame_index, tid, kept[d].box, kept[d].confidence) for tid, d in emitted
        ]
        return assignment, rows


def run_sequence(
    config: TrackerConfig,
    model: EmbeddingModel,
    provider: DescriptorProvider,
    detections: Sequence[Detection],
    min_score: float = -math.inf,
) -> tuple[list[ResultEntry], SequenceStats]:
    """Track a frame-sorted detection stream end to end.

    Every frame index between the stream's first and last is stepped, so
    frames without detections age the tracks. Throughput (hz) is mean
    frames per wall-clock second.
    """
    last = None
    by_frame: dict[int, list[Detection]] = {}
    for det in detections:
        if last is not None and det.frame < last:
            raise SequencingError(f"detection stream not frame-sorted at frame {det.frame}")
        last = det.frame
        by_frame.setdefault(det.frame, []).append(det)

    tracker = Tracker(config, model, provider, min_score=min_score)
    results: list[ResultEntry] = []
    stats = SequenceStats()
    if not by_frame:
        return results, stats
    t0 = time.perf_counter()
    for frame in range(min(by_frame), max(by_frame) + 1):
        dets = by_frame.get(frame, [])
        _, rows = tracker.step(frame, dets)
        results.extend(rows)
        stats.frames += 1
        stats.detections += len(dets)
    elapsed = time.perf_counter() - t0
    stats.tracks_created = tracker.next_id - 1
    stats.hz = stats.frames / elapsed if elapsed > 0 else float("inf")
    return results, stats
