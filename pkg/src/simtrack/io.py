"""MOTChallenge and KITTI file parsing, result writing, descriptor tables,
and a synthetic sequence generator for tests.

MOT rows are comma separated: frame,id,left,top,width,height,conf[,x,y,z].
Result floats are written with fixed 2-decimal formatting so write/parse
round-trips are bit-stable; parsers accept any decimal width. KITTI label
rows are space separated with corner boxes, converted to (left, top, w, h);
only Car and Pedestrian rows are kept. Malformed rows are collected into a
warnings list with their line numbers; more than 10% malformed rows is a
format error.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, TextIO, Union

import numpy as np

from .embedding import PatchStats, oracle_descriptor
from .errors import FormatError, ValidationError
from .geometry import BoundingBox

KITTI_KEPT_CLASSES = ("Car", "Pedestrian")


@dataclass
class Detection:
    """One detector output box within a frame (frame indices start at 1)."""

    frame: int
    box: BoundingBox
    confidence: float
    descriptor: Optional[np.ndarray] = None
    patch: Optional[PatchStats] = None

    def __post_init__(self):
        if self.frame < 1:
            raise ValidationError(f"detection frame must be >= 1, got {self.frame}")


@dataclass(frozen=True)
class GroundTruthEntry:
    frame: int
    identity: int
    box: BoundingBox
    class_label: Union[int, str, None] = None
    visibility: Optional[float] = None
    flag: Optional[int] = None
    truncated: Optional[float] = None
    occluded: Optional[int] = None


@dataclass(frozen=True)
class ResultEntry:
    frame: int
    track_id: int
    box: BoundingBox
    confidence: float = 1.0


ParseWarnings = list[tuple[int, str]]


def _open_lines(source):
    if hasattr(source, "read"):
        return source.read().splitlines(), getattr(source, "name", "<stream>")
    with open(source, "r", encoding="utf-8") as fh:
        return fh.read().splitlines(), str(source)


def _check_malformed(name: str, parsed: int, warnings: ParseWarnings) -> None:
    total = parsed + len(warnings)
    if total and len(warnings) / total > 0.10:
        raise FormatError(
            f"{name}: {len(warnings)} of {total} rows malformed "
            f"(first: line {warnings[0][0]}: {warnings[0][1]})"
        )


def parse_mot(source, kind: str = "detections"):
    """Parse a MOT-format file into detections, ground truth, or results.

    Returns (entries, warnings); entries are frame-sorted, stable within a
    frame. kind is one of 'detections', 'ground_truth', 'results'.
    """
    if kind not in ("detections", "ground_truth", "results"):
        raise ValidationError(f"unknown MOT parse kind {kind!r}")
    lines, name = _open_lines(source)
    entries = []
    warnings: ParseWarnings = []
    seen_gt = set()
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) < 6:
            warnings.append((line_no, f"expected at least 6 fields, got {len(fields)}"))
            continue
        try:
            frame = int(float(fields[0]))
            ident = int(float(fields[1]))
            x, y, w, h = (float(v) for v in fields[2:6])
            conf = float(fields[6]) if len(fields) > 6 else 1.0
        except ValueError as exc:
            warnings.append((line_no, f"unparseable number ({exc})"))
            continue
        if w <= 0 or h <= 0:
            warnings.append((line_no, f"non-positive box extent w={w} h={h}"))
            continue
        if frame < 1:
            warnings.append((line_no, f"frame must be >= 1, got {frame}"))
            continue
        box = BoundingBox(x, y, w, h)
        if kind == "detections":
            entries.append(Detection(frame, box, conf))
        elif kind == "results":
            if ident < 0:
                warnings.append((line_no, f"negative track id {ident} in results"))
                continue
            entries.append(ResultEntry(frame, ident, box, conf))
        else:
            if ident < 0:
                warnings.append((line_no, f"negative identity {ident} in ground truth"))
                continue
            if (frame, ident) in seen_gt:
                warnings.append((line_no, f"duplicate (frame, identity) ({frame}, {ident})"))
                continue
            seen_gt.add((frame, ident))
            class_label = int(float(fields[7])) if len(fields) > 7 else None
            visibility = float(fields[8]) if len(fields) > 8 else None
            entries.append(
                GroundTruthEntry(
                    frame,
                    ident,
                    box,
                    class_label=class_label,
                    visibility=visibility,
                    flag=int(float(fields[6])) if len(fields) > 6 else None,
                )
            )
    _check_malformed(name, len(entries), warnings)
    entries.sort(key=lambda e: e.frame)
    return entries, warnings


def write_mot(results: Sequence[ResultEntry], dest) -> None:
    """Write result rows as frame,id,left,top,w,h,conf,-1,-1,-1 (2 decimals)."""
    _write_lines(
        dest,
        (
            f"{r.frame},{r.track_id},{r.box.x:.2f},{r.box.y:.2f},"
            f"{r.box.w:.2f},{r.box.h:.2f},{r.confidence:.2f},-1,-1,-1"
            for r in results
        ),
    )


def write_mot_detections(detections: Sequence[Detection], dest) -> None:
    _write_lines(
        dest,
        (
            f"{d.frame},-1,{d.box.x:.2f},{d.box.y:.2f},"
            f"{d.box.w:.2f},{d.box.h:.2f},{d.confidence:.2f},-1,-1,-1"
            for d in detections
        ),
    )


def write_mot_ground_truth(entries: Sequence[GroundTruthEntry], dest) -> None:
    _write_lines(
        dest,
        (
            f"{e.frame},{e.identity},{e.box.x:.2f},{e.box.y:.2f},"
            f"{e.box.w:.2f},{e.box.h:.2f},{e.flag if e.flag is not None else 1},"
            f"{e.class_label if e.class_label is not None else 1},"
            f"{e.visibility if e.visibility is not None else 1.0:.2f}"
            for e in entries
        ),
    )


def _write_lines(dest, lines) -> None:
    if hasattr(dest, "write"):
        for line in lines:
            dest.write(line + "\n")
    else:
        with open(dest, "w", encoding="utf-8") as fh:
            for line in lines:
                fh.write(line + "\n")


def parse_kitti(source):
    """Parse KITTI tracking labels into ground-truth entries.

    Corner boxes become (left, top, w, h); classes other than Car and
    Pedestrian are filtered out; 3D fields are parsed and discarded.
    """
    lines, name = _open_lines(source)
    entries = []
    warnings: ParseWarnings = []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) < 10:
            warnings.append((line_no, f"expected at least 10 fields, got {len(fields)}"))
            continue
        try:
            frame = int(float(fields[0]))
            ident = int(float(fields[1]))
            kind = fields[2]
            truncated = float(fields[3])
            occluded = int(float(fields[4]))
            left, top, right, bottom = (float(v) for v in fields[6:10])
        except ValueError as exc:
            warnings.append((line_no, f"unparseable number ({exc})"))
            continue
        if kind not in KITTI_KEPT_CLASSES:
            continue
        if right - left <= 0 or bottom - top <= 0:
            warnings.append((line_no, f"non-positive box extent {left},{top},{right},{bottom}"))
            continue
        entries.append(
            GroundTruthEntry(
                frame,
                ident,
                BoundingBox.from_corners(left, top, right, bottom),
                class_label=kind,
                truncated=truncated,
                occluded=occluded,
            )
        )
    _check_malformed(name, len(entries), warnings)
    entries.sort(key=lambda e: e.frame)
    return entries, warnings


# --------------------------------------------------------------------------
# precomputed descriptor tables
# --------------------------------------------------------------------------


def write_descriptors(table: dict[tuple[int, int], np.ndarray], dest) -> None:
    """CSV keyed by (frame, detection ordinal) with full-precision values."""
    keys = sorted(table)
    dim = len(table[keys[0]]) if keys else 0
    header = "frame,ordinal," + ",".join(f"d{i}" for i in range(dim))
    lines = [header]
    for frame, ordinal in keys:
        vec = table[(frame, ordinal)]
        lines.append(f"{frame},{ordinal}," + ",".join(repr(float(v)) for v in vec))
    _write_lines(dest, lines)


def read_descriptors(source) -> dict[tuple[int, int], np.ndarray]:
    lines, name = _open_lines(source)
    if not lines:
        return {}
    if not lines[0].startswith("frame,ordinal"):
        raise FormatError(f"{name}: missing descriptor CSV header")
    table = {}
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        try:
            key = (int(fields[0]), int(fields[1]))
            table[key] = np.array([float(v) for v in fields[2:]], dtype=np.float64)
        except (ValueError, IndexError) as exc:
            raise FormatError(f"{name}:{line_no}: bad descriptor row ({exc})") from exc
    return table


# --------------------------------------------------------------------------
# synthetic sequences
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    n_identities: int = 5
    n_frames: int = 100
    image_size: tuple[float, float] = (1920.0, 1080.0)
    box_size_range: tuple[float, float] = (40.0, 80.0)
    speed: float = 3.0
    motion_jitter: float = 0.0
    descriptor_noise: float = 0.0
    dropout: float = 0.0
    spurious_rate: float = 0.0

    def __post_init__(self):
        if self.n_identities < 1 or self.n_frames < 0:
            raise ValidationError("need at least one identity and non-negative frames")
        if not 0 <= self.dropout < 1:
            raise ValidationError("dropout must be in [0, 1)")
        if self.spurious_rate < 0:
            raise ValidationError("spurious_rate must be >= 0")


@dataclass
class SyntheticSequence:
    detections: list[Detection] = field(default_factory=list)
    ground_truth: list[GroundTruthEntry] = field(default_factory=list)
    descriptors: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)


def _round2(v: float) -> float:
    return round(v, 2)


def generate_synthetic(spec: SyntheticSpec, seed: int = 42) -> SyntheticSequence:
    """Deterministic synthetic sequence: bouncing constant-velocity boxes,
    optional detection dropout, spurious detections, and descriptor noise.

    All emitted coordinates are rounded to 2 decimals so MOT file round
    trips are lossless; ground truth and detections share the same boxes.
    """
    rng = np.random.default_rng(seed)
    img_w, img_h = spec.image_size
    lo, hi = spec.box_size_range
    sizes = rng.uniform(lo, hi, size=(spec.n_identities, 2))
    pos = np.column_stack(
        [
            rng.uniform(0, img_w - sizes[:, 0]),
            rng.uniform(0, img_h - sizes[:, 1]),
        ]
    )
    angle = rng.uniform(0, 2 * np.pi, size=spec.n_identities)
    vel = spec.speed * np.column_stack([np.cos(angle), np.sin(angle)])

    seq = SyntheticSequence()
    clutter_id = -1
    for frame in range(1, spec.n_frames + 1):
        ordinal = 0
        for ident in range(spec.n_identities):
            w, h = sizes[ident]
            box = BoundingBox(_round2(pos[ident, 0]), _round2(pos[ident, 1]), _round2(w), _round2(h))
            seq.ground_truth.append(GroundTruthEntry(frame, ident + 1, box, class_label=1, flag=1))
            if rng.random() >= spec.dropout:
                det = Detection(frame, box, 1.0)
                desc = oracle_descriptor(ident + 1, spec.descriptor_noise, rng)
                det.descriptor = desc
                seq.detections.append(det)
                seq.descriptors[(frame, ordinal)] = desc
                ordinal += 1
        for _ in range(rng.poisson(spec.spurious_rate)):
            w = _round2(rng.uniform(lo, hi))
            h = _round2(rng.uniform(lo, hi))
            box = BoundingBox(
                _round2(rng.uniform(0, img_w - w)), _round2(rng.uniform(0, img_h - h)), w, h
            )
            det = Detection(frame, box, _round2(rng.uniform(0.3, 0.9)))
            desc = oracle_descriptor(clutter_id, spec.descriptor_noise, rng)
            det.descriptor = desc
            seq.detections.append(det)
            seq.descriptors[(frame, ordinal)] = desc
            ordinal += 1
            clutter_id -= 1
        # advance motion, reflecting at the image borders
        for ident in range(spec.n_identities):
            if spec.motion_jitter > 0:
                pos[ident] += vel[ident] + spec.motion_jitter * rng.standard_normal(2)
            else:
                pos[ident] += vel[ident]
            for axis, limit in ((0, img_w - sizes[ident, 0]), (1, img_h - sizes[ident, 1])):
                if pos[ident, axis] < 0:
                    pos[ident, axis] = -pos[ident, axis]
                    vel[ident, axis] = -vel[ident, axis]
                elif pos[ident, axis] > limit:
                    pos[ident, axis] = 2 * limit - pos[ident, axis]
                    vel[ident, axis] = -vel[ident, axis]
    return seq
