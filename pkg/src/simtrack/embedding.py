"""Appearance embeddings and the contrastive-loss trainer.

A detection's appearance is summarized by a fixed-width descriptor (48 values:
per-channel intensity histograms plus block-wise gradient-orientation
histograms, or a seeded per-identity oracle vector for testing). A small
two-layer head maps descriptors into a low-dimensional L2 space where
Euclidean distance encodes similarity:

    base head      descriptor(K) -> tanh hidden(H) -> embedding(2)
    enhanced head  descriptor(K) -> tanh hidden(H) --+--> embedding(4)
                   pair geometry (iou, area_ratio) --+   (tanh up-sampling of
                                                          the geometry to width
                                                          H, concatenated
                                                          before the final layer)

Both sides of a pair are evaluated by the same shared-weight model. For the
enhanced head the pair's geometry is injected on one side while the other is
evaluated at the neutral geometry (1, 1), so geometric disparity moves the
pair distance even for identical descriptors.

Training minimizes the contrastive loss over pair batches

    L = 1/(2N) * sum( y * d^2 + (1 - y) * max(m - d, 0)^2 )

with plain SGD and exact analytic gradients.
"""
from __future__ import annotations

import copy
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import (
    ConfigError,
    DegenerateTrainingWarning,
    DimensionMismatchError,
    FormatError,
    ValidationError,
)

DESCRIPTOR_DIM = 48
INTENSITY_BINS = 8
ORIENTATION_BINS = 8
ORIENTATION_BLOCKS = 3

BASE_OUTPUT_DIM = 2
ENHANCED_OUTPUT_DIM = 4
DEFAULT_HIDDEN_DIM = 16
DEFAULT_BASE_MARGIN = 3.0
DEFAULT_ENHANCED_MARGIN = 0.5

NEUTRAL_GEO = (1.0, 1.0)


# --------------------------------------------------------------------------
# descriptors
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PatchStats:
    """Pixel statistics of a detection crop: (H, W, 3) float array in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        p = self.pixels
        if p.ndim != 3 or p.shape[2] != 3:
            raise ValidationError(f"patch must be (H, W, 3), got {p.shape}")
        if p.shape[0] < 2 or p.shape[1] < 2:
            raise ValidationError("patch must be at least 2x2 pixels")
        if not np.isfinite(p).all():
            raise ValidationError("patch contains non-finite values")

    @classmethod
    def from_uint8(cls, pixels: np.ndarray) -> "PatchStats":
        return cls(pixels.astype(np.float64) / 255.0)


def describe(patch_stats: PatchStats) -> np.ndarray:
    """Handcrafted 48-d descriptor from patch statistics.

    Concatenates one 8-bin intensity histogram per channel with one 8-bin
    gradient-orientation histogram per horizontal third of the patch, each
    block L1-normalized.
    """
    px = np.clip(patch_stats.pixels, 0.0, 1.0)
    parts = []
    for c in range(3):
        hist, _ = np.histogram(px[:, :, c], bins=INTENSITY_BINS, range=(0.0, 1.0))
        parts.append(hist / hist.sum())
    gray = px.mean(axis=2)
    gy, gx = np.gradient(gray)
    mag = np.hypot(gx, gy)
    ang = np.arctan2(gy, gx)
    bins = np.clip(
        ((ang + np.pi) / (2.0 * np.pi) * ORIENTATION_BINS).astype(np.int64),
        0,
        ORIENTATION_BINS - 1,
    )
    for rows_b, rows_m in zip(
        np.array_split(bins, ORIENTATION_BLOCKS, axis=0),
        np.array_split(mag, ORIENTATION_BLOCKS, axis=0),
    ):
        hist = np.bincount(rows_b.ravel(), weights=rows_m.ravel(), minlength=ORIENTATION_BINS)
        total = hist.sum()
        parts.append(hist / total if total > 0 else hist)
    return np.concatenate(parts)


def oracle_descriptor(
    identity: int,
    noise: float = 0.0,
    rng: Optional[np.random.Generator] = None,
    dim: int = DESCRIPTOR_DIM,
) -> np.ndarray:
    """Seeded per-identity random descriptor plus isotropic noise.

    The identity alone fixes the base vector; noise draws come from `rng`
    so repeated observations of one identity differ by roughly `noise`.
    """
    if noise < 0:
        raise ValidationError("noise must be >= 0")
    seed = 2 * abs(int(identity)) + (1 if identity < 0 else 0)
    base = np.random.default_rng(seed).standard_normal(dim)
    if noise > 0:
        if rng is None:
            rng = np.random.default_rng()
        base = base + noise * rng.standard_normal(dim)
    return base


# --------------------------------------------------------------------------
# model
# --------------------------------------------------------------------------


@dataclass
class EmbeddingModel:
    """Two-layer affine head with tanh hidden activation.

    head_kind 'base' maps descriptors to 2-d embeddings; 'enhanced' also
    up-samples a (iou, area_ratio) pair to the hidden width via (p, q) and
    maps the concatenation to 4-d embeddings.
    """

    head_kind: str
    margin: float
    seed: int
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    p: Optional[np.ndarray] = None
    q: Optional[np.ndarray] = None
    frozen_base: bool = False

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def output_dim(self) -> int:
        return self.w2.shape[0]

    def copy(self) -> "EmbeddingModel":
        return copy.deepcopy(self)

    def param_names(self) -> tuple[str, ...]:
        if self.head_kind == "enhanced":
            return ("w1", "b1", "p", "q", "w2", "b2")
        return ("w1", "b1", "w2", "b2")


def _uniform_init(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_base_model(
    input_dim: int = DESCRIPTOR_DIM,
    hidden_dim: int = DEFAULT_HIDDEN_DIM,
    margin: float = DEFAULT_BASE_MARGIN,
    seed: int = 42,
) -> EmbeddingModel:
    if margin <= 0:
        raise ConfigError("margin must be > 0")
    rng = np.random.default_rng(seed)
    return EmbeddingModel(
        head_kind="base",
        margin=margin,
        seed=seed,
        w1=_uniform_init(rng, (hidden_dim, input_dim), input_dim),
        b1=_uniform_init(rng, (hidden_dim,), input_dim),
        w2=_uniform_init(rng, (BASE_OUTPUT_DIM, hidden_dim), hidden_dim),
        b2=_uniform_init(rng, (BASE_OUTPUT_DIM,), hidden_dim),
    )


def init_enhanced_model(
    input_dim: int = DESCRIPTOR_DIM,
    hidden_dim: int = DEFAULT_HIDDEN_DIM,
    margin: float = DEFAULT_ENHANCED_MARGIN,
    seed: int = 42,
) -> EmbeddingModel:
    if margin <= 0:
        raise ConfigError("margin must be > 0")
    rng = np.random.default_rng(seed)
    return EmbeddingModel(
        head_kind="enhanced",
        margin=margin,
        seed=seed,
        w1=_uniform_init(rng, (hidden_dim, input_dim), input_dim),
        b1=_uniform_init(rng, (hidden_dim,), input_dim),
        p=_uniform_init(rng, (hidden_dim, 2), 2),
        q=_uniform_init(rng, (hidden_dim,), 2),
        w2=_uniform_init(rng, (ENHANCED_OUTPUT_DIM, 2 * hidden_dim), 2 * hidden_dim),
        b2=_uniform_init(rng, (ENHANCED_OUTPUT_DIM,), 2 * hidden_dim),
    )


def enhance_from_base(
    base: EmbeddingModel,
    margin: float = DEFAULT_ENHANCED_MARGIN,
    seed: Optional[int] = None,
) -> EmbeddingModel:
    """Extend a trained base head: the trunk transfers, the final layer is
    new, initialized from the base output layer where shapes overlap."""
    if base.head_kind != "base":
        raise ConfigError("enhance_from_base needs a base-head model")
    seed = base.seed if seed is None else seed
    model = init_enhanced_model(base.input_dim, base.hidden_dim, margin, seed)
    model.w1 = base.w1.copy()
    model.b1 = base.b1.copy()
    model.w2[:BASE_OUTPUT_DIM, : base.hidden_dim] = base.w2
    model.b2[:BASE_OUTPUT_DIM] = base.b2
    return model


def freeze_base(model: EmbeddingModel) -> EmbeddingModel:
    """Lock the shared trunk (w1, b1) against training updates."""
    if model.head_kind != "enhanced":
        raise ConfigError("freeze_base applies to the enhanced head only")
    out = model.copy()
    out.frozen_base = True
    return out


def unfreeze_base(model: EmbeddingModel) -> EmbeddingModel:
    if model.head_kind != "enhanced":
        raise ConfigError("unfreeze_base applies to the enhanced head only")
    out = model.copy()
    out.frozen_base = False
    return out


def _as_geo_array(geo, n_rows: int) -> np.ndarray:
    g = np.asarray(geo, dtype=np.float64)
    if g.ndim == 1:
        g = np.broadcast_to(g, (n_rows, 2)).copy()
    if g.shape != (n_rows, 2):
        raise ValidationError(f"geometry features must be (iou, area_ratio) pairs, got {g.shape}")
    return g


def _forward(model: EmbeddingModel, descs: np.ndarray, geos: Optional[np.ndarray]):
    z = descs @ model.w1.T + model.b1
    h = np.tanh(z)
    if model.head_kind == "enhanced":
        u = np.tanh(geos @ model.p.T + model.q)
        c = np.concatenate([h, u], axis=1)
    else:
        c = h
    f = c @ model.w2.T + model.b2
    return f, h, c


def embed_batch(
    model: EmbeddingModel, descriptors: np.ndarray, geos: Optional[np.ndarray] = None
) -> np.ndarray:
    descs = np.atleast_2d(np.asarray(descriptors, dtype=np.float64))
    if descs.shape[1] != model.input_dim:
        raise DimensionMismatchError(
            f"descriptor width {descs.shape[1]} != model input {model.input_dim}"
        )
    if model.head_kind == "enhanced":
        if geos is None:
            raise ConfigError("enhanced head requires geometry features")
        geos = _as_geo_array(geos, descs.shape[0])
    elif geos is not None:
        raise ConfigError("base head takes no geometry features")
    f, _, _ = _forward(model, descs, geos)
    return f


def embed(model: EmbeddingModel, descriptor: np.ndarray, geo=None) -> np.ndarray:
    """Deterministic forward pass of one descriptor (plus pair geometry for
    the enhanced head)."""
    geos = None if geo is None else np.asarray(geo, dtype=np.float64).reshape(1, 2)
    return embed_batch(model, np.asarray(descriptor, dtype=np.float64).reshape(1, -1), geos)[0]


# --------------------------------------------------------------------------
# distance and loss
# --------------------------------------------------------------------------


def euclidean_distance(f: np.ndarray, g: np.ndarray) -> float:
    """L2 distance between two embeddings of the same head."""
    fa = np.asarray(f, dtype=np.float64)
    ga = np.asarray(g, dtype=np.float64)
    if fa.shape != ga.shape:
        raise DimensionMismatchError(
            f"embedding shapes differ: {fa.shape} vs {ga.shape} (incompatible heads?)"
        )
    return float(np.linalg.norm(fa - ga))


def contrastive_loss(batch: Sequence[tuple[float, int]], margin: float) -> float:
    """Mean contrastive loss 1/(2N) * sum(y*d^2 + (1-y)*max(m-d, 0)^2)."""
    if len(batch) == 0:
        raise ValidationError("contrastive loss of an empty batch is undefined")
    if margin <= 0:
        raise ValidationError("margin must be > 0")
    total = 0.0
    for d, y in batch:
        if d < 0:
            raise ValidationError("distances must be >= 0")
        if y == 1:
            total += d * d
        elif y == 0:
            slack = margin - d
            if slack > 0:
                total += slack * slack
        else:
            raise ValidationError(f"pair label must be 0 or 1, got {y!r}")
    return total / (2.0 * len(batch))


# --------------------------------------------------------------------------
# pair samples and training
# --------------------------------------------------------------------------


@dataclass
class PairSample:
    """One labeled pair; geo_* are (iou, area_ratio) features for the
    enhanced head (geo_b defaults to the neutral geometry)."""

    a: np.ndarray
    b: np.ndarray
    label: int
    geo_a: Optional[tuple[float, float]] = None
    geo_b: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValidationError(f"pair label must be 0 or 1, got {self.label!r}")


@dataclass
class TrainConfig:
    epochs: int
    batch_size: int = 128
    lr: float = 0.01
    margin: Optional[float] = None
    seed: int = 42
    freeze_epochs: int = 0
    lr_decay_epochs: tuple[int, ...] = field(default_factory=tuple)
    lr_decay: float = 0.1


def _stack_pairs(model: EmbeddingModel, samples: Sequence[PairSample]):
    a = np.stack([np.asarray(s.a, dtype=np.float64) for s in samples])
    b = np.stack([np.asarray(s.b, dtype=np.float64) for s in samples])
    y = np.array([s.label for s in samples], dtype=np.float64)
    if model.head_kind == "enhanced":
        ga = np.array(
            [s.geo_a if s.geo_a is not None else NEUTRAL_GEO for s in samples], dtype=np.float64
        )
        gb = np.array(
            [s.geo_b if s.geo_b is not None else NEUTRAL_GEO for s in samples], dtype=np.float64
        )
    else:
        ga = gb = None
    return a, ga, b, gb, y


def pair_distances(model: EmbeddingModel, samples: Sequence[PairSample]) -> np.ndarray:
    a, ga, b, gb, _ = _stack_pairs(model, samples)
    f_a, _, _ = _forward(model, a, ga)
    f_b, _, _ = _forward(model, b, gb)
    return np.sqrt(np.sum((f_a - f_b) ** 2, axis=1))


def batch_loss(
    model: EmbeddingModel, samples: Sequence[PairSample], margin: Optional[float] = None
) -> float:
    m = model.margin if margin is None else margin
    d = pair_distances(model, samples)
    y = np.array([s.label for s in samples])
    return contrastive_loss(list(zip(d.tolist(), y.tolist())), m)


def batch_gradients(
    model: EmbeddingModel, samples: Sequence[PairSample], margin: Optional[float] = None
) -> dict[str, np.ndarray]:
    """Exact analytic gradients of the batch contrastive loss."""
    m = model.margin if margin is None else margin
    a, ga, b, gb, y = _stack_pairs(model, samples)
    n = len(samples)
    f_a, h_a, c_a = _forward(model, a, ga)
    f_b, h_b, c_b = _forward(model, b, gb)
    diff = f_a - f_b
    en = np.sqrt(np.sum(diff * diff, axis=1))

    # dL/d(en): y=1 -> en/N ; y=0 -> -max(m-en, 0)/N, then chain through
    # d(en)/d(f_a) = diff/en. The matching branch simplifies exactly to
    # diff/N; the non-matching branch is 0 at en = 0 (subgradient).
    coeff = np.where(y == 1.0, 1.0 / n, 0.0)
    slack = np.maximum(m - en, 0.0)
    safe = np.where(en > 0.0, en, 1.0)
    coeff = np.where(y == 0.0, -slack / (n * safe), coeff)
    coeff = np.where((y == 0.0) & (en == 0.0), 0.0, coeff)
    delta_a = coeff[:, None] * diff

    grads = {name: np.zeros_like(getattr(model, name)) for name in model.param_names()}
    hid = model.hidden_dim
    for delta_f, h, c, desc, geo in (
        (delta_a, h_a, c_a, a, ga),
        (-delta_a, h_b, c_b, b, gb),
    ):
        grads["w2"] += delta_f.T @ c
        grads["b2"] += delta_f.sum(axis=0)
        delta_c = delta_f @ model.w2
        delta_h = delta_c[:, :hid]
        delta_z = delta_h * (1.0 - h * h)
        grads["w1"] += delta_z.T @ desc
        grads["b1"] += delta_z.sum(axis=0)
        if model.head_kind == "enhanced":
            u = c[:, hid:]
            delta_gz = delta_c[:, hid:] * (1.0 - u * u)
            grads["p"] += delta_gz.T @ geo
            grads["q"] += delta_gz.sum(axis=0)
    return grads


def train(
    model: EmbeddingModel, samples: Sequence[PairSample], config: TrainConfig
) -> tuple[EmbeddingModel, list[float]]:
    """SGD over pair mini-batches; returns (updated model, per-epoch loss).

    The recorded history holds the full-set loss at the end of each epoch.
    Zero epochs return an unchanged copy and an empty history.
    """
    out = model.copy()
    if config.margin is not None:
        if config.margin <= 0:
            raise ConfigError("margin must be > 0")
        out.margin = config.margin
    if config.epochs == 0:
        return out, []
    if len(samples) == 0:
        raise ValidationError("cannot train on an empty sample set")
    if config.freeze_epochs > 0 and out.head_kind != "enhanced":
        raise ConfigError("freeze schedule applies to the enhanced head only")
    labels = {s.label for s in samples}
    if len(labels) == 1:
        warnings.warn(
            "training set contains a single pair label; training degenerates",
            DegenerateTrainingWarning,
            stacklevel=2,
        )
    rng = np.random.default_rng(config.seed)
    history = []
    lr = config.lr
    for epoch in range(config.epochs):
        if epoch in config.lr_decay_epochs:
            lr *= config.lr_decay
        frozen = out.frozen_base or epoch < config.freeze_epochs
        order = rng.permutation(len(samples))
        for start in range(0, len(samples), config.batch_size):
            batch = [samples[i] for i in order[start : start + config.batch_size]]
            grads = batch_gradients(out, batch)
            for name in out.param_names():
                if frozen and name in ("w1", "b1"):
                    continue
                param = getattr(out, name)
                param -= lr * grads[name]
        history.append(batch_loss(out, samples))
    return out, history


# --------------------------------------------------------------------------
# synthetic pair sets (trainer CLI and tests)
# --------------------------------------------------------------------------


def make_synthetic_pairs(
    n_identities: int,
    pairs_per_class: int,
    noise: float,
    rng: np.random.Generator,
    enhanced: bool = False,
    dim: int = DESCRIPTOR_DIM,
    confusers: int = 0,
) -> list[PairSample]:
    """Labeled pair set over seeded oracle identities.

    Matching pairs draw two noisy views of one identity with near-neutral
    geometry; non-matching pairs mix identities with low-overlap geometry.
    `confusers` adds non-matching pairs whose descriptors are identical but
    whose boxes are (nearly) disjoint, separable only through geometry.
    """
    if n_identities < 2:
        raise ValidationError("need at least two identities")
    samples = []

    def geo(match: bool):
        if not enhanced:
            return None, None
        if match:
            # consecutive-frame same-identity boxes overlap heavily
            g = (rng.uniform(0.85, 1.0), rng.uniform(0.92, 1.0))
        else:
            g = (rng.uniform(0.0, 0.25), rng.uniform(0.3, 1.0))
        return g, NEUTRAL_GEO

    for _ in range(pairs_per_class):
        ident = int(rng.integers(n_identities))
        ga, gb = geo(match=True)
        samples.append(
            PairSample(
                oracle_descriptor(ident, noise, rng, dim),
                oracle_descriptor(ident, noise, rng, dim),
                1,
                ga,
                gb,
            )
        )
        i, j = rng.choice(n_identities, size=2, replace=False)
        ga, gb = geo(match=False)
        samples.append(
            PairSample(
                oracle_descriptor(int(i), noise, rng, dim),
                oracle_descriptor(int(j), noise, rng, dim),
                0,
                ga,
                gb,
            )
        )
    for _ in range(confusers):
        ident = int(rng.integers(n_identities))
        d = oracle_descriptor(ident, 0.0, rng, dim)
        ga = (rng.uniform(0.0, 0.04), rng.uniform(0.8, 1.0)) if enhanced else None
        gb = NEUTRAL_GEO if enhanced else None
        samples.append(PairSample(d, d.copy(), 0, ga, gb))
    return samples


# --------------------------------------------------------------------------
# serialization ("ESNN-MODEL v1")
# --------------------------------------------------------------------------

MODEL_MAGIC = "ESNN-MODEL v1"


def save_model(model: EmbeddingModel, path) -> None:
    """Write the model as documented text: magic, scalar fields, then each
    tensor in declared order with full-precision floats."""
    lines = [
        MODEL_MAGIC,
        f"head {model.head_kind}",
        f"input_dim {model.input_dim}",
        f"hidden_dim {model.hidden_dim}",
        f"output_dim {model.output_dim}",
        f"margin {float(model.margin)!r}",
        f"seed {model.seed}",
        f"frozen_base {int(model.frozen_base)}",
    ]
    for name in model.param_names():
        t = np.atleast_2d(getattr(model, name))
        lines.append(f"tensor {name} {t.shape[0]} {t.shape[1]}")
        for row in t:
            lines.append(" ".join(repr(float(v)) for v in row))
    lines.append("end")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> EmbeddingModel:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != MODEL_MAGIC:
        raise FormatError(f"{path}: not a {MODEL_MAGIC} file")
    fields = {}
    idx = 1
    while idx < len(lines) and not lines[idx].startswith("tensor "):
        key, _, value = lines[idx].partition(" ")
        fields[key] = value
        idx += 1
    try:
        head = fields["head"]
        margin = float(fields["margin"])
        seed = int(fields["seed"])
        frozen = bool(int(fields.get("frozen_base", "0")))
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}: bad model header ({exc})") from exc
    tensors = {}
    while idx < len(lines) and lines[idx] != "end":
        parts = lines[idx].split()
        if len(parts) != 4 or parts[0] != "tensor":
            raise FormatError(f"{path}:{idx + 1}: expected a tensor header")
        name, rows, cols = parts[1], int(parts[2]), int(parts[3])
        data = np.array(
            [[float(v) for v in lines[idx + 1 + r].split()] for r in range(rows)],
            dtype=np.float64,
        )
        if data.shape != (rows, cols):
            raise FormatError(f"{path}:{idx + 1}: tensor {name} shape mismatch")
        tensors[name] = data
        idx += 1 + rows
    try:
        model = EmbeddingModel(
            head_kind=head,
            margin=margin,
            seed=seed,
            w1=tensors["w1"],
            b1=tensors["b1"][0],
            w2=tensors["w2"],
            b2=tensors["b2"][0],
            p=tensors.get("p"),
            q=tensors["q"][0] if "q" in tensors else None,
            frozen_base=frozen,
        )
    except KeyError as exc:
        raise FormatError(f"{path}: missing tensor {exc}") from exc
    if head not in ("base", "enhanced"):
        raise FormatError(f"{path}: unknown head kind {head!r}")
    return model


# --------------------------------------------------------------------------
# descriptor providers for the tracker
# --------------------------------------------------------------------------


class HandcraftedProvider:
    """Descriptors from each detection's own patch (or precomputed row)."""

    def __call__(self, frame: int, detections) -> np.ndarray:
        rows = []
        for i, det in enumerate(detections):
            if det.patch is not None:
                rows.append(describe(det.patch))
            elif det.descriptor is not None:
                rows.append(np.asarray(det.descriptor, dtype=np.float64))
            else:
                raise ValidationError(
                    f"frame {frame} detection {i} has neither patch nor descriptor"
                )
        if not rows:
            return np.zeros((0, DESCRIPTOR_DIM))
        return np.stack(rows)


class OracleProvider:
    """Ground-truth-backed descriptors for testing the association stage.

    Each detection is resolved to the ground-truth identity with the highest
    box overlap in its frame; detections overlapping nothing get a fresh
    clutter identity. Descriptors come from oracle_descriptor(identity).
    """

    def __init__(self, gt_entries, noise: float = 0.0, rng=None, dim: int = DESCRIPTOR_DIM):
        self.noise = noise
        self.rng = rng if rng is not None else np.random.default_rng()
        self.dim = dim
        self._frames: dict[int, tuple[list[int], np.ndarray]] = {}
        by_frame: dict[int, list] = {}
        for e in gt_entries:
            by_frame.setdefault(e.frame, []).append(e)
        for fr, entries in by_frame.items():
            ids = [e.identity for e in entries]
            boxes = np.array([e.box.as_ltwh() for e in entries], dtype=np.float64)
            self._frames[fr] = (ids, boxes)
        self._clutter = -1

    def __call__(self, frame: int, detections) -> np.ndarray:
        rows = []
        frame_ids, frame_boxes = self._frames.get(frame, ([], np.zeros((0, 4))))
        det_boxes = np.array([d.box.as_ltwh() for d in detections], dtype=np.float64)
        overlaps = (
            kernels.iou_matrix(det_boxes, frame_boxes)
            if len(detections) and len(frame_ids)
            else np.zeros((len(detections), 0))
        )
        for i in range(len(detections)):
            if overlaps.shape[1] and overlaps[i].max() > 0:
                ident = frame_ids[int(overlaps[i].argmax())]
            else:
                ident = self._clutter
                self._clutter -= 1
            rows.append(oracle_descriptor(ident, self.noise, self.rng, self.dim))
        if not rows:
            return np.zeros((0, self.dim))
        return np.stack(rows)


class PrecomputedProvider:
    """Descriptors looked up by (frame, detection ordinal)."""

    def __init__(self, table: dict[tuple[int, int], np.ndarray]):
        self.table = table

    def __call__(self, frame: int, detections) -> np.ndarray:
        rows = []
        for i in range(len(detections)):
            try:
                rows.append(np.asarray(self.table[(frame, i)], dtype=np.float64))
            except KeyError:
                raise ValidationError(
                    f"no precomputed descriptor for frame {frame}, detection {i}"
                ) from None
        if not rows:
            return np.zeros((0, DESCRIPTOR_DIM))
        return np.stack(rows)
