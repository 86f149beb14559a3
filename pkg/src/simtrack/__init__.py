"""simtrack: online tracking-by-detection with appearance+geometry scoring.

Pipeline: descriptors -> embeddings (contrastive-trained heads) -> pairwise
similarity scores -> greedy or Hungarian assignment -> CLEAR-MOT evaluation,
over MOTChallenge/KITTI-format files. Hot kernels are numba-jitted with a
pure-numpy fallback (SIMTRACK_DISABLE_NUMBA=1).
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateTrainingWarning,
    DimensionMismatchError,
    FormatError,
    InputIntegrityError,
    SequencingError,
    SimtrackError,
    ValidationError,
)
from .geometry import BoundingBox, area_ratio, iou
from .embedding import (
    EmbeddingModel,
    PairSample,
    PatchStats,
    TrainConfig,
    contrastive_loss,
    describe,
    embed,
    enhance_from_base,
    euclidean_distance,
    freeze_base,
    init_base_model,
    init_enhanced_model,
    load_model,
    oracle_descriptor,
    save_model,
    train,
    unfreeze_base,
)
from .scoring import (
    ScoredPair,
    ScoreMatrix,
    ScoreParams,
    build_score_matrix,
    s_arat,
    s_dist,
    s_iou,
    s_new,
    score_pair,
)
from .matcher import (
    Assignment,
    BenchReport,
    MatcherConfig,
    bench_matchers,
    match_greedy,
    match_hungarian,
)
from .tracker import Tracker, TrackerConfig, TrackState, run_sequence
from .io import (
    Detection,
    GroundTruthEntry,
    ResultEntry,
    SyntheticSpec,
    generate_synthetic,
    parse_kitti,
    parse_mot,
    write_mot,
)
from .metrics import MotReport, PairReport, evaluate, pair_classification

__all__ = [
    "__version__",
    "Assignment",
    "BenchReport",
    "BoundingBox",
    "ConfigError",
    "DegenerateTrainingWarning",
    "Detection",
    "DimensionMismatchError",
    "EmbeddingModel",
    "FormatError",
    "GroundTruthEntry",
    "InputIntegrityError",
    "MatcherConfig",
    "MotReport",
    "PairReport",
    "PairSample",
    "PatchStats",
    "ResultEntry",
    "ScoreMatrix",
    "ScoreParams",
    "ScoredPair",
    "SequencingError",
    "SimtrackError",
    "SyntheticSpec",
    "TrackState",
    "Tracker",
    "TrackerConfig",
    "TrainConfig",
    "ValidationError",
    "area_ratio",
    "bench_matchers",
    "build_score_matrix",
    "contrastive_loss",
    "describe",
    "embed",
    "enhance_from_base",
    "euclidean_distance",
    "evaluate",
    "freeze_base",
    "generate_synthetic",
    "init_base_model",
    "init_enhanced_model",
    "iou",
    "load_model",
    "match_greedy",
    "match_hungarian",
    "oracle_descriptor",
    "pair_classification",
    "parse_kitti",
    "parse_mot",
    "run_sequence",
    "s_arat",
    "s_dist",
    "s_iou",
    "s_new",
    "save_model",
    "score_pair",
    "train",
    "unfreeze_base",
    "write_mot",
]
