"""Single-camera soccer analytics downstream of a neural detector.

Reads per-frame detections and appearance embeddings, tracks objects with a
two-stage IoU association over a constant-velocity Kalman filter, clusters
player appearance into two teams, and scores predictions against ground
truth with COCO-style average precision.
"""

from .core import (
    BoundingBox,
    CenterForm,
    ClassMap,
    DEFAULT_CLASS_MAP,
    Detection,
    EMBEDDING_DIM,
    Embedding,
    GroundTruth,
    iou,
    to_box,
    to_center_form,
)
from .errors import (
    AdapterError,
    ConfigError,
    GeometryError,
    InsufficientDataError,
    LinkError,
    NumericError,
    ParseError,
    PitchTrackError,
    SequencingError,
    ValidationError,
)
from .evaluation import count_id_switches, evaluate_detections, render_report
from .ingest import (
    link_embeddings,
    read_detections,
    read_embeddings,
    read_ground_truth,
    sample_frame_indices,
)
from .simulator import (
    SimConfig,
    clean_scenario,
    reentry_scenario,
    simulate,
    stress_scenario,
    synth_embeddings,
)
from .teams import assign_teams, kmeans, votes_to_teams
from .tracker import TrackerConfig, read_tracks, run_sequence, with_teams, write_tracks
from .umap import UmapConfig, umap_embed

__version__ = "0.1.0"

__all__ = [
    "AdapterError",
    "BoundingBox",
    "CenterForm",
    "ClassMap",
    "ConfigError",
    "DEFAULT_CLASS_MAP",
    "Detection",
    "EMBEDDING_DIM",
    "Embedding",
    "GeometryError",
    "GroundTruth",
    "InsufficientDataError",
    "LinkError",
    "NumericError",
    "ParseError",
    "PitchTrackError",
    "SequencingError",
    "SimConfig",
    "TrackerConfig",
    "UmapConfig",
    "ValidationError",
    "assign_teams",
    "clean_scenario",
    "count_id_switches",
    "evaluate_detections",
    "iou",
    "kmeans",
    "link_embeddings",
    "read_detections",
    "read_embeddings",
    "read_ground_truth",
    "read_tracks",
    "reentry_scenario",
    "render_report",
    "run_sequence",
    "sample_frame_indices",
    "simulate",
    "stress_scenario",
    "synth_embeddings",
    "to_box",
    "to_center_form",
    "umap_embed",
    "votes_to_teams",
    "with_teams",
    "write_tracks",
    "__version__",
]
