"""Shared domain types and box geometry.

Boxes are axis-aligned rectangles in xyxy corner format, continuous pixel
coordinates, area = (x2-x1)*(y2-y1) with no +1 pixel correction. All types
are immutable values and safe to share between workers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, ValidationError

EMBEDDING_DIM = 512

CLASS_NAMES = ("ball", "goalkeeper", "player", "referee")


@dataclass(frozen=True)
class ClassMap:
    """Bijective mapping between the four object classes and integer ids.

    Default is alphabetical: ball=0, goalkeeper=1, player=2, referee=3.
    """

    name_to_id: dict[str, int] = field(
        default_factory=lambda: {name: i for i, name in enumerate(CLASS_NAMES)}
    )

    def __post_init__(self):
        if set(self.name_to_id) != set(CLASS_NAMES):
            raise ValidationError("name_to_id", f"classes must be exactly {CLASS_NAMES}")
        if len(set(self.name_to_id.values())) != len(CLASS_NAMES):
            raise ValidationError("name_to_id", "class ids must be distinct")

    def id_of(self, name: str) -> int:
        return self.name_to_id[name]

    def name_of(self, class_id: int) -> str:
        for name, cid in self.name_to_id.items():
            if cid == class_id:
                return name
        raise ValidationError("class_id", f"unknown class id {class_id}")

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(self.name_to_id[name] for name in CLASS_NAMES)

    def __contains__(self, class_id: int) -> bool:
        return class_id in self.name_to_id.values()


DEFAULT_CLASS_MAP = ClassMap()


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box, corner format. Requires x2 > x1, y2 > y1, all >= 0."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(c) for c in coords):
            raise GeometryError(f"non-finite box coordinates {coords}")
        if min(coords) < 0:
            raise GeometryError(f"negative box coordinates {coords}")
        if self.x2 <= self.x1 or self.y2 <= self.y1:
            raise GeometryError(f"inverted or empty box {coords}")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


@dataclass(frozen=True)
class CenterForm:
    """Kalman measurement form: center, aspect ratio (w/h), height."""

    cx: float
    cy: float
    a: float
    h: float


@dataclass(frozen=True)
class Detection:
    """One classified, scored box on one frame."""

    frame: int
    class_id: int
    score: float
    box: BoundingBox

    def __post_init__(self):
        if self.frame < 0:
            raise ValidationError("frame", f"must be non-negative, got {self.frame}")
        if not (0.0 <= self.score <= 1.0):
            raise ValidationError("score", f"must be in [0, 1], got {self.score}")


@dataclass(frozen=True)
class GroundTruth:
    """One annotated object on one frame, with a stable object identity."""

    frame: int
    object_id: int
    class_id: int
    box: BoundingBox

    def __post_init__(self):
        if self.frame < 0:
            raise ValidationError("frame", f"must be non-negative, got {self.frame}")
        if self.object_id < 0:
            raise ValidationError("object_id", f"must be non-negative, got {self.object_id}")


@dataclass(frozen=True)
class Embedding:
    """512-d appearance vector referencing one detection (frame, index in frame)."""

    frame: int
    det_index: int
    vec: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.vec, dtype=np.float64)
        if vec.shape != (EMBEDDING_DIM,):
            raise ValidationError(
                "vec", f"expected dimension {EMBEDDING_DIM}, got {vec.size}"
            )
        if not np.all(np.isfinite(vec)):
            raise ValidationError("vec", "components must be finite")
        vec.setflags(write=False)
        object.__setattr__(self, "vec", vec)
        if self.frame < 0:
            raise ValidationError("frame", f"must be non-negative, got {self.frame}")
        if self.det_index < 0:
            raise ValidationError("det_index", f"must be non-negative, got {self.det_index}")


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; 0 when disjoint."""
    ix = min(a.x2, b.x2) - max(a.x1, b.x1)
    iy = min(a.y2, b.y2) - max(a.y1, b.y1)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def iou_matrix_xyxy(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU between two (n, 4) and (m, 4) corner-format arrays."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 4)
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((a.shape[0], b.shape[0]))
    ix = np.minimum(a[:, None, 2], b[None, :, 2]) - np.maximum(a[:, None, 0], b[None, :, 0])
    iy = np.minimum(a[:, None, 3], b[None, :, 3]) - np.maximum(a[:, None, 1], b[None, :, 1])
    inter = np.clip(ix, 0.0, None) * np.clip(iy, 0.0, None)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    denom = area_a[:, None] + area_b[None, :] - inter
    safe = denom > 0
    return np.where(safe, inter / np.where(safe, denom, 1.0), 0.0)


def iou_matrix(boxes_a: list[BoundingBox], boxes_b: list[BoundingBox]) -> np.ndarray:
    """Pairwise IoU, shape (len(a), len(b))."""
    return iou_matrix_xyxy(
        np.array([b.as_tuple() for b in boxes_a]).reshape(-1, 4),
        np.array([b.as_tuple() for b in boxes_b]).reshape(-1, 4),
    )


def iou_xyxy(a, b) -> float:
    """IoU on raw (x1, y1, x2, y2) sequences, no validation.

    Kalman predictions may drift outside the frame; this variant tolerates
    coordinates BoundingBox would reject.
    """
    ix = min(a[2], b[2]) - max(a[0], b[0])
    iy = min(a[3], b[3]) - max(a[1], b[1])
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    denom = area_a + area_b - inter
    if denom <= 0:
        return 0.0
    return inter / denom


def to_center_form(b: BoundingBox) -> CenterForm:
    h = b.height
    return CenterForm(
        cx=(b.x1 + b.x2) / 2.0,
        cy=(b.y1 + b.y2) / 2.0,
        a=b.width / h,
        h=h,
    )


def to_box(c: CenterForm) -> BoundingBox:
    """Inverse of to_center_form. Raises GeometryError on h <= 0 or a <= 0."""
    if c.h <= 0 or c.a <= 0:
        raise GeometryError(f"degenerate center form (a={c.a}, h={c.h})")
    w = c.a * c.h
    return BoundingBox(
        x1=c.cx - w / 2.0,
        y1=c.cy - c.h / 2.0,
        x2=c.cx + w / 2.0,
        y2=c.cy + c.h / 2.0,
    )
