"""Detection, embedding, and ground-truth file I/O plus frame geometry.

All on-disk streams are JSON Lines, UTF-8, one record per line. Records are
validated strictly: a missing, mistyped, or unknown field fails the whole
read with the 1-based line number. Box coordinates are original frame
pixels unless an adapter says otherwise.
"""
from __future__ import annotations

import json
import math
import subprocess
from dataclasses import dataclass
from pathlib import Path

from .core import (
    BoundingBox,
    ClassMap,
    DEFAULT_CLASS_MAP,
    Detection,
    EMBEDDING_DIM,
    Embedding,
    GroundTruth,
)
from .errors import (
    AdapterError,
    ConfigError,
    GeometryError,
    LinkError,
    ParseError,
    ValidationError,
)


def sample_frame_indices(total_frames: int, stride: int = 30) -> list[int]:
    """Frame indices to process at a fixed stride, always including frame 0.

    Yields ceil(total_frames / stride) indices. A 30-frame stride on 30 fps
    footage lands on roughly one frame per second.
    """
    if stride <= 0:
        raise ConfigError(f"stride must be positive, got {stride}")
    if total_frames < 0:
        raise ConfigError(f"total_frames must be non-negative, got {total_frames}")
    return list(range(0, total_frames, stride))


@dataclass(frozen=True)
class FramePlan:
    """Which frames get tracked and which also get appearance embeddings."""

    total_frames: int
    tracking_stride: int = 1
    embedding_stride: int = 30

    def __post_init__(self):
        # validates both strides up front
        sample_frame_indices(self.total_frames, self.tracking_stride)
        sample_frame_indices(self.total_frames, self.embedding_stride)

    def tracking_frames(self) -> list[int]:
        return sample_frame_indices(self.total_frames, self.tracking_stride)

    def embedding_frames(self) -> list[int]:
        return sample_frame_indices(self.total_frames, self.embedding_stride)


# ---------------------------------------------------------------------------
# record-level parsing


def _decode_line(raw: str, line_no: int, source: str) -> dict:
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(line_no, f"invalid JSON ({exc.msg})", source) from exc
    if not isinstance(obj, dict):
        raise ParseError(line_no, "record must be a JSON object", source)
    return obj


def _check_fields(obj: dict, required: tuple[str, ...], line_no: int) -> None:
    for name in required:
        if name not in obj:
            raise ValidationError(name, "missing", line_no)
    for name in obj:
        if name not in required:
            raise ValidationError(name, "unknown field", line_no)


def _as_int(obj: dict, name: str, line_no: int) -> int:
    value = obj[name]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(name, f"expected integer, got {value!r}", line_no)
    return value


def _as_number(obj: dict, name: str, line_no: int) -> float:
    value = obj[name]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(name, f"expected number, got {value!r}", line_no)
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(name, "must be finite", line_no)
    return value


def _as_box(obj: dict, name: str, line_no: int) -> BoundingBox:
    value = obj[name]
    if not isinstance(value, list) or len(value) != 4:
        raise ValidationError(name, "expected [x1, y1, x2, y2]", line_no)
    coords = []
    for c in value:
        if isinstance(c, bool) or not isinstance(c, (int, float)):
            raise ValidationError(name, f"expected number, got {c!r}", line_no)
        coords.append(float(c))
    try:
        return BoundingBox(*coords)
    except GeometryError as exc:
        raise ValidationError(name, str(exc), line_no) from exc


def parse_detection(obj: dict, line_no: int, class_map: ClassMap) -> Detection:
    _check_fields(obj, ("frame", "class_id", "score", "bbox"), line_no)
    frame = _as_int(obj, "frame", line_no)
    class_id = _as_int(obj, "class_id", line_no)
    if class_id not in class_map:
        raise ValidationError("class_id", f"unknown class id {class_id}", line_no)
    score = _as_number(obj, "score", line_no)
    box = _as_box(obj, "bbox", line_no)
    try:
        return Detection(frame=frame, class_id=class_id, score=score, box=box)
    except ValidationError as exc:
        raise ValidationError(exc.field, str(exc), line_no) from exc


def parse_ground_truth(obj: dict, line_no: int, class_map: ClassMap) -> GroundTruth:
    _check_fields(obj, ("frame", "object_id", "class_id", "bbox"), line_no)
    frame = _as_int(obj, "frame", line_no)
    object_id = _as_int(obj, "object_id", line_no)
    class_id = _as_int(obj, "class_id", line_no)
    if class_id not in class_map:
        raise ValidationError("class_id", f"unknown class id {class_id}", line_no)
    box = _as_box(obj, "bbox", line_no)
    try:
        return GroundTruth(frame=frame, object_id=object_id, class_id=class_id, box=box)
    except ValidationError as exc:
        raise ValidationError(exc.field, str(exc), line_no) from exc


def parse_embedding(obj: dict, line_no: int) -> Embedding:
    _check_fields(obj, ("frame", "det_index", "vec"), line_no)
    frame = _as_int(obj, "frame", line_no)
    det_index = _as_int(obj, "det_index", line_no)
    vec = obj["vec"]
    if not isinstance(vec, list) or len(vec) != EMBEDDING_DIM:
        raise ValidationError(
            "vec", f"expected {EMBEDDING_DIM} components", line_no
        )
    for c in vec:
        if isinstance(c, bool) or not isinstance(c, (int, float)):
            raise ValidationError("vec", f"expected number, got {c!r}", line_no)
    try:
        return Embedding(frame=frame, det_index=det_index, vec=vec)
    except ValidationError as exc:
        raise ValidationError(exc.field, str(exc), line_no) from exc


# ---------------------------------------------------------------------------
# stream-level I/O


def _iter_lines(text: str):
    for line_no, raw in enumerate(text.splitlines(), start=1):
        if raw.strip():
            yield line_no, raw


def parse_detections(
    text: str, class_map: ClassMap = DEFAULT_CLASS_MAP, source: str = "input"
) -> list[Detection]:
    out = []
    for line_no, raw in _iter_lines(text):
        out.append(parse_detection(_decode_line(raw, line_no, source), line_no, class_map))
    return out


def read_detections(path, class_map: ClassMap = DEFAULT_CLASS_MAP) -> list[Detection]:
    path = Path(path)
    return parse_detections(path.read_text(encoding="utf-8"), class_map, source=str(path))


def detection_to_obj(det: Detection) -> dict:
    return {
        "frame": det.frame,
        "class_id": det.class_id,
        "score": det.score,
        "bbox": list(det.box.as_tuple()),
    }


def write_detections(dets, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for det in dets:
            fh.write(json.dumps(detection_to_obj(det)) + "\n")


def read_ground_truth(path, class_map: ClassMap = DEFAULT_CLASS_MAP) -> list[GroundTruth]:
    path = Path(path)
    out = []
    for line_no, raw in _iter_lines(path.read_text(encoding="utf-8")):
        out.append(
            parse_ground_truth(_decode_line(raw, line_no, str(path)), line_no, class_map)
        )
    return out


def write_ground_truth(boxes, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for gt in boxes:
            obj = {
                "frame": gt.frame,
                "object_id": gt.object_id,
                "class_id": gt.class_id,
                "bbox": list(gt.box.as_tuple()),
            }
            fh.write(json.dumps(obj) + "\n")


def read_embeddings(path) -> list[Embedding]:
    path = Path(path)
    out = []
    for line_no, raw in _iter_lines(path.read_text(encoding="utf-8")):
        out.append(parse_embedding(_decode_line(raw, line_no, str(path)), line_no))
    return out


def write_embeddings(embs, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for emb in embs:
            obj = {
                "frame": emb.frame,
                "det_index": emb.det_index,
                "vec": [float(c) for c in emb.vec],
            }
            fh.write(json.dumps(obj) + "\n")


def group_by_frame(dets: list[Detection]) -> dict[int, list[Detection]]:
    """Detections bucketed by frame, preserving within-frame file order."""
    out: dict[int, list[Detection]] = {}
    for det in dets:
        out.setdefault(det.frame, []).append(det)
    return out


def link_embeddings(
    dets: list[Detection], embs: list[Embedding]
) -> dict[tuple[int, int], Embedding]:
    """Resolve each embedding's (frame, det_index) against the detections.

    det_index counts detections within a frame in file order. Raises
    LinkError on a dangling or duplicate reference.
    """
    counts = {frame: len(group) for frame, group in group_by_frame(dets).items()}
    out: dict[tuple[int, int], Embedding] = {}
    for emb in embs:
        key = (emb.frame, emb.det_index)
        if emb.frame not in counts or emb.det_index >= counts[emb.frame]:
            raise LinkError(
                f"embedding references detection {emb.det_index} on frame "
                f"{emb.frame}, which does not exist"
            )
        if key in out:
            raise LinkError(f"duplicate embedding for detection {key}")
        out[key] = emb
    return out


# ---------------------------------------------------------------------------
# letterbox geometry


@dataclass(frozen=True)
class LetterboxTransform:
    """Maps boxes between original frame pixels and the square model input.

    The frame is scaled by model_size / max(width, height) and centered, so
    the short side gets equal padding bands on both ends.
    """

    frame_width: int
    frame_height: int
    model_size: int = 1280

    def __post_init__(self):
        if self.frame_width <= 0 or self.frame_height <= 0:
            raise ConfigError(
                f"frame size must be positive, got "
                f"{self.frame_width}x{self.frame_height}"
            )
        if self.model_size <= 0:
            raise ConfigError(f"model_size must be positive, got {self.model_size}")

    @property
    def scale(self) -> float:
        return self.model_size / max(self.frame_width, self.frame_height)

    @property
    def pad_x(self) -> float:
        return (self.model_size - self.frame_width * self.scale) / 2.0

    @property
    def pad_y(self) -> float:
        return (self.model_size - self.frame_height * self.scale) / 2.0

    def letterbox(self, box: BoundingBox) -> BoundingBox:
        """Frame coordinates to model coordinates."""
        s = self.scale
        return BoundingBox(
            x1=box.x1 * s + self.pad_x,
            y1=box.y1 * s + self.pad_y,
            x2=box.x2 * s + self.pad_x,
            y2=box.y2 * s + self.pad_y,
        )

    def unletterbox(self, box: BoundingBox) -> BoundingBox | None:
        """Model coordinates back to frame coordinates, clipped to the frame.

        Returns None when the box lies entirely in the padding bands (or
        collapses to zero area after clipping).
        """
        s = self.scale
        x1 = (box.x1 - self.pad_x) / s
        y1 = (box.y1 - self.pad_y) / s
        x2 = (box.x2 - self.pad_x) / s
        y2 = (box.y2 - self.pad_y) / s
        x1 = min(max(x1, 0.0), float(self.frame_width))
        x2 = min(max(x2, 0.0), float(self.frame_width))
        y1 = min(max(y1, 0.0), float(self.frame_height))
        y2 = min(max(y2, 0.0), float(self.frame_height))
        if x2 <= x1 or y2 <= y1:
            return None
        return BoundingBox(x1=x1, y1=y1, x2=x2, y2=y2)


# ---------------------------------------------------------------------------
# external detector adapters


@dataclass(frozen=True)
class AdapterConfig:
    """How to obtain detections from an external detector.

    kind "command" runs an argv, substituting "{input}" placeholders with
    the input path (appended when absent), and parses stdout as the
    detection stream. kind "model-file" would load serialized weights;
    no inference runtime ships with this package, so it always fails with
    AdapterError and exists to give those configs a stable error path.
    """

    kind: str
    command: tuple[str, ...] = ()
    model_path: str | None = None
    coords: str = "frame"
    model_size: int = 1280
    min_score: float = 0.0

    def __post_init__(self):
        if self.kind not in ("command", "model-file"):
            raise ConfigError(f"adapter kind must be 'command' or 'model-file', got {self.kind!r}")
        if self.coords not in ("frame", "model"):
            raise ConfigError(f"adapter coords must be 'frame' or 'model', got {self.coords!r}")
        if self.kind == "command" and not self.command:
            raise ConfigError("command adapter needs a non-empty argv")
        if self.kind == "model-file" and not self.model_path:
            raise ConfigError("model-file adapter needs model_path")
        if not (0.0 <= self.min_score <= 1.0):
            raise ConfigError(f"min_score must be in [0, 1], got {self.min_score}")
        if self.model_size <= 0:
            raise ConfigError(f"model_size must be positive, got {self.model_size}")


def run_external_detector(
    config: AdapterConfig,
    input_path,
    frame_size: tuple[int, int] | None = None,
    class_map: ClassMap = DEFAULT_CLASS_MAP,
) -> list[Detection]:
    """Invoke an adapter and return detections in original frame pixels.

    frame_size (width, height) is required when the adapter reports model
    coordinates; boxes falling entirely in the letterbox padding are
    dropped, as are boxes under the confidence floor.
    """
    if config.kind == "model-file":
        raise AdapterError(
            f"cannot load model file '{config.model_path}': no inference "
            "runtime is available; use a command adapter instead"
        )
    argv = [arg.replace("{input}", str(input_path)) for arg in config.command]
    if all("{input}" not in arg for arg in config.command):
        argv.append(str(input_path))
    try:
        proc = subprocess.run(argv, capture_output=True, text=True, check=False)
    except OSError as exc:
        raise AdapterError(f"failed to launch {argv[0]!r}: {exc}") from exc
    if proc.returncode != 0:
        tail = proc.stderr.strip().splitlines()[-1] if proc.stderr.strip() else ""
        raise AdapterError(
            f"{argv[0]!r} exited with status {proc.returncode}"
            + (f": {tail}" if tail else "")
        )
    dets = parse_detections(proc.stdout, class_map, source="adapter")

    if config.coords == "model":
        if frame_size is None:
            raise ConfigError("frame_size is required when adapter coords='model'")
        transform = LetterboxTransform(frame_size[0], frame_size[1], config.model_size)
        mapped = []
        for det in dets:
            box = transform.unletterbox(det.box)
            if box is None:
                continue
            mapped.append(
                Detection(frame=det.frame, class_id=det.class_id, score=det.score, box=box)
            )
        dets = mapped

    if config.min_score > 0.0:
        dets = [d for d in dets if d.score >= config.min_score]
    return dets
