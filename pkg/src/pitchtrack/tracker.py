"""Two-stage multi-object tracker over Kalman-predicted boxes.

Association is score-split: high-confidence detections match first against
active and lost tracks, then low-confidence detections get a second chance
to keep occluded tracks alive, and finally leftover high-confidence
detections confirm day-old tentative tracks or found new ones. Matching is
class-aware (a ball detection never continues a player track) and purely
geometric, cost 1 - IoU between the predicted and detected boxes.

A track survives max_lost_age processed steps without a match before its
identity is retired; an object returning later gets a fresh id.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .assignment import solve_assignment
from .core import (
    BoundingBox,
    ClassMap,
    DEFAULT_CLASS_MAP,
    Detection,
    iou_matrix_xyxy,
    to_center_form,
)
from .errors import ConfigError, ParseError, SequencingError, ValidationError
from .ingest import (
    _as_box,
    _as_int,
    _as_number,
    _check_fields,
    _decode_line,
    _iter_lines,
    group_by_frame,
)
from .kalman import KalmanFilter, state_to_xyxy

# cost assigned to gated-out pairs; must dwarf any real 1 - IoU cost
_FORBIDDEN = 1e6


@dataclass(frozen=True)
class TrackerConfig:
    """Association thresholds and track lifecycle limits."""

    high_score: float = 0.6
    low_score_floor: float = 0.1
    new_track_score: float = 0.7
    stage1_min_iou: float = 0.2
    stage2_min_iou: float = 0.5
    max_lost_age: int = 30
    min_box_area: float = 10.0
    max_aspect: float = 1.6
    ball_min_box_area: float = 1.0
    ball_class: str = "ball"

    def __post_init__(self):
        for name in ("high_score", "low_score_floor", "new_track_score",
                     "stage1_min_iou", "stage2_min_iou"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ConfigError(f"{name} must be in [0, 1], got {value}")
        if self.low_score_floor >= self.high_score:
            raise ConfigError(
                f"low_score_floor ({self.low_score_floor}) must be below "
                f"high_score ({self.high_score})"
            )
        if self.max_lost_age < 0:
            raise ConfigError(f"max_lost_age must be non-negative, got {self.max_lost_age}")
        if self.min_box_area < 0 or self.ball_min_box_area < 0:
            raise ConfigError("box area floors must be non-negative")
        if self.max_aspect <= 0:
            raise ConfigError(f"max_aspect must be positive, got {self.max_aspect}")


class TrackState(Enum):
    TENTATIVE = "tentative"
    ACTIVE = "active"
    LOST = "lost"
    REMOVED = "removed"


@dataclass
class Track:
    """Mutable per-object state; rows emitted to callers are TrackRow."""

    track_id: int
    class_id: int
    state: TrackState
    mean: np.ndarray
    covariance: np.ndarray
    last_box: BoundingBox
    score: float
    steps_since_update: int = 0

    def predicted_xyxy(self) -> np.ndarray:
        return state_to_xyxy(self.mean)


@dataclass(frozen=True)
class TrackRow:
    """One output record: where one identified object is on one frame."""

    frame: int
    track_id: int
    class_id: int
    team: int | None
    score: float
    box: BoundingBox


class ByteTracker:
    """Stateful frame-by-frame tracker; feed frames in increasing order."""

    def __init__(
        self,
        config: TrackerConfig | None = None,
        class_map: ClassMap = DEFAULT_CLASS_MAP,
    ):
        self.config = config if config is not None else TrackerConfig()
        self.class_map = class_map
        self._kf = KalmanFilter()
        self._tracks: list[Track] = []
        self._next_id = 1
        self._last_frame: int | None = None

    @property
    def tracks(self) -> list[Track]:
        return list(self._tracks)

    def step(self, frame: int, detections: list[Detection]) -> list[TrackRow]:
        """Consume one frame's detections, return rows for matched tracks."""
        if self._last_frame is not None and frame <= self._last_frame:
            raise SequencingError(
                f"frame {frame} not after previous frame {self._last_frame}"
            )
        for det in detections:
            if det.frame != frame:
                raise SequencingError(
                    f"detection for frame {det.frame} fed to step({frame})"
                )
        self._last_frame = frame
        cfg = self.config

        usable = [d for d in detections if self._passes_gates(d)]
        usable_ids = {id(d) for d in usable}
        high = [d for d in usable if d.score >= cfg.high_score]
        low = [d for d in usable if d.score < cfg.high_score]

        for track in self._tracks:
            track.mean, track.covariance = self._kf.predict(track.mean, track.covariance)

        was_active = {t.track_id for t in self._tracks if t.state is TrackState.ACTIVE}
        matched_tracks: set[int] = set()
        matched_dets: set[int] = set()  # ids of matched Detection objects
        updated: list[tuple[Track, Detection]] = []

        # stage 1: high-confidence detections vs active and lost tracks
        pool = [t for t in self._tracks if t.state in (TrackState.ACTIVE, TrackState.LOST)]
        for track, det in self._associate(pool, high, cfg.stage1_min_iou):
            self._apply_match(track, det)
            matched_tracks.add(track.track_id)
            matched_dets.add(id(det))
            updated.append((track, det))

        # stage 2: low-confidence detections keep just-occluded tracks alive;
        # only tracks that entered this step active are eligible
        pool = [
            t for t in self._tracks
            if t.track_id in was_active and t.track_id not in matched_tracks
        ]
        for track, det in self._associate(pool, low, cfg.stage2_min_iou):
            self._apply_match(track, det)
            matched_tracks.add(track.track_id)
            matched_dets.add(id(det))
            updated.append((track, det))

        # stage 3: leftover high-confidence detections confirm tentative tracks
        pool = [t for t in self._tracks if t.state is TrackState.TENTATIVE]
        remaining_high = [d for d in high if id(d) not in matched_dets]
        for track, det in self._associate(pool, remaining_high, cfg.stage1_min_iou):
            self._apply_match(track, det)
            matched_tracks.add(track.track_id)
            matched_dets.add(id(det))
            updated.append((track, det))

        # lifecycle for everything that went unmatched
        survivors = []
        for track in self._tracks:
            if track.track_id in matched_tracks:
                survivors.append(track)
                continue
            if track.state is TrackState.TENTATIVE:
                track.state = TrackState.REMOVED  # never confirmed
                continue
            track.state = TrackState.LOST
            track.steps_since_update += 1
            if track.steps_since_update > cfg.max_lost_age:
                track.state = TrackState.REMOVED
            else:
                survivors.append(track)
        self._tracks = survivors

        # new tentative tracks from strong unclaimed detections, input order
        for det in detections:
            if id(det) in matched_dets or id(det) not in usable_ids:
                continue
            if det.score >= cfg.high_score and det.score >= cfg.new_track_score:
                track = self._start_track(det)
                updated.append((track, det))

        rows = [
            TrackRow(
                frame=frame,
                track_id=t.track_id,
                class_id=t.class_id,
                team=None,
                score=d.score,
                box=d.box,
            )
            for t, d in updated
        ]
        rows.sort(key=lambda r: r.track_id)
        return rows

    # -- internals ---------------------------------------------------------

    def _passes_gates(self, det: Detection) -> bool:
        cfg = self.config
        if det.score < cfg.low_score_floor:
            return False
        is_ball = det.class_id == self.class_map.id_of(cfg.ball_class)
        min_area = cfg.ball_min_box_area if is_ball else cfg.min_box_area
        if det.box.area < min_area:
            return False
        if not is_ball and det.box.width / det.box.height > cfg.max_aspect:
            return False
        return True

    def _associate(
        self, tracks: list[Track], dets: list[Detection], min_iou: float
    ) -> list[tuple[Track, Detection]]:
        """Class-aware minimum-cost matching, gated at min_iou."""
        if not tracks or not dets:
            return []
        pred = np.array([t.predicted_xyxy() for t in tracks])
        det_boxes = np.array([d.box.as_tuple() for d in dets])
        overlap = iou_matrix_xyxy(pred, det_boxes)
        same_class = (
            np.array([t.class_id for t in tracks])[:, None]
            == np.array([d.class_id for d in dets])[None, :]
        )
        cost = np.where(same_class & (overlap >= min_iou), 1.0 - overlap, _FORBIDDEN)
        out = []
        for i, j in solve_assignment(cost):
            if cost[i, j] < _FORBIDDEN:
                out.append((tracks[i], dets[j]))
        return out

    def _apply_match(self, track: Track, det: Detection) -> None:
        track.mean, track.covariance = self._kf.update(
            track.mean, track.covariance, to_center_form(det.box)
        )
        track.last_box = det.box
        track.score = det.score
        track.steps_since_update = 0
        if track.state is TrackState.TENTATIVE:
            track.state = TrackState.ACTIVE  # second consecutive hit confirms
        elif track.state is TrackState.LOST:
            track.state = TrackState.ACTIVE
        # active stays active

    def _start_track(self, det: Detection) -> Track:
        mean, cov = self._kf.initiate(to_center_form(det.box))
        track = Track(
            track_id=self._next_id,
            class_id=det.class_id,
            state=TrackState.TENTATIVE,
            mean=mean,
            covariance=cov,
            last_box=det.box,
            score=det.score,
        )
        self._next_id += 1
        self._tracks.append(track)
        return track


def run_sequence(
    detections: list[Detection],
    config: TrackerConfig | None = None,
    class_map: ClassMap = DEFAULT_CLASS_MAP,
) -> list[TrackRow]:
    """Track a whole detection stream, frames processed in ascending order."""
    tracker = ByteTracker(config, class_map)
    rows: list[TrackRow] = []
    for frame, dets in sorted(group_by_frame(detections).items()):
        rows.extend(tracker.step(frame, dets))
    return rows


# ---------------------------------------------------------------------------
# track file I/O

_TRACK_FIELDS = ("frame", "track_id", "class_id", "team", "score", "bbox")
CSV_HEADER = ("frame", "track_id", "class_id", "team", "score", "x1", "y1", "x2", "y2")


def track_row_to_obj(row: TrackRow) -> dict:
    return {
        "frame": row.frame,
        "track_id": row.track_id,
        "class_id": row.class_id,
        "team": row.team,
        "score": row.score,
        "bbox": list(row.box.as_tuple()),
    }


def write_tracks(rows, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(track_row_to_obj(row)) + "\n")


def parse_track_row(obj: dict, line_no: int, class_map: ClassMap) -> TrackRow:
    _check_fields(obj, _TRACK_FIELDS, line_no)
    frame = _as_int(obj, "frame", line_no)
    track_id = _as_int(obj, "track_id", line_no)
    class_id = _as_int(obj, "class_id", line_no)
    if class_id not in class_map:
        raise ValidationError("class_id", f"unknown class id {class_id}", line_no)
    team = obj["team"]
    if team is not None:
        team = _as_int(obj, "team", line_no)
    score = _as_number(obj, "score", line_no)
    if not (0.0 <= score <= 1.0):
        raise ValidationError("score", f"must be in [0, 1], got {score}", line_no)
    box = _as_box(obj, "bbox", line_no)
    if frame < 0:
        raise ValidationError("frame", f"must be non-negative, got {frame}", line_no)
    if track_id < 1:
        raise ValidationError("track_id", f"must be positive, got {track_id}", line_no)
    return TrackRow(
        frame=frame, track_id=track_id, class_id=class_id,
        team=team, score=score, box=box,
    )


def read_tracks(path, class_map: ClassMap = DEFAULT_CLASS_MAP) -> list[TrackRow]:
    path = Path(path)
    out = []
    for line_no, raw in _iter_lines(path.read_text(encoding="utf-8")):
        out.append(parse_track_row(_decode_line(raw, line_no, str(path)), line_no, class_map))
    return out


def write_tracks_csv(rows, path) -> None:
    """Flat export of the same rows; team is blank while unassigned."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow([
                row.frame,
                row.track_id,
                row.class_id,
                "" if row.team is None else row.team,
                row.score,
                row.box.x1,
                row.box.y1,
                row.box.x2,
                row.box.y2,
            ])


def with_teams(rows: list[TrackRow], teams: dict[int, int | None]) -> list[TrackRow]:
    """Copy of rows with the team column filled from a track_id mapping."""
    return [replace(row, team=teams.get(row.track_id)) for row in rows]
