"""Synthetic match generator: ground truth plus corrupted detections.

A fixed roster (two ten-player teams, two goalkeepers, referees, one ball)
roams a 1920x1080 pitch along waypoint paths, each segment walked at the
object's constant speed. Turns are capped at 90 degrees so a
constant-velocity predictor never loses even the fast ball at a waypoint.

Corruption is layered on the exact ground truth: gaussian corner jitter,
Bernoulli dropout, Poisson false positives, and a deterministic occlusion
rule that hides a box mostly covered by a larger one. With every knob at
zero (and occlusion off) the detections reproduce the ground truth boxes
exactly, which the tracker tests rely on.

Everything is drawn from one seeded generator in a fixed order, so a
config maps to exactly one match.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    BoundingBox,
    ClassMap,
    DEFAULT_CLASS_MAP,
    Detection,
    EMBEDDING_DIM,
    Embedding,
    GroundTruth,
    iou_matrix_xyxy,
)
from .errors import ConfigError
from .ingest import sample_frame_indices

_WAYPOINT_PAD = 10.0
_BALL_PAD = 150.0  # keeps the ball roaming centrally, away from corner traps
_MIN_SEGMENT = 80.0


@dataclass(frozen=True)
class SimConfig:
    """Match layout, motion ranges, and corruption knobs."""

    width: int = 1920
    height: int = 1080
    n_frames: int = 300
    players_per_team: int = 10
    n_referees: int = 1
    seed: int = 0
    jitter_std: float = 0.5
    dropout_rate: float = 0.0
    # frames before this index never drop, letting tracks confirm first
    dropout_warmup: int = 0
    false_positive_rate: float = 0.0
    occlusion_threshold: Optional[float] = None  # 0.6 is a realistic setting
    score_base: float = 0.85
    score_occlusion_slope: float = 0.4
    score_std: float = 0.03
    score_min: float = 0.12
    score_max: float = 0.99
    speed_range: tuple[float, float] = (1.0, 2.5)
    ball_speed_multiplier: float = 2.0
    # (object_id, exit_frame, reenter_frame): absent while exit <= f < reenter
    absences: tuple[tuple[int, int, int], ...] = ()

    @property
    def n_objects(self) -> int:
        return 2 * self.players_per_team + 2 + self.n_referees + 1

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ConfigError(f"field size must be positive, got {self.width}x{self.height}")
        if self.n_frames <= 0:
            raise ConfigError(f"n_frames must be positive, got {self.n_frames}")
        if self.players_per_team < 1:
            raise ConfigError("players_per_team must be at least 1")
        if self.n_referees < 0:
            raise ConfigError("n_referees must be non-negative")
        if not (0.0 <= self.dropout_rate <= 1.0):
            raise ConfigError(f"dropout_rate must be in [0, 1], got {self.dropout_rate}")
        if self.dropout_warmup < 0:
            raise ConfigError(f"dropout_warmup must be non-negative, got {self.dropout_warmup}")
        if self.false_positive_rate < 0:
            raise ConfigError("false_positive_rate must be non-negative")
        if self.jitter_std < 0:
            raise ConfigError("jitter_std must be non-negative")
        if self.occlusion_threshold is not None and not (0.0 < self.occlusion_threshold <= 1.0):
            raise ConfigError(
                f"occlusion_threshold must be in (0, 1] or None, got {self.occlusion_threshold}"
            )
        if not (0.0 <= self.score_min < self.score_max <= 1.0):
            raise ConfigError("need 0 <= score_min < score_max <= 1")
        if self.score_std < 0:
            raise ConfigError("score_std must be non-negative")
        lo, hi = self.speed_range
        if not (0 < lo <= hi):
            raise ConfigError(f"speed_range must satisfy 0 < lo <= hi, got {self.speed_range}")
        if self.ball_speed_multiplier <= 0:
            raise ConfigError("ball_speed_multiplier must be positive")
        for object_id, exit_frame, reenter_frame in self.absences:
            if not (0 <= object_id < self.n_objects):
                raise ConfigError(f"absence names unknown object {object_id}")
            if exit_frame < 0:
                raise ConfigError(f"absence exit frame must be non-negative, got {exit_frame}")
            if reenter_frame <= exit_frame:
                raise ConfigError(
                    f"re-entry frame {reenter_frame} must be after exit frame {exit_frame}"
                )


@dataclass
class _SimObject:
    object_id: int
    class_id: int
    team: Optional[int]
    half_w: float
    half_h: float
    speed: float
    pos: np.ndarray = field(default_factory=lambda: np.zeros(2))
    heading: Optional[np.ndarray] = None
    target: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def box(self) -> BoundingBox:
        return BoundingBox(
            x1=self.pos[0] - self.half_w,
            y1=self.pos[1] - self.half_h,
            x2=self.pos[0] + self.half_w,
            y2=self.pos[1] + self.half_h,
        )


@dataclass
class SimResult:
    """One simulated match: annotations, detections, and the true labels."""

    config: SimConfig
    ground_truth: list[GroundTruth]
    detections: list[Detection]
    # parallel to detections; None marks a false positive
    det_object_ids: list[Optional[int]]
    true_teams: dict[int, Optional[int]]
    object_classes: dict[int, int]


def _build_roster(config: SimConfig, class_map: ClassMap, rng) -> list[_SimObject]:
    objects = []
    p = config.players_per_team
    roster: list[tuple[int, Optional[int]]] = []
    for i in range(2 * p):
        roster.append((class_map.id_of("player"), i // p))
    roster.append((class_map.id_of("goalkeeper"), 0))
    roster.append((class_map.id_of("goalkeeper"), 1))
    for _ in range(config.n_referees):
        roster.append((class_map.id_of("referee"), None))
    roster.append((class_map.id_of("ball"), None))

    ball_id = class_map.id_of("ball")
    for object_id, (class_id, team) in enumerate(roster):
        if class_id == ball_id:
            half_w = half_h = 7.0  # fixed 14x14 ball box
            speed = rng.uniform(*config.speed_range) * config.ball_speed_multiplier
        else:
            h = rng.uniform(70.0, 110.0)
            a = rng.uniform(0.30, 0.45)
            half_h = h / 2.0
            half_w = a * h / 2.0
            speed = rng.uniform(*config.speed_range)
        objects.append(
            _SimObject(
                object_id=object_id,
                class_id=class_id,
                team=team,
                half_w=half_w,
                half_h=half_h,
                speed=speed,
            )
        )
    return objects


def _margins(config: SimConfig, obj: _SimObject, class_map: ClassMap):
    pad = _BALL_PAD if obj.class_id == class_map.id_of("ball") else _WAYPOINT_PAD
    lo_x = obj.half_w + pad
    hi_x = config.width - obj.half_w - pad
    lo_y = obj.half_h + pad
    hi_y = config.height - obj.half_h - pad
    if lo_x >= hi_x or lo_y >= hi_y:
        raise ConfigError("field too small for the configured objects")
    return lo_x, hi_x, lo_y, hi_y


def _place_starts(config, objects, class_map, rng) -> None:
    placed: list[np.ndarray] = []
    for obj in objects:
        lo_x, hi_x, lo_y, hi_y = _margins(config, obj, class_map)
        for _ in range(1000):
            pos = np.array([rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y)])
            box = np.array([
                pos[0] - obj.half_w, pos[1] - obj.half_h,
                pos[0] + obj.half_w, pos[1] + obj.half_h,
            ])
            if not placed or iou_matrix_xyxy(box, np.array(placed)).max() == 0.0:
                obj.pos = pos
                placed.append(box)
                break
        else:
            raise ConfigError("could not place objects without overlap; field too crowded")


def _next_target(rng, pos, heading, margins) -> np.ndarray:
    """Sample the next waypoint, keeping the turn as shallow as the field
    geometry allows.

    Sharp reversals would defeat any constant-velocity predictor, so the
    candidate must lie within 60 degrees of the current heading, widened to
    90 after enough rejections. When even that fails (cornered against the
    margin), the least-turn candidate of a final batch wins, which caps the
    turn near a right angle instead of a full reversal.
    """
    lo_x, hi_x, lo_y, hi_y = margins

    def draw():
        cand = np.array([rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y)])
        d = cand - pos
        dist = float(np.hypot(d[0], d[1]))
        return cand, d, dist

    best, best_cos = None, -2.0
    for attempt in range(400):
        cand, d, dist = draw()
        if dist < _MIN_SEGMENT:
            continue
        if heading is None:
            return cand
        cos = float(d @ heading) / dist
        if cos >= (0.5 if attempt < 200 else 0.0):
            return cand
        if cos > best_cos:
            best, best_cos = cand, cos
    if best is not None:
        return best
    cand, _, _ = draw()
    return cand


def _advance(obj: _SimObject, rng, margins) -> None:
    d = obj.target - obj.pos
    dist = float(np.hypot(d[0], d[1]))
    if dist <= obj.speed:
        obj.pos = obj.target.copy()
        obj.target = _next_target(rng, obj.pos, obj.heading, margins)
    else:
        step = d / dist
        obj.pos = obj.pos + step * obj.speed
        obj.heading = step


def simulate(config: SimConfig, class_map: ClassMap = DEFAULT_CLASS_MAP) -> SimResult:
    """Generate one match deterministically from the config seed."""
    rng = np.random.default_rng(config.seed)
    objects = _build_roster(config, class_map, rng)
    margins = {obj.object_id: _margins(config, obj, class_map) for obj in objects}
    _place_starts(config, objects, class_map, rng)
    for obj in objects:
        obj.target = _next_target(rng, obj.pos, None, margins[obj.object_id])

    absent_spans: dict[int, list[tuple[int, int]]] = {}
    for object_id, exit_frame, reenter_frame in config.absences:
        absent_spans.setdefault(object_id, []).append((exit_frame, reenter_frame))

    def absent(object_id: int, frame: int) -> bool:
        return any(a <= frame < b for a, b in absent_spans.get(object_id, ()))

    ground_truth: list[GroundTruth] = []
    detections: list[Detection] = []
    det_object_ids: list[Optional[int]] = []
    class_ids = list(class_map.ids)

    for frame in range(config.n_frames):
        live = [obj for obj in objects if not absent(obj.object_id, frame)]
        boxes = [obj.box() for obj in live]
        for obj, box in zip(live, boxes):
            ground_truth.append(
                GroundTruth(frame=frame, object_id=obj.object_id,
                            class_id=obj.class_id, box=box)
            )

        arr = np.array([b.as_tuple() for b in boxes]).reshape(-1, 4)
        overlaps = iou_matrix_xyxy(arr, arr)
        np.fill_diagonal(overlaps, 0.0)
        areas = [b.area for b in boxes]

        for i, (obj, box) in enumerate(zip(live, boxes)):
            if config.occlusion_threshold is not None:
                hidden = any(
                    overlaps[i, j] > config.occlusion_threshold and areas[j] > areas[i]
                    for j in range(len(live))
                    if j != i
                )
                if hidden:
                    continue
            if (
                config.dropout_rate > 0
                and frame >= config.dropout_warmup
                and rng.random() < config.dropout_rate
            ):
                continue
            occlusion = float(overlaps[i].max()) if len(live) > 1 else 0.0
            score = float(
                np.clip(
                    rng.normal(
                        config.score_base - config.score_occlusion_slope * occlusion,
                        config.score_std,
                    ),
                    config.score_min,
                    config.score_max,
                )
            )
            coords = np.array(box.as_tuple())
            if config.jitter_std > 0:
                coords = coords + rng.normal(0.0, config.jitter_std, 4)
                coords[0], coords[2] = min(coords[0], coords[2]), max(coords[0], coords[2])
                coords[1], coords[3] = min(coords[1], coords[3]), max(coords[1], coords[3])
                coords = np.clip(coords, 0.0, None)
            detections.append(
                Detection(frame=frame, class_id=obj.class_id, score=score,
                          box=BoundingBox(*coords))
            )
            det_object_ids.append(obj.object_id)

        if config.false_positive_rate > 0:
            for _ in range(int(rng.poisson(config.false_positive_rate))):
                class_id = class_ids[int(rng.integers(len(class_ids)))]
                h = rng.uniform(30.0, 120.0)
                w = h * rng.uniform(0.3, 1.2)
                cx = rng.uniform(w / 2, config.width - w / 2)
                cy = rng.uniform(h / 2, config.height - h / 2)
                score = float(rng.uniform(config.score_min, 0.55))
                detections.append(
                    Detection(
                        frame=frame, class_id=class_id, score=score,
                        box=BoundingBox(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2),
                    )
                )
                det_object_ids.append(None)

        for obj in objects:
            _advance(obj, rng, margins[obj.object_id])

    return SimResult(
        config=config,
        ground_truth=ground_truth,
        detections=detections,
        det_object_ids=det_object_ids,
        true_teams={obj.object_id: obj.team for obj in objects},
        object_classes={obj.object_id: obj.class_id for obj in objects},
    )


def clean_scenario(seed: int = 0, n_frames: int = 300) -> SimConfig:
    """Every corruption knob off: detections reproduce ground truth boxes."""
    return SimConfig(
        seed=seed,
        n_frames=n_frames,
        jitter_std=0.0,
        dropout_rate=0.0,
        false_positive_rate=0.0,
        occlusion_threshold=None,
    )


def stress_scenario(seed: int = 0, n_frames: int = 300) -> SimConfig:
    """Realistic degradation: jitter, ten percent dropout, occlusion drops,
    and a trickle of false positives. Dropout starts a few frames in so the
    roster's tracks confirm before gaps appear."""
    return SimConfig(
        seed=seed,
        n_frames=n_frames,
        jitter_std=0.5,
        dropout_rate=0.10,
        dropout_warmup=5,
        false_positive_rate=0.5,
        occlusion_threshold=0.6,
    )


def reentry_scenario(
    seed: int = 0,
    n_frames: int = 300,
    object_id: int = 3,
    exit_frame: int = 120,
    gap: int = 45,
) -> SimConfig:
    """Clean match except one object leaves for `gap` frames mid-game."""
    return SimConfig(
        seed=seed,
        n_frames=n_frames,
        jitter_std=0.0,
        dropout_rate=0.0,
        false_positive_rate=0.0,
        occlusion_threshold=None,
        absences=((object_id, exit_frame, exit_frame + gap),),
    )


def synth_embeddings(
    sim: SimResult,
    stride: int = 30,
    noise_sigma: float = 0.02,
    prototype_scale: float = 1.0,
    seed: int = 0,
    class_map: ClassMap = DEFAULT_CLASS_MAP,
) -> list[Embedding]:
    """Appearance vectors for the sampled frames' detections.

    Each kit gets an orthogonal prototype (scaled basis vector): one per
    team, one per goalkeeper, one for referees, one for the ball. A
    detection's vector is its object's prototype plus isotropic gaussian
    noise; false positives are noise only. Team prototypes sit
    prototype_scale * sqrt(2) apart.
    """
    if noise_sigma < 0:
        raise ConfigError("noise_sigma must be non-negative")
    rng = np.random.default_rng(seed)
    wanted = set(sample_frame_indices(sim.config.n_frames, stride))

    ball_id = class_map.id_of("ball")
    gk_id = class_map.id_of("goalkeeper")
    ref_id = class_map.id_of("referee")

    def prototype_axis(object_id: Optional[int]) -> Optional[int]:
        if object_id is None:
            return None
        class_id = sim.object_classes[object_id]
        team = sim.true_teams[object_id]
        if class_id == ball_id:
            return 5
        if class_id == ref_id:
            return 4
        if class_id == gk_id:
            return 2 + (team if team is not None else 0)
        return team if team is not None else 0

    out: list[Embedding] = []
    index_in_frame: dict[int, int] = {}
    for det, object_id in zip(sim.detections, sim.det_object_ids):
        det_index = index_in_frame.get(det.frame, 0)
        index_in_frame[det.frame] = det_index + 1
        if det.frame not in wanted:
            continue
        vec = rng.normal(0.0, noise_sigma, EMBEDDING_DIM)
        axis = prototype_axis(object_id)
        if axis is not None:
            vec[axis] += prototype_scale
        out.append(Embedding(frame=det.frame, det_index=det_index, vec=vec))
    return out
