"""Team assignment: cluster player appearance, vote per track.

All sampled player embeddings go through one global clustering (the 3-d
embedding from umap, then 2-means), rather than clustering each frame
separately; per-frame clustering lets the two kits swap labels between
frames, which shows up as players flickering between teams. Each track
then takes the majority cluster over its own samples, ties resolved by
its temporally earliest sample. Goalkeepers, referees, and the ball keep
a null team.

Team numbering is canonical: the cluster holding the earliest sampled
embedding overall is team 0, so reruns and label permutations agree.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import ClassMap, DEFAULT_CLASS_MAP, Detection, Embedding
from .errors import ConfigError, InsufficientDataError, ValidationError
from .ingest import (
    _as_int,
    _check_fields,
    _decode_line,
    _iter_lines,
    group_by_frame,
    link_embeddings,
)
from .umap import UmapConfig, umap_embed


@dataclass
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray
    inertia_history: list[float]
    n_iter: int

    @property
    def inertia(self) -> float:
        return self.inertia_history[-1]


def kmeans(
    data: np.ndarray,
    n_clusters: int,
    seed: int = 0,
    max_iter: int = 100,
    tol: float = 1e-6,
) -> KMeansResult:
    """Lloyd's algorithm with k-means++ seeding.

    Runs until the largest centroid shift drops below tol or max_iter is
    reached. An emptied cluster is re-seeded with the farthest point of
    the largest cluster. inertia_history holds the cost after every
    iteration and is non-increasing.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ConfigError(f"expected a 2-d array, got shape {data.shape}")
    n = data.shape[0]
    if n_clusters < 1:
        raise ConfigError(f"n_clusters must be positive, got {n_clusters}")
    if n < n_clusters:
        raise InsufficientDataError(f"need at least {n_clusters} points, got {n}")

    rng = np.random.default_rng(seed)
    centers = _plus_plus_init(data, n_clusters, rng)

    labels = np.zeros(n, dtype=np.int64)
    history: list[float] = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        dists = _sq_distances(data, centers)
        labels = np.argmin(dists, axis=1)

        # re-seed any emptied cluster from the largest one
        for cluster in range(n_clusters):
            if np.any(labels == cluster):
                continue
            counts = np.bincount(labels, minlength=n_clusters)
            donor = int(np.argmax(counts))
            members = np.flatnonzero(labels == donor)
            off = _sq_distances(data[members], centers[donor : donor + 1])[:, 0]
            labels[members[int(np.argmax(off))]] = cluster

        new_centers = np.empty_like(centers)
        for cluster in range(n_clusters):
            new_centers[cluster] = data[labels == cluster].mean(axis=0)

        history.append(float(_sq_distances(data, new_centers)[np.arange(n), labels].sum()))
        shift = float(np.abs(new_centers - centers).max())
        centers = new_centers
        if shift < tol:
            break

    return KMeansResult(labels=labels, centers=centers,
                        inertia_history=history, n_iter=n_iter)


def _sq_distances(data: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = data[:, None, :] - centers[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _plus_plus_init(data: np.ndarray, n_clusters: int, rng) -> np.ndarray:
    n = data.shape[0]
    centers = np.empty((n_clusters, data.shape[1]))
    centers[0] = data[int(rng.integers(n))]
    for c in range(1, n_clusters):
        d2 = _sq_distances(data, centers[:c]).min(axis=1)
        total = d2.sum()
        if total <= 0:
            # all points coincide with chosen centers; any point works
            centers[c] = data[int(rng.integers(n))]
            continue
        centers[c] = data[int(rng.choice(n, p=d2 / total))]
    return centers


# ---------------------------------------------------------------------------
# track-level assignment

@dataclass(frozen=True)
class TeamVote:
    """Vote tally for one track; team is the majority cluster."""

    track_id: int
    team: int
    votes_for: int
    votes_total: int


def assign_teams(
    rows,
    detections: list[Detection],
    embeddings: list[Embedding],
    class_map: ClassMap = DEFAULT_CLASS_MAP,
    umap_config: UmapConfig | None = None,
    seed: int = 0,
) -> list[TeamVote]:
    """Decide a team for every player track with at least one embedding.

    Embeddings attach to track rows through the detection stream: a row
    and a detection on the same frame with the same box are the same
    observation (rows carry the detection's box verbatim, so the join is
    exact). Only player-class samples enter the clustering.
    """
    umap_config = umap_config if umap_config is not None else UmapConfig(seed=seed)
    player_id = class_map.id_of("player")
    emb_by_ref = link_embeddings(detections, embeddings)
    dets_by_frame = group_by_frame(detections)

    box_index: dict[int, dict[tuple, int]] = {}
    for frame, dets in dets_by_frame.items():
        table: dict[tuple, int] = {}
        for idx, det in enumerate(dets):
            table.setdefault(det.box.as_tuple(), idx)
        box_index[frame] = table

    # (frame, det_index, track_id, vec) per sampled player observation
    samples: list[tuple[int, int, int, np.ndarray]] = []
    for row in rows:
        if row.class_id != player_id:
            continue
        idx = box_index.get(row.frame, {}).get(row.box.as_tuple())
        if idx is None:
            continue
        emb = emb_by_ref.get((row.frame, idx))
        if emb is None:
            continue
        samples.append((row.frame, idx, row.track_id, emb.vec))
    samples.sort(key=lambda s: (s[0], s[1]))

    if not samples:
        raise InsufficientDataError("no player embeddings matched any track")
    if len(samples) <= umap_config.n_neighbors:
        raise InsufficientDataError(
            f"need more than {umap_config.n_neighbors} player samples, "
            f"got {len(samples)}"
        )

    vectors = np.stack([s[3] for s in samples])
    reduced = umap_embed(vectors, umap_config)
    labels = kmeans(reduced, 2, seed=seed).labels

    # canonical numbering: earliest sample's cluster is team 0
    if labels[0] == 1:
        labels = 1 - labels

    votes: dict[int, list[int]] = {}
    for (frame, idx, track_id, _), label in zip(samples, labels):
        votes.setdefault(track_id, []).append(int(label))

    out = []
    for track_id in sorted(votes):
        tally = votes[track_id]
        ones = sum(tally)
        zeros = len(tally) - ones
        if ones > zeros:
            team = 1
        elif zeros > ones:
            team = 0
        else:
            team = tally[0]  # tie: earliest sample decides
        out.append(
            TeamVote(
                track_id=track_id,
                team=team,
                votes_for=tally.count(team),
                votes_total=len(tally),
            )
        )
    return out


def votes_to_teams(votes: list[TeamVote]) -> dict[int, int]:
    return {v.track_id: v.team for v in votes}


# ---------------------------------------------------------------------------
# summary file I/O

_VOTE_FIELDS = ("track_id", "team", "votes_for", "votes_total")


def write_team_summary(votes: list[TeamVote], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in votes:
            obj = {
                "track_id": v.track_id,
                "team": v.team,
                "votes_for": v.votes_for,
                "votes_total": v.votes_total,
            }
            fh.write(json.dumps(obj) + "\n")


def read_team_summary(path) -> list[TeamVote]:
    path = Path(path)
    out = []
    for line_no, raw in _iter_lines(path.read_text(encoding="utf-8")):
        obj = _decode_line(raw, line_no, str(path))
        _check_fields(obj, _VOTE_FIELDS, line_no)
        vote = TeamVote(
            track_id=_as_int(obj, "track_id", line_no),
            team=_as_int(obj, "team", line_no),
            votes_for=_as_int(obj, "votes_for", line_no),
            votes_total=_as_int(obj, "votes_total", line_no),
        )
        if vote.team not in (0, 1):
            raise ValidationError("team", f"must be 0 or 1, got {vote.team}", line_no)
        if not (0 <= vote.votes_for <= vote.votes_total) or vote.votes_total < 1:
            raise ValidationError("votes_for", "inconsistent vote counts", line_no)
        out.append(vote)
    return out
