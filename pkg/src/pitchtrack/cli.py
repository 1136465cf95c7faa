"""Command-line front end.

Subcommands cover each stage (simulate, track, teams, evaluate, render)
plus a pipeline command that chains them through files on disk. Running
the pipeline and running the stages by hand over the same inputs produce
byte-identical outputs, because the pipeline re-reads each intermediate
file instead of passing objects along.

Exit codes: 0 success, 2 data problems (unreadable or malformed inputs),
3 configuration problems (bad flags, bad config file, bad parameter
values). A JSON config file can preset tracker, umap, simulator, and
class-map parameters; --config or the PITCHTRACK_CONFIG environment
variable points at it.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import __version__
from .core import ClassMap, DEFAULT_CLASS_MAP, Detection
from .errors import ConfigError, ParseError, PitchTrackError
from .evaluation import evaluate_detections, render_report, write_report
from .ingest import (
    read_detections,
    read_embeddings,
    read_ground_truth,
    write_detections,
    write_embeddings,
    write_ground_truth,
)
from .render import render_sequence
from .simulator import (
    SimConfig,
    clean_scenario,
    reentry_scenario,
    simulate,
    stress_scenario,
    synth_embeddings,
)
from .teams import assign_teams, votes_to_teams, write_team_summary
from .tracker import (
    TrackerConfig,
    read_tracks,
    run_sequence,
    with_teams,
    write_tracks,
    write_tracks_csv,
)
from .umap import UmapConfig

_CONFIG_ENV = "PITCHTRACK_CONFIG"
_CONFIG_SECTIONS = ("classes", "tracker", "umap", "simulator")

_SCENARIOS = {
    "clean": clean_scenario,
    "stress": stress_scenario,
    "reentry": reentry_scenario,
}


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as ConfigError (exit 3)."""

    def error(self, message):
        raise ConfigError(message)


# ---------------------------------------------------------------------------
# config file

def load_config(path: str | None) -> dict:
    """Read the JSON config file named by --config or PITCHTRACK_CONFIG."""
    if path is None:
        path = os.environ.get(_CONFIG_ENV)
    if not path:
        return {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    unknown = sorted(set(data) - set(_CONFIG_SECTIONS))
    if unknown:
        raise ConfigError(f"unknown config sections: {', '.join(unknown)}")
    for name, section in data.items():
        if not isinstance(section, dict):
            raise ConfigError(f"config section {name!r} must be an object")
    return data


def _apply_section(defaults, section: dict | None, name: str):
    if not section:
        return defaults
    fixed = {k: tuple(tuple(x) for x in v) if k == "absences" else v for k, v in section.items()}
    try:
        return dataclasses.replace(defaults, **fixed)
    except TypeError as exc:
        raise ConfigError(f"bad {name} config: {exc}")


def _class_map(config: dict) -> ClassMap:
    section = config.get("classes")
    if not section:
        return DEFAULT_CLASS_MAP
    return ClassMap(dict(section))


def _seed(args) -> int:
    return 0 if args.seed is None else args.seed


# ---------------------------------------------------------------------------
# subcommands

def cmd_simulate(args) -> int:
    config = load_config(args.config)
    class_map = _class_map(config)
    sim_cfg = _SCENARIOS[args.scenario](seed=_seed(args))
    sim_cfg = _apply_section(sim_cfg, config.get("simulator"), "simulator")
    if args.seed is not None:
        sim_cfg = dataclasses.replace(sim_cfg, seed=args.seed)
    if args.frames is not None:
        sim_cfg = dataclasses.replace(sim_cfg, n_frames=args.frames)

    sim = simulate(sim_cfg, class_map)
    embs = synth_embeddings(
        sim,
        stride=args.embedding_stride,
        seed=sim_cfg.seed + 1,
        class_map=class_map,
    )

    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_ground_truth(sim.ground_truth, out / "ground_truth.jsonl")
    write_detections(sim.detections, out / "detections.jsonl")
    write_embeddings(embs, out / "embeddings.jsonl")
    if not args.quiet:
        print(
            f"simulated {sim_cfg.n_frames} frames, {len(sim.detections)} detections, "
            f"{len(embs)} embeddings -> {out}"
        )
    return 0


def cmd_track(args) -> int:
    config = load_config(args.config)
    class_map = _class_map(config)
    tracker_cfg = _apply_section(TrackerConfig(), config.get("tracker"), "tracker")
    if args.tracking_stride <= 0:
        raise ConfigError(f"tracking stride must be positive, got {args.tracking_stride}")

    dets = read_detections(args.detections, class_map)
    if args.tracking_stride > 1:
        dets = [d for d in dets if d.frame % args.tracking_stride == 0]
    rows = run_sequence(dets, tracker_cfg, class_map)
    write_tracks(rows, args.output)
    if args.csv:
        write_tracks_csv(rows, args.csv)
    if not args.quiet:
        n_tracks = len({r.track_id for r in rows})
        print(f"tracked {len(dets)} detections into {n_tracks} tracks -> {args.output}")
    return 0


def cmd_teams(args) -> int:
    config = load_config(args.config)
    class_map = _class_map(config)
    umap_cfg = _apply_section(UmapConfig(seed=_seed(args)), config.get("umap"), "umap")

    rows = read_tracks(args.tracks, class_map)
    dets = read_detections(args.detections, class_map)
    embs = read_embeddings(args.embeddings)
    votes = assign_teams(rows, dets, embs, class_map, umap_cfg, seed=_seed(args))
    write_team_summary(votes, args.output)
    if args.apply:
        write_tracks(with_teams(rows, votes_to_teams(votes)), args.apply)
    if not args.quiet:
        print(f"assigned teams to {len(votes)} tracks -> {args.output}")
    return 0


def _predictions_kind(path) -> str:
    """Detections or track rows? Sniff the first record for track_id."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for raw in fh:
                line = raw.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError:
                    return "detections"  # reader reports the position
                if isinstance(obj, dict) and "track_id" in obj:
                    return "tracks"
                return "detections"
    except OSError as exc:
        raise ParseError(0, f"cannot read {path}: {exc}", source=str(path))
    return "detections"


def cmd_evaluate(args) -> int:
    config = load_config(args.config)
    class_map = _class_map(config)

    if _predictions_kind(args.predictions) == "tracks":
        preds = [
            Detection(r.frame, r.class_id, r.score, r.box)
            for r in read_tracks(args.predictions, class_map)
        ]
    else:
        preds = read_detections(args.predictions, class_map)
    gts = read_ground_truth(args.ground_truth, class_map)

    report = evaluate_detections(
        preds,
        gts,
        class_map,
        iou_threshold=args.iou_threshold,
        score_threshold=args.score_threshold,
    )
    if args.output:
        write_report(report, args.output)
    if not args.quiet:
        print(render_report(report))
    return 0


def cmd_render(args) -> int:
    config = load_config(args.config)
    class_map = _class_map(config)
    rows = read_tracks(args.tracks, class_map)
    written = render_sequence(
        rows,
        args.output_dir,
        width=args.width,
        height=args.height,
        class_map=class_map,
        max_frames=args.max_frames,
    )
    if not args.quiet:
        print(f"rendered {len(written)} frames -> {args.output_dir}")
    return 0


def cmd_pipeline(args) -> int:
    """track -> teams -> evaluate, chained through files in output-dir."""
    config = load_config(args.config)
    class_map = _class_map(config)
    tracker_cfg = _apply_section(TrackerConfig(), config.get("tracker"), "tracker")
    umap_cfg = _apply_section(UmapConfig(seed=_seed(args)), config.get("umap"), "umap")

    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    tracks_path = out / "tracks.jsonl"
    summary_path = out / "team_summary.jsonl"
    teamed_path = out / "tracks_teamed.jsonl"
    teamed_csv = out / "tracks_teamed.csv"
    report_path = out / "report.jsonl"
    report_txt = out / "report.txt"

    dets = read_detections(args.detections, class_map)
    write_tracks(run_sequence(dets, tracker_cfg, class_map), tracks_path)

    # each stage re-reads the previous stage's file, same as running the
    # subcommands one at a time
    rows = read_tracks(tracks_path, class_map)
    embs = read_embeddings(args.embeddings)
    votes = assign_teams(rows, dets, embs, class_map, umap_cfg, seed=_seed(args))
    write_team_summary(votes, summary_path)
    teamed = with_teams(rows, votes_to_teams(votes))
    write_tracks(teamed, teamed_path)
    write_tracks_csv(teamed, teamed_csv)

    if args.ground_truth:
        preds = [
            Detection(r.frame, r.class_id, r.score, r.box)
            for r in read_tracks(teamed_path, class_map)
        ]
        gts = read_ground_truth(args.ground_truth, class_map)
        report = evaluate_detections(preds, gts, class_map)
        write_report(report, report_path)
        text = render_report(report)
        report_txt.write_text(text + "\n", encoding="utf-8")
        if not args.quiet:
            print(text)
    if not args.quiet:
        print(f"pipeline outputs -> {out}")
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help=f"JSON config file (or ${_CONFIG_ENV})")
    common.add_argument("--seed", type=int, help="seed for randomized stages (default 0)")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    parser = _Parser(prog="pitchtrack", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"pitchtrack {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("simulate", parents=[common], help="generate a synthetic match")
    p.add_argument("--scenario", choices=sorted(_SCENARIOS), default="clean")
    p.add_argument("--frames", type=int, help="override frame count")
    p.add_argument("--embedding-stride", type=int, default=30,
                   help="sample embeddings every Nth frame (default 30)")
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("track", parents=[common], help="track a detection stream")
    p.add_argument("--detections", required=True)
    p.add_argument("--output", required=True, help="track rows (JSONL)")
    p.add_argument("--csv", help="also export rows as CSV")
    p.add_argument("--tracking-stride", type=int, default=1,
                   help="process every Nth frame (default 1)")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("teams", parents=[common], help="assign player tracks to teams")
    p.add_argument("--tracks", required=True)
    p.add_argument("--detections", required=True,
                   help="detection stream the embeddings index into")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--output", required=True, help="team summary (JSONL)")
    p.add_argument("--apply", help="also write tracks with the team column filled")
    p.set_defaults(func=cmd_teams)

    p = sub.add_parser("evaluate", parents=[common], help="score predictions against truth")
    p.add_argument("--predictions", required=True,
                   help="detections or track rows (detected by schema)")
    p.add_argument("--ground-truth", required=True)
    p.add_argument("--output", help="report rows (JSONL)")
    p.add_argument("--iou-threshold", type=float, default=0.5)
    p.add_argument("--score-threshold", type=float, default=0.25)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("render", parents=[common], help="draw track rows as PPM stills")
    p.add_argument("--tracks", required=True)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--width", type=int, default=1920)
    p.add_argument("--height", type=int, default=1080)
    p.add_argument("--max-frames", type=int)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("pipeline", parents=[common],
                       help="track, assign teams, and evaluate in one run")
    p.add_argument("--detections", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--ground-truth", help="enables the evaluation stage")
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except PitchTrackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
