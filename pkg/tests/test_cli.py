import json

import pytest

from pitchtrack.cli import main
from pitchtrack.core import ClassMap
from pitchtrack.ingest import read_ground_truth
from pitchtrack.tracker import read_tracks


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    """One small simulated match reused by the command tests."""
    d = tmp_path_factory.mktemp("sim")
    code = main(["simulate", "--scenario", "clean", "--seed", "0",
                 "--frames", "40", "--embedding-stride", "5",
                 "--output-dir", str(d), "--quiet"])
    assert code == 0
    return d


def _run_pipeline(sim_dir, out_dir, seed="4"):
    return main(["pipeline",
                 "--detections", str(sim_dir / "detections.jsonl"),
                 "--embeddings", str(sim_dir / "embeddings.jsonl"),
                 "--ground-truth", str(sim_dir / "ground_truth.jsonl"),
                 "--seed", seed, "--output-dir", str(out_dir), "--quiet"])


class TestSimulate:
    def test_writes_three_streams(self, sim_dir):
        assert (sim_dir / "detections.jsonl").exists()
        assert (sim_dir / "ground_truth.jsonl").exists()
        assert (sim_dir / "embeddings.jsonl").exists()
        gts = read_ground_truth(sim_dir / "ground_truth.jsonl")
        assert max(g.frame for g in gts) == 39

    def test_deterministic_for_same_seed(self, sim_dir, tmp_path):
        again = tmp_path / "again"
        code = main(["simulate", "--scenario", "clean", "--seed", "0",
                     "--frames", "40", "--embedding-stride", "5",
                     "--output-dir", str(again), "--quiet"])
        assert code == 0
        for name in ("detections.jsonl", "ground_truth.jsonl", "embeddings.jsonl"):
            assert (again / name).read_bytes() == (sim_dir / name).read_bytes()


class TestTrack:
    def test_produces_parseable_rows(self, sim_dir, tmp_path):
        out = tmp_path / "tracks.jsonl"
        code = main(["track", "--detections", str(sim_dir / "detections.jsonl"),
                     "--output", str(out), "--quiet"])
        assert code == 0
        rows = read_tracks(out)
        assert len({r.track_id for r in rows}) == 24

    def test_csv_export(self, sim_dir, tmp_path):
        out = tmp_path / "tracks.jsonl"
        csv_out = tmp_path / "tracks.csv"
        main(["track", "--detections", str(sim_dir / "detections.jsonl"),
              "--output", str(out), "--csv", str(csv_out), "--quiet"])
        lines = csv_out.read_text().splitlines()
        assert lines[0].startswith("frame,track_id,class_id,team,score")
        assert len(lines) == 1 + len(read_tracks(out))

    def test_tracking_stride_skips_frames(self, sim_dir, tmp_path):
        out = tmp_path / "strided.jsonl"
        code = main(["track", "--detections", str(sim_dir / "detections.jsonl"),
                     "--output", str(out), "--tracking-stride", "2", "--quiet"])
        assert code == 0
        frames = {r.frame for r in read_tracks(out)}
        assert frames == set(range(0, 40, 2))

    def test_rejects_bad_stride(self, sim_dir, tmp_path):
        code = main(["track", "--detections", str(sim_dir / "detections.jsonl"),
                     "--output", str(tmp_path / "x.jsonl"),
                     "--tracking-stride", "0", "--quiet"])
        assert code == 3


class TestTeams:
    def test_summary_and_applied_tracks(self, sim_dir, tmp_path):
        tracks = tmp_path / "tracks.jsonl"
        main(["track", "--detections", str(sim_dir / "detections.jsonl"),
              "--output", str(tracks), "--quiet"])
        summary = tmp_path / "teams.jsonl"
        applied = tmp_path / "teamed.jsonl"
        code = main(["teams", "--tracks", str(tracks),
                     "--detections", str(sim_dir / "detections.jsonl"),
                     "--embeddings", str(sim_dir / "embeddings.jsonl"),
                     "--seed", "4", "--output", str(summary),
                     "--apply", str(applied), "--quiet"])
        assert code == 0
        votes = [json.loads(l) for l in summary.read_text().splitlines()]
        assert len(votes) == 20
        assert {v["team"] for v in votes} == {0, 1}
        teamed = read_tracks(applied)
        player_teams = {r.team for r in teamed if r.class_id == 2}
        assert player_teams == {0, 1}
        assert all(r.team is None for r in teamed if r.class_id != 2)


class TestEvaluate:
    def test_detections_as_predictions(self, sim_dir, tmp_path, capsys):
        out = tmp_path / "report.jsonl"
        code = main(["evaluate", "--predictions", str(sim_dir / "detections.jsonl"),
                     "--ground-truth", str(sim_dir / "ground_truth.jsonl"),
                     "--output", str(out)])
        assert code == 0
        stdout = capsys.readouterr().out
        assert "mAP50-95" in stdout
        rows = [json.loads(l) for l in out.read_text().splitlines()]
        assert rows[0]["class"] == "all"
        assert rows[0]["map50"] == 1.0

    def test_track_rows_accepted_as_predictions(self, sim_dir, tmp_path):
        tracks = tmp_path / "tracks.jsonl"
        main(["track", "--detections", str(sim_dir / "detections.jsonl"),
              "--output", str(tracks), "--quiet"])
        out = tmp_path / "report.jsonl"
        code = main(["evaluate", "--predictions", str(tracks),
                     "--ground-truth", str(sim_dir / "ground_truth.jsonl"),
                     "--output", str(out), "--quiet"])
        assert code == 0
        rows = [json.loads(l) for l in out.read_text().splitlines()]
        assert rows[0]["map50"] == 1.0

    def test_quiet_suppresses_table(self, sim_dir, capsys):
        code = main(["evaluate", "--predictions", str(sim_dir / "detections.jsonl"),
                     "--ground-truth", str(sim_dir / "ground_truth.jsonl"),
                     "--quiet"])
        assert code == 0
        assert capsys.readouterr().out == ""


class TestRender:
    def test_writes_stills(self, sim_dir, tmp_path):
        tracks = tmp_path / "tracks.jsonl"
        main(["track", "--detections", str(sim_dir / "detections.jsonl"),
              "--output", str(tracks), "--quiet"])
        out = tmp_path / "stills"
        code = main(["render", "--tracks", str(tracks), "--output-dir", str(out),
                     "--width", "320", "--height", "180", "--max-frames", "2",
                     "--quiet"])
        assert code == 0
        files = sorted(out.glob("*.ppm"))
        assert len(files) == 2
        assert files[0].read_bytes().startswith(b"P6\n320 180\n255\n")


class TestPipeline:
    def test_byte_identical_across_runs(self, sim_dir, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert _run_pipeline(sim_dir, a) == 0
        assert _run_pipeline(sim_dir, b) == 0
        names = ["tracks.jsonl", "team_summary.jsonl", "tracks_teamed.jsonl",
                 "tracks_teamed.csv", "report.jsonl", "report.txt"]
        for name in names:
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_matches_stage_by_stage_runs(self, sim_dir, tmp_path):
        piped = tmp_path / "piped"
        assert _run_pipeline(sim_dir, piped) == 0

        staged = tmp_path / "staged"
        staged.mkdir()
        main(["track", "--detections", str(sim_dir / "detections.jsonl"),
              "--output", str(staged / "tracks.jsonl"), "--quiet"])
        main(["teams", "--tracks", str(staged / "tracks.jsonl"),
              "--detections", str(sim_dir / "detections.jsonl"),
              "--embeddings", str(sim_dir / "embeddings.jsonl"),
              "--seed", "4", "--output", str(staged / "team_summary.jsonl"),
              "--apply", str(staged / "tracks_teamed.jsonl"), "--quiet"])
        main(["evaluate", "--predictions", str(staged / "tracks_teamed.jsonl"),
              "--ground-truth", str(sim_dir / "ground_truth.jsonl"),
              "--output", str(staged / "report.jsonl"), "--quiet"])

        for name in ("tracks.jsonl", "team_summary.jsonl",
                     "tracks_teamed.jsonl", "report.jsonl"):
            assert (piped / name).read_bytes() == (staged / name).read_bytes()

    def test_ground_truth_optional(self, sim_dir, tmp_path):
        out = tmp_path / "no_eval"
        code = main(["pipeline",
                     "--detections", str(sim_dir / "detections.jsonl"),
                     "--embeddings", str(sim_dir / "embeddings.jsonl"),
                     "--seed", "4", "--output-dir", str(out), "--quiet"])
        assert code == 0
        assert (out / "tracks_teamed.jsonl").exists()
        assert not (out / "report.jsonl").exists()


class TestConfigAndErrors:
    def test_missing_input_is_data_error(self, tmp_path):
        code = main(["track", "--detections", str(tmp_path / "nope.jsonl"),
                     "--output", str(tmp_path / "out.jsonl"), "--quiet"])
        assert code == 2

    def test_malformed_input_is_data_error(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("not json\n")
        code = main(["track", "--detections", str(bad),
                     "--output", str(tmp_path / "out.jsonl"), "--quiet"])
        assert code == 2

    def test_unknown_flag_is_config_error(self):
        assert main(["track", "--detectons", "x"]) == 3

    def test_unknown_command_is_config_error(self):
        assert main(["transmogrify"]) == 3

    def test_bad_config_section_is_config_error(self, sim_dir, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"tracker": {"not_a_knob": 1}}')
        code = main(["track", "--config", str(cfg),
                     "--detections", str(sim_dir / "detections.jsonl"),
                     "--output", str(tmp_path / "out.jsonl"), "--quiet"])
        assert code == 3

    def test_unparseable_config_is_config_error(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{broken")
        assert main(["simulate", "--config", str(cfg),
                     "--output-dir", str(tmp_path / "o"), "--quiet"]) == 3

    def test_unknown_config_section_rejected(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"detector": {}}')
        assert main(["simulate", "--config", str(cfg),
                     "--output-dir", str(tmp_path / "o"), "--quiet"]) == 3

    def test_config_simulator_section_applies(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"simulator": {"n_frames": 12}}')
        out = tmp_path / "sim"
        code = main(["simulate", "--config", str(cfg),
                     "--output-dir", str(out), "--quiet"])
        assert code == 0
        gts = read_ground_truth(out / "ground_truth.jsonl")
        assert max(g.frame for g in gts) == 11

    def test_env_var_config(self, tmp_path, monkeypatch):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"simulator": {"n_frames": 7}}')
        monkeypatch.setenv("PITCHTRACK_CONFIG", str(cfg))
        out = tmp_path / "sim"
        code = main(["simulate", "--output-dir", str(out), "--quiet"])
        assert code == 0
        gts = read_ground_truth(out / "ground_truth.jsonl")
        assert max(g.frame for g in gts) == 6

    def test_flag_beats_env_var(self, tmp_path, monkeypatch):
        env_cfg = tmp_path / "env.json"
        env_cfg.write_text('{"simulator": {"n_frames": 7}}')
        flag_cfg = tmp_path / "flag.json"
        flag_cfg.write_text('{"simulator": {"n_frames": 9}}')
        monkeypatch.setenv("PITCHTRACK_CONFIG", str(env_cfg))
        out = tmp_path / "sim"
        code = main(["simulate", "--config", str(flag_cfg),
                     "--output-dir", str(out), "--quiet"])
        assert code == 0
        gts = read_ground_truth(out / "ground_truth.jsonl")
        assert max(g.frame for g in gts) == 8

    def test_class_map_section_applies(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "classes": {"player": 0, "goalkeeper": 1, "referee": 2, "ball": 3},
            "simulator": {"n_frames": 5},
        }))
        out = tmp_path / "sim"
        assert main(["simulate", "--config", str(cfg),
                     "--output-dir", str(out), "--quiet"]) == 0
        cm = ClassMap({"player": 0, "goalkeeper": 1, "referee": 2, "ball": 3})
        gts = read_ground_truth(out / "ground_truth.jsonl", class_map=cm)
        frame0 = [g for g in gts if g.frame == 0]
        assert sum(1 for g in frame0 if g.class_id == 0) == 20  # players now id 0

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert "pitchtrack" in capsys.readouterr().out
