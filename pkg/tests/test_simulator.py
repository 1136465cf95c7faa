import numpy as np
import pytest

from pitchtrack.core import DEFAULT_CLASS_MAP, EMBEDDING_DIM
from pitchtrack.errors import ConfigError
from pitchtrack.ingest import link_embeddings, sample_frame_indices
from pitchtrack.simulator import (
    SimConfig,
    clean_scenario,
    reentry_scenario,
    simulate,
    stress_scenario,
    synth_embeddings,
)

BALL = DEFAULT_CLASS_MAP.id_of("ball")
GK = DEFAULT_CLASS_MAP.id_of("goalkeeper")
PLAYER = DEFAULT_CLASS_MAP.id_of("player")
REFEREE = DEFAULT_CLASS_MAP.id_of("referee")


class TestConfigValidation:
    @pytest.mark.parametrize("kwargs", [
        {"width": 0},
        {"n_frames": 0},
        {"players_per_team": 0},
        {"dropout_rate": 1.5},
        {"dropout_warmup": -1},
        {"false_positive_rate": -0.1},
        {"jitter_std": -1.0},
        {"occlusion_threshold": 0.0},
        {"occlusion_threshold": 1.2},
        {"score_min": 0.9, "score_max": 0.5},
        {"speed_range": (0.0, 2.0)},
        {"speed_range": (3.0, 2.0)},
        {"ball_speed_multiplier": 0.0},
    ])
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ConfigError):
            SimConfig(**kwargs)

    def test_rejects_bad_absences(self):
        with pytest.raises(ConfigError):
            SimConfig(absences=((99, 10, 20),))  # unknown object
        with pytest.raises(ConfigError):
            SimConfig(absences=((3, 20, 20),))  # re-entry not after exit
        with pytest.raises(ConfigError):
            SimConfig(absences=((3, -1, 20),))

    def test_default_roster_size(self):
        assert SimConfig().n_objects == 24


class TestRoster:
    def test_class_and_team_composition(self, small_clean_sim):
        classes = small_clean_sim.object_classes
        assert len(classes) == 24
        counts = {cid: sum(1 for c in classes.values() if c == cid)
                  for cid in (BALL, GK, PLAYER, REFEREE)}
        assert counts == {BALL: 1, GK: 2, PLAYER: 20, REFEREE: 1}

        teams = small_clean_sim.true_teams
        players = [oid for oid, cid in classes.items() if cid == PLAYER]
        assert sorted(teams[oid] for oid in players).count(0) == 10
        assert sorted(teams[oid] for oid in players).count(1) == 10
        gk_teams = sorted(teams[oid] for oid, cid in classes.items() if cid == GK)
        assert gk_teams == [0, 1]
        for oid, cid in classes.items():
            if cid in (BALL, REFEREE):
                assert teams[oid] is None


class TestDeterminism:
    def test_same_seed_reproduces_everything(self):
        a = simulate(clean_scenario(seed=5, n_frames=40))
        b = simulate(clean_scenario(seed=5, n_frames=40))
        assert a.ground_truth == b.ground_truth
        assert a.detections == b.detections
        assert a.det_object_ids == b.det_object_ids

    def test_different_seeds_differ(self):
        a = simulate(clean_scenario(seed=1, n_frames=40))
        b = simulate(clean_scenario(seed=2, n_frames=40))
        assert a.ground_truth != b.ground_truth


class TestCleanScenario:
    def test_detections_reproduce_ground_truth_boxes(self, small_clean_sim):
        gt_keys = {(g.frame, g.box.as_tuple()) for g in small_clean_sim.ground_truth}
        det_keys = {(d.frame, d.box.as_tuple()) for d in small_clean_sim.detections}
        assert gt_keys == det_keys

    def test_every_object_on_every_frame(self, small_clean_sim):
        per_frame = {}
        for g in small_clean_sim.ground_truth:
            per_frame.setdefault(g.frame, set()).add(g.object_id)
        assert set(per_frame) == set(range(60))
        for members in per_frame.values():
            assert members == set(range(24))

    def test_boxes_inside_field(self, small_clean_sim):
        for g in small_clean_sim.ground_truth:
            assert 0 <= g.box.x1 < g.box.x2 <= 1920
            assert 0 <= g.box.y1 < g.box.y2 <= 1080

    def test_scores_within_band(self, small_clean_sim):
        scores = [d.score for d in small_clean_sim.detections]
        assert min(scores) >= 0.12
        assert max(scores) <= 0.99

    def test_no_false_positives(self, small_clean_sim):
        assert all(oid is not None for oid in small_clean_sim.det_object_ids)


class TestCorruption:
    def test_total_dropout_respects_warmup(self):
        cfg = SimConfig(seed=3, n_frames=10, dropout_rate=1.0, dropout_warmup=4,
                        jitter_std=0.0)
        sim = simulate(cfg)
        frames_with_dets = {d.frame for d in sim.detections}
        assert frames_with_dets == {0, 1, 2, 3}

    def test_false_positives_marked_and_capped(self):
        cfg = SimConfig(seed=3, n_frames=60, false_positive_rate=2.0, jitter_std=0.0)
        sim = simulate(cfg)
        fp_scores = [d.score for d, oid in zip(sim.detections, sim.det_object_ids)
                     if oid is None]
        assert fp_scores  # rate 2.0 over 60 frames must produce some
        assert max(fp_scores) <= 0.55

    def test_occlusion_drops_covered_objects(self):
        base = dict(seed=8, n_frames=120, jitter_std=0.0)
        plain = simulate(SimConfig(**base))
        occluded = simulate(SimConfig(**base, occlusion_threshold=0.3))
        assert len(occluded.detections) <= len(plain.detections)

    def test_jitter_moves_but_preserves_count(self):
        cfg = SimConfig(seed=3, n_frames=20, jitter_std=2.0)
        sim = simulate(cfg)
        assert len(sim.detections) == len(sim.ground_truth)
        gt_keys = {(g.frame, g.box.as_tuple()) for g in sim.ground_truth}
        det_keys = {(d.frame, d.box.as_tuple()) for d in sim.detections}
        assert gt_keys != det_keys  # at least some boxes perturbed


class TestAbsences:
    def test_object_disappears_and_returns(self):
        cfg = reentry_scenario(seed=0, n_frames=60, object_id=3,
                               exit_frame=20, gap=15)
        sim = simulate(cfg)
        frames_of_3 = sorted({g.frame for g in sim.ground_truth if g.object_id == 3})
        assert frames_of_3 == [f for f in range(60) if not (20 <= f < 35)]

    def test_scenario_builders_differ_only_in_knobs(self):
        clean = clean_scenario(seed=1)
        stress = stress_scenario(seed=1)
        assert clean.dropout_rate == 0.0
        assert stress.dropout_rate == 0.10
        assert stress.occlusion_threshold == 0.6
        assert stress.dropout_warmup > 0
        assert clean.n_frames == stress.n_frames == 300


class TestSynthEmbeddings:
    def test_stride_selects_expected_frames(self, small_clean_sim):
        embs = synth_embeddings(small_clean_sim, stride=15, seed=1)
        assert sorted({e.frame for e in embs}) == sample_frame_indices(60, 15)
        wanted = set(sample_frame_indices(60, 15))
        n_dets = sum(1 for d in small_clean_sim.detections if d.frame in wanted)
        assert len(embs) == n_dets

    def test_embeddings_link_cleanly(self, small_clean_sim):
        embs = synth_embeddings(small_clean_sim, stride=20, seed=1)
        linked = link_embeddings(small_clean_sim.detections, embs)
        assert len(linked) == len(embs)

    def test_zero_noise_gives_exact_prototypes(self, small_clean_sim):
        embs = synth_embeddings(small_clean_sim, stride=30, noise_sigma=0.0, seed=1)
        linked = link_embeddings(small_clean_sim.detections, embs)
        dets_by_frame = {}
        for d in small_clean_sim.detections:
            dets_by_frame.setdefault(d.frame, []).append(d)
        oid_by_key = {}
        pos = {}
        for d, oid in zip(small_clean_sim.detections, small_clean_sim.det_object_ids):
            idx = pos.setdefault(d.frame, 0)
            oid_by_key[(d.frame, idx)] = oid
            pos[d.frame] = idx + 1

        seen_axes = set()
        for key, emb in linked.items():
            oid = oid_by_key[key]
            cid = small_clean_sim.object_classes[oid]
            hot = np.nonzero(emb.vec)[0]
            assert len(hot) == 1
            axis = int(hot[0])
            assert emb.vec[axis] == 1.0
            seen_axes.add((cid, small_clean_sim.true_teams[oid], axis))
        # each (class, team) kit maps to exactly one axis
        kits = {(cid, team) for cid, team, _ in seen_axes}
        assert len(seen_axes) == len(kits)

    def test_team_prototypes_orthogonal(self, small_clean_sim):
        embs = synth_embeddings(small_clean_sim, stride=30, noise_sigma=0.0, seed=1)
        linked = link_embeddings(small_clean_sim.detections, embs)
        vecs = {}
        pos = {}
        oid_by_key = {}
        for d, oid in zip(small_clean_sim.detections, small_clean_sim.det_object_ids):
            idx = pos.setdefault(d.frame, 0)
            oid_by_key[(d.frame, idx)] = oid
            pos[d.frame] = idx + 1
        for key, emb in linked.items():
            oid = oid_by_key[key]
            if small_clean_sim.object_classes[oid] == PLAYER:
                vecs[small_clean_sim.true_teams[oid]] = emb.vec
        assert float(vecs[0] @ vecs[1]) == 0.0
        assert abs(float(np.linalg.norm(vecs[0] - vecs[1])) - np.sqrt(2)) < 1e-12

    def test_noise_seeds_are_independent(self, small_clean_sim):
        a = synth_embeddings(small_clean_sim, stride=30, noise_sigma=0.1, seed=1)
        b = synth_embeddings(small_clean_sim, stride=30, noise_sigma=0.1, seed=2)
        assert not np.array_equal(a[0].vec, b[0].vec)
        again = synth_embeddings(small_clean_sim, stride=30, noise_sigma=0.1, seed=1)
        assert all(np.array_equal(x.vec, y.vec) for x, y in zip(a, again))

    def test_rejects_negative_noise(self, small_clean_sim):
        with pytest.raises(ConfigError):
            synth_embeddings(small_clean_sim, noise_sigma=-0.1)

    def test_vectors_have_model_dimension(self, small_clean_sim):
        embs = synth_embeddings(small_clean_sim, stride=30, seed=1)
        assert all(e.vec.shape == (EMBEDDING_DIM,) for e in embs)
