import numpy as np
import pytest

from oracles import pixel_iou_oracle
from pitchtrack.core import (
    BoundingBox,
    CLASS_NAMES,
    CenterForm,
    ClassMap,
    DEFAULT_CLASS_MAP,
    Detection,
    EMBEDDING_DIM,
    Embedding,
    GroundTruth,
    iou,
    iou_matrix,
    iou_matrix_xyxy,
    iou_xyxy,
    to_box,
    to_center_form,
)
from pitchtrack.errors import GeometryError, ValidationError


def box(x1, y1, x2, y2):
    return BoundingBox(float(x1), float(y1), float(x2), float(y2))


class TestBoundingBox:
    def test_derived_properties(self):
        b = box(10, 20, 110, 70)
        assert b.width == 100.0
        assert b.height == 50.0
        assert b.area == 5000.0
        assert b.as_tuple() == (10.0, 20.0, 110.0, 70.0)

    @pytest.mark.parametrize("coords", [(10, 0, 10, 5), (10, 0, 5, 5), (0, 5, 5, 5)])
    def test_rejects_empty_or_inverted(self, coords):
        with pytest.raises(GeometryError):
            box(*coords)

    def test_rejects_negative_coords(self):
        with pytest.raises(GeometryError):
            box(-1, 0, 5, 5)

    @pytest.mark.parametrize("bad", [float("nan"), float("inf")])
    def test_rejects_non_finite(self, bad):
        with pytest.raises(GeometryError):
            box(0, 0, bad, 5)


class TestIou:
    def test_quarter_overlap_exact_fraction(self):
        # 50x50 intersection, union 2*10000 - 2500
        a = box(0, 0, 100, 100)
        b = box(50, 50, 150, 150)
        assert abs(iou(a, b) - 2500 / 17500) < 1e-12

    def test_identical_boxes(self):
        a = box(3, 4, 10, 12)
        assert iou(a, a) == 1.0

    def test_disjoint_and_touching(self):
        a = box(0, 0, 10, 10)
        assert iou(a, box(20, 20, 30, 30)) == 0.0
        # shared edge has zero area
        assert iou(a, box(10, 0, 20, 10)) == 0.0

    def test_contained_box(self):
        outer = box(0, 0, 100, 100)
        inner = box(25, 25, 75, 75)
        assert abs(iou(outer, inner) - 2500 / 10000) < 1e-12

    def test_matches_unit_cell_counting(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            ax1, ay1 = rng.integers(0, 30, 2)
            bx1, by1 = rng.integers(0, 30, 2)
            aw, ah, bw, bh = rng.integers(1, 12, 4)
            a = (int(ax1), int(ay1), int(ax1 + aw), int(ay1 + ah))
            b = (int(bx1), int(by1), int(bx1 + bw), int(by1 + bh))
            expected = pixel_iou_oracle(a, b)
            assert abs(iou(box(*a), box(*b)) - expected) < 1e-12

    def test_raw_variant_tolerates_degenerate_boxes(self):
        assert iou_xyxy((5, 5, 5, 9), (0, 0, 10, 10)) == 0.0
        assert iou_xyxy((0, 0, 10, 10), (3, 7, 3, 7)) == 0.0

    def test_matrix_matches_scalar(self):
        rng = np.random.default_rng(7)
        boxes_a = [box(x, y, x + w, y + h)
                   for x, y, w, h in zip(rng.uniform(0, 50, 8), rng.uniform(0, 50, 8),
                                         rng.uniform(1, 30, 8), rng.uniform(1, 30, 8))]
        boxes_b = [box(x, y, x + w, y + h)
                   for x, y, w, h in zip(rng.uniform(0, 50, 5), rng.uniform(0, 50, 5),
                                         rng.uniform(1, 30, 5), rng.uniform(1, 30, 5))]
        matrix = iou_matrix(boxes_a, boxes_b)
        assert matrix.shape == (8, 5)
        for i, a in enumerate(boxes_a):
            for j, b in enumerate(boxes_b):
                assert abs(matrix[i, j] - iou(a, b)) < 1e-12

    def test_matrix_empty_sides(self):
        arr = np.array([[0.0, 0.0, 5.0, 5.0]])
        assert iou_matrix_xyxy(np.empty((0, 4)), arr).shape == (0, 1)
        assert iou_matrix_xyxy(arr, np.empty((0, 4))).shape == (1, 0)


class TestCenterForm:
    def test_known_values(self):
        c = to_center_form(box(0, 0, 100, 50))
        assert (c.cx, c.cy, c.h) == (50.0, 25.0, 50.0)
        assert abs(c.a - 2.0) < 1e-12

    def test_round_trip(self):
        rng = np.random.default_rng(3)
        for _ in range(300):
            x, y = rng.uniform(0, 500, 2)
            w, h = rng.uniform(0.5, 200, 2)
            original = box(x, y, x + w, y + h)
            back = to_box(to_center_form(original))
            for got, want in zip(back.as_tuple(), original.as_tuple()):
                assert abs(got - want) < 1e-9

    @pytest.mark.parametrize("c", [CenterForm(10, 10, 0.5, 0.0),
                                   CenterForm(10, 10, 0.5, -3.0),
                                   CenterForm(10, 10, 0.0, 40.0)])
    def test_to_box_rejects_degenerate(self, c):
        with pytest.raises(GeometryError):
            to_box(c)


class TestClassMap:
    def test_default_is_alphabetical(self):
        assert CLASS_NAMES == ("ball", "goalkeeper", "player", "referee")
        for i, name in enumerate(CLASS_NAMES):
            assert DEFAULT_CLASS_MAP.id_of(name) == i
            assert DEFAULT_CLASS_MAP.name_of(i) == name
        assert DEFAULT_CLASS_MAP.ids == (0, 1, 2, 3)

    def test_custom_permutation(self):
        cm = ClassMap({"player": 0, "goalkeeper": 1, "referee": 2, "ball": 3})
        assert cm.id_of("player") == 0
        assert cm.name_of(3) == "ball"
        assert cm.ids == (3, 1, 0, 2)
        assert 3 in cm and 4 not in cm

    def test_rejects_wrong_name_set(self):
        with pytest.raises(ValidationError):
            ClassMap({"ball": 0, "goalkeeper": 1, "player": 2})
        with pytest.raises(ValidationError):
            ClassMap({"ball": 0, "goalkeeper": 1, "player": 2, "umpire": 3})

    def test_rejects_duplicate_ids(self):
        with pytest.raises(ValidationError):
            ClassMap({"ball": 0, "goalkeeper": 0, "player": 2, "referee": 3})

    def test_unknown_id_lookup(self):
        with pytest.raises(ValidationError):
            DEFAULT_CLASS_MAP.name_of(9)


class TestRecords:
    def test_detection_validation(self):
        b = box(0, 0, 5, 5)
        Detection(0, 2, 0.5, b)
        with pytest.raises(ValidationError):
            Detection(-1, 2, 0.5, b)
        with pytest.raises(ValidationError):
            Detection(0, 2, 1.5, b)

    def test_ground_truth_validation(self):
        b = box(0, 0, 5, 5)
        GroundTruth(0, 0, 2, b)
        with pytest.raises(ValidationError):
            GroundTruth(0, -1, 2, b)

    def test_embedding_dimension_enforced(self):
        Embedding(0, 0, np.zeros(EMBEDDING_DIM))
        with pytest.raises(ValidationError):
            Embedding(0, 0, np.zeros(EMBEDDING_DIM - 1))

    def test_embedding_rejects_non_finite(self):
        vec = np.zeros(EMBEDDING_DIM)
        vec[7] = np.nan
        with pytest.raises(ValidationError):
            Embedding(0, 0, vec)

    def test_embedding_vector_is_read_only(self):
        e = Embedding(0, 0, np.zeros(EMBEDDING_DIM))
        with pytest.raises(ValueError):
            e.vec[0] = 1.0

    def test_embedding_rejects_negative_indices(self):
        with pytest.raises(ValidationError):
            Embedding(-1, 0, np.zeros(EMBEDDING_DIM))
        with pytest.raises(ValidationError):
            Embedding(0, -1, np.zeros(EMBEDDING_DIM))
