import json
import re

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bodyface.bfd import NOSE, NUM_JOINTS, R_EYE, L_EYE, R_EAR, L_EAR, Joint, PersonPose
from bodyface.evaluation import FROC, PER_IMAGE, PR, CurveSeries, GroundTruthFace
from bodyface.geometry import BoundingBox, ImageSize
from bodyface.io import (
    Dataset, DetectionFile, DetectionRow, ImageDirectory, ImageRecord, KeypointDocument, ParseError,
    curve_filename, dumps_detections, dumps_ground_truth, dumps_keypoints, load_image, parse_curve_csv,
    parse_detections, parse_ground_truth, parse_keypoint_document, parse_keypoints, read_dataset,
    read_detections, read_keypoints_path, save_image, write_curve_csv, write_dataset, write_detections,
    write_keypoints,
)
from bodyface.plot import emit_plot, legend_label
from bodyface.skin import ImagePatch, ImageUnavailableError


def keypoint_json(people, **extra):
    doc = {"version": 1, "image_id": "img1", "image_size": [640, 480], "people": people}
    doc.update(extra)
    return json.dumps(doc)


def flat_person(present=(NOSE, R_EYE, L_EYE, R_EAR, L_EAR)):
    flat = [0.0] * (3 * NUM_JOINTS)
    for j in present:
        flat[3 * j:3 * j + 3] = [100.0 + j, 50.0 + j, 0.9]
    return flat


class TestKeypoints:
    def test_one_person_face_joints(self):
        pairs = parse_keypoints(keypoint_json([{"person_id": "p", "pose_keypoints_2d": flat_person()}]))
        assert len(pairs) == 1
        image_id, pose = pairs[0]
        assert image_id == "img1" and pose.person_id == "p"
        assert len(pose.joints) == NUM_JOINTS
        for j in (NOSE, R_EYE, L_EYE, R_EAR, L_EAR):
            assert pose.joints[j].present
            assert pose.joints[j].location.x == 100.0 + j

    def test_null_joint_is_absent(self):
        pose = parse_keypoints(keypoint_json([{"pose_keypoints_2d": flat_person(present=())}]))[0][1]
        assert not any(j.present for j in pose.joints)

    def test_zero_confidence_elsewhere_is_present(self):
        flat = flat_person(present=())
        flat[0:3] = [5.0, 0.0, 0.0]
        pose = parse_keypoints(keypoint_json([{"pose_keypoints_2d": flat}]))[0][1]
        assert pose.joints[NOSE].present and pose.joints[NOSE].confidence == 0.0

    def test_17_joints_rejected(self):
        with pytest.raises(ParseError, match=r"people\[0\]\.pose_keypoints_2d"):
            parse_keypoints(keypoint_json([{"pose_keypoints_2d": [0.0] * 51}]))

    def test_version_mandatory(self):
        doc = json.loads(keypoint_json([]))
        del doc["version"]
        with pytest.raises(ParseError, match="version"):
            parse_keypoints(json.dumps(doc))
        with pytest.raises(ParseError, match="version"):
            parse_keypoints(keypoint_json([], version=2))

    def test_malformed_number(self):
        flat = flat_person()
        flat[4] = "x"
        with pytest.raises(ParseError, match=r"pose_keypoints_2d\[3:6\]"):
            parse_keypoints(keypoint_json([{"pose_keypoints_2d": flat}]))

    def test_bad_json_has_line(self):
        with pytest.raises(ParseError, match=r":2:"):
            parse_keypoints('{"version": 1,\n oops}')

    def test_confidence_range(self):
        flat = flat_person()
        flat[2] = 1.5
        with pytest.raises(ParseError, match="confidence"):
            parse_keypoints(keypoint_json([{"pose_keypoints_2d": flat}]))

    def test_defaults(self):
        doc = parse_keypoint_document('{"version": 1, "people": []}', default_image_id="stem")
        assert doc.image_id == "stem" and doc.image_size == ImageSize(5184, 3456)

    def test_order_preserved(self):
        people = [{"person_id": str(k), "pose_keypoints_2d": flat_person()} for k in (3, 1, 2)]
        assert [p.person_id for _, p in parse_keypoints(keypoint_json(people))] == ["3", "1", "2"]

    def test_duplicate_image_ids_in_directory(self, tmp_path):
        doc = KeypointDocument("same", ImageSize(10, 10), ())
        write_keypoints(doc, tmp_path / "a.keypoints")
        write_keypoints(doc, tmp_path / "b.keypoints")
        with pytest.raises(ParseError, match="duplicate"):
            read_keypoints_path(tmp_path)


coordinate = st.floats(0.5, 5000, allow_nan=False)
conf = st.floats(0.01, 1.0)
joint = st.one_of(st.just(Joint()), st.builds(Joint.at, coordinate, coordinate, conf))
pose = st.builds(PersonPose, st.tuples(*[joint] * NUM_JOINTS), st.integers(0, 99).map(str))


@settings(max_examples=40, deadline=None)
@given(st.lists(pose, max_size=4))
def test_keypoint_round_trip(people):
    doc = KeypointDocument("img", ImageSize(800, 600), tuple(people))
    assert parse_keypoint_document(dumps_keypoints(doc)) == doc


class TestGroundTruth:
    HEADER = "image_id,face_id,x,y,w,h\n"

    def test_row(self):
        faces = parse_ground_truth(self.HEADER + "img1,7,100,120,90,90\n")
        assert faces == [GroundTruthFace(BoundingBox(100, 120, 90, 90), "img1", "7")]

    def test_duplicate(self):
        with pytest.raises(ParseError, match=":3"):
            parse_ground_truth(self.HEADER + "img1,7,0,0,9,9\nimg1,7,5,5,9,9\n")

    def test_same_face_id_other_image_ok(self):
        assert len(parse_ground_truth(self.HEADER + "a,7,0,0,9,9\nb,7,5,5,9,9\n")) == 2

    def test_zero_width(self):
        with pytest.raises(ParseError, match=":2"):
            parse_ground_truth(self.HEADER + "img1,7,100,120,0,90\n")

    def test_header_required(self):
        with pytest.raises(ParseError, match=":1"):
            parse_ground_truth("img1,7,100,120,90,90\n")

    def test_round_trip(self):
        faces = [GroundTruthFace(BoundingBox(0.1, 2, 3.25, 4), "x", "1"),
                 GroundTruthFace(BoundingBox(5, 6, 7, 8), "y", "2")]
        assert parse_ground_truth(dumps_ground_truth(faces)) == faces


class TestDetections:
    def test_empty(self):
        assert parse_detections("image_id,x,y,w,h,score\n", "m").rows == ()

    def test_single_row_bit_exact(self):
        row = DetectionRow("img", BoundingBox(0.1 + 0.2, 1 / 3, 12.5, 7e-5), 0.1 + 0.7)
        df = DetectionFile("m", (row,))
        back = parse_detections(dumps_detections(df), "m")
        assert back == df
        assert back.rows[0].score.hex() == row.score.hex()

    def test_score_out_of_range(self):
        with pytest.raises(ParseError, match="score"):
            parse_detections("image_id,x,y,w,h,score\nimg,0,0,1,1,1.5\n", "m")

    def test_method_from_filename(self, tmp_path):
        df = DetectionFile("BFD", (DetectionRow("a", BoundingBox(1, 2, 3, 4), 0.5),))
        path = write_detections(df, tmp_path)
        assert path.name == "BFD.det.csv"
        assert read_detections(path) == df

    def test_quoted_ids(self):
        df = DetectionFile("m", (DetectionRow("a,b", BoundingBox(1, 2, 3, 4), 1.0),))
        assert parse_detections(dumps_detections(df), "m") == df


floats_pos = st.floats(1e-3, 1e4, allow_nan=False)


@given(st.lists(st.builds(DetectionRow, st.sampled_from(["a", "b", "img 3"]),
                          st.builds(BoundingBox, st.floats(-1e4, 1e4), st.floats(-1e4, 1e4),
                                    floats_pos, floats_pos),
                          st.floats(0, 1)), max_size=8))
def test_detection_round_trip(rows):
    df = DetectionFile("m", tuple(rows))
    assert parse_detections(dumps_detections(df), "m") == df


def froc(points, auc=0.5, method="BFD"):
    return CurveSeries(FROC, tuple(points), auc, PER_IMAGE, method)


class TestCurves:
    def test_single_point(self):
        text = write_curve_csv(froc([(0, 0)], 0.0))
        assert text == "x,y\n0,0\n# auc=0.0\n"

    def test_round_trip(self):
        c = froc([(0, 0), (0.5, 1 / 3), (2, 0.9)], 0.123456789)
        assert parse_curve_csv(write_curve_csv(c), FROC, PER_IMAGE, "BFD") == c

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            write_curve_csv(froc([]))

    def test_missing_footer(self):
        with pytest.raises(ParseError, match="auc"):
            parse_curve_csv("x,y\n0,0\n", FROC, PER_IMAGE)

    def test_filename(self):
        assert curve_filename(froc([(0, 0)])) == "BFD.froc.curve.csv"


class TestPlot:
    def test_legend_two_decimals(self):
        assert legend_label(froc([(0, 0)], 0.94)) == "BFD (0.94)"
        assert "BFD (0.94)" in emit_plot([froc([(0, 0), (1, 0.9)], 0.94)])

    def test_two_series(self):
        svg = emit_plot([froc([(0, 0), (1, 1)], 0.94), froc([(0, 0), (1, 0.5)], 0.83, "SSH")])
        assert svg.count("<polyline") == 2
        assert "BFD (0.94)" in svg and "SSH (0.83)" in svg

    def test_deterministic(self):
        series = [froc([(0, 0), (0.3, 0.7), (1, 0.9)], 0.71)]
        assert emit_plot(series) == emit_plot(list(series))
        assert not re.search(r"\d{4}-\d{2}-\d{2}", emit_plot(series))

    def test_svg_header(self):
        svg = emit_plot([froc([(0, 0), (1, 1)])])
        assert svg.startswith('<?xml version="1.0"')
        assert 'version="1.1"' in svg and svg.rstrip().endswith("</svg>")

    def test_errors(self):
        with pytest.raises(ValueError):
            emit_plot([])
        with pytest.raises(ValueError):
            emit_plot([froc([])])
        with pytest.raises(ValueError):
            emit_plot([froc([(0, 0)]), CurveSeries(PR, ((0, 1),), 1.0, "recall", "BFD")])


class TestImages:
    def test_round_trip(self, tmp_path, rng):
        patch = ImagePatch(rng.integers(0, 256, (7, 9, 3), dtype=np.uint8))
        save_image(patch, tmp_path / "a.png")
        assert np.array_equal(load_image(tmp_path / "a.png").pixels, patch.pixels)
        d = ImageDirectory(tmp_path)
        assert "a" in d and "b" not in d
        with pytest.raises(ImageUnavailableError):
            d.load("b")

    def test_corrupt_file(self, tmp_path):
        (tmp_path / "x.png").write_bytes(b"not an image")
        with pytest.raises(ImageUnavailableError):
            load_image(tmp_path / "x.png")


class TestDataset:
    def test_invariants(self):
        with pytest.raises(ValueError):
            Dataset((ImageRecord("a"), ImageRecord("a")))
        with pytest.raises(ValueError):
            Dataset((ImageRecord("a"),), (GroundTruthFace(BoundingBox(0, 0, 1, 1), "b", "1"),))

    def test_round_trip(self, tmp_path):
        p = PersonPose(tuple(Joint.at(10 + j, 20 + j, 0.5) for j in range(NUM_JOINTS)), "0")
        ds = Dataset((ImageRecord("a", ImageSize(100, 80)), ImageRecord("b", ImageSize(100, 80))),
                     (GroundTruthFace(BoundingBox(1, 2, 3, 4), "a", "0"),),
                     (("a", p),))
        write_dataset(ds, tmp_path)
        assert read_dataset(tmp_path / "keypoints", tmp_path / "gt.csv") == ds
