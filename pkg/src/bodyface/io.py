"""Reading and writing every file the package consumes or produces.

File formats
------------
``<image_id>.keypoints``
    JSON, one image per file::

        {"version": 1, "image_id": "img0001", "image_size": [5184, 3456],
         "people": [{"person_id": "0", "pose_keypoints_2d": [x0, y0, c0, ..., x17, y17, c17]}]}

    ``version`` is mandatory, except that an empty file reads as an image
    with nobody in it.  Each person carries 54 numbers in the
    18-joint keypoint order; ``(0, 0, 0)`` marks an undetected joint.  The
    ``people``/``pose_keypoints_2d`` layout matches common pose-estimator
    dumps.  ``image_id`` defaults to the file stem and ``image_size`` to
    5184x3456.
``gt.csv``
    header ``image_id,face_id,x,y,w,h``.
``<method>.det.csv``
    header ``image_id,x,y,w,h,score``.
``<method>.<kind>.curve.csv``
    header ``x,y``, one row per point, then a ``# auc=<value>`` footer.

CSV files are UTF-8 with LF line endings.  Floats are written with
``repr`` (integral values without the trailing ``.0``) so every format
reads back to the exact same values.
"""
from __future__ import annotations

import csv
import io as _io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .bfd import NUM_JOINTS, FaceDetection, Joint, PersonPose
from .evaluation import CurveSeries, GroundTruthFace
from .geometry import BoundingBox, ImageSize, InvalidBoxError
from .skin import ImagePatch, ImageUnavailableError

PathLike = Union[str, os.PathLike]

KEYPOINT_SCHEMA_VERSION = 1
KEYPOINTS_SUFFIX = ".keypoints"
DET_SUFFIX = ".det.csv"
GT_HEADER = ["image_id", "face_id", "x", "y", "w", "h"]
DET_HEADER = ["image_id", "x", "y", "w", "h", "score"]
CURVE_HEADER = ["x", "y"]
IMAGE_EXTENSIONS = (".ppm", ".pnm", ".png", ".bmp", ".tif", ".tiff")


class ParseError(ValueError):
    """Malformed input.  ``location`` names the file, line and/or field."""

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


def fmt_num(v: float) -> str:
    v = float(v)
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _parse_num(text: str, where: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", where) from None
    if not math.isfinite(v):
        raise ParseError(f"number must be finite: {text!r}", where)
    return v


# -- keypoints --------------------------------------------------------------

@dataclass(frozen=True)
class KeypointDocument:
    image_id: str
    image_size: ImageSize = field(default_factory=ImageSize)
    people: tuple[PersonPose, ...] = ()

    def pairs(self) -> list[tuple[str, PersonPose]]:
        return [(self.image_id, p) for p in self.people]


def _json_number(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"expected a number, got {v!r}", where)
    if not math.isfinite(v):
        raise ParseError("number must be finite", where)
    return float(v)


def parse_keypoint_document(text: str, source: str = "<keypoints>",
                            default_image_id: Optional[str] = None) -> KeypointDocument:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"{source}:{exc.lineno}:{exc.colno}") from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object", source)
    if "version" not in doc:
        raise ParseError("missing mandatory 'version'", f"{source}: version")
    if doc["version"] != KEYPOINT_SCHEMA_VERSION or isinstance(doc["version"], bool):
        raise ParseError(f"unsupported schema version {doc['version']!r}", f"{source}: version")

    image_id = doc.get("image_id", default_image_id)
    if not isinstance(image_id, str) or not image_id:
        raise ParseError("image_id must be a non-empty string", f"{source}: image_id")

    size = ImageSize()
    if "image_size" in doc:
        raw = doc["image_size"]
        if (not isinstance(raw, list) or len(raw) != 2
                or not all(isinstance(v, int) and not isinstance(v, bool) for v in raw)):
            raise ParseError("image_size must be [width, height] integers", f"{source}: image_size")
        try:
            size = ImageSize(*raw)
        except ValueError as exc:
            raise ParseError(str(exc), f"{source}: image_size") from None

    people = doc.get("people")
    if not isinstance(people, list):
        raise ParseError("'people' must be a list", f"{source}: people")
    poses = []
    for k, person in enumerate(people):
        where = f"{source}: people[{k}]"
        if not isinstance(person, dict):
            raise ParseError("person entry must be an object", where)
        flat = person.get("pose_keypoints_2d")
        if not isinstance(flat, list):
            raise ParseError("missing 'pose_keypoints_2d' list", where)
        if len(flat) != 3 * NUM_JOINTS:
            raise ParseError(f"expected {3 * NUM_JOINTS} numbers ({NUM_JOINTS} joints), "
                             f"got {len(flat)}", f"{where}.pose_keypoints_2d")
        joints = []
        for j in range(NUM_JOINTS):
            jw = f"{where}.pose_keypoints_2d[{3 * j}:{3 * j + 3}]"
            x, y, c = (_json_number(v, jw) for v in flat[3 * j:3 * j + 3])
            if x == 0.0 and y == 0.0 and c == 0.0:
                joints.append(Joint())
                continue
            if not 0.0 <= c <= 1.0:
                raise ParseError(f"confidence {c!r} outside [0, 1]", jw)
            joints.append(Joint.at(x, y, c))
        pid = person.get("person_id", str(k))
        if not isinstance(pid, (str, int)) or isinstance(pid, bool):
            raise ParseError("person_id must be a string or integer", f"{where}.person_id")
        poses.append(PersonPose(tuple(joints), pid))
    return KeypointDocument(image_id, size, tuple(poses))


def parse_keypoints(text: str, source: str = "<keypoints>",
                    default_image_id: Optional[str] = None) -> list[tuple[str, PersonPose]]:
    """Keypoint document to ``(image_id, pose)`` pairs, in document order."""
    return parse_keypoint_document(text, source, default_image_id).pairs()


def dumps_keypoints(doc: KeypointDocument) -> str:
    head = {"version": KEYPOINT_SCHEMA_VERSION, "image_id": doc.image_id,
            "image_size": [doc.image_size.width, doc.image_size.height]}
    lines = [json.dumps(head)[:-1] + ', "people": [']
    rows = []
    for p in doc.people:
        flat = []
        for j in p.joints:
            if j.present:
                flat.extend((j.location.x, j.location.y, j.confidence))
            else:
                flat.extend((0.0, 0.0, 0.0))
        rows.append(json.dumps({"person_id": p.person_id, "pose_keypoints_2d": flat}))
    lines.append(",\n".join(rows))
    lines.append("]}")
    return "\n".join(lines if rows else [lines[0] + "]}"]) + "\n"


def read_keypoints(path: PathLike) -> KeypointDocument:
    path = Path(path)
    stem = path.name[:-len(KEYPOINTS_SUFFIX)] if path.name.endswith(KEYPOINTS_SUFFIX) else path.stem
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read: {exc.strerror}", str(path)) from None
    if not text.strip():
        # a zero-byte dump means the estimator saw nobody
        return KeypointDocument(stem)
    return parse_keypoint_document(text, str(path), stem)


def read_keypoints_path(path: PathLike) -> list[KeypointDocument]:
    """A single ``.keypoints`` file or every one in a directory (sorted by name)."""
    path = Path(path)
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.name.endswith(KEYPOINTS_SUFFIX))
        docs = [read_keypoints(p) for p in files]
    else:
        docs = [read_keypoints(path)]
    seen = set()
    for d in docs:
        if d.image_id in seen:
            raise ParseError(f"duplicate image_id {d.image_id!r}", str(path))
        seen.add(d.image_id)
    return docs


def write_keypoints(doc: KeypointDocument, path: PathLike) -> None:
    write_text(path, dumps_keypoints(doc))


# -- CSV helpers ------------------------------------------------------------

def _csv_rows(text: str, header: list[str], source: str):
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError("empty file, expected a header", f"{source}:1")
    got = lines[0].rstrip("\r").split(",")
    if got != header:
        raise ParseError(f"expected header {','.join(header)!r}, got {lines[0]!r}", f"{source}:1")
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.rstrip("\r")
        if not line or line.startswith("#"):
            yield lineno, None
            continue
        cells = next(csv.reader([line]))
        if len(cells) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(cells)}", f"{source}:{lineno}")
        yield lineno, cells


def _csv_text(header: list[str], rows: Iterable[Sequence[str]]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _box_from_cells(cells: Sequence[str], lineno: int, source: str, names=("x", "y", "w", "h")):
    vals = [_parse_num(c, f"{source}:{lineno}: {n}") for c, n in zip(cells, names)]
    try:
        return BoundingBox(*vals)
    except (InvalidBoxError, ValueError) as exc:
        raise ParseError(str(exc), f"{source}:{lineno}") from None


def _box_cells(b: BoundingBox) -> list[str]:
    return [fmt_num(b.x), fmt_num(b.y), fmt_num(b.w), fmt_num(b.h)]


# -- ground truth -----------------------------------------------------------

def parse_ground_truth(text: str, source: str = "<gt.csv>") -> list[GroundTruthFace]:
    out = []
    seen = {}
    for lineno, cells in _csv_rows(text, GT_HEADER, source):
        if cells is None:
            continue
        image_id, face_id = cells[0], cells[1]
        if not image_id or not face_id:
            raise ParseError("image_id and face_id must be non-empty", f"{source}:{lineno}")
        key = (image_id, face_id)
        if key in seen:
            raise ParseError(f"duplicate face {face_id!r} in image {image_id!r} "
                             f"(first on line {seen[key]})", f"{source}:{lineno}")
        seen[key] = lineno
        out.append(GroundTruthFace(_box_from_cells(cells[2:], lineno, source), image_id, face_id))
    return out


def dumps_ground_truth(faces: Iterable[GroundTruthFace]) -> str:
    return _csv_text(GT_HEADER, ([str(f.image_id), str(f.face_id), *_box_cells(f.box)] for f in faces))


def read_ground_truth(path: PathLike) -> list[GroundTruthFace]:
    return parse_ground_truth(read_text(path), str(path))


# -- detections -------------------------------------------------------------

@dataclass(frozen=True)
class DetectionRow:
    image_id: str
    box: BoundingBox
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must lie in [0, 1], got {self.score!r}")

    def as_detection(self) -> FaceDetection:
        return FaceDetection(self.box, self.score)


@dataclass(frozen=True)
class DetectionFile:
    method: str
    rows: tuple[DetectionRow, ...] = ()

    def by_image(self) -> dict[str, list[FaceDetection]]:
        out: dict[str, list[FaceDetection]] = {}
        for r in self.rows:
            out.setdefault(r.image_id, []).append(r.as_detection())
        return out


def parse_detections(text: str, method: str, source: str = "<detections>") -> DetectionFile:
    rows = []
    for lineno, cells in _csv_rows(text, DET_HEADER, source):
        if cells is None:
            continue
        if not cells[0]:
            raise ParseError("image_id must be non-empty", f"{source}:{lineno}")
        box = _box_from_cells(cells[1:5], lineno, source)
        score = _parse_num(cells[5], f"{source}:{lineno}: score")
        if not 0.0 <= score <= 1.0:
            raise ParseError(f"score {score!r} outside [0, 1]", f"{source}:{lineno}: score")
        rows.append(DetectionRow(cells[0], box, score))
    return DetectionFile(method, tuple(rows))


def dumps_detections(df: DetectionFile) -> str:
    return _csv_text(DET_HEADER, ([r.image_id, *_box_cells(r.box), fmt_num(r.score)] for r in df.rows))


def method_from_path(path: PathLike) -> str:
    name = Path(path).name
    return name[:-len(DET_SUFFIX)] if name.endswith(DET_SUFFIX) else Path(path).stem


def read_detections(path: PathLike) -> DetectionFile:
    return parse_detections(read_text(path), method_from_path(path), str(path))


def write_detections(df: DetectionFile, out_dir: PathLike) -> Path:
    path = Path(out_dir) / f"{df.method}{DET_SUFFIX}"
    write_text(path, dumps_detections(df))
    return path


# -- curves -----------------------------------------------------------------

def write_curve_csv(series: CurveSeries) -> str:
    if not series.points:
        raise ValueError("cannot write an empty curve")
    text = _csv_text(CURVE_HEADER, ([fmt_num(x), fmt_num(y)] for x, y in series.points))
    return text + f"# auc={series.auc!r}\n"


def parse_curve_csv(text: str, kind: str, x_axis: str, method: str = "",
                    source: str = "<curve>") -> CurveSeries:
    points = []
    auc = None
    for lineno, cells in _csv_rows(text, CURVE_HEADER, source):
        if cells is None:
            line = text.split("\n")[lineno - 1]
            if line.startswith("# auc="):
                auc = _parse_num(line[len("# auc="):], f"{source}:{lineno}: auc")
            continue
        if auc is not None:
            raise ParseError("data row after the auc footer", f"{source}:{lineno}")
        points.append((_parse_num(cells[0], f"{source}:{lineno}: x"),
                       _parse_num(cells[1], f"{source}:{lineno}: y")))
    if not points:
        raise ParseError("curve has no points", source)
    if auc is None:
        raise ParseError("missing '# auc=' footer", source)
    return CurveSeries(kind, tuple(points), auc, x_axis, method)


def curve_filename(series: CurveSeries) -> str:
    return f"{series.method}.{series.kind.lower()}.curve.csv"


# -- images -----------------------------------------------------------------

def load_image(path: PathLike) -> ImagePatch:
    from PIL import Image

    try:
        with Image.open(path) as im:
            return ImagePatch(np.asarray(im.convert("RGB")))
    except (OSError, ValueError) as exc:
        raise ImageUnavailableError(f"{path}: {exc}") from None


def save_image(patch: ImagePatch, path: PathLike) -> None:
    from PIL import Image

    Image.fromarray(patch.pixels, "RGB").save(path)


class ImageDirectory:
    """Looks up ``<image_id>.<ext>`` for the lossless extensions we decode."""

    def __init__(self, root: PathLike):
        self.root = Path(root)

    def path_for(self, image_id: str) -> Optional[Path]:
        for ext in IMAGE_EXTENSIONS:
            p = self.root / f"{image_id}{ext}"
            if p.is_file():
                return p
        return None

    def __contains__(self, image_id) -> bool:
        return self.path_for(image_id) is not None

    def load(self, image_id: str) -> ImagePatch:
        p = self.path_for(image_id)
        if p is None:
            raise ImageUnavailableError(f"no image for {image_id!r} in {self.root}")
        return load_image(p)


# -- datasets ---------------------------------------------------------------

@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    size: ImageSize = field(default_factory=ImageSize)
    path: Optional[str] = None


@dataclass(frozen=True)
class Dataset:
    images: tuple[ImageRecord, ...]
    ground_truth: tuple[GroundTruthFace, ...] = ()
    poses: tuple[tuple[str, PersonPose], ...] = ()

    def __post_init__(self):
        ids = [im.image_id for im in self.images]
        if len(set(ids)) != len(ids):
            raise ValueError("image ids must be unique")
        known = set(ids)
        for f in self.ground_truth:
            if f.image_id not in known:
                raise ValueError(f"ground truth references unknown image {f.image_id!r}")
        for image_id, _ in self.poses:
            if image_id not in known:
                raise ValueError(f"pose references unknown image {image_id!r}")

    def image_ids(self) -> list[str]:
        return [im.image_id for im in self.images]

    def poses_by_image(self) -> dict[str, list[PersonPose]]:
        out = {i: [] for i in self.image_ids()}
        for image_id, p in self.poses:
            out[image_id].append(p)
        return out

    def gt_by_image(self) -> dict[str, list[GroundTruthFace]]:
        out = {i: [] for i in self.image_ids()}
        for f in self.ground_truth:
            out[f.image_id].append(f)
        return out

    def keypoint_documents(self) -> list[KeypointDocument]:
        by = self.poses_by_image()
        return [KeypointDocument(im.image_id, im.size, tuple(by[im.image_id])) for im in self.images]


def write_dataset(ds: Dataset, out_dir: PathLike) -> None:
    """``out_dir/keypoints/<image_id>.keypoints`` plus ``out_dir/gt.csv``."""
    out = Path(out_dir)
    (out / "keypoints").mkdir(parents=True, exist_ok=True)
    for doc in ds.keypoint_documents():
        write_keypoints(doc, out / "keypoints" / f"{doc.image_id}{KEYPOINTS_SUFFIX}")
    write_text(out / "gt.csv", dumps_ground_truth(ds.ground_truth))


def read_dataset(keypoints: PathLike, gt: Optional[PathLike] = None) -> Dataset:
    docs = read_keypoints_path(keypoints)
    faces = read_ground_truth(gt) if gt is not None else []
    images = tuple(ImageRecord(d.image_id, d.image_size) for d in docs)
    poses = tuple(pair for d in docs for pair in d.pairs())
    return Dataset(images, tuple(faces), poses)


def read_text(path: PathLike) -> str:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read: {exc.strerror}", str(path)) from None


def write_text(path: PathLike, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
