"""Body-based face detection.

Turns the 18 body joints of one person (the layout produced by the
part-affinity-field pose estimator of Cao et al.) into at most one scored
face box:

1. drop face joints whose confidence is under the threshold,
2. decide frontal / profile / back of head from the eye-to-ear distances,
3. draw a square box around the surviving face joints,
4. discard boxes whose size falls outside ``[box_min, box_max]``.

An optional skin-colour check lives in :mod:`bodyface.skin`.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, replace
from typing import Hashable, Optional, Sequence

from .geometry import BoundingBox, Point2D

# Keypoint order of the 18-joint body model.
NOSE = 0
NECK = 1
R_SHOULDER, R_ELBOW, R_WRIST = 2, 3, 4
L_SHOULDER, L_ELBOW, L_WRIST = 5, 6, 7
R_HIP, R_KNEE, R_ANKLE = 8, 9, 10
L_HIP, L_KNEE, L_ANKLE = 11, 12, 13
R_EYE, L_EYE = 14, 15
R_EAR, L_EAR = 16, 17

NUM_JOINTS = 18
FACE_JOINTS = (NOSE, R_EYE, L_EYE, R_EAR, L_EAR)

JOINT_NAMES = (
    "nose", "neck",
    "right_shoulder", "right_elbow", "right_wrist",
    "left_shoulder", "left_elbow", "left_wrist",
    "right_hip", "right_knee", "right_ankle",
    "left_hip", "left_knee", "left_ankle",
    "right_eye", "left_eye", "right_ear", "left_ear",
)

#: Box scale calibrated on synthetic seed 0 (see demos/calibrate_alpha.py).
CALIBRATED_BOX_ALPHA = 1.39


class HeadPose(enum.Enum):
    FRONTAL = "frontal"
    LEFT_PROFILE = "left_profile"
    RIGHT_PROFILE = "right_profile"
    BACK_OF_HEAD = "back_of_head"
    INDETERMINATE = "indeterminate"


_ORIGIN = Point2D(0.0, 0.0)


@dataclass(frozen=True)
class Joint:
    """One keypoint.  When ``present`` is False the location and confidence
    carry no information and are normalised to zero."""

    location: Point2D = _ORIGIN
    confidence: float = 0.0
    present: bool = False

    def __post_init__(self):
        if not self.present:
            object.__setattr__(self, "location", _ORIGIN)
            object.__setattr__(self, "confidence", 0.0)
        elif not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"joint confidence must be in [0, 1], got {self.confidence!r}")

    @classmethod
    def at(cls, x: float, y: float, confidence: float = 1.0) -> Joint:
        return cls(Point2D(x, y), confidence, True)


ABSENT = Joint()


@dataclass(frozen=True)
class PersonPose:
    joints: tuple[Joint, ...]
    person_id: Hashable = 0

    def __post_init__(self):
        joints = tuple(self.joints)
        if len(joints) != NUM_JOINTS:
            raise ValueError(f"a pose has exactly {NUM_JOINTS} joints, got {len(joints)}")
        object.__setattr__(self, "joints", joints)

    def translated(self, dx: float, dy: float) -> PersonPose:
        moved = tuple(
            Joint(j.location.translated(dx, dy), j.confidence, True) if j.present else j
            for j in self.joints
        )
        return PersonPose(moved, self.person_id)


@dataclass(frozen=True)
class FaceJointSet:
    nose: Joint = ABSENT
    left_eye: Joint = ABSENT
    right_eye: Joint = ABSENT
    left_ear: Joint = ABSENT
    right_ear: Joint = ABSENT

    def present(self) -> list[Joint]:
        return [j for j in (self.nose, self.left_eye, self.right_eye, self.left_ear, self.right_ear)
                if j.present]

    def count(self) -> int:
        return len(self.present())


@dataclass(frozen=True)
class FaceDetection:
    box: BoundingBox
    score: float
    pose: Optional[HeadPose] = None    # None for boxes from other detectors
    source_person: Hashable = None

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"detection score must be in [0, 1], got {self.score!r}")


@dataclass(frozen=True)
class BfdConfig:
    joint_confidence_threshold: float = 0.3
    box_min: float = 90.0
    box_max: float = 500.0
    box_scale_alpha: float = CALIBRATED_BOX_ALPHA
    frontal_asymmetry_max: float = 0.4

    def __post_init__(self):
        if not 0.0 <= self.joint_confidence_threshold <= 1.0:
            raise ValueError("joint_confidence_threshold must lie in [0, 1]")
        if not 0.0 < self.box_min < self.box_max:
            raise ValueError("need 0 < box_min < box_max")
        if not self.box_scale_alpha > 0.0:
            raise ValueError("box_scale_alpha must be positive")
        if not 0.0 < self.frontal_asymmetry_max < 1.0:
            raise ValueError("frontal_asymmetry_max must lie in (0, 1)")

    def replace(self, **changes) -> BfdConfig:
        return replace(self, **changes)


DEFAULT_CONFIG = BfdConfig()


def filter_face_joints(pose: PersonPose, cfg: BfdConfig = DEFAULT_CONFIG) -> FaceJointSet:
    """Pick the five face joints, marking low-confidence ones absent.

    A confidence equal to the threshold survives.
    """
    thr = cfg.joint_confidence_threshold

    def keep(j: Joint) -> Joint:
        return j if j.present and j.confidence >= thr else ABSENT

    js = pose.joints
    return FaceJointSet(
        nose=keep(js[NOSE]),
        left_eye=keep(js[L_EYE]),
        right_eye=keep(js[R_EYE]),
        left_ear=keep(js[L_EAR]),
        right_ear=keep(js[R_EAR]),
    )


def eye_ear_asymmetry(fjs: FaceJointSet) -> Optional[float]:
    """``|d_L - d_R| / max(d_L, d_R)`` or None when an eye-ear pair is missing."""
    if not (fjs.left_eye.present and fjs.left_ear.present
            and fjs.right_eye.present and fjs.right_ear.present):
        return None
    d_left = fjs.left_eye.location.distance(fjs.left_ear.location)
    d_right = fjs.right_eye.location.distance(fjs.right_ear.location)
    longest = max(d_left, d_right)
    if longest == 0.0:
        return 0.0
    return abs(d_left - d_right) / longest


def classify_head_pose(fjs: FaceJointSet, cfg: BfdConfig = DEFAULT_CONFIG) -> HeadPose:
    left, right = fjs.left_eye.present, fjs.right_eye.present
    if not (left or right):
        return HeadPose.INDETERMINATE if fjs.nose.present else HeadPose.BACK_OF_HEAD
    if left and not right:
        return HeadPose.LEFT_PROFILE
    if right and not left:
        return HeadPose.RIGHT_PROFILE

    r = eye_ear_asymmetry(fjs)
    if r is None or r <= cfg.frontal_asymmetry_max:
        return HeadPose.FRONTAL
    # the side with the longer eye-ear span is the one facing the camera
    d_left = fjs.left_eye.location.distance(fjs.left_ear.location)
    d_right = fjs.right_eye.location.distance(fjs.right_ear.location)
    return HeadPose.LEFT_PROFILE if d_left > d_right else HeadPose.RIGHT_PROFILE


def build_face_box(fjs: FaceJointSet, pose: HeadPose, cfg: BfdConfig = DEFAULT_CONFIG,
                   source_person: Hashable = None) -> Optional[FaceDetection]:
    """Square box around the face joints, or None if there is no face to box.

    The box is centred on the confidence-weighted centroid of the present
    face joints and its side is ``box_scale_alpha`` times their largest
    pairwise distance.  At least two face joints are needed, one of them the
    nose or an eye.
    """
    if pose in (HeadPose.BACK_OF_HEAD, HeadPose.INDETERMINATE):
        return None
    joints = fjs.present()
    if len(joints) < 2:
        return None
    if not (fjs.nose.present or fjs.left_eye.present or fjs.right_eye.present):
        return None

    spread = max(a.location.distance(b.location) for a, b in itertools.combinations(joints, 2))
    side = cfg.box_scale_alpha * spread
    if side <= 0.0:
        return None

    weight = sum(j.confidence for j in joints)
    if weight > 0.0:
        cx = sum(j.confidence * j.location.x for j in joints) / weight
        cy = sum(j.confidence * j.location.y for j in joints) / weight
    else:
        cx = sum(j.location.x for j in joints) / len(joints)
        cy = sum(j.location.y for j in joints) / len(joints)
    score = min(1.0, sum(j.confidence for j in joints) / len(joints))
    return FaceDetection(BoundingBox.from_center(cx, cy, side, side), score, pose, source_person)


def size_gate(d: Optional[FaceDetection], cfg: BfdConfig = DEFAULT_CONFIG) -> Optional[FaceDetection]:
    """Keep ``d`` only if ``box_min <= max(w, h) <= box_max``."""
    if d is None:
        return None
    return d if cfg.box_min <= d.box.side <= cfg.box_max else None


def detect_person(pose: PersonPose, cfg: BfdConfig = DEFAULT_CONFIG) -> Optional[FaceDetection]:
    fjs = filter_face_joints(pose, cfg)
    head = classify_head_pose(fjs, cfg)
    return size_gate(build_face_box(fjs, head, cfg, pose.person_id), cfg)


def detect_faces(poses: Sequence[PersonPose], cfg: BfdConfig = DEFAULT_CONFIG) -> list[FaceDetection]:
    """Run the pipeline on every person; at most one face each, input order kept."""
    out = []
    for pose in poses:
        d = detect_person(pose, cfg)
        if d is not None:
            out.append(d)
    return out
