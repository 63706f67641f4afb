"""Synthetic surveillance scenes: body keypoints plus ground-truth face boxes.

People are placed from a standing template skeleton whose head is 1/7.5 of
body height.  Ground-truth faces come from the template head (a square of
side ``head`` centred on the head), never from the jittered joints, so the
BFD boxes differ from the truth the way a real detector's would.

Random numbers
--------------
Everything is drawn from :class:`SplitMix64` so other implementations can
reproduce a scene exactly:

* ``next_u64``: ``state += 0x9E3779B97F4A7C15`` (mod 2**64), then
  ``z = state; z = (z ^ z >> 30) * 0xBF58476D1CE4E5B9;
  z = (z ^ z >> 27) * 0x94D049BB133111EB; return z ^ z >> 31``.
* ``uniform()``: ``(next_u64() >> 11) * 2**-53``, in [0, 1).
* ``normal()``: Box-Muller cosine branch,
  ``sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`` with ``u1``, ``u2`` drawn in that order.

Draw order per scene: for each person, ``head`` size then the placement
loop (``cx``, ``top`` per attempt), then the head pose, then for every
joint in keypoint order: occlusion (face joints only), confidence,
x jitter, y jitter.  ``generate_dataset`` seeds scene ``i``
with the ``i``-th ``next_u64`` of a generator seeded with the dataset
seed, after first drawing that scene's person count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from . import bfd
from .bfd import HeadPose, Joint, PersonPose
from .evaluation import GroundTruthFace, match_image
from .geometry import BoundingBox, ImageSize

_MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        return lo + (hi - lo) * ((self.next_u64() >> 11) * 2.0 ** -53)

    def normal(self, sigma: float = 1.0) -> float:
        u1 = self.uniform()
        u2 = self.uniform()
        return sigma * math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)

    def randint(self, lo: int, hi: int) -> int:
        """Integer in [lo, hi]."""
        return lo + min(hi - lo, int(self.uniform() * (hi - lo + 1)))


# Body joints as (x / height, y / height) from the body centre line and the top of the head.
_BODY = {
    bfd.NECK: (0.0, 0.18),
    bfd.R_SHOULDER: (-0.13, 0.19), bfd.R_ELBOW: (-0.16, 0.33), bfd.R_WRIST: (-0.17, 0.46),
    bfd.L_SHOULDER: (0.13, 0.19), bfd.L_ELBOW: (0.16, 0.33), bfd.L_WRIST: (0.17, 0.46),
    bfd.R_HIP: (-0.08, 0.52), bfd.R_KNEE: (-0.08, 0.73), bfd.R_ANKLE: (-0.08, 0.95),
    bfd.L_HIP: (0.08, 0.52), bfd.L_KNEE: (0.08, 0.73), bfd.L_ANKLE: (0.08, 0.95),
}

# Visible face joints per head pose, as offsets from the head centre in units of head size.
# The subject faces the camera in the frontal view, so their right eye is on the image left.
_FACE = {
    HeadPose.FRONTAL: {
        bfd.NOSE: (0.0, 0.08),
        bfd.R_EYE: (-0.17, -0.05), bfd.L_EYE: (0.17, -0.05),
        bfd.R_EAR: (-0.36, 0.0), bfd.L_EAR: (0.36, 0.0),
    },
    HeadPose.LEFT_PROFILE: {
        bfd.NOSE: (-0.32, 0.08), bfd.L_EYE: (-0.18, -0.05), bfd.L_EAR: (0.12, 0.0),
    },
    HeadPose.RIGHT_PROFILE: {
        bfd.NOSE: (0.32, 0.08), bfd.R_EYE: (0.18, -0.05), bfd.R_EAR: (-0.12, 0.0),
    },
    HeadPose.BACK_OF_HEAD: {
        bfd.L_EAR: (-0.36, 0.0), bfd.R_EAR: (0.36, 0.0),
    },
    HeadPose.INDETERMINATE: {
        bfd.NOSE: (0.0, 0.12),
    },
}

HEAD_FRACTION = 1.0 / 7.5
BODY_HALF_WIDTH = 0.2            # of body height
HEAD_CLEARANCE = 1.5             # head boxes are kept apart by this factor
PLACEMENT_ATTEMPTS = 500
POSE_ORDER = (HeadPose.FRONTAL, HeadPose.LEFT_PROFILE, HeadPose.RIGHT_PROFILE,
              HeadPose.BACK_OF_HEAD, HeadPose.INDETERMINATE)

DEFAULT_POSE_MIX = {
    HeadPose.FRONTAL: 0.6,
    HeadPose.LEFT_PROFILE: 0.15,
    HeadPose.RIGHT_PROFILE: 0.15,
    HeadPose.BACK_OF_HEAD: 0.1,
    HeadPose.INDETERMINATE: 0.0,
}
FRONTAL_ONLY = {HeadPose.FRONTAL: 1.0}


class PlacementError(RuntimeError):
    """People could not be placed without overlapping heads."""


@dataclass(frozen=True)
class SceneSpec:
    image_size: ImageSize = field(default_factory=ImageSize)
    person_count: int = 10
    head_pose_mix: Mapping[HeadPose, float] = field(default_factory=lambda: dict(DEFAULT_POSE_MIX))
    occlusion_rate: float = 0.0
    jitter_sigma: float = 2.0
    seed: int = 0
    head_min: float = 120.0          # keeps calibrated frontal boxes well above the 90px gate
    head_max: float = 240.0
    face_confidence: tuple[float, float] = (0.4, 1.0)
    body_confidence: tuple[float, float] = (0.3, 1.0)

    def __post_init__(self):
        mix = {HeadPose(k) if not isinstance(k, HeadPose) else k: float(v)
               for k, v in dict(self.head_pose_mix).items()}
        if any(v < 0 for v in mix.values()) or abs(sum(mix.values()) - 1.0) > 1e-9:
            raise ValueError("head_pose_mix must be non-negative and sum to 1")
        object.__setattr__(self, "head_pose_mix", mix)
        if not 0.0 <= self.occlusion_rate <= 1.0:
            raise ValueError("occlusion_rate must lie in [0, 1]")
        if self.jitter_sigma < 0:
            raise ValueError("jitter_sigma must be >= 0")
        if self.person_count < 0:
            raise ValueError("person_count must be >= 0")
        if not 0 < self.head_min <= self.head_max:
            raise ValueError("need 0 < head_min <= head_max")

    def replace(self, **changes) -> SceneSpec:
        from dataclasses import replace
        return replace(self, **changes)


def _pick_pose(rng: SplitMix64, mix: Mapping[HeadPose, float]) -> HeadPose:
    u = rng.uniform()
    acc = 0.0
    last = None
    for pose in POSE_ORDER:
        p = mix.get(pose, 0.0)
        if p <= 0.0:
            continue
        acc += p
        last = pose
        if u < acc:
            return pose
    return last


def _overlaps(a, b) -> bool:
    return a[0] < b[2] and b[0] < a[2] and a[1] < b[3] and b[1] < a[3]


def generate_scene(spec: SceneSpec, image_id="scene") -> tuple[list[PersonPose], list[GroundTruthFace]]:
    """Poses and ground-truth faces for one image; deterministic in ``spec``.

    A face's ``face_id`` is the ``person_id`` of the person it belongs to.
    """
    rng = SplitMix64(spec.seed)
    width, height = spec.image_size.width, spec.image_size.height
    poses: list[PersonPose] = []
    faces: list[GroundTruthFace] = []
    occupied: list[tuple[float, float, float, float]] = []

    for pid in range(spec.person_count):
        head = rng.uniform(spec.head_min, spec.head_max)
        body = head / HEAD_FRACTION
        half_w = BODY_HALF_WIDTH * body
        if body > height or 2 * half_w > width:
            raise PlacementError(f"a {body:.0f}px tall person does not fit a {width}x{height} image")
        for _ in range(PLACEMENT_ATTEMPTS):
            cx = rng.uniform(half_w, width - half_w)
            top = rng.uniform(0.0, height - body)
            hy = top + head / 2.0
            r = HEAD_CLEARANCE * head / 2.0
            zone = (cx - r, hy - r, cx + r, hy + r)
            if not any(_overlaps(zone, other) for other in occupied):
                occupied.append(zone)
                break
        else:
            raise PlacementError(
                f"could not place person {pid + 1} of {spec.person_count} "
                f"after {PLACEMENT_ATTEMPTS} attempts")

        pose = _pick_pose(rng, spec.head_pose_mix)
        face = _FACE[pose]
        joints = []
        for k in range(bfd.NUM_JOINTS):
            if k in bfd.FACE_JOINTS:
                occluded = rng.uniform() < spec.occlusion_rate
                conf = rng.uniform(*spec.face_confidence)
                dx, dy = rng.normal(spec.jitter_sigma), rng.normal(spec.jitter_sigma)
                if k not in face or occluded:
                    joints.append(bfd.ABSENT)
                    continue
                ox, oy = face[k]
                x, y = cx + ox * head, hy + oy * head
            else:
                conf = rng.uniform(*spec.body_confidence)
                dx, dy = rng.normal(spec.jitter_sigma), rng.normal(spec.jitter_sigma)
                ox, oy = _BODY[k]
                x, y = cx + ox * body, top + oy * body
            joints.append(Joint.at(x + dx, y + dy, conf))
        poses.append(PersonPose(tuple(joints), str(pid)))
        if pose is not HeadPose.BACK_OF_HEAD:
            faces.append(GroundTruthFace(BoundingBox.from_center(cx, hy, head, head),
                                         image_id, str(pid)))
    return poses, faces


@dataclass(frozen=True)
class SyntheticImage:
    image_id: str
    image_size: ImageSize
    poses: tuple[PersonPose, ...]
    faces: tuple[GroundTruthFace, ...]


def generate_dataset(n_images: int, persons: tuple[int, int] | int = (1, 20),
                     base: Optional[SceneSpec] = None, seed: int = 0,
                     prefix: str = "img") -> list[SyntheticImage]:
    """``n_images`` scenes, each with a person count drawn from ``persons``
    (inclusive range) unless a single count is given."""
    base = base or SceneSpec()
    lo, hi = (persons, persons) if isinstance(persons, int) else persons
    rng = SplitMix64(seed)
    width = max(4, len(str(max(n_images - 1, 0))))
    out = []
    for i in range(n_images):
        count = rng.randint(lo, hi)
        spec = base.replace(person_count=count, seed=rng.next_u64())
        image_id = f"{prefix}{i:0{width}d}"
        poses, faces = generate_scene(spec, image_id)
        out.append(SyntheticImage(image_id, spec.image_size, tuple(poses), tuple(faces)))
    return out


def bfd_recall(images: Sequence[SyntheticImage], cfg: bfd.BfdConfig = bfd.DEFAULT_CONFIG,
               iou_min: float = 0.5) -> float:
    tp = total = 0
    for img in images:
        dets = bfd.detect_faces(img.poses, cfg)
        tp += match_image(dets, list(img.faces), iou_min).true_positives
        total += len(img.faces)
    return tp / total if total else float("nan")


def calibrate_alpha(images: Sequence[SyntheticImage], grid: Sequence[float] = None,
                    cfg: bfd.BfdConfig = bfd.DEFAULT_CONFIG) -> tuple[float, float]:
    """Box scale maximising the mean IoU between BFD boxes and their
    ground-truth faces.  Returns ``(alpha, mean_iou)``.

    Only people with a ground-truth face are used, and the size gate is
    bypassed so that it does not bias the fit.
    """
    from .geometry import iou

    if grid is None:
        grid = [round(0.5 + 0.01 * k, 2) for k in range(251)]
    pairs = []
    for img in images:
        faces = {f.face_id: f for f in img.faces}
        for pose in img.poses:
            gt = faces.get(pose.person_id)
            if gt is None:
                continue
            fjs = bfd.filter_face_joints(pose, cfg)
            pairs.append((fjs, bfd.classify_head_pose(fjs, cfg), gt.box))
    if not pairs:
        raise ValueError("no ground-truth faces to calibrate on")

    best = (None, -1.0)
    for alpha in grid:
        c = cfg.replace(box_scale_alpha=alpha)
        total = 0.0
        for fjs, head, box in pairs:
            d = bfd.build_face_box(fjs, head, c)
            total += iou(d.box, box) if d is not None else 0.0
        mean = total / len(pairs)
        if mean > best[1]:
            best = (alpha, mean)
    return best
