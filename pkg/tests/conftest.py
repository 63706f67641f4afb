import numpy as np
import pytest

from bodyface import bfd
from bodyface.bfd import Joint, PersonPose


def make_pose(face=None, person_id=0, body=True):
    """Pose with the given face joints, ``{index: (x, y, conf)}``; body joints
    are filled with a fixed skeleton unless ``body`` is False."""
    joints = [bfd.ABSENT] * bfd.NUM_JOINTS
    if body:
        for k in range(bfd.NUM_JOINTS):
            if k not in bfd.FACE_JOINTS:
                joints[k] = Joint.at(500.0 + 3 * k, 600.0 + 10 * k, 0.8)
    for k, (x, y, c) in (face or {}).items():
        joints[k] = Joint.at(x, y, c)
    return PersonPose(tuple(joints), person_id)


def frontal_face(cx=1000.0, cy=800.0, s=100.0, conf=0.9):
    """Symmetric frontal constellation of head size ``s``."""
    return {
        bfd.NOSE: (cx, cy + 0.08 * s, conf),
        bfd.R_EYE: (cx - 0.17 * s, cy - 0.05 * s, conf),
        bfd.L_EYE: (cx + 0.17 * s, cy - 0.05 * s, conf),
        bfd.R_EAR: (cx - 0.36 * s, cy, conf),
        bfd.L_EAR: (cx + 0.36 * s, cy, conf),
    }


def random_pose(rng: np.random.Generator, person_id=0, p_present=0.8):
    """Face joints scattered around a random head; each present with ``p_present``."""
    cx, cy = rng.uniform(0, 5000), rng.uniform(0, 3400)
    s = rng.uniform(20, 400)
    face = {}
    for k in bfd.FACE_JOINTS:
        if rng.uniform() < p_present:
            face[k] = (cx + rng.normal(0, 0.3 * s), cy + rng.normal(0, 0.3 * s), float(rng.uniform()))
    return make_pose(face, person_id)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    """Appends ``(number, passed, message)`` for the end-of-run acceptance summary."""
    return request.config.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_ACCEPTANCE, [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, message in sorted(results):
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {message}")
