"""
From body keypoints to face boxes
=================================

Walks one synthetic scene through the four BFD steps: keep confident face
joints, read the head pose off the eye-ear geometry, box the face, and
drop boxes outside the size limits.
"""

from bodyface import bfd
from bodyface.evaluation import match_image
from bodyface.synth import SceneSpec, generate_scene

spec = SceneSpec(person_count=6, seed=3, occlusion_rate=0.1)
poses, faces = generate_scene(spec, image_id="demo")
cfg = bfd.DEFAULT_CONFIG
print(cfg)
print()

for pose in poses:
    # 1. face joints at or above the confidence threshold
    fjs = bfd.filter_face_joints(pose, cfg)
    names = [n for n in ("nose", "left_eye", "right_eye", "left_ear", "right_ear") if getattr(fjs, n).present]

    # 2. head pose; r compares the left and right eye-to-ear distances
    head = bfd.classify_head_pose(fjs, cfg)
    r = bfd.eye_ear_asymmetry(fjs)

    # 3. square box around the weighted centroid of the joints
    box = bfd.build_face_box(fjs, head, cfg, pose.person_id)

    # 4. size gate on the longest side
    kept = bfd.size_gate(box, cfg)

    r_txt = "-" if r is None else f"{r:.2f}"
    side = "-" if box is None else f"{box.box.side:.0f}px"
    print(f"person {pose.person_id}: joints={names} pose={head.value} r={r_txt} "
          f"box={side} kept={kept is not None}")

dets = bfd.detect_faces(poses, cfg)
report = match_image(dets, faces, image_id="demo")
print()
print(f"{len(dets)} detections, {len(faces)} true faces: "
      f"TP={report.true_positives} FP={report.false_positives} FN={report.false_negatives}")
