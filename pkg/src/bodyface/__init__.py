"""Face detection from body-pose keypoints, and FROC / precision-recall scoring."""
from .bfd import (
    BfdConfig, FaceDetection, FaceJointSet, HeadPose, Joint, PersonPose,
    build_face_box, classify_head_pose, detect_faces, filter_face_joints, size_gate,
)
from .evaluation import (
    CurveSeries, GroundTruthFace, MatchReport, MethodTotals, SummaryRow,
    froc_curve, match_image, optimal_match_count, pr_curve, summary_table,
)
from .geometry import BoundingBox, ImageSize, InvalidBoxError, Point2D, clamp_box, iou
from .skin import (
    ChromaHistogram, ImagePatch, SkinModel, chroma_histogram, hellinger_distance,
    skin_gate, train_skin_model,
)

__version__ = "0.1.0"
