"""
The skin-colour gate
====================

The last BFD step keeps a box only if the colours inside look like skin:
the box's rg-chromaticity histogram must lie within a Hellinger distance
of 0.6 from a reference trained on face crops.
"""

import numpy as np

from bodyface.bfd import FaceDetection
from bodyface.geometry import BoundingBox
from bodyface.skin import ImagePatch, chroma_histogram, hellinger_distance, skin_gate, train_skin_model

rng = np.random.default_rng(1)


def noisy_patch(rgb, h=40, w=40, sigma=12):
    px = np.clip(rng.normal(rgb, sigma, (h, w, 3)), 0, 255).astype(np.uint8)
    return ImagePatch(px)


# train on a few skin tones
crops = [noisy_patch(c) for c in [(224, 172, 140), (198, 134, 100), (150, 100, 75), (235, 190, 160)]]
model = train_skin_model(crops)
print(f"trained on {model.trained_on} crops, {model.reference.total:.0f} pixels, "
      f"threshold {model.distance_threshold}")

# chromaticity ignores brightness: a darker copy of the same colour lands in the same bins
bright = chroma_histogram(ImagePatch.uniform((200, 100, 40)))
dark = chroma_histogram(ImagePatch.uniform((100, 50, 20)))
print("bright vs dark copy:", hellinger_distance(bright, dark))

# a scene with a face-coloured region on the left, foliage on the right, sky on top
scene = np.zeros((300, 400, 3), dtype=np.uint8)
scene[:, :200] = noisy_patch((210, 150, 120), 300, 200).pixels
scene[:, 200:] = noisy_patch((60, 140, 50), 300, 200).pixels
scene[:60] = noisy_patch((120, 170, 230), 60, 400).pixels
image = ImagePatch(scene)

boxes = {
    "face region": BoundingBox(40, 100, 100, 100),
    "foliage": BoundingBox(250, 120, 100, 100),
    "sky": BoundingBox(150, 5, 100, 50),
    "half face, half foliage": BoundingBox(150, 150, 100, 100),
    "partly outside": BoundingBox(-30, 200, 100, 150),
}
for name, box in boxes.items():
    d = FaceDetection(box, 0.9)
    x0, y0 = max(0, int(box.x)), max(0, int(box.y))
    dist = model.distance(ImagePatch(scene[y0:int(box.y2), x0:int(box.x2)]))
    verdict = "kept" if skin_gate(d, image, model) is not None else "rejected"
    print(f"{name:25s} distance {dist:.3f} -> {verdict}")
