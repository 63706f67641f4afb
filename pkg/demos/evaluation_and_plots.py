"""
FROC and precision-recall on synthetic data
===========================================

Compares BFD with a made-up baseline (noisy copies of the true faces plus
random clutter) the way the published comparison does, with curves plus a
summary table.  FROC AUC is taken up to a false-alarm budget.

Writes SVGs and curve CSVs to ``demo_out/`` (or the directory given as
the first argument).
"""

import sys
from pathlib import Path

import numpy as np

from bodyface import bfd, evaluation, io, plot
from bodyface.evaluation import froc_curve, pr_curve
from bodyface.geometry import BoundingBox
from bodyface.synth import generate_dataset

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(parents=True, exist_ok=True)

images = generate_dataset(60, persons=(1, 20), seed=21)
gts = {im.image_id: list(im.faces) for im in images}
ids = [im.image_id for im in images]
gt_total = sum(len(v) for v in gts.values())
print(f"{len(images)} images, {gt_total} faces")

methods = {"BFD": {im.image_id: bfd.detect_faces(im.poses) for im in images}}

# baseline: finds 80% of faces with a loose box, plus ~4 clutter boxes per image
rng = np.random.default_rng(0)
noisy = {}
for im in images:
    dets = []
    for f in im.faces:
        if rng.uniform() < 0.8:
            b = f.box
            jitter = rng.normal(0, 0.15 * b.w, 2)
            dets.append(bfd.FaceDetection(b.translated(*jitter), float(rng.uniform(0.3, 1.0))))
    for _ in range(rng.poisson(4)):
        x, y = rng.uniform(0, 5000), rng.uniform(0, 3300)
        dets.append(bfd.FaceDetection(BoundingBox(x, y, 120, 120), float(rng.uniform(0.0, 0.7))))
    noisy[im.image_id] = dets
methods["Noisy"] = noisy

# curves; the FROC budget here is 200 false alarms in total
frocs, prs, totals = [], [], []
for name, dets in methods.items():
    frocs.append(froc_curve(dets, gts, fp_cap=200, image_ids=ids, method=name))
    prs.append(pr_curve(dets, gts, image_ids=ids, method=name))
    reports = evaluation.evaluate_at(dets, gts, image_ids=ids)
    totals.append(evaluation.totals_from_reports(name, reports))

for c in frocs + prs:
    io.write_text(out / io.curve_filename(c), io.write_curve_csv(c))
io.write_text(out / "froc.svg", plot.emit_plot(frocs, x_max=200 / len(ids)))
io.write_text(out / "pr.svg", plot.emit_plot(prs))

for c in frocs + prs:
    print(f"{c.kind:4s} {plot.legend_label(c)}")
print()
print(evaluation.format_table(evaluation.summary_table(totals, gt_total)))
print()
print("wrote", ", ".join(sorted(p.name for p in out.iterdir())))
