"""Timing of the keypoints-to-faces post-processing stage.

Numbers are wall-clock seconds on whatever machine runs them; they are not
comparable with published per-image times, which include CNN inference.
"""
from __future__ import annotations

import platform
import statistics
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .bfd import DEFAULT_CONFIG, BfdConfig, PersonPose, detect_faces

MACHINE_NOTE = "machine-dependent wall-clock timing"


@dataclass(frozen=True)
class BenchReport:
    repetitions: int
    images: int
    rep_means: tuple[float, ...]     # mean per-image seconds, one per repetition
    per_image: tuple[float, ...]     # per-image seconds, averaged over repetitions
    mean: float
    median: float
    stddev: float
    variance: float
    detections: int
    machine: str

    def as_dict(self) -> dict:
        return {
            "note": MACHINE_NOTE,
            "machine": self.machine,
            "repetitions": self.repetitions,
            "images": self.images,
            "detections": self.detections,
            "mean_s": self.mean,
            "median_s": self.median,
            "stddev_s": self.stddev,
            "variance_s2": self.variance,
            "rep_means_s": list(self.rep_means),
        }

    def format(self) -> str:
        lines = [
            f"# {MACHINE_NOTE} ({self.machine})",
            f"images={self.images} repetitions={self.repetitions} detections/rep={self.detections}",
            f"per-image mean={self.mean * 1e6:.1f}us median={self.median * 1e6:.1f}us "
            f"stddev={self.stddev * 1e6:.1f}us",
        ]
        lines += [f"rep {k}: mean={m * 1e6:.1f}us" for k, m in enumerate(self.rep_means)]
        return "\n".join(lines)


def machine_label() -> str:
    return f"{platform.python_implementation()} {platform.python_version()} {platform.machine()}"


def bench_timing(pipeline: Callable[[Sequence[PersonPose]], list],
                 dataset: Sequence[Sequence[PersonPose]],
                 repetitions: int = 5,
                 clock: Callable[[], float] = time.perf_counter,
                 warmup: bool = True) -> BenchReport:
    """Time ``pipeline`` on every image of ``dataset`` ``repetitions`` times.

    Inputs are already parsed, so file I/O is excluded.  One untimed pass
    runs first unless ``warmup`` is False.
    """
    if repetitions < 3:
        raise ValueError("need at least 3 repetitions")
    if len(dataset) == 0:
        raise ValueError("cannot benchmark an empty dataset")
    if warmup:
        for poses in dataset:
            pipeline(poses)

    times = np.empty((repetitions, len(dataset)))
    detections = 0
    for r in range(repetitions):
        detections = 0
        for k, poses in enumerate(dataset):
            t0 = clock()
            out = pipeline(poses)
            times[r, k] = clock() - t0
            detections += len(out)

    flat = times.ravel()
    return BenchReport(
        repetitions=repetitions,
        images=len(dataset),
        rep_means=tuple(float(v) for v in times.mean(axis=1)),
        per_image=tuple(float(v) for v in times.mean(axis=0)),
        mean=float(flat.mean()),
        median=float(statistics.median(flat)),
        stddev=float(flat.std(ddof=1)) if flat.size > 1 else 0.0,
        variance=float(flat.var(ddof=1)) if flat.size > 1 else 0.0,
        detections=detections,
        machine=machine_label(),
    )


def bfd_pipeline(cfg: BfdConfig = DEFAULT_CONFIG) -> Callable[[Sequence[PersonPose]], list]:
    return lambda poses: detect_faces(poses, cfg)


def time_per_call(fn: Callable[[], object], min_time: float = 0.01, repeat: int = 5) -> float:
    """Best-of-``repeat`` seconds per call, looping until each sample lasts ``min_time``."""
    loops = 1
    while True:
        t0 = time.perf_counter()
        for _ in range(loops):
            fn()
        if time.perf_counter() - t0 >= min_time:
            break
        loops *= 2
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(loops):
            fn()
        best = min(best, (time.perf_counter() - t0) / loops)
    return best


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


def linear_fit(x: Sequence[float], y: Sequence[float]) -> LinearFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return LinearFit(float(slope), float(intercept), r2)


def scaling_sweep(scenes: dict[int, Sequence[PersonPose]], cfg: BfdConfig = DEFAULT_CONFIG,
                  min_time: float = 0.01, repeat: int = 5) -> tuple[dict[int, float], LinearFit]:
    """Per-image time for scenes keyed by person count, and a linear fit of
    time against person count."""
    timings = {n: time_per_call(lambda poses=poses: detect_faces(poses, cfg), min_time, repeat)
               for n, poses in sorted(scenes.items())}
    counts = sorted(timings)
    return timings, linear_fit(counts, [timings[n] for n in counts])
