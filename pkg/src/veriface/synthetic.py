"""Synthetic two-class texture benchmark.

Each "video" is a handful of frames of a smooth random field with a
face-shaped 68-point landmark template (jittered per video and per
frame).  Class-1 videos additionally carry a high-frequency checkerboard
texture in small squares around the twelve eye landmarks, so the signal
lives in the eye blocks and in high-frequency filter channels.  Frames
are written as 8-bit PNGs plus train/test manifest files.
"""

from __future__ import annotations

import os

import numpy as np

from .blocks import bilinear_sample
from .errors import ValidationError
from .manifest import (DatasetManifest, FrameRecord, LandmarkSet, save_manifest)

# canonical 68-point template in the unit square: jaw 0-16, brows 17-26,
# nose 27-35, eyes 36-47, mouth 48-67
FACE_TEMPLATE = np.array([
    (0.080, 0.380), (0.090, 0.478), (0.105, 0.575), (0.128, 0.668),
    (0.165, 0.755), (0.220, 0.830), (0.290, 0.890), (0.380, 0.935),
    (0.500, 0.955), (0.620, 0.935), (0.710, 0.890), (0.780, 0.830),
    (0.835, 0.755), (0.872, 0.668), (0.895, 0.575), (0.910, 0.478),
    (0.920, 0.380),
    (0.155, 0.310), (0.210, 0.275), (0.280, 0.262), (0.350, 0.272),
    (0.410, 0.295),
    (0.590, 0.295), (0.650, 0.272), (0.720, 0.262), (0.790, 0.275),
    (0.845, 0.310),
    (0.500, 0.370), (0.500, 0.432), (0.500, 0.494), (0.500, 0.558),
    (0.420, 0.600), (0.458, 0.612), (0.500, 0.620), (0.542, 0.612),
    (0.580, 0.600),
    (0.245, 0.380), (0.285, 0.360), (0.335, 0.360), (0.375, 0.385),
    (0.332, 0.402), (0.283, 0.402),
    (0.625, 0.385), (0.665, 0.360), (0.715, 0.360), (0.755, 0.380),
    (0.717, 0.402), (0.668, 0.402),
    (0.350, 0.745), (0.395, 0.720), (0.450, 0.705), (0.500, 0.712),
    (0.550, 0.705), (0.605, 0.720), (0.650, 0.745), (0.605, 0.780),
    (0.553, 0.798), (0.500, 0.803), (0.447, 0.798), (0.395, 0.780),
    (0.375, 0.745), (0.450, 0.737), (0.500, 0.742), (0.550, 0.737),
    (0.625, 0.745), (0.550, 0.760), (0.500, 0.765), (0.450, 0.760),
], dtype=np.float64)

EYE_SIGNAL_LANDMARKS = tuple(range(36, 48))
# the six default eye block landmarks and a far-from-the-eyes jaw set,
# used when comparing per-landmark discriminability
EYE_LANDMARK_INDICES = (36, 38, 39, 42, 44, 45)
CHEEK_LANDMARK_INDICES = (2, 3, 4, 12, 13, 14)

_SIGNAL_HALF = 7
_COARSE_GRID = 8


def _smooth_field(rng, size):
    coarse = rng.uniform(0.25, 0.75, size=(_COARSE_GRID, _COARSE_GRID, 3))
    grid = np.linspace(0.0, _COARSE_GRID - 1.0, size)
    xs, ys = np.meshgrid(grid, grid)
    return bilinear_sample(coarse, xs, ys)


def _template_landmarks(size):
    pts = FACE_TEMPLATE.copy()
    pts[:, 0] = (0.10 + 0.80 * pts[:, 0]) * size
    pts[:, 1] = (0.06 + 0.84 * pts[:, 1]) * size
    return pts


def _plant_eye_signal(frame, landmarks, rng, amplitude):
    size = frame.shape[0]
    amp = rng.uniform(*amplitude)
    for lm in EYE_SIGNAL_LANDMARKS:
        cx = int(round(landmarks[lm, 0]))
        cy = int(round(landmarks[lm, 1]))
        x0, x1 = max(cx - _SIGNAL_HALF, 0), min(cx + _SIGNAL_HALF + 1, size)
        y0, y1 = max(cy - _SIGNAL_HALF, 0), min(cy + _SIGNAL_HALF + 1, size)
        ys, xs = np.mgrid[y0:y1, x0:x1]
        checker = ((xs + ys) % 2) * 2.0 - 1.0
        frame[y0:y1, x0:x1, :] += amp * checker[:, :, None]


def make_synthetic_dataset(out_dir, n_videos: int = 200,
                           frames_per_video: int = 10, image_size: int = 160,
                           seed: int = 0, train_fraction: float = 0.7,
                           signal_amplitude=(0.10, 0.18)):
    """Generate the benchmark dataset; returns (train_path, test_path).

    Videos alternate labels (even ids real, odd fake) and are split into
    train/test by video so no identity leaks across the split.
    """
    if n_videos < 4 or n_videos % 2 != 0:
        raise ValidationError("n_videos must be an even number >= 4")
    if frames_per_video < 1:
        raise ValidationError("frames_per_video must be >= 1")
    if not 0 < train_fraction < 1:
        raise ValidationError("train_fraction must be in (0, 1)")
    if image_size < 64:
        raise ValidationError("image_size must be >= 64")

    from PIL import Image

    out_dir = str(out_dir)
    frames_dir = os.path.join(out_dir, "frames")
    os.makedirs(frames_dir, exist_ok=True)

    per_class_train = max(1, int(round(train_fraction * n_videos / 2)))
    train_records, test_records = [], []

    for v in range(n_videos):
        label = v % 2
        rng = np.random.default_rng([seed, v])
        base = _smooth_field(rng, image_size)
        pts = _template_landmarks(image_size)
        scale = rng.uniform(0.95, 1.05)
        shift = rng.uniform(-3.0, 3.0, size=2)
        center = pts.mean(axis=0)
        video_pts = (pts - center) * scale + center + shift

        video_id = f"vid{v:04d}"
        video_dir = os.path.join(frames_dir, video_id)
        os.makedirs(video_dir, exist_ok=True)
        is_train = (v // 2) < per_class_train

        for f in range(frames_per_video):
            frame = base + rng.normal(0.0, 0.02, size=base.shape)
            landmarks = video_pts + rng.normal(0.0, 0.5, size=video_pts.shape)
            landmarks = np.clip(landmarks, 1.0, image_size - 2.0)
            if label == 1:
                _plant_eye_signal(frame, landmarks, rng, signal_amplitude)
            frame8 = np.clip(np.round(np.clip(frame, 0.0, 1.0) * 255.0), 0, 255)
            path = os.path.join(video_dir, f"frame{f:03d}.png")
            Image.fromarray(frame8.astype(np.uint8), mode="RGB").save(path)
            record = FrameRecord(image_ref=path, landmarks=LandmarkSet(landmarks),
                                 label=label, video_id=video_id, frame_index=f)
            (train_records if is_train else test_records).append(record)

    train_path = os.path.join(out_dir, "train.manifest")
    test_path = os.path.join(out_dir, "test.manifest")
    save_manifest(DatasetManifest(records=tuple(train_records), split="train"),
                  train_path)
    save_manifest(DatasetManifest(records=tuple(test_records), split="test"),
                  test_path)
    return train_path, test_path
