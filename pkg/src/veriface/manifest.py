"""Dataset manifests: frame records with 68-point landmarks.

Manifest file format (normative, line-delimited UTF-8 text)
------------------------------------------------------------
Line 1 (header)::

    #veriface-manifest v1 split=<train|test>

Every following non-empty line is one frame record with five
tab-separated fields, in this exact order::

    image_ref <TAB> label <TAB> video_id <TAB> frame_index <TAB> landmarks

where ``landmarks`` is 136 comma-separated numbers
``x0,y0,x1,y1,...,x67,y67`` in source-image pixel units.  Floats are
written with Python repr so parse/serialize round-trips are bit-exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataIOError, ValidationError

N_LANDMARKS = 68
MANIFEST_MAGIC = "#veriface-manifest"
MANIFEST_VERSION = 1
SPLITS = ("train", "test")

TRAIN_FRAMES_PER_SECOND = 3
TEST_FRAME_SAMPLES = 100


@dataclass(frozen=True)
class LandmarkSet:
    """68 (x, y) points in source-image pixel units, standard annotation order."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.shape != (N_LANDMARKS, 2):
            raise ValidationError(
                f"expected {N_LANDMARKS} landmarks, got array of shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("landmark coordinates must be finite")
        if np.any(pts < 0):
            raise ValidationError("landmark coordinates must be non-negative")
        x_min, y_min = pts.min(axis=0)
        x_max, y_max = pts.max(axis=0)
        if not (x_max > x_min and y_max > y_min):
            raise ValidationError("landmark bounding box must have positive area")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    def bounding_box(self):
        """(x_min, y_min, x_max, y_max) of the landmark points."""
        x_min, y_min = self.points.min(axis=0)
        x_max, y_max = self.points.max(axis=0)
        return float(x_min), float(y_min), float(x_max), float(y_max)


@dataclass(frozen=True)
class FrameRecord:
    image_ref: str
    landmarks: LandmarkSet
    label: int
    video_id: str
    frame_index: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValidationError(f"label must be 0 or 1, got {self.label!r}")
        if not isinstance(self.frame_index, int) or self.frame_index < 0:
            raise ValidationError(f"frame_index must be a non-negative integer, "
                                  f"got {self.frame_index!r}")
        for name in ("image_ref", "video_id"):
            value = getattr(self, name)
            if not value or any(c in value for c in "\t\n\r"):
                raise ValidationError(f"{name} must be non-empty and free of "
                                      f"tabs/newlines, got {value!r}")


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple = field(default_factory=tuple)
    split: str = "train"

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        if self.split not in SPLITS:
            raise ValidationError(f"split must be one of {SPLITS}, got {self.split!r}")
        if not self.records:
            raise ValidationError("manifest contains no records")
        seen = set()
        for rec in self.records:
            key = (rec.video_id, rec.frame_index)
            if key in seen:
                raise ValidationError(
                    f"duplicate frame_index {rec.frame_index} in video {rec.video_id!r}")
            seen.add(key)
        if self.split == "train":
            labels = {rec.label for rec in self.records}
            if labels != {0, 1}:
                raise ValidationError("a train manifest must contain both labels")

    @property
    def labels(self):
        return np.array([rec.label for rec in self.records], dtype=np.int64)

    @property
    def video_ids(self):
        return [rec.video_id for rec in self.records]


def _format_number(x: float) -> str:
    # integral coordinates stay compact; repr keeps float round-trips exact
    if float(x).is_integer():
        return str(int(x))
    return repr(float(x))


def parse_manifest(data) -> DatasetManifest:
    """Parse manifest bytes (or str) into a validated DatasetManifest."""
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ValidationError(f"manifest is not valid UTF-8: {exc}") from exc
    else:
        text = str(data)
    lines = text.splitlines()
    if not lines:
        raise ValidationError("empty manifest")

    header = lines[0].strip()
    parts = header.split()
    if len(parts) != 3 or parts[0] != MANIFEST_MAGIC:
        raise ValidationError(f"line 1: bad manifest header {header!r}")
    if parts[1] != f"v{MANIFEST_VERSION}":
        raise ValidationError(f"line 1: unsupported manifest version {parts[1]!r}")
    if not parts[2].startswith("split="):
        raise ValidationError(f"line 1: missing split tag in header {header!r}")
    split = parts[2][len("split="):]

    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 5:
            raise ValidationError(
                f"line {lineno}: expected 5 tab-separated fields, got {len(fields)}")
        image_ref, label_s, video_id, frame_index_s, landmarks_s = fields
        try:
            label = int(label_s)
            frame_index = int(frame_index_s)
        except ValueError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from exc
        coords = landmarks_s.split(",")
        if len(coords) != 2 * N_LANDMARKS:
            raise ValidationError(
                f"line {lineno}: expected {N_LANDMARKS} landmarks "
                f"({2 * N_LANDMARKS} numbers), got {len(coords)}")
        try:
            values = np.array([float(c) for c in coords], dtype=np.float64)
        except ValueError as exc:
            raise ValidationError(f"line {lineno}: bad landmark value ({exc})") from exc
        try:
            record = FrameRecord(
                image_ref=image_ref,
                landmarks=LandmarkSet(values.reshape(N_LANDMARKS, 2)),
                label=label,
                video_id=video_id,
                frame_index=frame_index,
            )
        except ValidationError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from exc
        records.append(record)

    if not records:
        raise ValidationError("manifest contains no records")
    return DatasetManifest(records=tuple(records), split=split)


def serialize_manifest(manifest: DatasetManifest) -> bytes:
    """Serialize to the normative text format (inverse of parse_manifest)."""
    out = [f"{MANIFEST_MAGIC} v{MANIFEST_VERSION} split={manifest.split}"]
    for rec in manifest.records:
        landmarks = ",".join(_format_number(v) for v in rec.landmarks.points.ravel())
        out.append("\t".join([
            rec.image_ref, str(rec.label), rec.video_id,
            str(rec.frame_index), landmarks,
        ]))
    return ("\n".join(out) + "\n").encode("utf-8")


def load_manifest(path) -> DatasetManifest:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise DataIOError(f"manifest not found or unreadable: {path} ({exc})") from exc
    return parse_manifest(data)


def save_manifest(manifest: DatasetManifest, path):
    with open(path, "wb") as fh:
        fh.write(serialize_manifest(manifest))


def sample_frame_indices(frame_count: int, fps: float, mode: str):
    """Frame indices to keep for one video, following the sampling policy.

    train: every k-th frame from 0 with k = max(1, floor(fps / 3)), i.e.
    three frames per second.  test: 100 indices uniformly spaced over
    [0, frame_count - 1] (all frames when fewer than 100 exist).  Output
    is strictly increasing and within range.
    """
    if not isinstance(frame_count, (int, np.integer)) or frame_count < 1:
        raise ValidationError(f"frame_count must be a positive integer, "
                              f"got {frame_count!r}")
    if not np.isfinite(fps) or fps <= 0:
        raise ValidationError(f"fps must be positive, got {fps!r}")
    if mode not in ("train", "test"):
        raise ValidationError(f"mode must be 'train' or 'test', got {mode!r}")

    if mode == "train":
        stride = max(1, int(fps // TRAIN_FRAMES_PER_SECOND))
        return list(range(0, frame_count, stride))

    if frame_count <= TEST_FRAME_SAMPLES:
        return list(range(frame_count))
    last = frame_count - 1
    return [i * last // (TEST_FRAME_SAMPLES - 1) for i in range(TEST_FRAME_SAMPLES)]


def subsample_manifest(manifest: DatasetManifest, fps: float) -> DatasetManifest:
    """Apply the split's sampling policy per video, positionally over each
    video's records sorted by frame_index."""
    by_video = {}
    for rec in manifest.records:
        by_video.setdefault(rec.video_id, []).append(rec)
    kept = []
    for video_id in sorted(by_video):
        recs = sorted(by_video[video_id], key=lambda r: r.frame_index)
        indices = sample_frame_indices(len(recs), fps, manifest.split)
        kept.extend(recs[i] for i in indices)
    return DatasetManifest(records=tuple(kept), split=manifest.split)
