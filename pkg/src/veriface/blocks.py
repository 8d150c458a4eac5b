"""Face chip construction and landmark / region block extraction.

The landmark bounding box is padded by 30% of its width and height on
each side, squared to the longer dimension and resampled (bilinear,
zero-padded) into a fixed 128x128x3 chip.  From the chip we cut 8 small
blocks centered at configured landmarks and 3 large blocks centered at
the centroids of the eye and mouth landmark groups.  No face alignment
is applied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataIOError, GeometryError, ValidationError
from .manifest import N_LANDMARKS, LandmarkSet

CHIP_SIZE = 128
CROP_MARGIN = 0.3

DEFAULT_LANDMARK_INDICES = (36, 38, 39, 42, 44, 45, 30, 62)
DEFAULT_REGIONS = (
    ("left_eye", tuple(range(36, 42))),
    ("right_eye", tuple(range(42, 48))),
    ("mouth", tuple(range(48, 68))),
)


@dataclass(frozen=True)
class ChipTransform:
    """Affine map from source-image pixel coordinates to chip coordinates.

    chip = (source - center) * scale + (CHIP_SIZE - 1) / 2, per axis.
    """

    center_x: float
    center_y: float
    scale: float

    def __post_init__(self):
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise GeometryError(f"chip transform scale must be positive, "
                                f"got {self.scale!r}")

    def to_chip(self, points):
        pts = np.asarray(points, dtype=np.float64)
        center = np.array([self.center_x, self.center_y])
        return (pts - center) * self.scale + (CHIP_SIZE - 1) / 2.0

    def to_source(self, points):
        pts = np.asarray(points, dtype=np.float64)
        center = np.array([self.center_x, self.center_y])
        return (pts - (CHIP_SIZE - 1) / 2.0) / self.scale + center


@dataclass
class FaceChip:
    pixels: np.ndarray  # (128, 128, 3) float64 in [0, 1]
    transform: ChipTransform


@dataclass(frozen=True)
class Block:
    pixels: np.ndarray       # (S, S, 3)
    kind: str                # "landmark" or "region"
    ident: object            # landmark index (int) or region name (str)
    center: tuple            # (x, y) chip pixel indices after clamping


@dataclass(frozen=True)
class BlockLayoutConfig:
    landmark_indices: tuple = DEFAULT_LANDMARK_INDICES
    small_block_size: int = 13
    region_definitions: tuple = DEFAULT_REGIONS
    large_block_size: int = 31

    def __post_init__(self):
        object.__setattr__(self, "landmark_indices", tuple(self.landmark_indices))
        object.__setattr__(self, "region_definitions",
                           tuple((str(n), tuple(g)) for n, g in self.region_definitions))
        if len(self.landmark_indices) != 8:
            raise ValidationError("layout requires exactly 8 landmark indices")
        if len(self.region_definitions) != 3:
            raise ValidationError("layout requires exactly 3 region definitions")
        for size in (self.small_block_size, self.large_block_size):
            if size % 2 != 1 or not (1 <= size <= CHIP_SIZE):
                raise ValidationError(f"block sizes must be odd and within "
                                      f"1..{CHIP_SIZE}, got {size}")
        for idx in self.landmark_indices:
            if not 0 <= idx < N_LANDMARKS:
                raise ValidationError(f"landmark index {idx} out of range")
        for name, group in self.region_definitions:
            if not group or any(not 0 <= i < N_LANDMARKS for i in group):
                raise ValidationError(f"region {name!r} has out-of-range landmarks")

    @property
    def n_blocks(self):
        return len(self.landmark_indices) + len(self.region_definitions)

    def block_kinds(self):
        """(kind, ident, size) for every block slot, in output order."""
        slots = [("landmark", idx, self.small_block_size)
                 for idx in self.landmark_indices]
        slots += [("region", name, self.large_block_size)
                  for name, _ in self.region_definitions]
        return slots


def bilinear_sample(image, xs, ys):
    """Sample image (H, W, C) at float positions, zero outside the grid.

    Positions use the pixel-index convention: image[y, x] is the value at
    (x, y).  A position with all four neighbours outside yields exactly 0.
    """
    h, w = image.shape[:2]
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = xs - x0
    fy = ys - y0

    out = np.zeros(xs.shape + (image.shape[2],), dtype=np.float64)
    for dy in (0, 1):
        for dx in (0, 1):
            xi = x0 + dx
            yi = y0 + dy
            inside = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
            weight = (fx if dx else 1.0 - fx) * (fy if dy else 1.0 - fy)
            weight = np.where(inside, weight, 0.0)
            vals = image[np.clip(yi, 0, h - 1), np.clip(xi, 0, w - 1)]
            out += weight[..., None] * vals
    return out


def crop_face(image, landmarks: LandmarkSet) -> FaceChip:
    """Crop the 30%-margin landmark box into a zero-padded 128x128 chip."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValidationError(f"image must be (H, W, 3), got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValidationError("image contains non-finite values")
    if img.min() < 0 or img.max() > 1:
        raise ValidationError("image values must lie in [0, 1]")

    x_min, y_min, x_max, y_max = landmarks.bounding_box()
    width = x_max - x_min
    height = y_max - y_min
    if width <= 0 or height <= 0:
        raise GeometryError("degenerate landmark bounding box")
    h, w = img.shape[:2]
    if x_max < 0 or y_max < 0 or x_min > w - 1 or y_min > h - 1:
        raise GeometryError("landmark bounding box does not overlap the image")

    side = (1.0 + 2.0 * CROP_MARGIN) * max(width, height)
    center_x = (x_min + x_max) / 2.0
    center_y = (y_min + y_max) / 2.0
    scale = CHIP_SIZE / side
    transform = ChipTransform(center_x=center_x, center_y=center_y, scale=scale)

    half = (CHIP_SIZE - 1) / 2.0
    offsets = (np.arange(CHIP_SIZE) - half) / scale
    xs = center_x + offsets[None, :]
    ys = center_y + offsets[:, None]
    xs, ys = np.broadcast_arrays(xs, ys)
    pixels = bilinear_sample(img, xs, ys)
    return FaceChip(pixels=pixels, transform=transform)


def _clamped_center(x: float, y: float, size: int):
    r = size // 2
    cx = int(np.floor(x + 0.5))
    cy = int(np.floor(y + 0.5))
    cx = min(max(cx, r), CHIP_SIZE - 1 - r)
    cy = min(max(cy, r), CHIP_SIZE - 1 - r)
    return cx, cy


def extract_blocks(chip: FaceChip, landmarks: LandmarkSet,
                   config: BlockLayoutConfig | None = None):
    """Cut the 8 landmark blocks then the 3 region blocks, in fixed order.

    Region blocks are centered at the centroid of their landmark group;
    centers are clamped so every block lies fully inside the chip, and
    each block's pixels are exactly the chip sub-array at its window.
    """
    if config is None:
        config = BlockLayoutConfig()
    if chip.pixels.shape != (CHIP_SIZE, CHIP_SIZE, 3):
        raise ValidationError(f"chip must be ({CHIP_SIZE}, {CHIP_SIZE}, 3), "
                              f"got {chip.pixels.shape}")
    pts = chip.transform.to_chip(landmarks.points)

    blocks = []
    for idx in config.landmark_indices:
        size = config.small_block_size
        cx, cy = _clamped_center(pts[idx, 0], pts[idx, 1], size)
        r = size // 2
        sub = chip.pixels[cy - r:cy + r + 1, cx - r:cx + r + 1, :].copy()
        blocks.append(Block(pixels=sub, kind="landmark", ident=idx, center=(cx, cy)))

    for name, group in config.region_definitions:
        size = config.large_block_size
        centroid = pts[list(group)].mean(axis=0)
        cx, cy = _clamped_center(centroid[0], centroid[1], size)
        r = size // 2
        sub = chip.pixels[cy - r:cy + r + 1, cx - r:cx + r + 1, :].copy()
        blocks.append(Block(pixels=sub, kind="region", ident=name, center=(cx, cy)))

    return blocks


def block_at(chip: FaceChip, chip_point, size: int) -> Block:
    """Single block of the given odd size centered (after clamping) at an
    arbitrary chip-coordinate point; used by the per-landmark analysis."""
    if size % 2 != 1 or not 1 <= size <= CHIP_SIZE:
        raise ValidationError(f"block size must be odd and within 1..{CHIP_SIZE}, "
                              f"got {size}")
    cx, cy = _clamped_center(float(chip_point[0]), float(chip_point[1]), size)
    r = size // 2
    sub = chip.pixels[cy - r:cy + r + 1, cx - r:cx + r + 1, :].copy()
    return Block(pixels=sub, kind="landmark", ident=None, center=(cx, cy))


def load_image(path):
    """Load an image file as float64 (H, W, 3) in [0, 1].

    Raster formats go through Pillow; .npy arrays are taken as-is and
    validated.
    """
    path = str(path)
    if path.endswith(".npy"):
        try:
            arr = np.load(path)
        except OSError as exc:
            raise DataIOError(f"image not found or unreadable: {path} ({exc})") from exc
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim == 2:
            arr = np.repeat(arr[:, :, None], 3, axis=2)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValidationError(f"array image must be (H, W, 3): {path}")
        if arr.min() < 0 or arr.max() > 1:
            raise ValidationError(f"array image values must lie in [0, 1]: {path}")
        return arr
    try:
        from PIL import Image
        with Image.open(path) as im:
            rgb = im.convert("RGB")
            arr = np.asarray(rgb, dtype=np.float64) / 255.0
    except FileNotFoundError as exc:
        raise DataIOError(f"image not found: {path}") from exc
    except OSError as exc:
        raise DataIOError(f"image unreadable: {path} ({exc})") from exc
    return arr
