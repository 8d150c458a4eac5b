import numpy as np
import pytest

from veriface.blocks import (CHIP_SIZE, BlockLayoutConfig, block_at,
                             crop_face, extract_blocks)
from veriface.errors import GeometryError, ValidationError
from veriface.manifest import LandmarkSet


def _ramp_image(h, w, lo=0.0, hi=1.0):
    ramp = (np.arange(h)[:, None] + np.arange(w)[None, :]).astype(np.float64)
    ramp /= ramp.max()
    img = lo + (hi - lo) * ramp
    return np.repeat(img[:, :, None], 3, axis=2)


def _landmarks_in_box(x0, y0, x1, y1, rng=None):
    """68 landmarks whose bounding box is exactly [x0, x1] x [y0, y1]."""
    rng = rng or np.random.default_rng(0)
    pts = rng.uniform([x0, y0], [x1, y1], size=(68, 2))
    pts[0] = (x0, y0)
    pts[1] = (x1, y1)
    return LandmarkSet(pts)


class TestCropFace:
    def test_margin_rule_affine(self):
        # 60x60 landmark box centered in a 200x200 image: the 30%-per-side
        # margin squares to side 1.6 * 60 = 96, so scale = 128 / 96 and the
        # box center lands on the chip center
        image = _ramp_image(200, 200)
        landmarks = _landmarks_in_box(70, 70, 130, 130)
        chip = crop_face(image, landmarks)
        assert np.isclose(chip.transform.scale, 128.0 / 96.0, rtol=1e-12)
        center = chip.transform.to_chip(np.array([[100.0, 100.0]]))[0]
        assert np.allclose(center, [(CHIP_SIZE - 1) / 2.0] * 2, atol=1e-9)
        # transform round-trips
        pts = landmarks.points
        back = chip.transform.to_source(chip.transform.to_chip(pts))
        assert np.allclose(back, pts, atol=1e-9)

    def test_zero_padding_is_exact(self):
        image = _ramp_image(64, 64, lo=0.5, hi=1.0)   # every pixel >= 0.5
        landmarks = _landmarks_in_box(2, 2, 30, 30)
        chip = crop_face(image, landmarks)
        assert chip.pixels.min() >= 0.0 and chip.pixels.max() <= 1.0
        # the crop window starts left of the image, so the first chip column
        # samples fully outside and must be exactly zero
        assert np.all(chip.pixels[:, 0, :] == 0.0)
        assert np.all(chip.pixels[0, :, :] == 0.0)
        # interior is sampled from the image, hence >= 0.5 there
        assert chip.pixels[64, 64, 0] >= 0.5

    def test_scale_invariance_bit_exact(self):
        # geometry chosen so every sample position is an integer: box of
        # width 80 gives side 128 and scale exactly 1
        rng = np.random.default_rng(3)
        image = rng.uniform(0, 1, size=(220, 220, 3))
        landmarks = _landmarks_in_box(60.5, 60.5, 140.5, 140.5, rng)
        chip1 = crop_face(image, landmarks)

        image2 = np.repeat(np.repeat(image, 2, axis=0), 2, axis=1)
        landmarks2 = LandmarkSet(landmarks.points * 2.0)
        chip2 = crop_face(image2, landmarks2)
        assert np.array_equal(chip1.pixels, chip2.pixels)

    def test_values_stay_in_unit_interval(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            image = rng.uniform(0, 1, size=(90, 120, 3))
            landmarks = LandmarkSet(rng.uniform(5, 85, size=(68, 2)))
            chip = crop_face(image, landmarks)
            assert chip.pixels.shape == (CHIP_SIZE, CHIP_SIZE, 3)
            assert chip.pixels.min() >= 0.0 and chip.pixels.max() <= 1.0

    def test_geometry_errors(self):
        image = _ramp_image(50, 50)
        outside = LandmarkSet(np.random.default_rng(0).uniform(
            200, 260, size=(68, 2)))
        with pytest.raises(GeometryError, match="overlap"):
            crop_face(image, outside)
        with pytest.raises(ValidationError):
            crop_face(np.zeros((10, 10)), _landmarks_in_box(1, 1, 5, 5))
        with pytest.raises(ValidationError, match=r"\[0, 1\]"):
            crop_face(_ramp_image(50, 50) * 2.0, _landmarks_in_box(1, 1, 5, 5))


class TestLayoutConfig:
    def test_defaults_valid(self):
        layout = BlockLayoutConfig()
        assert layout.n_blocks == 11
        kinds = layout.block_kinds()
        assert [k for k, _, _ in kinds] == ["landmark"] * 8 + ["region"] * 3
        assert [i for _, i, _ in kinds][8:] == ["left_eye", "right_eye", "mouth"]

    def test_counts_enforced(self):
        with pytest.raises(ValidationError, match="exactly 8"):
            BlockLayoutConfig(landmark_indices=(1, 2, 3))
        with pytest.raises(ValidationError, match="exactly 3"):
            BlockLayoutConfig(region_definitions=(("eye", (36, 37)),))

    def test_sizes_must_be_odd(self):
        with pytest.raises(ValidationError, match="odd"):
            BlockLayoutConfig(small_block_size=12)
        with pytest.raises(ValidationError):
            BlockLayoutConfig(large_block_size=129)

    def test_index_range(self):
        with pytest.raises(ValidationError, match="out of range"):
            BlockLayoutConfig(landmark_indices=(0, 1, 2, 3, 4, 5, 6, 68))


class TestExtractBlocks:
    def _chip(self, seed=0, size=140):
        rng = np.random.default_rng(seed)
        image = rng.uniform(0, 1, size=(size + 60, size + 60, 3))
        landmarks = LandmarkSet(30.0 + rng.uniform(0, 1, size=(68, 2)) * size)
        return crop_face(image, landmarks), landmarks

    def test_eleven_blocks_fixed_order_and_sizes(self):
        chip, landmarks = self._chip()
        layout = BlockLayoutConfig()
        blocks = extract_blocks(chip, landmarks, layout)
        assert len(blocks) == 11
        for blk, idx in zip(blocks[:8], layout.landmark_indices):
            assert blk.kind == "landmark" and blk.ident == idx
            assert blk.pixels.shape == (13, 13, 3)
        for blk, (name, _) in zip(blocks[8:], layout.region_definitions):
            assert blk.kind == "region" and blk.ident == name
            assert blk.pixels.shape == (31, 31, 3)

    def test_blocks_equal_chip_subarrays(self):
        chip, landmarks = self._chip(seed=2)
        for blk in extract_blocks(chip, landmarks):
            cx, cy = blk.center
            r = blk.pixels.shape[0] // 2
            window = chip.pixels[cy - r:cy + r + 1, cx - r:cx + r + 1, :]
            assert np.array_equal(blk.pixels, window)

    def test_center_clamped_to_fit(self):
        chip, _ = self._chip(seed=3)
        blk = block_at(chip, (2.0, 2.0), 13)
        assert blk.center == (6, 6)
        blk = block_at(chip, (999.0, -5.0), 31)
        assert blk.center == (CHIP_SIZE - 1 - 15, 15)

    def test_region_centers_are_group_centroids(self):
        chip, landmarks = self._chip(seed=4)
        layout = BlockLayoutConfig()
        blocks = extract_blocks(chip, landmarks, layout)
        pts = chip.transform.to_chip(landmarks.points)
        for blk, (name, group) in zip(blocks[8:], layout.region_definitions):
            centroid = pts[list(group)].mean(axis=0)
            expect_x = int(np.floor(centroid[0] + 0.5))
            expect_y = int(np.floor(centroid[1] + 0.5))
            r = 15
            expect_x = min(max(expect_x, r), CHIP_SIZE - 1 - r)
            expect_y = min(max(expect_y, r), CHIP_SIZE - 1 - r)
            assert blk.center == (expect_x, expect_y)

    def test_block_count_and_bounds_over_random_inputs(self):
        for seed in range(8):
            chip, landmarks = self._chip(seed=seed, size=60 + 17 * seed)
            blocks = extract_blocks(chip, landmarks)
            assert len(blocks) == 11
            for blk in blocks:
                s = blk.pixels.shape[0]
                cx, cy = blk.center
                assert s // 2 <= cx <= CHIP_SIZE - 1 - s // 2
                assert s // 2 <= cy <= CHIP_SIZE - 1 - s // 2
