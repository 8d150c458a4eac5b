import numpy as np

from veriface.blocks import load_image
from veriface.manifest import load_manifest
from veriface.synthetic import (CHEEK_LANDMARK_INDICES, EYE_LANDMARK_INDICES,
                                FACE_TEMPLATE, make_synthetic_dataset)


def test_template_shape_and_groups():
    assert FACE_TEMPLATE.shape == (68, 2)
    assert np.all(FACE_TEMPLATE > 0) and np.all(FACE_TEMPLATE < 1)
    assert set(EYE_LANDMARK_INDICES) <= set(range(36, 48))
    assert set(CHEEK_LANDMARK_INDICES) <= set(range(0, 17))


def test_generated_dataset_structure(tmp_path):
    train_path, test_path = make_synthetic_dataset(
        tmp_path, n_videos=8, frames_per_video=2, image_size=128, seed=1)
    train = load_manifest(train_path)
    test = load_manifest(test_path)
    assert train.split == "train" and test.split == "test"

    labels = train.labels
    assert set(labels.tolist()) == {0, 1}
    # split is by video: no identity appears in both manifests
    train_videos = {r.video_id for r in train.records}
    test_videos = {r.video_id for r in test.records}
    assert not train_videos & test_videos
    assert len(train_videos) + len(test_videos) == 8

    for rec in list(train.records) + list(test.records):
        img = load_image(rec.image_ref)
        assert img.shape == (128, 128, 3)
        assert img.min() >= 0.0 and img.max() <= 1.0
        pts = rec.landmarks.points
        assert pts.min() >= 0.0 and pts.max() <= 127.0


def test_generation_is_deterministic(tmp_path):
    a_train, _ = make_synthetic_dataset(tmp_path / "a", n_videos=4,
                                        frames_per_video=2, image_size=96, seed=7)
    b_train, _ = make_synthetic_dataset(tmp_path / "b", n_videos=4,
                                        frames_per_video=2, image_size=96, seed=7)
    ma = load_manifest(a_train)
    mb = load_manifest(b_train)
    for ra, rb in zip(ma.records, mb.records):
        assert ra.label == rb.label and ra.video_id == rb.video_id
        assert np.array_equal(ra.landmarks.points, rb.landmarks.points)
        ia = open(ra.image_ref, "rb").read()
        ib = open(rb.image_ref, "rb").read()
        assert ia == ib


def test_signal_lives_near_the_eyes(tmp_path):
    # high-frequency energy around eye landmarks separates the classes,
    # while cheek neighbourhoods stay indistinguishable
    train_path, _ = make_synthetic_dataset(tmp_path, n_videos=12,
                                           frames_per_video=2, image_size=160,
                                           seed=3)
    manifest = load_manifest(train_path)

    def hf_energy(img, cx, cy, half=6):
        patch = img[cy - half:cy + half, cx - half:cx + half, 0]
        return float(np.mean(np.abs(np.diff(patch, axis=1))))

    eye_energy = {0: [], 1: []}
    cheek_energy = {0: [], 1: []}
    for rec in manifest.records:
        img = load_image(rec.image_ref)
        for lm in EYE_LANDMARK_INDICES:
            x, y = rec.landmarks.points[lm]
            eye_energy[rec.label].append(hf_energy(img, int(x), int(y)))
        for lm in CHEEK_LANDMARK_INDICES:
            x, y = rec.landmarks.points[lm]
            cheek_energy[rec.label].append(hf_energy(img, int(x), int(y)))

    assert np.mean(eye_energy[1]) > 2.0 * np.mean(eye_energy[0])
    ratio = np.mean(cheek_energy[1]) / np.mean(cheek_energy[0])
    assert 0.7 < ratio < 1.3
