"""End-to-end detector: training, frame/video scoring, AUC, landmark
discriminability analysis and the parameter-budget audit.

Per frame, the feature vector is the concatenation over the 11 block
slots (8 landmark blocks then 3 regions) of the screened raw filter
responses followed by the spatial-PCA coefficients of that slot.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, replace

import numpy as np

from . import dft as dftmod
from .blocks import block_at, crop_face, extract_blocks, load_image
from .config import RunConfig
from .errors import MetricError, ValidationError, VerifaceError
from .gbdt import GbdtModel, count_parameters, fit_gbdt
from .manifest import N_LANDMARKS, DatasetManifest
from .saab import apply_saab_batch, extract_patches_batch, fit_saab
from .spatial_pca import apply_spatial_pca_batch, fit_spatial_pca

PARAMETER_BUDGET = 256_000


def parallel_map(fn, items, threads: int = 1):
    """Ordered map, optionally over a thread pool (numpy releases the GIL)."""
    if threads <= 1:
        return [fn(item) for item in items]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@contextmanager
def _stage(name):
    """Re-raise stage errors with the failing stage identified."""
    try:
        yield
    except VerifaceError as exc:
        raise type(exc)(f"stage {name}: {exc}") from exc


@dataclass(frozen=True)
class BlockSchema:
    kind: str           # "landmark" or "region"
    ident: object
    size: int
    n_dft: int
    n_spatial: int

    @property
    def n_features(self):
        return self.n_dft + self.n_spatial


@dataclass
class DetectorModel:
    config: RunConfig
    banks: list
    spatial: list
    selectors: list
    classifier: GbdtModel
    feature_schema: list

    @property
    def layout(self):
        return self.config.layout

    @property
    def n_features(self):
        return int(sum(s.n_features for s in self.feature_schema))


def _collect_block_stacks(records, layout, threads):
    """Per-slot (N, S, S, 3) pixel stacks, streaming chips to bound memory."""
    slots = layout.block_kinds()

    def frame_blocks(rec):
        image = load_image(rec.image_ref)
        chip = crop_face(image, rec.landmarks)
        return [blk.pixels for blk in extract_blocks(chip, rec.landmarks, layout)]

    rows = parallel_map(frame_blocks, records, threads)
    stacks = []
    for s in range(len(slots)):
        stacks.append(np.stack([row[s] for row in rows]))
        for row in rows:
            row[s] = None
    return stacks


def _fit_slot(stack, labels, config, kind):
    """Fit one block slot: filter bank, spatial PCA and feature screen."""
    patches, _ = extract_patches_batch(stack, config.stride)
    bank = fit_saab(patches.reshape(-1, patches.shape[-1]))
    responses = apply_saab_batch(bank, stack, config.stride)
    spatial = fit_spatial_pca(responses, bank.channel_energy,
                              config.spatial_energy_cutoff,
                              config.spatial_max_components)
    coeffs = apply_spatial_pca_batch(spatial, responses)
    flat = responses.reshape(responses.shape[0], -1)
    fraction = config.keep_fraction(kind)
    if config.selector == "energy":
        h, w = responses.shape[1], responses.shape[2]
        energies = np.tile(bank.channel_energy, h * w)
        selector = dftmod.fit_energy_selector(energies, fraction)
    else:
        selector = dftmod.fit_dft(flat, labels, fraction, config.num_splits)
    features = np.hstack([dftmod.apply_selector(selector, flat), coeffs])
    return bank, spatial, selector, features


def _slot_features(stack, bank, spatial, selector, stride):
    responses = apply_saab_batch(bank, stack, stride)
    coeffs = apply_spatial_pca_batch(spatial, responses)
    flat = responses.reshape(responses.shape[0], -1)
    return np.hstack([dftmod.apply_selector(selector, flat), coeffs])


def train_detector(manifest: DatasetManifest, config: RunConfig | None = None,
                   threads: int = 1) -> DetectorModel:
    """Fit every stage in order over the manifest's frames.

    Deterministic given the config seed.  Stage failures propagate with
    the failing stage named (a single-class manifest fails at the
    feature-screen stage, the first stage that needs labels).
    """
    config = config if config is not None else RunConfig()
    layout = config.layout
    labels = manifest.labels

    with _stage("preprocess"):
        stacks = _collect_block_stacks(manifest.records, layout, threads)

    banks, spatials, selectors, parts, schema = [], [], [], [], []
    for s, (kind, ident, size) in enumerate(layout.block_kinds()):
        with _stage(f"block {s} ({kind} {ident})"):
            bank, spatial, selector, features = _fit_slot(stacks[s], labels,
                                                          config, kind)
        banks.append(bank)
        spatials.append(spatial)
        selectors.append(selector)
        parts.append(features)
        schema.append(BlockSchema(kind=kind, ident=ident, size=size,
                                  n_dft=selector.n_kept,
                                  n_spatial=spatial.n_coefficients))
        stacks[s] = None

    X = np.hstack(parts)
    gbdt_config = replace(config.gbdt, seed=config.seed)
    with _stage("classifier"):
        classifier = fit_gbdt(X, labels, gbdt_config)

    return DetectorModel(config=config, banks=banks, spatial=spatials,
                         selectors=selectors, classifier=classifier,
                         feature_schema=schema)


def extract_features(model: DetectorModel, records_or_stacks, threads: int = 1):
    """Feature matrix for manifest records (or prebuilt per-slot stacks)."""
    config = model.config
    if isinstance(records_or_stacks, (list, tuple)) and records_or_stacks \
            and isinstance(records_or_stacks[0], np.ndarray):
        stacks = list(records_or_stacks)
    else:
        with _stage("preprocess"):
            stacks = _collect_block_stacks(records_or_stacks, config.layout, threads)
    parts = []
    for s, schema in enumerate(model.feature_schema):
        with _stage(f"block {s} ({schema.kind} {schema.ident})"):
            parts.append(_slot_features(stacks[s], model.banks[s],
                                        model.spatial[s], model.selectors[s],
                                        config.stride))
        stacks[s] = None
    return np.hstack(parts)


def predict_frame(model: DetectorModel, image, landmarks) -> float:
    """Probability that a single frame is fake."""
    chip = crop_face(np.asarray(image, dtype=np.float64), landmarks)
    blocks = extract_blocks(chip, landmarks, model.layout)
    stacks = [blk.pixels[None] for blk in blocks]
    features = extract_features(model, stacks)
    return float(model.classifier.predict_proba_matrix(features)[0])


def predict_record(model: DetectorModel, record) -> float:
    """Score one manifest record, loading its image from image_ref."""
    image = load_image(record.image_ref)
    return predict_frame(model, image, record.landmarks)


def predict_video(model: DetectorModel, frames) -> float:
    """Video score: arithmetic mean of the frame scores."""
    frames = list(frames)
    if not frames:
        raise ValidationError("predict_video needs at least one frame")
    scores = [predict_frame(model, image, landmarks) for image, landmarks in frames]
    return float(np.mean(scores))


def score_manifest(model: DetectorModel, manifest: DatasetManifest,
                   threads: int = 1):
    """Frame scores for every record, in manifest order."""
    features = extract_features(model, manifest.records, threads)
    return model.classifier.predict_proba_matrix(features)


def video_score_table(frame_scores, manifest: DatasetManifest):
    """Per-video (video_id, label, mean score), sorted by video id."""
    by_video = {}
    for rec, score in zip(manifest.records, np.asarray(frame_scores)):
        entry = by_video.setdefault(rec.video_id, {"label": rec.label, "scores": []})
        if entry["label"] != rec.label:
            raise ValidationError(f"video {rec.video_id!r} has records with "
                                  f"conflicting labels")
        entry["scores"].append(float(score))
    return [(vid, by_video[vid]["label"], float(np.mean(by_video[vid]["scores"])))
            for vid in sorted(by_video)]


def compute_auc(scores, labels) -> float:
    """Rank-based AUC: P(random positive outranks random negative), ties 1/2."""
    s = np.asarray(scores, dtype=np.float64)
    lab = np.asarray(labels)
    if s.ndim != 1 or lab.shape != s.shape:
        raise ValidationError(f"scores and labels must be matching vectors, "
                              f"got {s.shape} and {lab.shape}")
    if not np.all(np.isfinite(s)):
        raise ValidationError("scores contain non-finite values")
    if not np.isin(lab, (0, 1)).all():
        raise ValidationError("labels must be binary (0/1)")
    n_pos = int(lab.sum())
    n_neg = int(lab.shape[0] - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUC needs both classes present")

    order = np.argsort(s, kind="mergesort")
    sorted_s = s[order]
    n = s.shape[0]
    boundaries = np.nonzero(np.diff(sorted_s))[0] + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [n]])
    avg_rank = (starts + ends + 1) / 2.0          # 1-based ranks, ties averaged
    ranks = np.empty(n, dtype=np.float64)
    ranks[order] = np.repeat(avg_rank, ends - starts)
    pos_rank_sum = float(ranks[lab == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def evaluate_manifest(model: DetectorModel, manifest: DatasetManifest,
                      threads: int = 1):
    """Frame and video level scores plus AUCs (None when undefined)."""
    frame_scores = score_manifest(model, manifest, threads)
    labels = manifest.labels
    try:
        frame_auc = compute_auc(frame_scores, labels)
    except MetricError:
        frame_auc = None
    videos = video_score_table(frame_scores, manifest)
    video_labels = np.array([label for _, label, _ in videos])
    video_scores = np.array([score for _, _, score in videos])
    try:
        video_auc = compute_auc(video_scores, video_labels)
    except MetricError:
        video_auc = None
    return {
        "frame_scores": frame_scores,
        "frame_auc": frame_auc,
        "videos": videos,
        "video_auc": video_auc,
    }


def landmark_discriminability(train_manifest: DatasetManifest,
                              test_manifest: DatasetManifest,
                              config: RunConfig | None = None,
                              threads: int = 1):
    """Test AUC of a single-block mini detector for each of the 68 landmarks.

    Chips are built once and cached (float32) so the 68 runs only differ
    in which small block they cut.
    """
    config = config if config is not None else RunConfig()
    size = config.layout.small_block_size
    gbdt_config = replace(config.gbdt, seed=config.seed)

    def chip_and_points(rec):
        chip = crop_face(load_image(rec.image_ref), rec.landmarks)
        points = chip.transform.to_chip(rec.landmarks.points)
        chip.pixels = chip.pixels.astype(np.float32)
        return chip, points

    with _stage("preprocess"):
        train_cache = parallel_map(chip_and_points, train_manifest.records, threads)
        test_cache = parallel_map(chip_and_points, test_manifest.records, threads)
    y_train = train_manifest.labels
    y_test = test_manifest.labels

    def stack_for(cache, lm):
        return np.stack([
            block_at(chip, points[lm], size).pixels.astype(np.float64)
            for chip, points in cache
        ])

    aucs = np.empty(N_LANDMARKS, dtype=np.float64)
    for lm in range(N_LANDMARKS):
        with _stage(f"landmark {lm}"):
            train_stack = stack_for(train_cache, lm)
            bank, spatial, selector, features = _fit_slot(train_stack, y_train,
                                                          config, "landmark")
            clf = fit_gbdt(features, y_train, gbdt_config)
            test_stack = stack_for(test_cache, lm)
            test_features = _slot_features(test_stack, bank, spatial, selector,
                                           config.stride)
            scores = clf.predict_proba_matrix(test_features)
            aucs[lm] = compute_auc(scores, y_test)
    return aucs


@dataclass(frozen=True)
class ParameterReport:
    """Stored-number counts per subsystem; total is always the exact sum."""

    pixelhop_landmarks: int
    pixelhop_regions: int
    spatialpca_landmarks: int
    spatialpca_regions: int
    dft_landmarks: int
    dft_regions: int
    classifier: int
    n_landmark_blocks: int = 8
    n_region_blocks: int = 3

    def rows(self):
        return [
            ("pixelhop-landmarks", self.n_landmark_blocks, self.pixelhop_landmarks),
            ("pixelhop-regions", self.n_region_blocks, self.pixelhop_regions),
            ("spatialpca-landmarks", self.n_landmark_blocks, self.spatialpca_landmarks),
            ("spatialpca-regions", self.n_region_blocks, self.spatialpca_regions),
            ("dft-landmarks", self.n_landmark_blocks, self.dft_landmarks),
            ("dft-regions", self.n_region_blocks, self.dft_regions),
            ("classifier", 1, self.classifier),
        ]

    @property
    def total(self):
        return int(sum(count for _, _, count in self.rows()))

    def format_table(self) -> str:
        lines = [f"{'subsystem':<22}{'units':>6}{'parameters':>12}"]
        for name, units, count in self.rows():
            lines.append(f"{name:<22}{units:>6}{count:>12,}")
        lines.append(f"{'total':<22}{'':>6}{self.total:>12,}")
        return "\n".join(lines)


def audit_parameters(model: DetectorModel) -> ParameterReport:
    """Count stored numbers per subsystem: filter weights, kept spatial
    components times their map size, retained feature indices, and tree
    nodes (2 per internal node, 1 per leaf)."""
    sums = {"landmark": [0, 0, 0], "region": [0, 0, 0]}
    kinds = {"landmark": 0, "region": 0}
    for schema, bank, spatial, selector in zip(model.feature_schema, model.banks,
                                               model.spatial, model.selectors):
        sums[schema.kind][0] += bank.n_parameters
        sums[schema.kind][1] += spatial.n_parameters
        sums[schema.kind][2] += selector.n_parameters
        kinds[schema.kind] += 1
    return ParameterReport(
        pixelhop_landmarks=sums["landmark"][0],
        pixelhop_regions=sums["region"][0],
        spatialpca_landmarks=sums["landmark"][1],
        spatialpca_regions=sums["region"][1],
        dft_landmarks=sums["landmark"][2],
        dft_regions=sums["region"][2],
        classifier=count_parameters(model.classifier),
        n_landmark_blocks=kinds["landmark"],
        n_region_blocks=kinds["region"],
    )
