"""Model persistence: one self-contained, versioned, checksummed file.

Layout: 8-byte magic, 8-byte big-endian header length, a JSON header
(config snapshot plus an array index), the raw C-order array bytes in
index order, and a trailing SHA-256 of everything before it.  Identical
models serialize to identical bytes, so save/load/predict is bit-exact.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .config import RunConfig
from .dft import DftSelector, EnergySelector
from .errors import DataIOError, ModelIOError
from .gbdt import GbdtConfig, GbdtModel, Tree
from .pipeline import BlockSchema, DetectorModel
from .saab import SaabFilterBank
from .spatial_pca import ChannelPca, SpatialPcaModel

MODEL_MAGIC = b"VRFMODEL"
FORMAT_VERSION = 1


def _gbdt_config_dict(cfg: GbdtConfig):
    return {
        "max_leaves": cfg.max_leaves,
        "max_trees": cfg.max_trees,
        "learning_rate": cfg.learning_rate,
        "min_samples_leaf": cfg.min_samples_leaf,
        "min_child_weight": cfg.min_child_weight,
        "l2_regularization": cfg.l2_regularization,
        "max_bins": cfg.max_bins,
        "early_stopping_rounds": cfg.early_stopping_rounds,
        "validation_fraction": cfg.validation_fraction,
        "seed": cfg.seed,
    }


def serialize_model(model: DetectorModel) -> bytes:
    arrays = []

    def add(name, arr):
        arrays.append((name, np.ascontiguousarray(arr)))

    spatial_meta = []
    selector_meta = []
    for s, _ in enumerate(model.feature_schema):
        bank = model.banks[s]
        add(f"bank{s}/filters", bank.filters)
        add(f"bank{s}/channel_energy", bank.channel_energy)
        add(f"bank{s}/patch_mean", bank.patch_mean)

        spatial = model.spatial[s]
        chans = []
        for j, ch in enumerate(spatial.channels):
            add(f"spatial{s}/ch{j}/mean", ch.mean_map)
            add(f"spatial{s}/ch{j}/components", ch.components)
            add(f"spatial{s}/ch{j}/eigenvalues", ch.eigenvalues)
            chans.append({"channel": ch.channel, "degenerate": bool(ch.degenerate)})
        spatial_meta.append({
            "map_shape": list(spatial.map_shape),
            "energy_cutoff": spatial.energy_cutoff,
            "max_components": spatial.max_components,
            "n_input_channels": spatial.n_input_channels,
            "channels": chans,
        })

        selector = model.selectors[s]
        add(f"selector{s}/kept_indices", selector.kept_indices)
        meta = {"method": selector.method, "keep_fraction": selector.keep_fraction}
        if isinstance(selector, DftSelector):
            add(f"selector{s}/costs", selector.costs)
            add(f"selector{s}/best_splits", selector.best_splits)
            meta["num_split_candidates"] = selector.num_split_candidates
        else:
            add(f"selector{s}/energies", selector.energies)
        selector_meta.append(meta)

    clf = model.classifier
    node_counts = [tree.n_nodes for tree in clf.trees]
    if clf.trees:
        for part in ("feature", "threshold", "left", "right", "value"):
            add(f"trees/{part}",
                np.concatenate([getattr(t, part) for t in clf.trees]))
    add("classifier/train_loss_curve", clf.train_loss_curve)

    header = {
        "format_version": FORMAT_VERSION,
        "config": model.config.to_dict(),
        "meta": {
            "feature_schema": [[b.kind, b.ident, b.size, b.n_dft, b.n_spatial]
                               for b in model.feature_schema],
            "spatial": spatial_meta,
            "selectors": selector_meta,
            "classifier": {
                "base_score": clf.base_score,
                "learning_rate": clf.learning_rate,
                "n_features": clf.n_features,
                "config": _gbdt_config_dict(clf.config),
                "tree_node_counts": node_counts,
            },
        },
        "arrays": [[name, arr.dtype.str, list(arr.shape)] for name, arr in arrays],
    }
    header_bytes = json.dumps(header, sort_keys=True,
                              separators=(",", ":")).encode("utf-8")
    body = b"".join(arr.tobytes() for _, arr in arrays)
    blob = MODEL_MAGIC + len(header_bytes).to_bytes(8, "big") + header_bytes + body
    return blob + hashlib.sha256(blob).digest()


def deserialize_model(data: bytes) -> DetectorModel:
    if len(data) < len(MODEL_MAGIC) + 8 + 32:
        raise ModelIOError("model file is truncated")
    if data[:len(MODEL_MAGIC)] != MODEL_MAGIC:
        raise ModelIOError("not a model file (bad magic)")
    blob, digest = data[:-32], data[-32:]
    if hashlib.sha256(blob).digest() != digest:
        raise ModelIOError("model file checksum mismatch (corrupt or truncated)")

    header_len = int.from_bytes(data[8:16], "big")
    header_end = 16 + header_len
    try:
        header = json.loads(data[16:header_end].decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ModelIOError(f"model header is unreadable: {exc}") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise ModelIOError(f"unsupported model format version "
                           f"{header.get('format_version')!r}")

    arrays = {}
    offset = header_end
    for name, dtype_str, shape in header["arrays"]:
        dtype = np.dtype(dtype_str)
        nbytes = dtype.itemsize * int(np.prod(shape, dtype=np.int64)) if shape \
            else dtype.itemsize
        count = int(np.prod(shape, dtype=np.int64))
        arr = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
        arrays[name] = arr.reshape(shape).copy()
        offset += nbytes
    if offset != len(blob):
        raise ModelIOError("model payload size does not match its header")

    config = RunConfig.from_dict(header["config"])
    meta = header["meta"]

    schema = [BlockSchema(kind=k, ident=ident, size=size, n_dft=nd, n_spatial=ns)
              for k, ident, size, nd, ns in meta["feature_schema"]]

    banks, spatials, selectors = [], [], []
    for s, _ in enumerate(schema):
        banks.append(SaabFilterBank(
            filters=arrays[f"bank{s}/filters"],
            channel_energy=arrays[f"bank{s}/channel_energy"],
            patch_mean=arrays[f"bank{s}/patch_mean"],
        ))
        sp = meta["spatial"][s]
        channels = [
            ChannelPca(channel=entry["channel"],
                       mean_map=arrays[f"spatial{s}/ch{j}/mean"],
                       components=arrays[f"spatial{s}/ch{j}/components"],
                       eigenvalues=arrays[f"spatial{s}/ch{j}/eigenvalues"],
                       degenerate=entry["degenerate"])
            for j, entry in enumerate(sp["channels"])
        ]
        spatials.append(SpatialPcaModel(
            map_shape=tuple(sp["map_shape"]), channels=channels,
            energy_cutoff=sp["energy_cutoff"],
            max_components=sp["max_components"],
            n_input_channels=sp["n_input_channels"],
        ))
        sel = meta["selectors"][s]
        if sel["method"] == "dft":
            selectors.append(DftSelector(
                costs=arrays[f"selector{s}/costs"],
                best_splits=arrays[f"selector{s}/best_splits"],
                kept_indices=arrays[f"selector{s}/kept_indices"],
                keep_fraction=sel["keep_fraction"],
                num_split_candidates=sel["num_split_candidates"],
            ))
        else:
            selectors.append(EnergySelector(
                energies=arrays[f"selector{s}/energies"],
                kept_indices=arrays[f"selector{s}/kept_indices"],
                keep_fraction=sel["keep_fraction"],
            ))

    clf_meta = meta["classifier"]
    trees = []
    node_counts = clf_meta["tree_node_counts"]
    if node_counts:
        offsets = np.concatenate([[0], np.cumsum(node_counts)])
        for t, count in enumerate(node_counts):
            a, b = offsets[t], offsets[t + 1]
            trees.append(Tree(
                feature=arrays["trees/feature"][a:b],
                threshold=arrays["trees/threshold"][a:b],
                left=arrays["trees/left"][a:b],
                right=arrays["trees/right"][a:b],
                value=arrays["trees/value"][a:b],
            ))
    classifier = GbdtModel(
        trees=trees,
        learning_rate=clf_meta["learning_rate"],
        base_score=clf_meta["base_score"],
        config=GbdtConfig(**clf_meta["config"]),
        n_features=clf_meta["n_features"],
        train_loss_curve=arrays["classifier/train_loss_curve"],
    )

    return DetectorModel(config=config, banks=banks, spatial=spatials,
                         selectors=selectors, classifier=classifier,
                         feature_schema=schema)


def save_model(model: DetectorModel, path):
    with open(path, "wb") as fh:
        fh.write(serialize_model(model))


def load_model(path) -> DetectorModel:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise DataIOError(f"model not found or unreadable: {path} ({exc})") from exc
    return deserialize_model(data)
