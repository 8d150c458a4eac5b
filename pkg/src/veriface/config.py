"""Run configuration: defaults plus the flat key = value config file format.

Config files are plain text, one ``key = value`` per line, ``#`` starts a
comment.  Unknown keys are rejected.  The recognized keys and defaults
are listed in KEY_DOC (also rendered in the README).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .blocks import BlockLayoutConfig
from .errors import ConfigError, DataIOError
from .gbdt import GbdtConfig


def _int_list(text):
    """Comma/space separated ints; 'a-b' expands to the inclusive range."""
    out = []
    for tok in str(text).replace(",", " ").split():
        if "-" in tok[1:]:
            a, _, b = tok.partition("-")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(tok))
    return tuple(out)


KEY_DOC = [
    ("seed", "int", "0", "global RNG seed (classifier holdout split)"),
    ("stride", "int", "2", "filter stride over blocks"),
    ("num_splits", "int", "31", "candidate thresholds per feature in the screen"),
    ("landmark_keep_fraction", "float", "0.35", "feature fraction kept per landmark block"),
    ("region_keep_fraction", "float", "0.15", "feature fraction kept per region block"),
    ("spatial_energy_cutoff", "float", "0.8", "cumulative-energy cutoff for spatial PCA"),
    ("spatial_max_components", "int", "10", "per-channel cap on kept spatial components"),
    ("selector", "str", "dft", "feature screen: 'dft' (supervised) or 'energy' (baseline)"),
    ("landmark_indices", "ints", "36,38,39,42,44,45,30,62", "the 8 block landmarks"),
    ("small_block_size", "int", "13", "landmark block size (odd)"),
    ("large_block_size", "int", "31", "region block size (odd)"),
    ("region_left_eye", "ints", "36,37,38,39,40,41", "landmark group for the left-eye region"),
    ("region_right_eye", "ints", "42,43,44,45,46,47", "landmark group for the right-eye region"),
    ("region_mouth", "ints", "48-67", "landmark group for the mouth region"),
    ("gbdt_max_leaves", "int", "64", "max leaves per tree"),
    ("gbdt_max_trees", "int", "1000", "tree cap for the ensemble"),
    ("gbdt_learning_rate", "float", "0.1", "shrinkage per boosting round"),
    ("gbdt_min_samples_leaf", "int", "20", "min samples per leaf"),
    ("gbdt_min_child_weight", "float", "1e-3", "min hessian sum per leaf"),
    ("gbdt_l2_regularization", "float", "0.0", "L2 penalty on leaf values"),
    ("gbdt_max_bins", "int", "256", "histogram bins per feature"),
    ("gbdt_early_stopping_rounds", "int", "50", "stagnant rounds before stopping (0 = off)"),
    ("gbdt_validation_fraction", "float", "0.1", "holdout fraction for early stopping"),
]

_PARSERS = {"int": int, "float": float, "str": str, "ints": _int_list}
_KEY_TYPES = {name: kind for name, kind, _, _ in KEY_DOC}


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    stride: int = 2
    num_splits: int = 31
    landmark_keep_fraction: float = 0.35
    region_keep_fraction: float = 0.15
    spatial_energy_cutoff: float = 0.8
    spatial_max_components: int = 10
    selector: str = "dft"
    layout: BlockLayoutConfig = field(default_factory=BlockLayoutConfig)
    gbdt: GbdtConfig = field(default_factory=GbdtConfig)

    def __post_init__(self):
        if self.stride < 1:
            raise ConfigError(f"stride must be >= 1, got {self.stride}")
        if self.num_splits < 1:
            raise ConfigError(f"num_splits must be >= 1, got {self.num_splits}")
        for name in ("landmark_keep_fraction", "region_keep_fraction"):
            value = getattr(self, name)
            if not 0 < value <= 1:
                raise ConfigError(f"{name} must be in (0, 1], got {value}")
        if not 0 < self.spatial_energy_cutoff <= 1:
            raise ConfigError(f"spatial_energy_cutoff must be in (0, 1], "
                              f"got {self.spatial_energy_cutoff}")
        if self.spatial_max_components < 1:
            raise ConfigError(f"spatial_max_components must be >= 1, "
                              f"got {self.spatial_max_components}")
        if self.selector not in ("dft", "energy"):
            raise ConfigError(f"selector must be 'dft' or 'energy', got {self.selector!r}")

    def keep_fraction(self, kind: str) -> float:
        return self.landmark_keep_fraction if kind == "landmark" \
            else self.region_keep_fraction

    def to_dict(self):
        """Flat dict snapshot (config-file keys) for model persistence."""
        regions = dict(self.layout.region_definitions)
        return {
            "seed": self.seed,
            "stride": self.stride,
            "num_splits": self.num_splits,
            "landmark_keep_fraction": self.landmark_keep_fraction,
            "region_keep_fraction": self.region_keep_fraction,
            "spatial_energy_cutoff": self.spatial_energy_cutoff,
            "spatial_max_components": self.spatial_max_components,
            "selector": self.selector,
            "landmark_indices": list(self.layout.landmark_indices),
            "small_block_size": self.layout.small_block_size,
            "large_block_size": self.layout.large_block_size,
            "region_left_eye": list(regions["left_eye"]),
            "region_right_eye": list(regions["right_eye"]),
            "region_mouth": list(regions["mouth"]),
            "gbdt_max_leaves": self.gbdt.max_leaves,
            "gbdt_max_trees": self.gbdt.max_trees,
            "gbdt_learning_rate": self.gbdt.learning_rate,
            "gbdt_min_samples_leaf": self.gbdt.min_samples_leaf,
            "gbdt_min_child_weight": self.gbdt.min_child_weight,
            "gbdt_l2_regularization": self.gbdt.l2_regularization,
            "gbdt_max_bins": self.gbdt.max_bins,
            "gbdt_early_stopping_rounds": self.gbdt.early_stopping_rounds,
            "gbdt_validation_fraction": self.gbdt.validation_fraction,
        }

    @classmethod
    def from_dict(cls, values: dict) -> "RunConfig":
        values = dict(values)
        base = cls().to_dict()
        for key in values:
            if key not in base:
                raise ConfigError(f"unknown config key {key!r}")
        base.update(values)
        layout = BlockLayoutConfig(
            landmark_indices=tuple(base["landmark_indices"]),
            small_block_size=base["small_block_size"],
            region_definitions=(
                ("left_eye", tuple(base["region_left_eye"])),
                ("right_eye", tuple(base["region_right_eye"])),
                ("mouth", tuple(base["region_mouth"])),
            ),
            large_block_size=base["large_block_size"],
        )
        gbdt = GbdtConfig(
            max_leaves=base["gbdt_max_leaves"],
            max_trees=base["gbdt_max_trees"],
            learning_rate=base["gbdt_learning_rate"],
            min_samples_leaf=base["gbdt_min_samples_leaf"],
            min_child_weight=base["gbdt_min_child_weight"],
            l2_regularization=base["gbdt_l2_regularization"],
            max_bins=base["gbdt_max_bins"],
            early_stopping_rounds=base["gbdt_early_stopping_rounds"],
            validation_fraction=base["gbdt_validation_fraction"],
            seed=base["seed"],
        )
        return cls(
            seed=base["seed"],
            stride=base["stride"],
            num_splits=base["num_splits"],
            landmark_keep_fraction=base["landmark_keep_fraction"],
            region_keep_fraction=base["region_keep_fraction"],
            spatial_energy_cutoff=base["spatial_energy_cutoff"],
            spatial_max_components=base["spatial_max_components"],
            selector=base["selector"],
            layout=layout,
            gbdt=gbdt,
        )

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, seed=seed, gbdt=replace(self.gbdt, seed=seed))


def parse_config(text: str) -> RunConfig:
    """Parse the key = value config format into a validated RunConfig."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value', "
                              f"got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KEY_TYPES:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        try:
            values[key] = _PARSERS[_KEY_TYPES[key]](value)
        except ValueError as exc:
            raise ConfigError(f"config line {lineno}: bad value for {key}: "
                              f"{exc}") from exc
    return RunConfig.from_dict(values)


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataIOError(f"config not found or unreadable: {path} ({exc})") from exc
    return parse_config(text)
