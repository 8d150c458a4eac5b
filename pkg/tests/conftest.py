import pytest

from veriface.config import parse_config
from veriface.manifest import load_manifest
from veriface.pipeline import train_detector
from veriface.synthetic import make_synthetic_dataset

TINY_CONFIG_TEXT = """
seed = 3
gbdt_max_trees = 30
gbdt_min_samples_leaf = 4
gbdt_early_stopping_rounds = 10
"""


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """Small synthetic train/test pair shared across the suite."""
    out = tmp_path_factory.mktemp("tiny_data")
    train_path, test_path = make_synthetic_dataset(
        out, n_videos=16, frames_per_video=3, image_size=144, seed=9)
    return load_manifest(train_path), load_manifest(test_path)


@pytest.fixture(scope="session")
def tiny_config():
    return parse_config(TINY_CONFIG_TEXT)


@pytest.fixture(scope="session")
def tiny_model(tiny_dataset, tiny_config):
    train_manifest, _ = tiny_dataset
    return train_detector(train_manifest, tiny_config)
