import numpy as np
import pytest

from veriface.errors import ConfigError, InsufficientDataError
from veriface.spatial_pca import (apply_spatial_pca, apply_spatial_pca_batch,
                                  fit_spatial_pca, select_channels)


def _orthogonal_pattern_maps(rng, n, dim, variances):
    """Maps that are exact linear combinations of orthonormal patterns with
    the requested sample variances (coefficients orthogonalized)."""
    k = len(variances)
    patterns = np.linalg.qr(rng.normal(size=(dim, k)))[0].T      # (k, dim)
    coeffs = rng.normal(size=(n, k))
    coeffs -= coeffs.mean(axis=0)
    q = np.linalg.qr(coeffs)[0]                                  # orthonormal cols
    coeffs = q * np.sqrt(np.array(variances) * n)
    return coeffs @ patterns, patterns


class TestChannelSelection:
    def test_cutoff_selection(self):
        # 5 + 3 = 8 >= 0.8 * 10, so two channels suffice
        assert select_channels([5.0, 3.0, 2.0], 0.8) == [0, 1]
        assert select_channels([5.0, 3.0, 2.0], 0.81) == [0, 1, 2]
        assert select_channels([2.0, 5.0, 3.0], 0.8) == [1, 2]

    def test_all_zero_energy_keeps_one(self):
        assert select_channels([0.0, 0.0], 0.8) == [0]


class TestFit:
    def test_analytic_truncation(self):
        rng = np.random.default_rng(0)
        maps, _ = _orthogonal_pattern_maps(rng, 200, 16, [5.0, 3.0, 2.0])
        responses = maps.reshape(200, 4, 4, 1)
        model = fit_spatial_pca(responses, np.array([1.0]), energy_cutoff=0.8,
                                max_components=10)
        assert model.selected_channels == [0]
        assert model.channels[0].n_components == 2
        assert np.allclose(model.channels[0].eigenvalues, [5.0, 3.0], atol=1e-8)

    def test_max_components_cap(self):
        rng = np.random.default_rng(1)
        maps, _ = _orthogonal_pattern_maps(rng, 300, 25,
                                           [8.0, 4.0, 2.0, 1.0, 0.5])
        responses = maps.reshape(300, 5, 5, 1)
        model = fit_spatial_pca(responses, np.array([1.0]), energy_cutoff=0.999,
                                max_components=3)
        assert model.channels[0].n_components == 3

    def test_zero_variance_channel_is_degenerate(self):
        responses = np.ones((10, 4, 4, 2))
        responses[:, :, :, 1] = np.random.default_rng(2).normal(size=(10, 4, 4))
        model = fit_spatial_pca(responses, np.array([5.0, 1.0]),
                                energy_cutoff=0.99, max_components=10)
        first = model.channels[0]
        assert first.channel == 0
        assert first.degenerate and first.n_components == 1

    def test_component_rows_orthonormal(self):
        rng = np.random.default_rng(3)
        responses = rng.normal(size=(80, 6, 6, 4))
        model = fit_spatial_pca(responses, rng.uniform(1, 2, size=4), 0.95, 10)
        for ch in model.channels:
            gram = ch.components @ ch.components.T
            assert np.abs(gram - np.eye(ch.n_components)).max() < 1e-6

    def test_reconstruction_error_within_cutoff(self):
        # kept components explain at least the cutoff fraction of the channel
        # energy when the cap does not bind
        rng = np.random.default_rng(4)
        responses = rng.normal(size=(120, 6, 6, 3)) \
            @ np.diag(rng.uniform(0.5, 2, size=3))
        model = fit_spatial_pca(responses, np.ones(3), energy_cutoff=0.8,
                                max_components=1000)
        n = responses.shape[0]
        for ch in model.channels:
            maps = responses[:, :, :, ch.channel].reshape(n, -1)
            centered = maps - maps.mean(axis=0)
            total = (centered ** 2).sum() / n
            recon = centered @ ch.components.T @ ch.components
            residual = ((centered - recon) ** 2).sum() / n
            assert residual <= 0.2 * total + 1e-9

    def test_training_coefficients_decorrelated_within_channel(self):
        rng = np.random.default_rng(5)
        responses = rng.normal(size=(150, 5, 5, 2))
        model = fit_spatial_pca(responses, np.array([2.0, 1.0]), 0.99, 6)
        col = 0
        coeffs = apply_spatial_pca_batch(model, responses)
        for ch in model.channels:
            block = coeffs[:, col:col + ch.n_components]
            cov = block.T @ block / block.shape[0]
            off = cov - np.diag(np.diag(cov))
            assert np.abs(off).max() < 1e-6 * max(1.0, np.abs(cov).max())
            col += ch.n_components

    def test_insufficient_data(self):
        with pytest.raises(InsufficientDataError):
            fit_spatial_pca(np.zeros((1, 4, 4, 2)), np.ones(2))

    def test_bad_cutoff(self):
        with pytest.raises(ConfigError):
            fit_spatial_pca(np.zeros((5, 4, 4, 2)), np.ones(2), energy_cutoff=0.0)


class TestApply:
    def _model(self, seed=0):
        rng = np.random.default_rng(seed)
        responses = rng.normal(size=(60, 6, 6, 3))
        model = fit_spatial_pca(responses, np.array([3.0, 2.0, 1.0]), 0.9, 5)
        return model, responses, rng

    def test_mean_map_projects_to_zero(self):
        model, responses, _ = self._model()
        mean_response = responses.mean(axis=0)
        coeffs = apply_spatial_pca(model, mean_response)
        assert np.allclose(coeffs, 0.0, atol=1e-10)

    def test_unit_component_projection(self):
        model, responses, _ = self._model(1)
        ch = model.channels[0]
        crafted = responses.mean(axis=0).copy()
        h, w = model.map_shape
        crafted[:, :, ch.channel] = (ch.mean_map + 2.0 * ch.components[0]) \
            .reshape(h, w)
        coeffs = apply_spatial_pca(model, crafted)
        assert np.isclose(coeffs[0], 2.0, atol=1e-9)
        assert np.allclose(coeffs[1:ch.n_components], 0.0, atol=1e-9)

    def test_matches_dense_projection_oracle(self):
        model, _, rng = self._model(2)
        response = rng.normal(size=(6, 6, 3))
        coeffs = apply_spatial_pca(model, response)
        expected = []
        for ch in model.channels:
            flat = response[:, :, ch.channel].ravel()
            expected.append(ch.components @ (flat - ch.mean_map))
        assert np.allclose(coeffs, np.concatenate(expected), atol=1e-8)

    def test_geometry_mismatch(self):
        model, _, rng = self._model(3)
        with pytest.raises(ConfigError):
            apply_spatial_pca(model, rng.normal(size=(5, 5, 3)))

    def test_parameter_count(self):
        model, _, _ = self._model(4)
        total = sum(ch.n_components for ch in model.channels)
        assert model.n_parameters == 36 * total
