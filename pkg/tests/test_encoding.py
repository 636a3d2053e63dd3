import numpy as np
import pytest

from spatialmss.encoding.positional import (
    EmbeddingConfig,
    NoiseSpec,
    SpatialEmbedding,
    embedding_distance,
    encode,
    encode_grid,
    encode_negative,
    encode_positive,
    perturb_angle,
    perturb_angles,
)
from spatialmss.mixing.panning import AngleSpec


class TestEmbeddingConfig:
    def test_defaults(self):
        cfg = EmbeddingConfig()
        assert (cfg.dim, cfg.mode, cfg.unit) == (1024, "sinusoidal", "radian")

    def test_raw_forces_dim_one(self):
        assert EmbeddingConfig(dim=64, mode="raw").dim == 1

    @pytest.mark.parametrize("dim", [0, 7, -2])
    def test_odd_or_non_positive_dim(self, dim):
        with pytest.raises(ValueError, match="positive and even"):
            EmbeddingConfig(dim=dim)

    def test_unknown_mode(self):
        with pytest.raises(ValueError, match="unknown embedding mode"):
            EmbeddingConfig(mode="learned")


class TestEncode:
    @pytest.mark.parametrize("dim", [8, 16, 1024])
    def test_halves_coincide_at_centre(self, dim):
        np.testing.assert_array_equal(
            encode_positive(0.0, dim).values, encode_negative(0.0, dim).values
        )

    @pytest.mark.parametrize("dim", [8, 16, 1024])
    def test_negative_flips_index_of_positive(self, dim):
        for alpha in (1.0, 7.5, 30.0, 45.0):
            p = encode_positive(alpha, dim).values
            n = encode_negative(-alpha, dim).values
            for i in range(1, dim // 2):
                assert n[2 * i] == pytest.approx(-p[dim - 2 * i], abs=1e-12)
                assert n[2 * i + 1] == pytest.approx(p[dim - 2 * i + 1], abs=1e-12)

    def test_first_pair_of_positive(self):
        values = encode_positive(30.0, 8).values
        assert values[0] == pytest.approx(np.sin(30.0))
        assert values[1] == pytest.approx(np.cos(30.0))

    def test_degree_unit(self):
        values = encode_positive(30.0, 8, unit="degree").values
        assert values[0] == pytest.approx(0.5)
        assert values[1] == pytest.approx(np.sqrt(3) / 2)

    @pytest.mark.parametrize("dim", [8, 64, 1024])
    def test_disparity_grows_away_from_centre(self, dim):
        cfg = EmbeddingConfig(dim=dim, unit="degree")
        distances = [
            embedding_distance(encode(AngleSpec(a), cfg), encode(AngleSpec(-a), cfg))
            for a in range(46)
        ]
        assert distances[0] == 0.0
        assert np.all(np.diff(distances) >= 0)

    @pytest.mark.parametrize("unit", ["radian", "degree"])
    def test_entries_are_bounded(self, unit):
        grid = encode_grid(np.arange(-45, 46), EmbeddingConfig(dim=256, unit=unit))
        assert grid.shape == (91, 256)
        assert np.all(np.abs(grid) <= 1.0)

    def test_integer_grid_is_injective(self):
        grid = encode_grid(np.arange(-45, 46), EmbeddingConfig(dim=1024))
        distances = np.linalg.norm(grid[:, None, :] - grid[None, :, :], axis=-1)
        off_diagonal = distances[~np.eye(91, dtype=bool)]
        assert np.all(off_diagonal > 0)

    def test_raw_mode(self):
        emb = encode(AngleSpec(-12.5), EmbeddingConfig.raw())
        np.testing.assert_array_equal(emb.values, [-12.5])
        assert emb.source_angle.degrees == -12.5

    def test_wrong_sign(self):
        with pytest.raises(ValueError, match="use encode_negative"):
            encode_positive(-1.0, 8)
        with pytest.raises(ValueError, match="use encode_positive"):
            encode_negative(1.0, 8)

    def test_odd_dim(self):
        with pytest.raises(ValueError, match="positive even"):
            encode_positive(10.0, 5)

    def test_out_of_panorama(self):
        with pytest.raises(ValueError, match="angle out of panorama"):
            encode_positive(50.0, 8)

    def test_embedding_must_be_finite(self):
        with pytest.raises(ValueError, match="finite vector"):
            SpatialEmbedding(np.array([0.0, np.inf]), AngleSpec(0.0))


class TestPerturb:
    def test_zero_delta_is_identity(self):
        angle = AngleSpec(17.0)
        assert perturb_angle(angle, NoiseSpec(0.0, 3)) == angle

    def test_deterministic(self):
        noise = NoiseSpec(8.0, 42)
        assert perturb_angle(AngleSpec(5.0), noise) == perturb_angle(AngleSpec(5.0), noise)

    def test_bounded_by_delta(self, rng):
        noise = NoiseSpec(8.0, 0)
        for _ in range(500):
            noisy = perturb_angle(AngleSpec(0.0), noise, rng)
            assert -8.0 <= noisy.degrees <= 8.0

    def test_clamped_to_panorama(self, rng):
        noise = NoiseSpec(8.0, 0)
        draws = [perturb_angle(AngleSpec(44.0), noise, rng).degrees for _ in range(500)]
        assert max(draws) == 45.0
        assert min(draws) >= 36.0

    def test_independent_draws_per_angle(self):
        noisy = perturb_angles([AngleSpec(0.0)] * 3, NoiseSpec(8.0, 7))
        assert len({a.degrees for a in noisy}) == 3
        again = perturb_angles([AngleSpec(0.0)] * 3, NoiseSpec(8.0, 7))
        assert noisy == again

    def test_negative_delta(self):
        with pytest.raises(ValueError, match="nonnegative"):
            NoiseSpec(-1.0)
