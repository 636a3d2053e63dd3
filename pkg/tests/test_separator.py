import numpy as np
import pytest
import torch

from conftest import TINY_FRAME, TINY_HOP, TINY_TWO_F, tiny_model
from spatialmss.audio.signal import stack_stereo_magnitude, stereo_stft
from spatialmss.conditioning.conditioning import ConditionMode
from spatialmss.encoding.positional import EmbeddingConfig, encode
from spatialmss.errors import ShapeMismatchError
from spatialmss.mixing.panning import AngleSpec
from spatialmss.mixing.scene import mix_scene
from spatialmss.model.separator import (
    MaskSet,
    SeparatorConfig,
    apply_masks,
    predict_masks,
    separate,
)

ALL_MODES = [ConditionMode.NONE, ConditionMode.CAT, ConditionMode.ADD, ConditionMode.ADAIN]


class TestSeparatorConfig:
    def test_default_labels(self):
        assert SeparatorConfig(n_sources=3).labels == ("source0", "source1", "source2")

    def test_single_source_rejected(self):
        with pytest.raises(ValueError, match="K ≥ 2 required"):
            SeparatorConfig(n_sources=1)

    def test_dict_round_trip(self):
        cfg = SeparatorConfig(
            n_sources=2,
            frame_size=TINY_FRAME,
            hop=TINY_HOP,
            condition_mode=ConditionMode.ADAIN,
            embedding=EmbeddingConfig(dim=TINY_TWO_F, unit="degree"),
            labels=("a", "b"),
        )
        assert SeparatorConfig.from_dict(cfg.to_dict()) == cfg

    @pytest.mark.parametrize("mode", [ConditionMode.ADD, ConditionMode.ADAIN])
    def test_embedding_width_must_match_two_f(self, mode):
        with pytest.raises(ShapeMismatchError, match="requires D = 2F"):
            tiny_model(mode, EmbeddingConfig(dim=16))


class TestInitialisation:
    def test_bounds(self):
        model = tiny_model(ConditionMode.CAT, EmbeddingConfig(dim=8))
        for spec, p in zip(model.parameter_shapes(), model.parameters()):
            assert spec.shape == tuple(p.shape)
            assert torch.all(p.abs() <= 1.0 / np.sqrt(spec.fan_in))

    def test_seeded(self):
        a, b, c = tiny_model(seed=3), tiny_model(seed=3), tiny_model(seed=4)
        assert torch.equal(a.flat_parameters(), b.flat_parameters())
        assert not torch.equal(a.flat_parameters(), c.flat_parameters())

    def test_parameter_order(self):
        names = [s.name for s in tiny_model().parameter_shapes()]
        assert names == [
            "encoder_weight",
            "encoder_bias",
            "trunk_weight",
            "trunk_bias",
            "mask_weight",
            "mask_bias",
        ]

    def test_flat_round_trip(self):
        model = tiny_model()
        vector = torch.arange(model.flat_parameters().numel(), dtype=torch.float64)
        model.load_flat_parameters(vector)
        assert torch.equal(model.flat_parameters(), vector)


class TestForward:
    @pytest.mark.parametrize("mode", ALL_MODES)
    def test_zero_parameters_give_half_masks(self, mode, rng):
        model = tiny_model(mode)
        model.load_flat_parameters(torch.zeros(model.flat_parameters().numel()))
        mix_mag = torch.from_numpy(rng.uniform(0, 1, (TINY_TWO_F, 7)))
        masks = model(mix_mag, model.embed([-20.0, 20.0]))
        assert masks.shape == (2, TINY_TWO_F, 7)
        assert torch.all(masks == 0.5)

    @pytest.mark.parametrize("mode", ALL_MODES)
    def test_masks_are_in_unit_interval(self, mode, rng):
        model = tiny_model(mode, seed=5)
        mix_mag = torch.from_numpy(rng.uniform(0, 10, (TINY_TWO_F, 11)))
        masks = model(mix_mag, model.embed([-20.0, 20.0]))
        assert torch.all((masks >= 0) & (masks <= 1))

    @pytest.mark.parametrize("mode", [ConditionMode.CAT, ConditionMode.ADAIN])
    def test_swapping_streams_swaps_masks(self, mode, rng):
        model = tiny_model(mode, seed=2)
        swapped = tiny_model(mode, seed=2)
        with torch.no_grad():
            for p, q in zip(model.parameters(), swapped.parameters()):
                q.copy_(p.flip(0))
        mix_mag = torch.from_numpy(rng.uniform(0, 1, (TINY_TWO_F, 6)))
        masks = model(mix_mag, model.embed([-25.0, 15.0]))
        flipped = swapped(mix_mag, swapped.embed([15.0, -25.0]))
        torch.testing.assert_close(flipped, masks.flip(0), rtol=0, atol=1e-12)

    def test_angles_change_conditioned_masks(self, rng):
        model = tiny_model(ConditionMode.CAT, seed=1)
        mix_mag = torch.from_numpy(rng.uniform(0, 1, (TINY_TWO_F, 6)))
        a = model(mix_mag, model.embed([-30.0, 30.0]))
        b = model(mix_mag, model.embed([-10.0, 10.0]))
        assert not torch.allclose(a, b)

    def test_other_stream_angle_changes_mask(self, rng):
        model = tiny_model(ConditionMode.CAT, seed=1)
        mix_mag = torch.from_numpy(rng.uniform(0, 1, (TINY_TWO_F, 6)))
        a = model(mix_mag, model.embed([-30.0, 30.0]))
        b = model(mix_mag, model.embed([-30.0, 5.0]))
        assert not torch.allclose(a[0], b[0])

    @pytest.mark.parametrize("mode", ALL_MODES)
    def test_silenced_encoder_changes_other_masks(self, mode, rng):
        model = tiny_model(mode, seed=7)
        mix_mag = torch.from_numpy(rng.uniform(0, 1, (TINY_TWO_F, 6)))
        embeddings = model.embed([-20.0, 20.0])
        before = model(mix_mag, embeddings)
        with torch.no_grad():
            model.encoder_weight[1].zero_()
            model.encoder_bias[1].zero_()
        after = model(mix_mag, embeddings)
        assert not torch.allclose(before[0], after[0])

    def test_zero_weight_angle_inputs_match_unconditioned_model(self, rng):
        plain = tiny_model(ConditionMode.NONE, seed=8)
        conditioned = tiny_model(ConditionMode.CAT, EmbeddingConfig(dim=4), seed=0)
        with torch.no_grad():
            for name, p in plain.named_parameters():
                q = getattr(conditioned, name)
                if name == "encoder_weight":
                    q.zero_()
                    q[..., :TINY_TWO_F] = p
                else:
                    q.copy_(p)
        mix_mag = torch.from_numpy(rng.uniform(0, 1, (TINY_TWO_F, 6)))
        expected = plain(mix_mag, plain.embed([]))
        masks = conditioned(mix_mag, conditioned.embed([-35.0, 12.0]))
        torch.testing.assert_close(masks, expected, rtol=0, atol=1e-12)

    def test_wrong_angle_count(self):
        with pytest.raises(ShapeMismatchError, match="2 streams, got 3"):
            tiny_model().embed([0.0, 1.0, 2.0])

    def test_normalization_statistics(self, rng):
        model = tiny_model()
        frames = torch.from_numpy(rng.uniform(0, 4, (50, TINY_TWO_F)))
        model.fit_normalization(frames)
        torch.testing.assert_close(model.input_mean, frames.mean(0))
        assert torch.all(model.input_scale > 0)


class TestSeparate:
    def test_none_mode_ignores_angles(self, two_source_scene):
        model = tiny_model(ConditionMode.NONE, seed=4)
        mixture, _ = mix_scene(two_source_scene)
        plain = separate(model, mixture)
        with_angles = separate(model, mixture, [AngleSpec(-5.0), AngleSpec(40.0)])
        for a, b in zip(plain, with_angles):
            np.testing.assert_array_equal(a.to_array(), b.to_array())

    def test_conditioned_model_needs_angles(self, two_source_scene):
        mixture, _ = mix_scene(two_source_scene)
        with pytest.raises(ShapeMismatchError, match="expects 2 angles"):
            separate(tiny_model(ConditionMode.CAT), mixture)

    def test_estimates_have_mixture_length(self, two_source_scene):
        mixture, _ = mix_scene(two_source_scene)
        estimates = separate(tiny_model(), mixture, two_source_scene.angles)
        assert len(estimates) == 2
        assert all(len(e) == len(mixture) for e in estimates)

    def test_predict_masks_matches_forward(self, two_source_scene):
        model = tiny_model(ConditionMode.CAT, EmbeddingConfig(dim=4), seed=6)
        mixture, _ = mix_scene(two_source_scene)
        stacked = stack_stereo_magnitude(*stereo_stft(mixture, TINY_FRAME, TINY_HOP))
        embeddings = [encode(a, model.cfg.embedding) for a in two_source_scene.angles]
        masks = predict_masks(model, stacked, embeddings)
        with torch.no_grad():
            direct = model(torch.from_numpy(stacked.mag), model.embed(two_source_scene.angles))
        np.testing.assert_array_equal(masks.masks, direct.numpy())


class TestApplyMasks:
    def test_unit_masks_return_the_mixture(self, two_source_scene):
        mixture, _ = mix_scene(two_source_scene)
        left, right = stereo_stft(mixture, TINY_FRAME, TINY_HOP)
        ones = MaskSet(np.ones((2, TINY_TWO_F, left.n_frames)))
        for estimate in apply_masks(ones, left, right):
            np.testing.assert_allclose(estimate.to_array(), mixture.to_array(), atol=1e-6)

    def test_zero_masks_return_silence(self, two_source_scene):
        mixture, _ = mix_scene(two_source_scene)
        left, right = stereo_stft(mixture, TINY_FRAME, TINY_HOP)
        zeros = MaskSet(np.zeros((2, TINY_TWO_F, left.n_frames)))
        for estimate in apply_masks(zeros, left, right):
            assert np.all(estimate.to_array() == 0)

    def test_hard_panned_sources_are_recovered(self, two_source_scene):
        scene = two_source_scene.with_angles([45.0, -45.0])
        mixture, targets = mix_scene(scene)
        left, right = stereo_stft(mixture, TINY_FRAME, TINY_HOP)
        half = TINY_TWO_F // 2
        masks = np.zeros((2, TINY_TWO_F, left.n_frames))
        masks[0, :half] = 1.0
        masks[1, half:] = 1.0
        estimates = apply_masks(MaskSet(masks), left, right)
        for estimate, target in zip(estimates, targets):
            np.testing.assert_allclose(estimate.to_array(), target.to_array(), atol=1e-6)

    def test_mask_range_is_checked(self):
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            MaskSet(np.full((2, 4, 3), 1.5))

    def test_mask_shape_is_checked(self, two_source_scene):
        mixture, _ = mix_scene(two_source_scene)
        left, right = stereo_stft(mixture, TINY_FRAME, TINY_HOP)
        wrong = MaskSet(np.ones((2, TINY_TWO_F, left.n_frames + 1)))
        with pytest.raises(ShapeMismatchError):
            apply_masks(wrong, left, right)
