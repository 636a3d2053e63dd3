import numpy as np
import pytest

from spatialmss.experiment import pipeline
from spatialmss.experiment.config import ExperimentConfig

TINY = dict(
    n_train_scenes=1,
    scene_seconds=0.5,
    test_seconds=0.5,
    frame_size=64,
    hop=16,
    hidden_size=4,
    batch_frames=4,
    epochs=2,
)

# a few minutes of CPU per model
TOY = dict(
    n_train_scenes=8,
    scene_seconds=2.0,
    test_seconds=4.0,
    frame_size=256,
    hop=64,
    hidden_size=64,
    batch_frames=16,
    batch_segments=8,
    epochs=30,
    learning_rate=3e-3,
)

# the two guitars sit on either side of the centre
GUITARS_APART = [-30.0, 30.0, 10.0, 0.0]


class TestDeterminism:
    def test_grid_csvs_are_byte_identical(self, tmp_path):
        labels = ["4S-D0", "4S-D1-CAT-α_Tr-ᾱ_Te"]
        serial = ExperimentConfig(seed=4, workers=1, **TINY)
        threaded = ExperimentConfig(seed=4, workers=3, **TINY)
        pipeline.run_grid(labels, serial, tmp_path / "a")
        pipeline.run_grid(labels, serial, tmp_path / "b")
        pipeline.run_grid(labels, threaded, tmp_path / "c")
        for name in ["grid.csv", "4S-D0_eval.csv", "4S-D1-CAT-α_Tr-ᾱ_Te_eval.csv"]:
            reference = (tmp_path / "a" / name).read_bytes()
            assert (tmp_path / "b" / name).read_bytes() == reference
            assert (tmp_path / "c" / name).read_bytes() == reference

    def test_checkpoints_are_byte_identical(self, tmp_path):
        cfg = ExperimentConfig(seed=1, **TINY)
        a = pipeline.cmd_train(cfg, tmp_path / "a")
        b = pipeline.cmd_train(cfg, tmp_path / "b")
        assert a.read_bytes() == b.read_bytes()


@pytest.mark.slow
class TestToyExperiments:
    def guitar_si_sdr(self, label: str) -> float:
        cfg = ExperimentConfig.from_label(label, **TOY)
        model = pipeline.train_model(cfg).model
        scene = pipeline.evaluation_scene(cfg, GUITARS_APART)
        report = pipeline.evaluate_model(model, cfg, scene)
        return float(np.mean(report.si_sdr[:2]))

    def test_angles_help_separate_same_class_sources(self):
        baseline = self.guitar_si_sdr("4S2G-D0")
        conditioned = self.guitar_si_sdr("4S2G-D1-CAT-α_Tr")
        assert conditioned - baseline >= 1.0

    def test_noisy_test_angles_degrade_gracefully(self):
        cfg = ExperimentConfig.from_label("4S2G-D1-CAT-α_Tr", **TOY)
        model = pipeline.train_model(cfg).model
        scene = pipeline.evaluation_scene(cfg, GUITARS_APART)
        clean = pipeline.evaluate_model(model, cfg, scene)
        noisy_cfg = ExperimentConfig.from_label("4S2G-D1-CAT-α_Tr-ᾱ_Te", **TOY)
        noisy = pipeline.evaluate_model(model, noisy_cfg, scene)
        assert clean.average("si_sdr") - noisy.average("si_sdr") < 1.0
