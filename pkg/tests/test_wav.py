import numpy as np
import pytest

from spatialmss.audio.signal import MonoSignal, StereoSignal
from spatialmss.audio.wav import read_mono, read_stereo, read_wav, write_wav
from spatialmss.errors import SpatialSeparationError


class TestWav:
    def test_float32_stereo_round_trip(self, tmp_path, rng):
        stereo = StereoSignal.from_array(0.5 * rng.uniform(-1, 1, (2, 1000)), 16000)
        path = tmp_path / "stereo.wav"
        write_wav(path, stereo)
        loaded = read_stereo(path)
        assert loaded.sample_rate == 16000
        np.testing.assert_allclose(loaded.to_array(), stereo.to_array(), atol=1e-7)

    def test_int16_mono_round_trip(self, tmp_path, rng):
        mono = MonoSignal(0.5 * rng.uniform(-1, 1, 500), 8000)
        path = tmp_path / "mono.wav"
        write_wav(path, mono, subtype="int16")
        loaded = read_wav(path)
        assert isinstance(loaded, MonoSignal)
        assert loaded.sample_rate == 8000
        np.testing.assert_allclose(loaded.samples, mono.samples, atol=1.0 / 32768)

    def test_int16_clipping_is_logged(self, tmp_path, log_messages):
        write_wav(tmp_path / "loud.wav", MonoSignal(np.array([0.0, 2.0, -2.0])), "int16")
        assert any("clipping" in m for m in log_messages)
        loaded = read_mono(tmp_path / "loud.wav")
        assert loaded.samples.max() < 1.0

    def test_channel_kind_is_checked(self, tmp_path):
        path = tmp_path / "mono.wav"
        write_wav(path, MonoSignal(np.zeros(10)))
        with pytest.raises(SpatialSeparationError, match="not a stereo file"):
            read_stereo(path)

    def test_unknown_subtype(self, tmp_path):
        with pytest.raises(ValueError, match="unknown WAV subtype"):
            write_wav(tmp_path / "x.wav", MonoSignal(np.zeros(4)), subtype="int24")

    def test_identical_writes_are_byte_identical(self, tmp_path, rng):
        stereo = StereoSignal.from_array(rng.uniform(-0.5, 0.5, (2, 64)), 16000)
        write_wav(tmp_path / "a.wav", stereo)
        write_wav(tmp_path / "b.wav", stereo)
        assert (tmp_path / "a.wav").read_bytes() == (tmp_path / "b.wav").read_bytes()
