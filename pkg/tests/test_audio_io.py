"""
Test suite for audio decoding and framing
"""
import numpy as np
import pytest
import soundfile as sf

from transcriber.audio_io import (AudioClip, BARK_GRID, FrameGrid, MELODY_GRID, SBR_GRID, frame_signal,
                                  frame_view, load_audio, write_audio)
from transcriber.errors import AudioFormatError


@pytest.fixture
def wav_writer(tmp_path):
    """Write a (samples, channels) array as a WAV file"""
    def write(name, data, sample_rate=44100, subtype='PCM_16'):
        path = tmp_path / name
        sf.write(str(path), data, sample_rate, subtype=subtype)
        return path
    return write


def test_load_stereo_silence(wav_writer):
    """Test a 1 s stereo silent file"""
    clip = load_audio(wav_writer('silence.wav', np.zeros((44100, 2))))

    assert clip.num_channels == 2
    assert clip.num_samples == 44100
    assert clip.sample_rate == 44100
    assert not clip.channels.any()


def test_load_mono(wav_writer):
    """Test a 0.5 s mono file"""
    clip = load_audio(wav_writer('mono.wav', np.zeros(22050)))

    assert clip.num_channels == 1
    assert clip.num_samples == 22050
    assert clip.duration == pytest.approx(0.5)


def test_pcm16_scaling(wav_writer):
    """Test integer samples are divided by 2^15"""
    data = np.full(1000, 16384, dtype=np.int16)
    clip = load_audio(wav_writer('half.wav', data))

    assert np.all(clip.channel(0) == 0.5)


def test_float_file(wav_writer):
    """Test float32 files load unchanged"""
    data = np.linspace(-0.5, 0.5, 4410).astype(np.float32)
    clip = load_audio(wav_writer('float.wav', data, subtype='FLOAT'))

    np.testing.assert_allclose(clip.channel(0), data, atol=1e-7)


def test_rejects_other_sample_rate(wav_writer):
    """Test a 48 kHz file is rejected"""
    path = wav_writer('48k.wav', np.zeros(4800), sample_rate=48000)

    with pytest.raises(AudioFormatError, match='sample rate'):
        load_audio(path)


def test_rejects_unreadable_file(tmp_path):
    """Test garbage bytes raise AudioFormatError"""
    path = tmp_path / 'broken.wav'
    path.write_bytes(b'not a wave file at all')

    with pytest.raises(AudioFormatError):
        load_audio(path)


def test_write_audio_round_trip(tmp_path):
    """Test write_audio output loads back within 24-bit quantisation"""
    t = np.arange(4410) / 44100
    clip = AudioClip(np.vstack([0.5 * np.sin(2 * np.pi * 440 * t), 0.25 * np.cos(2 * np.pi * 220 * t)]), 44100)
    path = tmp_path / 'round.wav'
    write_audio(clip, path, subtype='PCM_24')

    loaded = load_audio(path)
    assert loaded.num_channels == 2
    np.testing.assert_allclose(loaded.channels, clip.channels, atol=2.0 ** -22)


def test_clip_validation():
    """Test clips with too many channels or a bad rate are rejected"""
    with pytest.raises(AudioFormatError):
        AudioClip(np.zeros((3, 100)), 44100)
    with pytest.raises(AudioFormatError):
        AudioClip(np.zeros((1, 100)), 0)


def test_clip_is_read_only():
    """Test clip samples cannot be modified in place"""
    clip = AudioClip(np.zeros((1, 10)), 44100)

    with pytest.raises(ValueError):
        clip.channels[0, 0] = 1.0


def test_frame_counts():
    """Test frame counts for full, single and missing windows"""
    assert FrameGrid(4096, 1024).num_frames(44100) == 40
    assert FrameGrid(4096, 128).num_frames(4096) == 1
    assert FrameGrid(4096, 128).num_frames(1000) == 0


def test_frame_signal_lengths():
    """Test every yielded frame is zero-padded to m * N samples"""
    clip = AudioClip(np.ones((1, 44100)), 44100)
    frames = list(frame_signal(clip, 0, SBR_GRID))

    assert len(frames) == 40
    assert all(len(f) == 8192 for f in frames)
    assert all(not f[4096:].any() for f in frames)


def test_short_clip_yields_no_frames():
    """Test a clip shorter than one window has no frames"""
    clip = AudioClip(np.ones((1, 1000)), 44100)

    assert list(frame_signal(clip, 0, MELODY_GRID)) == []
    assert frame_view(clip.channel(0), MELODY_GRID).shape == (0, 4096)


def test_frame_view_offsets():
    """Test frame n starts at sample n * hop"""
    samples = np.arange(10000, dtype=np.float64)
    frames = frame_view(samples, FrameGrid(1024, 128))

    assert frames[0, 0] == 0
    assert frames[5, 0] == 5 * 128
    assert frames.shape[1] == 1024


def test_frame_times_are_uniform():
    """Test adjacent frame times differ by hop / f_s"""
    times = MELODY_GRID.times(100)

    np.testing.assert_allclose(np.diff(times), 128 / 44100)
    assert MELODY_GRID.frame_time(10) == pytest.approx(1280 / 44100)


def test_bin_index():
    """Test k(440 Hz) on the melody grid"""
    assert MELODY_GRID.bin_index(440.0) == 82


def test_channel_out_of_range():
    """Test asking for a missing channel"""
    clip = AudioClip(np.zeros((1, 10)), 44100)

    with pytest.raises(IndexError):
        clip.channel(1)


def test_centre_offsets():
    """Test half a window in hops for each grid"""
    assert MELODY_GRID.centre_offset == 16
    assert BARK_GRID.centre_offset == 4
    assert SBR_GRID.centre_offset == 2


def test_centred_shifts_later():
    """Test values move later by the centre offset with zero fill"""
    values = np.arange(1, 41, dtype=np.float64)
    centred = MELODY_GRID.centred(values)

    assert centred.shape == values.shape
    assert not centred[:16].any()
    np.testing.assert_array_equal(centred[16:], values[:24])


def test_centred_keeps_feature_columns():
    """Test 2-D frame features shift along the frame axis only"""
    features = np.arange(60, dtype=np.float64).reshape(10, 6) + 1
    centred = BARK_GRID.centred(features)

    assert centred.shape == (10, 6)
    assert not centred[:4].any()
    np.testing.assert_array_equal(centred[4:], features[:6])


def test_centred_shorter_than_offset():
    """Test a track shorter than the offset becomes all zero"""
    assert not MELODY_GRID.centred(np.ones(5)).any()
