"""
Audio decoding and frame iteration shared by all feature extractors
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Tuple, Union
import logging

import numpy as np
import soundfile as sf
from scipy.signal import get_window

from transcriber import config
from transcriber.errors import AudioFormatError

logger = logging.getLogger(__name__)

SUPPORTED_SUBTYPES = {'PCM_16', 'PCM_24', 'FLOAT'}


@dataclass(frozen=True)
class AudioClip:
    """Multi-channel PCM samples in [-1, 1]"""
    channels: np.ndarray  # (num_channels, num_samples)
    sample_rate: int

    def __post_init__(self):
        samples = np.atleast_2d(np.asarray(self.channels, dtype=np.float64))
        samples.setflags(write=False)
        object.__setattr__(self, 'channels', samples)

        if self.sample_rate <= 0:
            raise AudioFormatError(f"invalid sample rate {self.sample_rate}")
        if not 1 <= samples.shape[0] <= config.MAX_CHANNELS:
            raise AudioFormatError(f"unsupported channel count {samples.shape[0]}")

    @property
    def num_channels(self) -> int:
        return self.channels.shape[0]

    @property
    def num_samples(self) -> int:
        return self.channels.shape[1]

    @property
    def duration(self) -> float:
        return self.num_samples / self.sample_rate

    def channel(self, index: int) -> np.ndarray:
        """Samples of one channel"""
        if not 0 <= index < self.num_channels:
            raise IndexError(f"channel {index} out of range for {self.num_channels}-channel clip")
        return self.channels[index]

    def mono(self, index: int) -> 'AudioClip':
        """Single-channel clip holding one of the channels"""
        return AudioClip(self.channel(index)[np.newaxis, :], self.sample_rate)


@dataclass(frozen=True)
class FrameGrid:
    """Framing of a signal: window size N, hop size h_s and zero padding factor m"""
    window_size: int
    hop_size: int
    zero_pad: int = 1

    def __post_init__(self):
        if self.window_size <= 0 or self.hop_size <= 0 or self.zero_pad < 1:
            raise ValueError(f"invalid frame grid {self}")

    @property
    def fft_size(self) -> int:
        return self.window_size * self.zero_pad

    def num_frames(self, num_samples: int) -> int:
        """Number of complete windows that fit the signal"""
        if num_samples < self.window_size:
            return 0
        return (num_samples - self.window_size) // self.hop_size + 1

    def frame_time(self, n: Union[int, np.ndarray], sample_rate: int = config.SAMPLE_RATE):
        """Start time in seconds of frame n"""
        return np.asarray(n) * self.hop_size / sample_rate

    def times(self, num_frames: int, sample_rate: int = config.SAMPLE_RATE) -> np.ndarray:
        return np.arange(num_frames) * self.hop_size / sample_rate

    def frame_at(self, time_s: Union[float, np.ndarray], sample_rate: int = config.SAMPLE_RATE):
        """Nearest frame index for a time in seconds"""
        return np.rint(np.asarray(time_s) * sample_rate / self.hop_size).astype(int)

    def bin_index(self, freq: Union[float, np.ndarray], sample_rate: int = config.SAMPLE_RATE):
        """Spectral bin k(f) = round(f * m * N / f_s)"""
        k = np.rint(np.asarray(freq, dtype=np.float64) * self.fft_size / sample_rate).astype(int)
        return int(k) if k.ndim == 0 else k

    def bin_frequencies(self, sample_rate: int = config.SAMPLE_RATE) -> np.ndarray:
        """Centre frequency of every rfft bin"""
        return np.arange(self.fft_size // 2 + 1) * sample_rate / self.fft_size

    def frames_per_second(self, sample_rate: int = config.SAMPLE_RATE) -> float:
        return sample_rate / self.hop_size

    @property
    def centre_offset(self) -> int:
        """Frames between a window's start and the frame whose start is nearest its centre"""
        return self.window_size // (2 * self.hop_size)

    def centred(self, values: np.ndarray) -> np.ndarray:
        """
        Move frame values so index n describes the signal around time n * hop

        Values are shifted later by centre_offset frames; the leading frames are
        zero and the length is unchanged.
        """
        values = np.asarray(values)
        shift = min(self.centre_offset, len(values))
        out = np.zeros_like(values)
        out[shift:] = values[:len(values) - shift]
        return out


# Grids used across the pipeline
SBR_GRID = FrameGrid(config.SBR_WINDOW_SIZE, config.SBR_HOP_SIZE, config.SBR_ZERO_PAD)
MELODY_GRID = FrameGrid(config.MELODY_WINDOW_SIZE, config.MELODY_HOP_SIZE, config.MELODY_ZERO_PAD)
BARK_GRID = FrameGrid(config.BARK_WINDOW_SIZE, config.BARK_HOP_SIZE, config.BARK_ZERO_PAD)
RMS_GRID = FrameGrid(config.RMS_WINDOW_SIZE, config.RMS_HOP_SIZE)
CHROMA_GRID = FrameGrid(config.CHROMA_WINDOW_SIZE, config.CHROMA_HOP_SIZE, config.CHROMA_ZERO_PAD)


def load_audio(path: Union[str, Path]) -> AudioClip:
    """
    Decode a PCM WAV file

    Args:
        path: WAV file, 16/24-bit PCM or float32, 1-2 channels, 44.1 kHz

    Returns:
        AudioClip with samples normalised to [-1, 1]
    """
    path = Path(path)
    try:
        info = sf.info(str(path))
    except Exception as e:
        raise AudioFormatError(f"unreadable file {path}: {e}") from e

    if info.format != 'WAV' or info.subtype not in SUPPORTED_SUBTYPES:
        raise AudioFormatError(f"unsupported encoding {info.format}/{info.subtype} in {path}")
    if info.samplerate != config.SAMPLE_RATE:
        raise AudioFormatError(f"unsupported sample rate {info.samplerate} Hz in {path} "
                               f"(expected {config.SAMPLE_RATE})")
    if not 1 <= info.channels <= config.MAX_CHANNELS:
        raise AudioFormatError(f"unsupported channel count {info.channels} in {path}")

    try:
        # libsndfile scales integer PCM by 2^(bits-1)
        data, sample_rate = sf.read(str(path), dtype='float64', always_2d=True)
    except Exception as e:
        raise AudioFormatError(f"unreadable file {path}: {e}") from e

    clip = AudioClip(np.clip(data.T, -1.0, 1.0), sample_rate)
    logger.info(f"Loaded {path.name}: {clip.num_channels} ch, {clip.duration:.2f}s")
    return clip


def write_audio(clip: AudioClip, path: Union[str, Path], subtype: str = 'PCM_16'):
    """Write a clip as WAV"""
    sf.write(str(path), clip.channels.T, clip.sample_rate, subtype=subtype)


def frame_view(samples: np.ndarray, grid: FrameGrid) -> np.ndarray:
    """Read-only (num_frames, N) view of the unwindowed frames"""
    num_frames = grid.num_frames(len(samples))
    if num_frames == 0:
        return np.zeros((0, grid.window_size))
    windows = np.lib.stride_tricks.sliding_window_view(samples, grid.window_size)
    return windows[::grid.hop_size][:num_frames]


def analysis_window(size: int) -> np.ndarray:
    return get_window('hann', size)


def frame_signal(clip: AudioClip, channel: int, grid: FrameGrid) -> Iterator[np.ndarray]:
    """
    Iterate over Hann-windowed frames zero-padded to m * N samples

    Yields nothing when the signal is shorter than one window.
    """
    window = analysis_window(grid.window_size)
    for frame in frame_view(clip.channel(channel), grid):
        padded = np.zeros(grid.fft_size)
        padded[:grid.window_size] = frame * window
        yield padded


def frame_blocks(samples: np.ndarray, grid: FrameGrid,
                 block_size: int = 512) -> Iterator[Tuple[int, np.ndarray]]:
    """
    Iterate over blocks of windowed frames for vectorised transforms

    Yields:
        (index of the first frame in the block, (frames, N) windowed array)
    """
    window = analysis_window(grid.window_size)
    frames = frame_view(samples, grid)
    for start in range(0, len(frames), block_size):
        yield start, frames[start:start + block_size] * window
