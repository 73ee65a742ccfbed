"""
Frame-level spectral features: band ratio, bark band energies, RMS and chroma
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Tuple, Union
import logging

import numpy as np
from scipy import fft

from transcriber import config
from transcriber.audio_io import (AudioClip, FrameGrid, SBR_GRID, BARK_GRID, RMS_GRID,
                                  CHROMA_GRID, MELODY_GRID, frame_blocks)

logger = logging.getLogger(__name__)

# Floor added to both band sums of the normalised spectrum
RATIO_EPSILON = 1e-12


@dataclass
class FrameFeatures:
    """Per-frame feature streams, each on its own grid"""
    band_ratio: np.ma.MaskedArray  # S[n] in dB, silent frames masked
    bark: np.ndarray  # (frames, 12)
    rms: np.ndarray
    chroma: np.ndarray  # (frames, 12), class 0 = A
    band_ratio_grid: FrameGrid = SBR_GRID
    bark_grid: FrameGrid = BARK_GRID
    rms_grid: FrameGrid = RMS_GRID
    chroma_grid: FrameGrid = CHROMA_GRID


def magnitude_blocks(samples: np.ndarray, grid: FrameGrid,
                     block_size: int = 512) -> Iterator[Tuple[int, np.ndarray]]:
    """Magnitude spectra |X[k, n]| of Hann-windowed, zero-padded frames, block by block"""
    for start, block in frame_blocks(samples, grid, block_size):
        yield start, np.abs(fft.rfft(block, n=grid.fft_size, axis=1))


def magnitude_spectrogram(samples: np.ndarray, grid: FrameGrid) -> np.ndarray:
    """(frames, bins) magnitude spectrogram"""
    blocks = [mags for _, mags in magnitude_blocks(samples, grid)]
    if not blocks:
        return np.zeros((0, grid.fft_size // 2 + 1))
    return np.vstack(blocks)


def band_mask(grid: FrameGrid, low: float, high: float,
              sample_rate: int = config.SAMPLE_RATE) -> np.ndarray:
    """Bins whose centre frequency lies strictly between low and high"""
    freqs = grid.bin_frequencies(sample_rate)
    return (freqs > low) & (freqs < high)


def spectral_band_ratio(clip: AudioClip, channel: int) -> np.ma.MaskedArray:
    """
    Spectral band ratio S[n] in dB between the vocal and the low band

    Each frame's magnitude spectrum is divided by its maximum before summing.
    All-zero frames get 0 dB and are masked as silent.
    """
    upper = band_mask(SBR_GRID, *config.SBR_UPPER_BAND, clip.sample_rate)
    lower = band_mask(SBR_GRID, *config.SBR_LOWER_BAND, clip.sample_rate)

    ratios, silent = [], []
    for _, mags in magnitude_blocks(clip.channel(channel), SBR_GRID):
        peak = mags.max(axis=1)
        is_silent = peak <= 0
        norm = mags / np.where(is_silent, 1.0, peak)[:, np.newaxis]
        upper_sum = norm[:, upper].sum(axis=1) + RATIO_EPSILON
        lower_sum = norm[:, lower].sum(axis=1) + RATIO_EPSILON
        ratio = 20.0 * np.log10(upper_sum / lower_sum)
        ratios.append(np.where(is_silent, 0.0, ratio))
        silent.append(is_silent)

    if not ratios:
        return np.ma.MaskedArray(np.zeros(0), mask=np.zeros(0, dtype=bool))
    return np.ma.MaskedArray(np.concatenate(ratios), mask=np.concatenate(silent))


def mean_band_ratio(clip: AudioClip, channel: int) -> float:
    """Track mean of S[n] over non-silent frames, -inf when every frame is silent"""
    ratio = spectral_band_ratio(clip, channel)
    if ratio.count() == 0:
        return float('-inf')
    return float(ratio.mean())


def select_channel(clip: AudioClip) -> int:
    """
    Pick the channel with the higher average spectral band ratio

    Mono clips return 0. Ties resolve to channel 0.
    """
    if clip.num_channels == 1:
        return 0

    means = [mean_band_ratio(clip, ch) for ch in range(clip.num_channels)]
    selected = int(np.argmax(means))
    logger.info(f"Channel selection: mean S = {', '.join(f'{m:.2f} dB' for m in means)}, "
                f"selected channel {selected}")
    return selected


def bark_band_masks(grid: FrameGrid = BARK_GRID,
                    sample_rate: int = config.SAMPLE_RATE) -> np.ndarray:
    """(12, bins) boolean masks of the lower twelve bark bands"""
    edges = config.BARK_BAND_EDGES
    return np.array([band_mask(grid, edges[m], edges[m + 1], sample_rate)
                     for m in range(len(edges) - 1)])


def bark_energies(clip: AudioClip, channel: int) -> np.ndarray:
    """
    Energy B[n, m] in each of the lower twelve bark bands

    Returns:
        (frames, 12) array on the bark grid (N=1024, hop 128, no zero padding)
    """
    masks = bark_band_masks(BARK_GRID, clip.sample_rate).astype(np.float64)
    blocks = [(mags ** 2) @ masks.T
              for _, mags in magnitude_blocks(clip.channel(channel), BARK_GRID)]
    if not blocks:
        return np.zeros((0, masks.shape[0]))
    return np.vstack(blocks)


def rms_track(clip: AudioClip, channel: int) -> np.ndarray:
    """RMS of the unwindowed frames on the RMS grid (N=4096, hop 128)"""
    samples = clip.channel(channel)
    num_frames = RMS_GRID.num_frames(len(samples))
    if num_frames == 0:
        return np.zeros(0)

    cumulative = np.concatenate(([0.0], np.cumsum(samples ** 2)))
    starts = np.arange(num_frames) * RMS_GRID.hop_size
    energy = cumulative[starts + RMS_GRID.window_size] - cumulative[starts]
    return np.sqrt(np.maximum(energy, 0.0) / RMS_GRID.window_size)


def chroma_mapping(tuning_ref: float, grid: FrameGrid = CHROMA_GRID,
                   sample_rate: int = config.SAMPLE_RATE) -> np.ndarray:
    """
    (bins, 12) matrix folding spectral bins into pitch classes

    Each bin in the analysis range goes to the nearest semitone relative to
    tuning_ref; class 0 is the pitch class of A.
    """
    if tuning_ref <= 0:
        raise ValueError(f"tuning reference must be positive, got {tuning_ref}")

    freqs = grid.bin_frequencies(sample_rate)
    in_range = band_mask(grid, config.CHROMA_MIN_FREQ, config.CHROMA_MAX_FREQ, sample_rate)
    mapping = np.zeros((len(freqs), 12))
    semitones = np.rint(12.0 * np.log2(freqs[in_range] / tuning_ref)).astype(int)
    mapping[np.flatnonzero(in_range), np.mod(semitones, 12)] = 1.0
    return mapping


def chroma_track(clip: AudioClip, channel: int, tuning_ref: float = config.CENT_REFERENCE_HZ) -> np.ndarray:
    """
    Chroma vectors chr[k_chr, n] on the chroma grid

    Returns:
        (frames, 12) nonnegative array, class 0 = A
    """
    mapping = chroma_mapping(tuning_ref, CHROMA_GRID, clip.sample_rate)
    blocks = [mags @ mapping for _, mags in magnitude_blocks(clip.channel(channel), CHROMA_GRID)]
    if not blocks:
        return np.zeros((0, 12))
    return np.vstack(blocks)


def compute_frame_features(clip: AudioClip, channel: int,
                           tuning_ref: float = config.CENT_REFERENCE_HZ) -> FrameFeatures:
    """All frame-level features of one channel"""
    return FrameFeatures(
        band_ratio=spectral_band_ratio(clip, channel),
        bark=bark_energies(clip, channel),
        rms=rms_track(clip, channel),
        chroma=chroma_track(clip, channel, tuning_ref)
    )


def _resample_nearest(values: np.ndarray, source: FrameGrid, times: np.ndarray) -> np.ndarray:
    """Sample a frame stream at the nearest frame for each time"""
    if len(values) == 0:
        return np.zeros((len(times),) + values.shape[1:])
    index = np.clip(source.frame_at(times), 0, len(values) - 1)
    return values[index]


def write_feature_csv(features: FrameFeatures, path: Union[str, Path],
                      sample_rate: int = config.SAMPLE_RATE):
    """
    Dump per-frame features as CSV on the melody grid

    Columns: time_s, S, B1..B12, rms, chroma0..11
    """
    num_rows = len(features.rms)
    times = MELODY_GRID.times(num_rows, sample_rate)
    columns = [
        times[:, np.newaxis],
        _resample_nearest(features.band_ratio.filled(0.0), features.band_ratio_grid, times)[:, np.newaxis],
        _resample_nearest(features.bark, features.bark_grid, times),
        features.rms[:, np.newaxis],
        _resample_nearest(features.chroma, features.chroma_grid, times),
    ]
    header = ['time_s', 'S'] + [f'B{m}' for m in range(1, 13)] + ['rms'] + [f'chroma{k}' for k in range(12)]
    np.savetxt(path, np.hstack(columns), delimiter=',', header=','.join(header),
               comments='', fmt='%.6g')
    logger.info(f"Wrote {num_rows} feature rows to {path}")
