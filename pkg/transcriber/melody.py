"""
Predominant melody: salience-based pitch extraction and external contour ingestion
"""
import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union
import logging

import numpy as np

from transcriber import config
from transcriber.audio_io import AudioClip, FrameGrid, MELODY_GRID
from transcriber.contour_tracker import ContourTracker, PitchCandidate, TrackedContour
from transcriber.errors import ContourFileError
from transcriber.spectral import magnitude_blocks

logger = logging.getLogger(__name__)


def rebuild_contours(f0: np.ndarray) -> List[Tuple[int, int]]:
    """
    Maximal runs of nonzero frames

    Returns:
        List of inclusive (start_frame, end_frame) pairs in order
    """
    voiced = np.asarray(f0) > 0
    if not voiced.any():
        return []
    edges = np.diff(np.concatenate(([0], voiced.astype(np.int8), [0])))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1) - 1
    return list(zip(starts.tolist(), ends.tolist()))


def flatten_contours(f0: np.ndarray, contours: List[Tuple[int, int]]) -> np.ndarray:
    """f0 with every frame outside the given contours set to 0"""
    f0 = np.asarray(f0, dtype=np.float64)
    flat = np.zeros_like(f0)
    for start, end in contours:
        flat[start:end + 1] = f0[start:end + 1]
    return flat


@dataclass
class PitchContour:
    """Frame-synchronous f0 in Hz (0 = non-melody frame) and its voiced runs"""
    f0: np.ndarray
    grid: FrameGrid = MELODY_GRID
    sample_rate: int = config.SAMPLE_RATE
    contours: List[Tuple[int, int]] = field(init=False)

    def __post_init__(self):
        self.f0 = np.array(self.f0, dtype=np.float64)
        self.contours = rebuild_contours(self.f0)

    @property
    def num_frames(self) -> int:
        return len(self.f0)

    @property
    def voiced(self) -> np.ndarray:
        return self.f0 > 0

    @property
    def num_voiced(self) -> int:
        return int(np.count_nonzero(self.f0 > 0))

    def times(self) -> np.ndarray:
        return self.grid.times(self.num_frames, self.sample_rate)

    def with_f0(self, f0: np.ndarray) -> 'PitchContour':
        """Copy on the same grid with a new f0 sequence"""
        return PitchContour(f0, self.grid, self.sample_rate)


class SalienceEngine:
    """
    Harmonic summation salience over a cent grid

    Spectral peaks within 30 dB of the frame maximum vote for every candidate
    f0 of which they could be the i-th harmonic, weighted 0.8^(i-1) and by a
    cos^2 window of one semitone half-width around the exact harmonic position.
    """

    def __init__(self, sample_rate: int = config.SAMPLE_RATE, grid: FrameGrid = MELODY_GRID):
        self.sample_rate = sample_rate
        self.grid = grid
        self.min_cents = hz_to_cents(config.MELODY_MIN_F0)
        self.max_cents = hz_to_cents(config.MELODY_MAX_F0)
        num_bins = int(np.floor((self.max_cents - self.min_cents) / config.MELODY_BIN_CENTS)) + 1
        self.bin_cents = self.min_cents + np.arange(num_bins) * config.MELODY_BIN_CENTS

        harmonics = np.arange(1, config.MELODY_NUM_HARMONICS + 1)
        self.harmonic_offsets = 1200.0 * np.log2(harmonics)
        self.harmonic_weights = config.MELODY_HARMONIC_WEIGHT ** (harmonics - 1)
        self.peak_floor = 10.0 ** (-config.MELODY_PEAK_THRESHOLD_DB / 20.0)

    def spectral_peaks(self, mags: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Strongest local maxima of one magnitude spectrum

        Returns:
            (frequencies in Hz, magnitudes), at most MELODY_MAX_PEAKS each
        """
        peak = mags.max() if len(mags) else 0.0
        if peak <= 0:
            return np.zeros(0), np.zeros(0)

        centre = mags[1:-1]
        is_peak = (centre > mags[:-2]) & (centre >= mags[2:]) & (centre >= peak * self.peak_floor)
        bins = np.flatnonzero(is_peak) + 1
        if len(bins) > config.MELODY_MAX_PEAKS:
            bins = bins[np.argsort(mags[bins])[::-1][:config.MELODY_MAX_PEAKS]]

        # Parabolic interpolation on the dB spectrum
        log_mags = 20.0 * np.log10(np.maximum(mags, peak * 1e-12))
        a, b, c = log_mags[bins - 1], log_mags[bins], log_mags[bins + 1]
        denom = a - 2.0 * b + c
        offset = np.where(denom < 0, 0.5 * (a - c) / np.where(denom < 0, denom, 1.0), 0.0)
        peak_db = b - 0.25 * (a - c) * offset

        freqs = (bins + offset) * self.sample_rate / self.grid.fft_size
        return freqs, 10.0 ** (peak_db / 20.0)

    def salience(self, mags: np.ndarray) -> np.ndarray:
        """Salience of every candidate bin for one magnitude spectrum"""
        freqs, amps = self.spectral_peaks(mags)
        if len(freqs) == 0:
            return np.zeros(len(self.bin_cents))

        peak_cents = hz_to_cents(freqs)
        # (peaks, harmonics, bins) distance in semitones
        delta = (peak_cents[:, None, None] - self.harmonic_offsets[None, :, None]
                 - self.bin_cents[None, None, :]) / 100.0
        gain = np.where(np.abs(delta) <= 1.0, np.cos(0.5 * np.pi * delta) ** 2, 0.0)
        votes = amps[:, None, None] * self.harmonic_weights[None, :, None] * gain
        return votes.max(axis=0).sum(axis=0)

    def candidates(self, salience: np.ndarray, frame: int) -> List[PitchCandidate]:
        """Refined salience peaks of one frame, strongest first"""
        top = salience.max() if len(salience) else 0.0
        if top <= 0:
            return []

        padded = np.concatenate(([-np.inf], salience, [-np.inf]))
        centre = padded[1:-1]
        is_peak = (centre > padded[:-2]) & (centre >= padded[2:])
        is_peak &= salience >= config.MELODY_CANDIDATE_RATIO * top
        bins = np.flatnonzero(is_peak)
        bins = bins[np.argsort(salience[bins])[::-1][:config.MELODY_MAX_CANDIDATES]]

        result = []
        for k in bins:
            cents, value = self._refine(salience, int(k))
            freq = float(np.clip(cents_to_hz(cents), config.MELODY_MIN_F0, config.MELODY_MAX_F0))
            result.append(PitchCandidate(frame=frame, cents=float(hz_to_cents(freq)),
                                         freq=freq, salience=value))
        return result

    def _refine(self, salience: np.ndarray, k: int) -> Tuple[float, float]:
        if k == 0 or k == len(salience) - 1:
            return float(self.bin_cents[k]), float(salience[k])
        a, b, c = salience[k - 1], salience[k], salience[k + 1]
        denom = a - 2.0 * b + c
        if denom >= 0:
            return float(self.bin_cents[k]), float(b)
        offset = 0.5 * (a - c) / denom
        return (float(self.bin_cents[k] + offset * config.MELODY_BIN_CENTS),
                float(b - 0.25 * (a - c) * offset))


def hz_to_cents(freq, reference: float = config.CENT_REFERENCE_HZ):
    return 1200.0 * np.log2(np.asarray(freq, dtype=np.float64) / reference)


def cents_to_hz(cents, reference: float = config.CENT_REFERENCE_HZ):
    return reference * 2.0 ** (np.asarray(cents, dtype=np.float64) / 1200.0)


def voicing_threshold(contours: List[TrackedContour], tau_v: float) -> float:
    """mean - tau_v * std of the contour mean saliences"""
    means = np.array([c.mean_salience for c in contours])
    return float(means.mean() - tau_v * means.std())


def track_contours(clip: AudioClip, channel: int,
                   engine: Optional[SalienceEngine] = None) -> Tuple[List[TrackedContour], int]:
    """
    Salience peaks of every frame linked into contours

    Returns:
        (contours at least MELODY_MIN_CONTOUR_S long, number of frames)
    """
    engine = engine or SalienceEngine(clip.sample_rate)
    tracker = ContourTracker()
    num_frames = 0
    for start, mags in magnitude_blocks(clip.channel(channel), MELODY_GRID):
        for offset, spectrum in enumerate(mags):
            frame = start + offset
            tracker.update(engine.candidates(engine.salience(spectrum), frame))
        num_frames = start + len(mags)

    min_length = int(round(config.MELODY_MIN_CONTOUR_S * MELODY_GRID.frames_per_second(clip.sample_rate)))
    contours = [c for c in tracker.close() if c.length >= min_length]
    return contours, num_frames


def select_melody(contours: List[TrackedContour], num_frames: int, tau_v: float) -> np.ndarray:
    """
    Voicing filter and per-frame melody choice

    Contours whose mean salience falls below the voicing threshold are dropped;
    each frame then takes the pitch of the most salient remaining contour.
    """
    f0 = np.zeros(num_frames)
    if not contours:
        return f0

    threshold = voicing_threshold(contours, tau_v)
    kept = [c for c in contours if c.mean_salience >= threshold]
    logger.debug(f"Voicing threshold {threshold:.4f}: kept {len(kept)}/{len(contours)} contours")

    best = np.zeros(num_frames)
    for contour in kept:
        frames = slice(contour.start_frame, contour.end_frame + 1)
        saliences = np.asarray(contour.saliences)
        wins = saliences > best[frames]
        f0[frames] = np.where(wins, contour.freqs, f0[frames])
        best[frames] = np.where(wins, saliences, best[frames])
    return f0


def extract_predominant(clip: AudioClip, channel: int,
                        tau_v: float = config.TAU_V_POLYPHONIC) -> PitchContour:
    """
    Predominant melody f0 on the melody grid (N=4096, hop 128)

    Args:
        clip: 44.1 kHz clip
        channel: Channel to analyse
        tau_v: Voicing tolerance; larger values keep weaker contours

    Returns:
        PitchContour with every nonzero f0 in [120, 720] Hz, frame n centred
        on time n * hop
    """
    lo, hi = config.TAU_V_RANGE
    if not lo <= tau_v <= hi:
        raise ValueError(f"tau_v {tau_v} outside [{lo}, {hi}]")

    contours, num_frames = track_contours(clip, channel)
    f0 = MELODY_GRID.centred(select_melody(contours, num_frames, tau_v))
    contour = PitchContour(f0, MELODY_GRID, clip.sample_rate)
    logger.info(f"Melody extraction: {len(contours)} candidate contours, "
                f"{len(contour.contours)} melody contours, {contour.num_voiced}/{num_frames} voiced frames")
    return contour


def _parse_rows(path: Path) -> np.ndarray:
    rows = []
    with open(path, newline='') as f:
        for line_no, row in enumerate(csv.reader(f), start=1):
            if not row or not ''.join(row).strip():
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                if line_no == 1 and not rows:
                    continue  # header
                raise ContourFileError(f"malformed contour row {line_no} in {path}: {row}")
    return np.array(rows, dtype=np.float64).reshape(-1, 2)


def load_contour(path: Union[str, Path], grid: FrameGrid = MELODY_GRID,
                 num_frames: Optional[int] = None,
                 sample_rate: int = config.SAMPLE_RATE) -> PitchContour:
    """
    Read a time_s,f0_hz CSV contour onto the internal grid

    Each grid frame takes the row nearest in time; frames further than half a
    row spacing from every row are unvoiced. Negative and NaN f0 become 0.

    Args:
        path: CSV file, header optional
        grid: Target frame grid
        num_frames: Length of the result, defaults to the frame of the last row
    """
    path = Path(path)
    data = _parse_rows(path)
    if len(data) == 0:
        raise ContourFileError(f"no contour rows in {path}")

    times, values = data[:, 0], data[:, 1]
    hop_s = grid.hop_size / sample_rate
    spacing = hop_s
    if len(times) > 1:
        steps = np.diff(times)
        if np.any(steps <= 0):
            raise ContourFileError(f"non-monotonic timestamps in {path}")
        spacing = float(np.median(steps))
        if abs(spacing - hop_s) > config.CONTOUR_SPACING_TOLERANCE * hop_s:
            raise ContourFileError(f"row spacing {spacing * 1000:.3f} ms in {path} does not match "
                                   f"the grid hop {hop_s * 1000:.3f} ms")

    values = np.where(np.isnan(values) | (values < 0), 0.0, values)

    if num_frames is None:
        num_frames = int(grid.frame_at(times[-1], sample_rate)) + 1
    frame_times = grid.times(num_frames, sample_rate)

    right = np.clip(np.searchsorted(times, frame_times), 0, len(times) - 1)
    left = np.clip(right - 1, 0, len(times) - 1)
    nearest = np.where(np.abs(times[left] - frame_times) <= np.abs(times[right] - frame_times), left, right)
    distance = np.abs(times[nearest] - frame_times)
    f0 = np.where(distance <= 0.5 * spacing + 1e-9, values[nearest], 0.0)

    contour = PitchContour(f0, grid, sample_rate)
    logger.info(f"Loaded contour {path.name}: {len(data)} rows, {contour.num_voiced}/{num_frames} voiced frames")
    return contour
