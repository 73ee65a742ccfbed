"""
Note segmentation: split vocal contours at interval and steady-pitch onsets
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union
import logging

import numpy as np
from scipy.ndimage import maximum_filter1d

from transcriber import config
from transcriber.audio_io import FrameGrid, MELODY_GRID
from transcriber.melody import PitchContour

logger = logging.getLogger(__name__)

ENVELOPE = 'envelope'
GAUSS_DERIV = 'gauss_deriv'
RMS_DECAY = 'rms_decay'
PITCH_DIP = 'pitch_dip'
DETECTORS = (ENVELOPE, GAUSS_DERIV, RMS_DECAY, PITCH_DIP)


@dataclass
class CentContour:
    """Pitch in cents relative to 440 Hz, NaN on unvoiced frames"""
    c0: np.ndarray
    contours: List[Tuple[int, int]]
    grid: FrameGrid = MELODY_GRID
    sample_rate: int = config.SAMPLE_RATE

    def segment(self, start: int, end: int) -> np.ndarray:
        return self.c0[start:end + 1]


@dataclass
class Onset:
    frame: int
    detector: str


@dataclass
class OnsetSet:
    """Merged onsets of one contour, strictly inside it and sorted"""
    contour: Tuple[int, int]
    onsets: List[Onset] = field(default_factory=list)

    @property
    def frames(self) -> List[int]:
        return [o.frame for o in self.onsets]


def to_cents(contour: PitchContour, reference: float = config.CENT_REFERENCE_HZ) -> CentContour:
    """c0 = 1200 * log2(f0 / 440) on voiced frames"""
    c0 = np.full(contour.num_frames, np.nan)
    voiced = contour.voiced
    c0[voiced] = 1200.0 * np.log2(contour.f0[voiced] / reference)
    return CentContour(c0, list(contour.contours), contour.grid, contour.sample_rate)


def _run_starts(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """First index and value of every run of equal values"""
    starts = np.concatenate(([0], np.flatnonzero(np.diff(x) != 0) + 1))
    return starts, x[starts]


def local_maxima(x: np.ndarray) -> np.ndarray:
    """
    Frames greater than both neighbours

    A plateau counts once, at its first frame. The first and last frame are
    never extrema.
    """
    x = np.asarray(x, dtype=np.float64)
    if len(x) < 3:
        return np.zeros(0, dtype=int)
    starts, values = _run_starts(x)
    if len(values) < 3:
        return np.zeros(0, dtype=int)
    peak = (values[1:-1] > values[:-2]) & (values[1:-1] > values[2:])
    return starts[1:-1][peak]


def local_minima(x: np.ndarray) -> np.ndarray:
    return local_maxima(-np.asarray(x, dtype=np.float64))


def envelope_jumps(c0: np.ndarray, frames_per_second: float = MELODY_GRID.frames_per_second()) -> np.ndarray:
    """
    Pairs of upper-envelope maxima that straddle a pitch change

    Maxima are scanned in order. A pair is recorded when two adjacent maxima
    differ by more than ENVELOPE_MIN_JUMP_CENTS and lie at most
    ENVELOPE_MAX_GAP_S apart. Otherwise the current maximum is compared with
    the furthest one within ENVELOPE_MAX_GAP_S, which steps over the spurious
    maximum a step leaves where it cuts a vibrato cycle short. The scan
    resumes from the second maximum of every recorded pair.

    Returns:
        (k, 2) array of frame pairs
    """
    peaks = local_maxima(c0)
    c0 = np.asarray(c0, dtype=np.float64)
    max_gap = config.ENVELOPE_MAX_GAP_S * frames_per_second
    pairs = []
    i = 0
    while i < len(peaks) - 1:
        if (peaks[i + 1] - peaks[i] <= max_gap
                and abs(c0[peaks[i + 1]] - c0[peaks[i]]) > config.ENVELOPE_MIN_JUMP_CENTS):
            pairs.append((peaks[i], peaks[i + 1]))
            i += 1
            continue
        j = int(np.searchsorted(peaks, peaks[i] + max_gap, side='right')) - 1
        if j > i + 1 and abs(c0[peaks[j]] - c0[peaks[i]]) > config.ENVELOPE_MIN_JUMP_CENTS:
            pairs.append((peaks[i], peaks[j]))
            i = j
        else:
            i += 1
    return np.array(pairs, dtype=int).reshape(-1, 2)


def envelope_onsets(c0: np.ndarray, frames_per_second: float = MELODY_GRID.frames_per_second()) -> np.ndarray:
    """Onsets midway between the maxima of every envelope jump"""
    pairs = envelope_jumps(c0, frames_per_second)
    return pairs.sum(axis=1) // 2


def gaussian_window(frames_per_second: float = MELODY_GRID.frames_per_second()) -> np.ndarray:
    """Unit-area Gaussian over +-GAUSS_SUPPORT_S with standard deviation GAUSS_SIGMA_S"""
    sigma = config.GAUSS_SIGMA_S * frames_per_second
    support = int(np.rint(config.GAUSS_SUPPORT_S * frames_per_second))
    n = np.arange(-support, support + 1)
    g = np.exp(-n ** 2 / (2.0 * sigma ** 2))
    return g / g.sum()


def gauss_derivative(c0: np.ndarray, frames_per_second: float = MELODY_GRID.frames_per_second()) -> np.ndarray:
    """
    First-derivative Gaussian filter output c_F[n]

    Central difference over two frames of the Gaussian-smoothed contour, so a
    ramp of s cents per frame gives 2s and a constant gives exactly 0. The
    contour is edge-replicated before filtering.
    """
    c0 = np.asarray(c0, dtype=np.float64)
    if len(c0) == 0:
        return np.zeros(0)
    window = gaussian_window(frames_per_second)
    half = len(window) // 2
    padded = np.pad(c0, half + 1, mode='edge')
    smooth = np.convolve(padded, window, mode='valid')
    return smooth[2:] - smooth[:-2]


def gauss_deriv_onsets(c0: np.ndarray, frames_per_second: float = MELODY_GRID.frames_per_second()) -> np.ndarray:
    """
    Local maxima of |c_F[n]| above GAUSS_MIN_SLOPE

    A maximum is kept only if it is the largest value within the filter's
    one-sided support, so one pitch change gives one onset.
    """
    magnitude = np.abs(gauss_derivative(c0, frames_per_second))
    peaks = local_maxima(magnitude)
    if len(peaks) == 0:
        return peaks
    support = int(np.rint(config.GAUSS_SUPPORT_S * frames_per_second))
    dominant = maximum_filter1d(magnitude, size=2 * support + 1, mode='nearest')
    return peaks[(magnitude[peaks] > config.GAUSS_MIN_SLOPE) & (magnitude[peaks] >= dominant[peaks])]


def local_rms_fluctuation(rms: np.ndarray, half_width: int = config.RMS_LOCAL_HALF_WIDTH) -> np.ndarray:
    """
    r_LOC[n] in dB: rms[n] against the mean over n-50..n+50

    Windows are truncated at the track edges. Silent neighbourhoods give 0 dB.
    """
    rms = np.asarray(rms, dtype=np.float64)
    if len(rms) == 0:
        return np.zeros(0)
    cumulative = np.concatenate(([0.0], np.cumsum(rms)))
    index = np.arange(len(rms))
    lo = np.clip(index - half_width, 0, len(rms))
    hi = np.clip(index + half_width + 1, 0, len(rms))
    local_mean = (cumulative[hi] - cumulative[lo]) / (hi - lo)

    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = 20.0 * np.log10(rms / local_mean)
    return np.where(local_mean > 0, ratio, 0.0)


def rms_decay_onsets(start: int, end: int, rms: np.ndarray,
                     r_loc: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Local minima of r_LOC below RMS_DECAY_THRESHOLD_DB inside a contour

    Args:
        start, end: Inclusive contour frames on the RMS grid
        rms: Track RMS on the RMS grid
        r_loc: Precomputed local_rms_fluctuation(rms)

    Returns:
        Absolute frame indices strictly inside the contour
    """
    if r_loc is None:
        r_loc = local_rms_fluctuation(rms)
    minima = local_minima(r_loc)
    minima = minima[r_loc[minima] < config.RMS_DECAY_THRESHOLD_DB]
    return minima[(minima > start) & (minima < end)]


def pitch_dip_onsets(c0: np.ndarray, frames_per_second: float = MELODY_GRID.frames_per_second()) -> np.ndarray:
    """
    Local minima of the segment z-score below PITCH_DIP_Z_THRESHOLD

    Minima within PITCH_DIP_EDGE_S of either end are ignored, where the
    contour runs into or out of a neighbouring note.
    """
    c0 = np.asarray(c0, dtype=np.float64)
    if len(c0) < 2:
        return np.zeros(0, dtype=int)
    std = c0.std()
    if std == 0 or not np.isfinite(std):
        return np.zeros(0, dtype=int)
    z = (c0 - c0.mean()) / std
    minima = local_minima(z)
    edge = config.PITCH_DIP_EDGE_S * frames_per_second
    minima = minima[(minima >= edge) & (minima <= len(c0) - 1 - edge)]
    return minima[z[minima] < config.PITCH_DIP_Z_THRESHOLD]


def outside_spans(frames: np.ndarray, spans: np.ndarray, margin: float = 0.0) -> np.ndarray:
    """Frames not within margin of any inclusive (first, last) span"""
    frames = np.asarray(frames, dtype=int)
    if len(frames) == 0 or len(spans) == 0:
        return frames
    inside = ((frames[:, np.newaxis] >= spans[np.newaxis, :, 0] - margin)
              & (frames[:, np.newaxis] <= spans[np.newaxis, :, 1] + margin)).any(axis=1)
    return frames[~inside]


def merge_onsets(contour: Tuple[int, int], detected: Dict[str, np.ndarray],
                 frames_per_second: float = MELODY_GRID.frames_per_second()) -> OnsetSet:
    """
    Union of the detector onsets of one contour

    Onsets closer than ONSET_MERGE_S to the previously kept one are dropped;
    the earliest wins. Only frames strictly inside the contour are kept.
    """
    start, end = contour
    candidates = sorted(
        (int(frame), DETECTORS.index(name) if name in DETECTORS else len(DETECTORS), name)
        for name, frames in detected.items() for frame in frames
        if start < frame < end
    )

    merged = OnsetSet(contour)
    min_gap = config.ONSET_MERGE_S * frames_per_second
    for frame, _, name in candidates:
        if merged.onsets and frame - merged.onsets[-1].frame < min_gap:
            continue
        merged.onsets.append(Onset(frame, name))
    return merged


def segment_contour(contour: Tuple[int, int], onsets: OnsetSet,
                    frames_per_second: float = MELODY_GRID.frames_per_second()) -> List[Tuple[int, int]]:
    """
    Split a contour at its onsets

    k onsets tile the contour into k+1 segments; segments shorter than
    MIN_NOTE_DURATION_S are dropped.
    """
    start, end = contour
    bounds = [start] + [f for f in onsets.frames if start < f < end] + [end + 1]
    segments = []
    for seg_start, seg_end in zip(bounds[:-1], bounds[1:]):
        if (seg_end - seg_start) / frames_per_second < config.MIN_NOTE_DURATION_S:
            continue
        segments.append((seg_start, seg_end - 1))
    return segments


def detect_onsets(cents: CentContour, rms: np.ndarray,
                  detectors: Tuple[str, ...] = DETECTORS) -> List[OnsetSet]:
    """
    Run the onset detectors on every contour

    A Gaussian-derivative onset inside an envelope jump (widened by
    ONSET_MERGE_S) marks the same pitch change and is dropped. The pitch-dip
    detector runs on the sub-segments between interval onsets (envelope and
    Gaussian derivative), so each z-score covers one note.
    """
    fps = cents.grid.frames_per_second(cents.sample_rate)
    r_loc = local_rms_fluctuation(rms) if RMS_DECAY in detectors else None
    margin = config.ONSET_MERGE_S * fps
    result = []

    for start, end in cents.contours:
        c0 = cents.segment(start, end)
        detected: Dict[str, np.ndarray] = {}
        jumps = envelope_jumps(c0, fps) + start if ENVELOPE in detectors else np.zeros((0, 2), dtype=int)
        if ENVELOPE in detectors:
            detected[ENVELOPE] = jumps.sum(axis=1) // 2
        if GAUSS_DERIV in detectors:
            detected[GAUSS_DERIV] = outside_spans(gauss_deriv_onsets(c0, fps) + start, jumps, margin)
        if RMS_DECAY in detectors:
            detected[RMS_DECAY] = rms_decay_onsets(start, end, rms, r_loc)
        if PITCH_DIP in detectors:
            interval = merge_onsets((start, end), {k: v for k, v in detected.items()
                                                   if k in (ENVELOPE, GAUSS_DERIV)}, fps)
            bounds = [start] + interval.frames + [end + 1]
            dips = [pitch_dip_onsets(cents.c0[a:b], fps) + a for a, b in zip(bounds[:-1], bounds[1:])]
            detected[PITCH_DIP] = np.concatenate(dips) if dips else np.zeros(0, dtype=int)

        merged = merge_onsets((start, end), detected, fps)
        logger.debug(f"Contour {start}-{end}: " + ', '.join(
            f"{name}={len(frames)}" for name, frames in detected.items()) + f", merged {len(merged.onsets)}")
        result.append(merged)
    return result


def segment_track(contour: PitchContour, rms: np.ndarray,
                  detectors: Tuple[str, ...] = DETECTORS) -> Tuple[List[Tuple[int, int]], List[OnsetSet]]:
    """
    Segment every contour of a track into note segments

    Returns:
        (note segments in frame order, onset sets per contour)
    """
    cents = to_cents(contour)
    fps = contour.grid.frames_per_second(contour.sample_rate)
    onset_sets = detect_onsets(cents, rms, detectors)
    segments = [seg for onsets in onset_sets for seg in segment_contour(onsets.contour, onsets, fps)]
    logger.info(f"Segmentation: {sum(len(o.onsets) for o in onset_sets)} onsets, "
                f"{len(segments)} note segments from {len(onset_sets)} contours")
    return segments, onset_sets


def write_onset_csv(onset_sets: List[OnsetSet], path: Union[str, Path],
                    grid: FrameGrid = MELODY_GRID, sample_rate: int = config.SAMPLE_RATE):
    """Dump time_s,detector for every merged onset"""
    with open(path, 'w') as f:
        f.write('time_s,detector\n')
        for onsets in onset_sets:
            for onset in onsets.onsets:
                f.write(f"{float(grid.frame_time(onset.frame, sample_rate)):.6f},{onset.detector}\n")
    logger.info(f"Wrote onsets to {path}")
