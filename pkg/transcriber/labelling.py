"""
Pitch labelling: tuning estimation, global and local pitch probabilities,
MIDI assignment and note post-processing
"""
from dataclasses import dataclass
from typing import List, Optional, Tuple
import logging

import numpy as np
from scipy.stats import circmean

from transcriber import config
from transcriber.melody import PitchContour
from transcriber.segmentation import CentContour, to_cents

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class NoteEvent:
    """A transcribed note"""
    onset_s: float
    duration_s: float
    midi: int

    @property
    def offset_s(self) -> float:
        return self.onset_s + self.duration_s

    def transposed(self, semitones: int) -> 'NoteEvent':
        return NoteEvent(self.onset_s, self.duration_s, self.midi + semitones)


@dataclass(frozen=True)
class TuningEstimate:
    """Global tuning deviation delta_t in cents and the resulting A4 reference"""
    delta_t: float

    @property
    def a4(self) -> float:
        return 2.0 ** (self.delta_t / 1200.0) * config.CENT_REFERENCE_HZ


@dataclass
class PitchProbabilities:
    """Global pitch-class distribution and one segment's local distribution over semitone bins"""
    l_global: np.ndarray  # 12 values, class 0 = A
    bins: np.ndarray  # semitone bins k_s relative to the tuned A4
    l_local: np.ndarray

    @property
    def l_pitch(self) -> np.ndarray:
        return self.l_global[np.mod(self.bins, 12)] * self.l_local


def _wrap_cents(cents: np.ndarray) -> np.ndarray:
    """Wrap into (-50, 50]"""
    wrapped = np.mod(cents, 100.0)
    return np.where(wrapped > 50.0, wrapped - 100.0, wrapped)


def _moving_average(cents: np.ndarray, width: int) -> np.ndarray:
    """Full-window box averages, or the run mean repeated when the run is shorter than the box"""
    if len(cents) <= width:
        return np.full(len(cents), cents.mean())
    return np.convolve(cents, np.full(width, 1.0 / width), mode='valid')


def estimate_tuning(contour: PitchContour) -> TuningEstimate:
    """
    Circular mean of the per-frame deviations from the 440 Hz semitone grid

    Each voiced run is box-smoothed over one vibrato period first, so wide
    vibrato does not spread the deviations around the whole circle.
    Returns delta_t = 0 when there are no voiced frames.
    """
    if not contour.contours:
        logger.warning("No voiced frames for tuning estimation, assuming A4 = 440 Hz")
        return TuningEstimate(0.0)

    width = max(1, int(round(config.TUNING_SMOOTHING_S * contour.grid.frames_per_second(contour.sample_rate))))
    cents = [_moving_average(1200.0 * np.log2(contour.f0[start:end + 1] / config.CENT_REFERENCE_HZ), width)
             for start, end in contour.contours]
    deviations = _wrap_cents(np.concatenate(cents))
    angle = circmean(deviations * 2.0 * np.pi / 100.0, high=np.pi, low=-np.pi)
    delta_t = float(_wrap_cents(np.asarray(angle * 100.0 / (2.0 * np.pi))))
    tuning = TuningEstimate(delta_t)
    logger.info(f"Tuning: {delta_t:+.2f} cents, A4 = {tuning.a4:.2f} Hz")
    return tuning


def remap_to_tuned_cents(contour: PitchContour, tuning: TuningEstimate) -> CentContour:
    """Cent contour relative to the tuned A4"""
    return to_cents(contour, reference=tuning.a4)


def global_pitch_classes(chroma: np.ndarray) -> np.ndarray:
    """Mean chroma vector normalised to sum 1, uniform when the track is silent"""
    chroma = np.atleast_2d(np.asarray(chroma, dtype=np.float64))
    if chroma.size == 0:
        return np.full(12, 1.0 / 12)
    mean = chroma.mean(axis=0)
    total = mean.sum()
    if total <= 0:
        return np.full(12, 1.0 / 12)
    return mean / total


def uniform_pitch_classes() -> np.ndarray:
    return np.full(12, 1.0 / 12)


def quantise_semitones(c0t: np.ndarray) -> np.ndarray:
    """Nearest semitone bin, halves rounding up"""
    return np.floor(np.asarray(c0t, dtype=np.float64) / 100.0 + 0.5).astype(int)


def local_pitch_probability(c0t: np.ndarray,
                            sigma: float = config.LOCAL_PITCH_SIGMA) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gaussian mixture over the segment's semitone histogram

    Returns:
        (bins from min-3 to max+3, L_local on those bins)
    """
    quantised = quantise_semitones(c0t)
    if len(quantised) == 0:
        raise ValueError("empty segment")

    margin = config.LOCAL_PITCH_MARGIN
    bins = np.arange(quantised.min() - margin, quantised.max() + margin + 1)
    histogram = np.bincount(quantised - bins[0], minlength=len(bins)) / len(quantised)

    distance = bins[:, np.newaxis] - bins[np.newaxis, :]
    kernel = np.exp(-distance ** 2 / (2.0 * sigma ** 2)) / (sigma * np.sqrt(2.0 * np.pi))
    return bins, kernel @ histogram


def assign_pitch(bins: np.ndarray, l_local: np.ndarray, l_global: np.ndarray) -> int:
    """69 + argmax of L_global[k mod 12] * L_local[k]; ties go to the lower bin"""
    probabilities = PitchProbabilities(np.asarray(l_global), np.asarray(bins), np.asarray(l_local))
    return config.MIDI_A4 + int(probabilities.bins[int(np.argmax(probabilities.l_pitch))])


def post_process(notes: List[NoteEvent]) -> List[NoteEvent]:
    """
    Range limiting around the median MIDI pitch and minimum duration

    The median is taken over every input note, short ones included. Notes
    more than 8 semitones below it are deleted, notes more than 8 above are
    moved down an octave, then notes under 0.05 s are deleted.
    """
    if not notes:
        return []
    median = float(np.median([n.midi for n in notes]))
    kept = []
    for note in notes:
        if note.midi < median - config.PITCH_RANGE_SEMITONES:
            continue
        if note.midi > median + config.PITCH_RANGE_SEMITONES:
            note = note.transposed(-12)
        if note.duration_s < config.MIN_NOTE_DURATION_S:
            continue
        kept.append(note)
    return sorted(kept)


def label_segment(c0t: np.ndarray, l_global: np.ndarray) -> int:
    bins, l_local = local_pitch_probability(c0t)
    return assign_pitch(bins, l_local, l_global)


def transcribe_segments(segments: List[Tuple[int, int]], c0t: CentContour,
                        tuning: Optional[TuningEstimate] = None,
                        l_global: Optional[np.ndarray] = None) -> List[NoteEvent]:
    """
    Turn note segments into post-processed NoteEvents

    Args:
        segments: Inclusive (start, end) frames
        c0t: Contour in cents relative to the tuned A4
        tuning: Estimate c0t was computed with, for logging only
        l_global: Global pitch-class distribution, uniform when None
    """
    if l_global is None:
        l_global = uniform_pitch_classes()
    grid, sample_rate = c0t.grid, c0t.sample_rate

    notes = []
    for start, end in segments:
        onset = float(grid.frame_time(start, sample_rate))
        duration = (end - start + 1) * grid.hop_size / sample_rate
        notes.append(NoteEvent(onset, duration, label_segment(c0t.segment(start, end), l_global)))

    result = post_process(notes)
    reference = f" (A4 = {tuning.a4:.2f} Hz)" if tuning is not None else ''
    logger.info(f"Labelling{reference}: {len(notes)} segments -> {len(result)} notes")
    return result
