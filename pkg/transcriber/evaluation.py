"""
Evaluation metrics: voicing, onset and note precision / recall / f-measure
and raw pitch accuracy with transposition correction
"""
from dataclasses import dataclass, fields, asdict
from typing import Dict, List, Sequence, Tuple
import logging

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from transcriber import config
from transcriber.audio_io import FrameGrid, MELODY_GRID
from transcriber.labelling import NoteEvent

logger = logging.getLogger(__name__)

METRIC_FIELDS = ('Pr_V', 'Rec_V', 'FM_V', 'Pr_On', 'Rec_On', 'FM_On',
                 'Pr_N', 'Rec_N', 'FM_N', 'RPA')


@dataclass
class EvalReport:
    """Scores of one track, or the mean over a dataset"""
    Pr_V: float = 0.0
    Rec_V: float = 0.0
    FM_V: float = 0.0
    Pr_On: float = 0.0
    Rec_On: float = 0.0
    FM_On: float = 0.0
    Pr_N: float = 0.0
    Rec_N: float = 0.0
    FM_N: float = 0.0
    RPA: float = 0.0
    transposition_applied: int = 0

    def metrics(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_FIELDS}

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def mean(cls, reports: Sequence['EvalReport']) -> 'EvalReport':
        """Unweighted mean over tracks; transposition_applied of the mean is 0"""
        if not reports:
            return cls()
        values = {name: float(np.mean([getattr(r, name) for r in reports])) for name in METRIC_FIELDS}
        return cls(**values)


@dataclass
class GroundTruth:
    """Reference notes and their frame labels"""
    notes: List[NoteEvent]

    def __post_init__(self):
        self.notes = sorted(self.notes)

    @property
    def onsets(self) -> np.ndarray:
        return np.array([n.onset_s for n in self.notes])

    def frame_labels(self, num_frames: int, grid: FrameGrid = MELODY_GRID,
                     sample_rate: int = config.SAMPLE_RATE) -> np.ndarray:
        return notes_to_frames(self.notes, num_frames, grid, sample_rate)


def f_measure(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def precision_recall_f(matches: int, num_est: int, num_gt: int) -> Tuple[float, float, float]:
    precision = matches / num_est if num_est else 0.0
    recall = matches / num_gt if num_gt else 0.0
    return precision, recall, f_measure(precision, recall)


def notes_to_frames(notes: Sequence[NoteEvent], num_frames: int, grid: FrameGrid = MELODY_GRID,
                    sample_rate: int = config.SAMPLE_RATE) -> np.ndarray:
    """
    MIDI pitch per frame, 0 where no note sounds

    A note covers the frames whose time lies in [onset, onset + duration).
    """
    labels = np.zeros(num_frames, dtype=int)
    times = grid.times(num_frames, sample_rate)
    for note in notes:
        covered = (times >= note.onset_s) & (times < note.offset_s)
        labels[covered] = note.midi
    return labels


def frames_needed(notes: Sequence[NoteEvent], grid: FrameGrid = MELODY_GRID,
                  sample_rate: int = config.SAMPLE_RATE) -> int:
    """Frames required to rasterise every note"""
    if not notes:
        return 0
    return int(np.ceil(max(n.offset_s for n in notes) * sample_rate / grid.hop_size)) + 1


def _pad(values: np.ndarray, length: int) -> np.ndarray:
    padded = np.zeros(length, dtype=np.asarray(values).dtype)
    padded[:len(values)] = values
    return padded


def voicing_metrics(est_voiced: np.ndarray, gt_voiced: np.ndarray) -> Tuple[float, float, float]:
    """
    Precision, recall and f-measure of the voiced-frame indicator

    Both sequences are zero-padded to a common length. When neither has a
    voiced frame the result is (1, 1, 1).
    """
    length = max(len(est_voiced), len(gt_voiced))
    est = _pad(np.asarray(est_voiced, dtype=bool), length)
    gt = _pad(np.asarray(gt_voiced, dtype=bool), length)
    if not est.any() and not gt.any():
        return 1.0, 1.0, 1.0
    hits = int(np.count_nonzero(est & gt))
    return precision_recall_f(hits, int(est.sum()), int(gt.sum()))


def max_matching(compatible: np.ndarray) -> List[Tuple[int, int]]:
    """One-to-one (est, gt) pairs of maximum cardinality over a boolean compatibility matrix"""
    compatible = np.asarray(compatible, dtype=bool)
    if compatible.size == 0 or not compatible.any():
        return []
    match = maximum_bipartite_matching(csr_matrix(compatible.astype(np.int8)), perm_type='column')
    return [(i, int(j)) for i, j in enumerate(match) if j >= 0]


def match_onsets(est_onsets: Sequence[float], gt_onsets: Sequence[float],
                 tolerance: float = config.ONSET_TOLERANCE_S) -> List[Tuple[int, int]]:
    est = np.asarray(est_onsets, dtype=np.float64)
    gt = np.asarray(gt_onsets, dtype=np.float64)
    # Rounding keeps onsets exactly at the tolerance matched
    distance = np.round(np.abs(est[:, np.newaxis] - gt[np.newaxis, :]), 9)
    return max_matching(distance <= tolerance)


def onset_metrics(est_onsets: Sequence[float], gt_onsets: Sequence[float],
                  tolerance: float = config.ONSET_TOLERANCE_S) -> Tuple[float, float, float]:
    """Onset precision, recall and f-measure under one-to-one matching"""
    matches = match_onsets(est_onsets, gt_onsets, tolerance)
    return precision_recall_f(len(matches), len(est_onsets), len(gt_onsets))


def match_notes(est_notes: Sequence[NoteEvent], gt_notes: Sequence[NoteEvent],
                onset_tolerance: float = config.ONSET_TOLERANCE_S,
                duration_tolerance: float = config.DURATION_TOLERANCE) -> List[Tuple[int, int]]:
    """
    Pairs with equal MIDI pitch, onsets within onset_tolerance and a duration
    difference of at most duration_tolerance times the reference duration
    """
    if not est_notes or not gt_notes:
        return []
    est_onset = np.array([n.onset_s for n in est_notes])[:, np.newaxis]
    est_dur = np.array([n.duration_s for n in est_notes])[:, np.newaxis]
    est_midi = np.array([n.midi for n in est_notes])[:, np.newaxis]
    gt_onset = np.array([n.onset_s for n in gt_notes])[np.newaxis, :]
    gt_dur = np.array([n.duration_s for n in gt_notes])[np.newaxis, :]
    gt_midi = np.array([n.midi for n in gt_notes])[np.newaxis, :]

    compatible = ((est_midi == gt_midi)
                  & (np.round(np.abs(est_onset - gt_onset), 9) <= onset_tolerance)
                  & (np.round(np.abs(est_dur - gt_dur), 9) <= np.round(duration_tolerance * gt_dur, 9)))
    return max_matching(compatible)


def note_metrics(est_notes: Sequence[NoteEvent], gt_notes: Sequence[NoteEvent]) -> Tuple[float, float, float]:
    """Note precision, recall and f-measure"""
    matches = match_notes(est_notes, gt_notes)
    return precision_recall_f(len(matches), len(est_notes), len(gt_notes))


def raw_pitch_accuracy(est_frames: np.ndarray, gt_frames: np.ndarray) -> float:
    """
    Fraction of frames where both are unvoiced or both carry the same MIDI pitch

    Frame values are MIDI numbers with 0 for unvoiced.
    """
    length = max(len(est_frames), len(gt_frames))
    if length == 0:
        return 1.0
    est = _pad(np.asarray(est_frames, dtype=int), length)
    gt = _pad(np.asarray(gt_frames, dtype=int), length)
    return float(np.count_nonzero(est == gt)) / length


def evaluate_notes(est_notes: Sequence[NoteEvent], gt_notes: Sequence[NoteEvent],
                   transposition: int = 0) -> EvalReport:
    """All metrics for one transcription, without transposition search"""
    num_frames = max(frames_needed(est_notes), frames_needed(gt_notes))
    est_frames = notes_to_frames(est_notes, num_frames)
    gt_frames = notes_to_frames(gt_notes, num_frames)

    report = EvalReport(transposition_applied=transposition)
    report.Pr_V, report.Rec_V, report.FM_V = voicing_metrics(est_frames > 0, gt_frames > 0)
    report.Pr_On, report.Rec_On, report.FM_On = onset_metrics(
        [n.onset_s for n in est_notes], [n.onset_s for n in gt_notes])
    report.Pr_N, report.Rec_N, report.FM_N = note_metrics(est_notes, gt_notes)
    report.RPA = raw_pitch_accuracy(est_frames, gt_frames)
    return report


def transposition_corrected_eval(est_notes: Sequence[NoteEvent],
                                 gt_notes: Sequence[NoteEvent]) -> EvalReport:
    """
    Evaluate est and its transpositions one semitone up and down

    The variant with the highest note f-measure is kept; ties resolve in the
    order of config.TRANSPOSITIONS, so an untransposed transcription wins.
    """
    best_shift, best_fm = config.TRANSPOSITIONS[0], -1.0
    for shift in config.TRANSPOSITIONS:
        fm = note_metrics([n.transposed(shift) for n in est_notes], gt_notes)[2]
        if fm > best_fm:
            best_shift, best_fm = shift, fm

    report = evaluate_notes([n.transposed(best_shift) for n in est_notes], gt_notes, best_shift)
    logger.info(f"Evaluation: FM_On={report.FM_On:.3f} FM_N={report.FM_N:.3f} "
                f"RPA={report.RPA:.3f} (transposition {best_shift:+d})")
    return report


def evaluate_onsets_only(est_onsets: Sequence[float], gt_notes: Sequence[NoteEvent]) -> EvalReport:
    """Report with only the onset metrics filled in"""
    report = EvalReport()
    report.Pr_On, report.Rec_On, report.FM_On = onset_metrics(est_onsets, [n.onset_s for n in gt_notes])
    return report


def report_fields() -> List[str]:
    return [f.name for f in fields(EvalReport)]
