"""
Test suite for evaluation metrics
"""
from functools import lru_cache

import numpy as np
import pytest

from transcriber.evaluation import (EvalReport, GroundTruth, evaluate_notes, evaluate_onsets_only,
                                    match_notes, max_matching, notes_to_frames, onset_metrics,
                                    raw_pitch_accuracy, transposition_corrected_eval, voicing_metrics)
from transcriber.labelling import NoteEvent


@pytest.fixture
def reference_notes():
    """Create a short reference melody"""
    return [NoteEvent(0.0, 0.5, 60), NoteEvent(0.6, 0.4, 62), NoteEvent(1.2, 0.8, 64),
            NoteEvent(2.2, 0.3, 65), NoteEvent(2.8, 1.0, 67)]


def brute_force_matching(compatible):
    """Maximum matching size by exhaustive search over used reference columns"""
    rows, cols = compatible.shape

    @lru_cache(maxsize=None)
    def best(i, used):
        if i == rows:
            return 0
        result = best(i + 1, used)
        for j in range(cols):
            if compatible[i, j] and not used & (1 << j):
                result = max(result, 1 + best(i + 1, used | (1 << j)))
        return result

    return best(0, 0)


def test_onset_example():
    """Test one reference onset can match only one estimate"""
    precision, recall, fm = onset_metrics([1.1, 1.2], [1.0])

    assert precision == 0.5
    assert recall == 1.0
    assert fm == pytest.approx(2 / 3)


def test_onset_tolerance_boundary():
    """Test onsets exactly at the tolerance match and beyond it do not"""
    assert onset_metrics([1.15], [1.0])[2] == 1.0
    assert onset_metrics([1.16], [1.0])[2] == 0.0
    assert onset_metrics([0.85], [1.0])[2] == 1.0


def test_onset_empty():
    """Test empty inputs score zero"""
    assert onset_metrics([], [1.0]) == (0.0, 0.0, 0.0)
    assert onset_metrics([1.0], []) == (0.0, 0.0, 0.0)


def test_matching_is_maximum():
    """Test matching size equals exhaustive search on random cases"""
    rng = np.random.default_rng(11)
    for _ in range(200):
        est = np.sort(rng.uniform(0, 2, size=rng.integers(0, 10)))
        gt = np.sort(rng.uniform(0, 2, size=rng.integers(1, 10)))
        compatible = np.abs(est[:, np.newaxis] - gt[np.newaxis, :]) <= 0.15
        pairs = max_matching(compatible)

        assert len(pairs) == brute_force_matching(compatible)
        assert len({i for i, _ in pairs}) == len(pairs)
        assert len({j for _, j in pairs}) == len(pairs)
        assert all(compatible[i, j] for i, j in pairs)


def test_greedy_would_fail():
    """Test a case where a greedy nearest match loses a pair"""
    # est 0 is nearest to gt 1 but gt 1 is the only partner of est 1
    precision, recall, _ = onset_metrics([1.15, 1.3], [1.0, 1.2])
    assert precision == 1.0
    assert recall == 1.0


def test_note_matching_rules(reference_notes):
    """Test pitch, onset and duration conditions of a note match"""
    gt = [NoteEvent(1.0, 1.0, 60)]

    assert len(match_notes([NoteEvent(1.1, 1.3, 60)], gt)) == 1
    assert len(match_notes([NoteEvent(1.1, 1.31, 60)], gt)) == 0
    assert len(match_notes([NoteEvent(1.0, 1.0, 61)], gt)) == 0
    assert len(match_notes([NoteEvent(1.2, 1.0, 60)], gt)) == 0
    assert match_notes([], reference_notes) == []


def test_voicing_metrics():
    """Test voicing precision and recall with padding"""
    est = np.array([1, 1, 0, 0], dtype=bool)
    gt = np.array([1, 0, 0, 0, 1, 1], dtype=bool)
    precision, recall, _ = voicing_metrics(est, gt)

    assert precision == 0.5
    assert recall == pytest.approx(1 / 3)
    assert voicing_metrics(np.zeros(5, dtype=bool), np.zeros(3, dtype=bool)) == (1.0, 1.0, 1.0)


def test_voicing_symmetry():
    """Test swapping est and gt swaps precision and recall"""
    rng = np.random.default_rng(5)
    est = rng.random(300) > 0.4
    gt = rng.random(250) > 0.6
    p1, r1, f1 = voicing_metrics(est, gt)
    p2, r2, f2 = voicing_metrics(gt, est)

    assert p1 == pytest.approx(r2)
    assert r1 == pytest.approx(p2)
    assert f1 == pytest.approx(f2)


def test_raw_pitch_accuracy():
    """Test agreeing frames include both-unvoiced frames"""
    assert raw_pitch_accuracy(np.array([60, 60, 0, 0]), np.array([60, 61, 0, 5])) == 0.5
    assert raw_pitch_accuracy(np.array([60, 60]), np.array([60, 60, 0, 0])) == 1.0
    assert raw_pitch_accuracy(np.array([]), np.array([])) == 1.0


def test_notes_to_frames():
    """Test a note covers frames in [onset, offset)"""
    hop = 128 / 44100
    frames = notes_to_frames([NoteEvent(1.5 * hop, 3 * hop, 60)], 8)
    np.testing.assert_array_equal(frames > 0, [0, 0, 1, 1, 1, 0, 0, 0])


def test_perfect_transcription(reference_notes):
    """Test identical notes score 1 everywhere"""
    report = evaluate_notes(reference_notes, reference_notes)

    assert all(value == 1.0 for value in report.metrics().values())
    assert report.transposition_applied == 0


def test_transposition_corrected(reference_notes):
    """Test a transcription one semitone sharp is corrected down"""
    sharp = [n.transposed(1) for n in reference_notes]
    report = transposition_corrected_eval(sharp, reference_notes)

    assert report.transposition_applied == -1
    assert report.FM_N == 1.0
    assert report.RPA == 1.0


def test_transposition_limited_to_one_semitone(reference_notes):
    """Test two semitones off is not corrected"""
    report = transposition_corrected_eval([n.transposed(2) for n in reference_notes], reference_notes)

    assert report.transposition_applied == 0
    assert report.FM_N == 0.0
    assert report.FM_On == 1.0


def test_ground_truth_sorts_notes(reference_notes):
    """Test ground truth notes are kept in onset order"""
    truth = GroundTruth(list(reversed(reference_notes)))

    assert truth.notes == reference_notes
    np.testing.assert_allclose(truth.onsets, [0.0, 0.6, 1.2, 2.2, 2.8])


def test_report_mean():
    """Test the dataset mean is unweighted"""
    reports = [EvalReport(FM_N=1.0, RPA=0.5, transposition_applied=1), EvalReport(FM_N=0.0, RPA=0.7)]
    mean = EvalReport.mean(reports)

    assert mean.FM_N == 0.5
    assert mean.RPA == pytest.approx(0.6)
    assert mean.transposition_applied == 0
    assert EvalReport.mean([]) == EvalReport()


def test_onsets_only(reference_notes):
    """Test onset-only reports leave note metrics at zero"""
    report = evaluate_onsets_only([0.05, 0.6, 2.9], reference_notes)

    assert report.Pr_On == 1.0
    assert report.Rec_On == pytest.approx(0.6)
    assert report.FM_N == 0.0
