"""
Test suite for synthetic performances
"""
import numpy as np
import pytest

from transcriber.audio_io import MELODY_GRID, RMS_GRID
from transcriber.labelling import NoteEvent
from transcriber.segmentation import rms_decay_onsets
from transcriber.spectral import rms_track
from transcriber.synthesis import (alternating_voice_guitar, contour_from_notes, legato_notes,
                                   midi_to_hz, reference_performance, span_contour, synthesize_performance,
                                   voice_with_melodic_guitar)


def test_midi_to_hz():
    """Test MIDI numbers map to equal-tempered frequencies"""
    assert midi_to_hz(69) == pytest.approx(440.0)
    assert midi_to_hz(81) == pytest.approx(880.0)
    assert midi_to_hz(69, tuning_cents=1200 * np.log2(445 / 440)) == pytest.approx(445.0)


def test_legato_notes():
    """Test each note lasts until the next onset"""
    notes = legato_notes([60, 62, 64], [0.0, 0.5, 1.25], 2.0)
    assert notes == [NoteEvent(0.0, 0.5, 60), NoteEvent(0.5, 0.75, 62), NoteEvent(1.25, 0.75, 64)]


def test_contour_from_notes():
    """Test the contour is voiced exactly inside the notes"""
    contour = contour_from_notes([NoteEvent(0.1, 0.2, 69)])
    times = contour.times()
    inside = (times >= 0.1) & (times < 0.3)

    np.testing.assert_allclose(contour.f0[inside], 440.0)
    assert not contour.f0[~inside].any()
    assert len(contour.contours) == 1


def test_synthesize_performance():
    """Test the stereo mix is deterministic and within full scale"""
    first = synthesize_performance([62, 64], [0.2, 0.6], 1.0, accompaniment=[(0.2, 110.0)])
    second = synthesize_performance([62, 64], [0.2, 0.6], 1.0, accompaniment=[(0.2, 110.0)])

    assert first.clip.num_channels == 2
    assert first.clip.duration == pytest.approx(1.5)
    assert np.abs(first.clip.channels).max() == pytest.approx(0.9)
    np.testing.assert_array_equal(first.clip.channels, second.clip.channels)
    assert [n.midi for n in first.notes] == [62, 64]


def test_alternating_voice_guitar():
    """Test the guitar only sounds inside its span"""
    performance = alternating_voice_guitar(voice_spans=((0.0, 1.0),), guitar_span=(1.0, 2.0), duration=3.0)
    samples = performance.clip.channels[0]

    assert performance.clip.num_channels == 1
    assert np.abs(samples[:44100]).max() > 0.1
    assert np.abs(samples[44100 + 100:2 * 44100]).max() > 0.1
    assert not samples[2 * 44100:].any()


def test_span_contour():
    """Test spans become voiced runs"""
    contour = span_contour([(0.0, 0.1, 300.0), (0.5, 0.6, 200.0)], 300)

    assert len(contour.contours) == 2
    assert contour.grid is MELODY_GRID
    assert set(np.unique(contour.f0)) == {0.0, 200.0, 300.0}


def test_repeated_note_notch_reaches_rms_detector():
    """Test the boundary notch between equal notes gives one RMS-decay onset"""
    performance = synthesize_performance([64, 64], [0.5, 1.5], 2.5, vibrato_depth=0.0,
                                         accompaniment=[(0.5, 110.0)], crosstalk=0.1)
    rms = RMS_GRID.centred(rms_track(performance.clip, 0))
    start, end = MELODY_GRID.frame_at(0.6), MELODY_GRID.frame_at(2.4)
    onsets = rms_decay_onsets(int(start), int(end), rms)

    assert len(onsets) == 1
    assert abs(MELODY_GRID.frame_time(onsets[0]) - 1.5) <= 0.03


def test_reference_performance():
    """Test the reference melody layout"""
    performance = reference_performance()
    notes = performance.notes
    pitches = [n.midi for n in notes]
    steps = np.diff(pitches)

    assert performance.clip.num_channels == 2
    assert performance.clip.duration == pytest.approx(30.0)
    assert len(notes) == 15
    assert notes[0].onset_s == pytest.approx(1.0)
    assert notes[-1].offset_s == pytest.approx(28.5)
    assert all(1.3 <= n.duration_s <= 2.1 + 1e-9 for n in notes)
    assert np.count_nonzero(steps == 0) >= 2
    assert np.count_nonzero(steps == -1) >= 2 and np.count_nonzero(steps == 1) >= 1


def test_voice_with_melodic_guitar():
    """Test the held guitar tone and the ringing pluck sit between the sung spans"""
    performance = voice_with_melodic_guitar()
    samples = performance.clip.channels[0]
    sr = performance.clip.sample_rate

    assert performance.guitar_span == (4.5, 6.0)
    assert performance.clip.duration == pytest.approx(13.5)
    assert not samples[int(3.6 * sr):int(4.4 * sr)].any()
    held = samples[int(4.6 * sr):int(5.9 * sr)]
    assert np.abs(held).max() > 0.1
    assert not samples[int(9.1 * sr):int(9.9 * sr)].any()
