"""
Note and contour file formats
"""
import csv
from pathlib import Path
from typing import List, Union
import logging

import numpy as np
import pretty_midi

from transcriber import config
from transcriber.errors import ContourFileError
from transcriber.labelling import NoteEvent
from transcriber.melody import PitchContour

logger = logging.getLogger(__name__)

NOTE_HEADER = ['onset_s', 'duration_s', 'midi']


def write_notes_csv(notes: List[NoteEvent], path: Union[str, Path]):
    """Write onset_s,duration_s,midi with 6-decimal seconds"""
    decimals = config.CSV_TIME_DECIMALS
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(NOTE_HEADER)
        for note in notes:
            writer.writerow([f"{note.onset_s:.{decimals}f}", f"{note.duration_s:.{decimals}f}", note.midi])
    logger.info(f"Wrote {len(notes)} notes to {path}")


def read_notes_csv(path: Union[str, Path]) -> List[NoteEvent]:
    """
    Read onset_s,duration_s,midi rows

    The header is optional. MIDI values may be written as floats but must be
    whole numbers.
    """
    path = Path(path)
    notes = []
    with open(path, newline='') as f:
        for line_no, row in enumerate(csv.reader(f), start=1):
            if not row or not ''.join(row).strip():
                continue
            try:
                onset, duration, midi = float(row[0]), float(row[1]), float(row[2])
            except (ValueError, IndexError):
                if line_no == 1:
                    continue  # header
                raise ContourFileError(f"malformed note row {line_no} in {path}: {row}")
            if midi != int(midi) or onset < 0 or duration < 0:
                raise ContourFileError(f"invalid note on row {line_no} in {path}: {row}")
            notes.append(NoteEvent(onset, duration, int(midi)))
    return sorted(notes)


def notes_to_midi(notes: List[NoteEvent]) -> pretty_midi.PrettyMIDI:
    """Single-instrument MIDI at absolute note times"""
    midi = pretty_midi.PrettyMIDI(initial_tempo=config.MIDI_TEMPO)
    instrument = pretty_midi.Instrument(program=config.MIDI_PROGRAM, name='voice')
    for note in notes:
        instrument.notes.append(pretty_midi.Note(
            velocity=config.MIDI_VELOCITY,
            pitch=int(note.midi),
            start=note.onset_s,
            end=note.offset_s))
    midi.instruments.append(instrument)
    return midi


def write_midi(notes: List[NoteEvent], path: Union[str, Path]):
    notes_to_midi(notes).write(str(path))
    logger.info(f"Wrote MIDI with {len(notes)} notes to {path}")


def write_contour_csv(contour: PitchContour, path: Union[str, Path]):
    """Write time_s,f0_hz for every frame"""
    table = np.column_stack([contour.times(), contour.f0])
    np.savetxt(path, table, delimiter=',', header='time_s,f0_hz', comments='', fmt=['%.6f', '%.4f'])
    logger.info(f"Wrote contour with {contour.num_frames} frames to {path}")
