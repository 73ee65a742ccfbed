"""
Test suite for batch transcription and evaluation
"""
import csv

import pytest

from transcriber.batch import (BatchRunner, ManifestEntry, read_manifest, run_batch, run_components,
                               write_report_csv)
from transcriber.errors import ContourFileError
from transcriber.labelling import NoteEvent
from transcriber.note_io import write_contour_csv, write_notes_csv
from transcriber.pipeline import PipelineConfig
from transcriber.synthesis import contour_from_notes


@pytest.fixture
def track_dir(tmp_path):
    """Directory with the contour and ground truth of one staccato track"""
    notes = [NoteEvent(0.2, 0.4, 60), NoteEvent(0.8, 0.4, 62), NoteEvent(1.4, 0.5, 64),
             NoteEvent(2.1, 0.3, 65)]
    write_contour_csv(contour_from_notes(notes), tmp_path / 'song.csv')
    write_notes_csv(notes, tmp_path / 'song_gt.csv')
    return tmp_path


@pytest.fixture
def manifest(track_dir):
    """Manifest with one contour-only track and one missing recording"""
    path = track_dir / 'manifest.csv'
    path.write_text('audio_path,gt_path,contour_path\n'
                    ',song_gt.csv,song.csv\n'
                    'missing.wav,song_gt.csv\n')
    return path


def test_read_manifest(manifest, track_dir):
    """Test rows resolve relative to the manifest directory"""
    entries = read_manifest(manifest)

    assert len(entries) == 2
    assert entries[0].audio_path is None
    assert entries[0].contour_path == track_dir / 'song.csv'
    assert entries[0].name == 'song'
    assert entries[1].audio_path == track_dir / 'missing.wav'
    assert entries[1].contour_path is None
    assert entries[1].name == 'missing'


def test_read_manifest_errors(tmp_path):
    """Test rows without a source or without ground truth are rejected"""
    path = tmp_path / 'manifest.csv'
    path.write_text(',gt.csv\n')
    with pytest.raises(ContourFileError, match='neither audio nor contour'):
        read_manifest(path)

    path.write_text('a.wav\n')
    with pytest.raises(ContourFileError, match='needs audio_path,gt_path'):
        read_manifest(path)


def test_batch_scores_and_flags(manifest):
    """Test the contour track scores perfectly and the missing recording is flagged"""
    result = run_batch(manifest, workers=2, show_progress=False)

    assert [t.track for t in result.tracks] == ['song', 'missing']
    song, missing = result.tracks
    assert song.status == 'ok'
    assert song.num_notes == 4
    assert song.report.FM_N == 1.0
    assert song.report.FM_On == 1.0
    assert missing.status == 'failed'
    assert missing.error
    assert result.mean.FM_N == 1.0


def test_empty_manifest(tmp_path):
    """Test an empty manifest gives an empty result"""
    path = tmp_path / 'manifest.csv'
    path.write_text('audio_path,gt_path\n')
    result = run_batch(path, show_progress=False)

    assert result.tracks == []
    assert result.mean.FM_N == 0.0


def test_callbacks(manifest):
    """Test callbacks see every track and their errors are contained"""
    seen = []
    runner = BatchRunner(workers=1, show_progress=False)
    runner.register_callback(lambda track: seen.append(track.track))
    runner.register_callback(lambda track: 1 / 0)

    result = runner.run(read_manifest(manifest))

    assert sorted(seen) == ['missing', 'song']
    assert len(result.tracks) == 2


def test_runner_ignores_output_paths(track_dir):
    """Test batch runs never write per-track outputs"""
    cfg = PipelineConfig(notes_path=track_dir / 'should_not_exist.csv')
    entry = ManifestEntry(None, track_dir / 'song_gt.csv', track_dir / 'song.csv')

    BatchRunner(cfg, workers=1, show_progress=False).run([entry])
    assert not (track_dir / 'should_not_exist.csv').exists()


def test_report_csv(manifest, tmp_path):
    """Test one row per track plus the mean of the successful ones"""
    result = run_batch(manifest, workers=1, show_progress=False)
    path = tmp_path / 'report.csv'
    write_report_csv(result.tracks, path)

    with open(path, newline='') as f:
        rows = list(csv.DictReader(f))
    assert [r['track'] for r in rows] == ['song', 'missing', 'MEAN']
    assert rows[0]['FM_N'] == '1.000000'
    assert rows[0]['transposition_applied'] == '0'
    assert rows[1]['status'] == 'failed'
    assert rows[1]['FM_N'] == ''
    assert rows[2]['FM_N'] == '1.000000'


def test_run_components(manifest):
    """Test every setup runs over the same manifest"""
    entries = read_manifest(manifest)[:1]
    results = run_components(entries, ('P', 'P-CF', 'P-PP'), workers=1, show_progress=False)

    assert list(results) == ['P', 'P-CF', 'P-PP']
    assert all(r.mean.FM_N == 1.0 for r in results.values())
