"""
Test suite for the command line interface
"""
import pytest

from transcriber import config
from transcriber.cli import EXIT_OK, EXIT_TRACK_FAILED, EXIT_USAGE, main
from transcriber.database import ResultsDatabase
from transcriber.labelling import NoteEvent
from transcriber.note_io import read_notes_csv, write_contour_csv, write_notes_csv
from transcriber.synthesis import contour_from_notes

NOTES = [NoteEvent(0.2, 0.4, 67), NoteEvent(0.8, 0.4, 69), NoteEvent(1.4, 0.6, 71)]


@pytest.fixture(autouse=True)
def log_to_tmp(tmp_path, monkeypatch):
    """Keep logs and default diagnostics out of the package data directory"""
    monkeypatch.setattr(config, 'DATA_DIR', tmp_path / 'data')
    monkeypatch.setattr(config, 'LOG_DIR', tmp_path / 'logs')
    monkeypatch.setattr(config, 'LOG_FILE', tmp_path / 'logs' / 'transcriber.log')


@pytest.fixture
def files(tmp_path):
    """Contour, ground truth and manifest of one track"""
    write_contour_csv(contour_from_notes(NOTES), tmp_path / 'song.csv')
    write_notes_csv(NOTES, tmp_path / 'song_gt.csv')
    (tmp_path / 'manifest.csv').write_text(',song_gt.csv,song.csv\n')
    (tmp_path / 'broken.csv').write_text(',song_gt.csv,song.csv\nmissing.wav,song_gt.csv\n')
    return tmp_path


def test_transcribe_contour(files, capsys):
    """Test transcribing an external contour prints and writes the notes"""
    out = files / 'notes.csv'
    code = main(['transcribe', '--contour', str(files / 'song.csv'), '--out', str(out),
                 '--midi', str(files / 'notes.mid'), '--diag', str(files / 'diag.jsonl')])

    assert code == EXIT_OK
    assert [n.midi for n in read_notes_csv(out)] == [67, 69, 71]
    assert (files / 'notes.mid').exists()
    assert (files / 'diag.jsonl').exists()
    assert len(capsys.readouterr().out.strip().splitlines()) == 3


def test_transcribe_diagnostics_next_to_notes(files):
    """Test diagnostics default to the notes path with a .diag.jsonl suffix"""
    out = files / 'notes.csv'
    assert main(['transcribe', '--contour', str(files / 'song.csv'), '--out', str(out)]) == EXIT_OK

    assert (files / 'notes.diag.jsonl').exists()


def test_transcribe_diagnostics_in_data_dir(files):
    """Test diagnostics without --out or --diag go to DATA_DIR/diagnostics"""
    assert main(['transcribe', '--contour', str(files / 'song.csv')]) == EXIT_OK

    lines = (files / 'data' / 'diagnostics' / 'song.diag.jsonl').read_text().splitlines()
    assert len(lines) > 0


def test_transcribe_needs_input():
    """Test transcribe without audio or contour is a usage error"""
    assert main(['transcribe']) == EXIT_USAGE


def test_transcribe_unreadable_audio(tmp_path):
    """Test an unreadable recording fails the track"""
    (tmp_path / 'bad.wav').write_bytes(b'not audio')
    assert main(['transcribe', str(tmp_path / 'bad.wav')]) == EXIT_TRACK_FAILED


def test_parse_errors():
    """Test argument errors and --version"""
    assert main([]) == EXIT_USAGE
    assert main(['transcribe', '--tau-v', 'high']) == EXIT_USAGE
    assert main(['--version']) == EXIT_OK


def test_config_file(files):
    """Test config files are validated and flags override them"""
    bad = files / 'bad.env'
    bad.write_text('SPEED=11\n')
    assert main(['--config', str(bad), 'transcribe', '--contour', str(files / 'song.csv')]) == EXIT_USAGE

    good = files / 'good.env'
    good.write_text('TAU_V=9\n')
    assert main(['--config', str(good), 'transcribe', '--contour', str(files / 'song.csv')]) == EXIT_USAGE
    assert main(['--config', str(good), 'transcribe', '--contour', str(files / 'song.csv'),
                 '--tau-v', '1.0']) == EXIT_OK


def test_evaluate(files, capsys):
    """Test evaluating a perfect transcription"""
    report = files / 'report.csv'
    code = main(['evaluate', str(files / 'song_gt.csv'), str(files / 'song_gt.csv'), '--report', str(report)])

    assert code == EXIT_OK
    assert 'FM_N=1.000' in capsys.readouterr().out
    assert report.read_text().splitlines()[0].startswith('track,status,Pr_V')


def test_evaluate_missing_file(files):
    """Test a missing notes file is a usage error"""
    assert main(['evaluate', str(files / 'nope.csv'), str(files / 'song_gt.csv')]) == EXIT_USAGE


def test_batch(files, capsys):
    """Test a clean batch exits 0 and a failing row exits 1"""
    assert main(['batch', str(files / 'manifest.csv'), '--no-progress', '--workers', '1']) == EXIT_OK
    assert 'MEAN: ' in capsys.readouterr().out

    db = files / 'results.db'
    code = main(['batch', str(files / 'broken.csv'), '--no-progress', '--db', str(db),
                 '--report', str(files / 'report.csv')])
    assert code == EXIT_TRACK_FAILED
    assert 'FAILED missing' in capsys.readouterr().out
    runs = ResultsDatabase(db).list_runs()
    assert runs[0]['setup'] == 'batch'
    assert runs[0]['tracks'] == 2


def test_components(files):
    """Test one report per setup"""
    code = main(['components', str(files / 'manifest.csv'), '--no-progress', '--setups', 'P', 'P-PP',
                 '--report-dir', str(files / 'reports')])

    assert code == EXIT_OK
    assert sorted(p.name for p in (files / 'reports').iterdir()) == ['P-PP.csv', 'P.csv']


def test_segment_eval(files, capsys):
    """Test segmentation scoring of a contour"""
    assert main(['segment-eval', str(files / 'song.csv'), str(files / 'song_gt.csv')]) == EXIT_OK
    assert 'FM_On=1.000' in capsys.readouterr().out
