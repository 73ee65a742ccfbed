"""
Command line interface: transcribe, evaluate, batch, components, segment-eval
"""
import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Dict, Optional, Sequence
import logging

from transcriber import __version__, config, setup_logging
from transcriber.batch import BatchResult, TrackReport, read_manifest, run_batch, run_components, write_report_csv
from transcriber.database import ResultsDatabase
from transcriber.errors import ConfigError, TranscriptionError
from transcriber.evaluation import EvalReport, METRIC_FIELDS, transposition_corrected_eval
from transcriber.melody import load_contour
from transcriber.note_io import read_notes_csv
from transcriber.pipeline import (CONFIG_KEYS, SETUPS, PipelineConfig, default_diagnostics_path,
                                  evaluate_segmentation, load_config_file, parse_config_values,
                                  transcribe_track)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_TRACK_FAILED = 1
EXIT_USAGE = 2


def _add_pipeline_flags(parser: argparse.ArgumentParser):
    group = parser.add_argument_group('pipeline switches')
    group.add_argument('--contour', type=Path, help='External pitch contour CSV (time_s,f0_hz)')
    group.add_argument('--mono', action='store_true', default=None,
                       help='Monophonic mode: no channel selection or contour filtering, tau_v = 3.0')
    group.add_argument('--no-channel-select', action='store_true', default=None,
                       help='Analyse the channel downmix instead of the selected channel')
    group.add_argument('--no-contour-filter', action='store_true', default=None,
                       help='Keep every melody contour')
    group.add_argument('--no-global-pitch', action='store_true', default=None,
                       help='Use a uniform pitch-class prior')
    group.add_argument('--tau-v', type=float, help='Voicing tolerance of the melody extractor')


def _add_batch_flags(parser: argparse.ArgumentParser):
    parser.add_argument('manifest', type=Path, help='CSV of audio_path,gt_path[,contour_path]')
    parser.add_argument('--workers', type=int, help=f'Parallel tracks (default {config.BATCH_WORKERS})')
    parser.add_argument('--db', type=Path, help='Also store results in this sqlite database')
    parser.add_argument('--no-progress', action='store_true', help='Hide the progress bar')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='transcriber',
        description='Note-level transcription of singing from voice + guitar recordings')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('--config', type=Path, help='KEY=value experiment file; flags override it')
    parser.add_argument('--log-level', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                        help=f'Logging level (default {config.LOG_LEVEL})')
    sub = parser.add_subparsers(dest='command', required=True)

    transcribe = sub.add_parser('transcribe', help='Transcribe one recording')
    transcribe.add_argument('audio', type=Path, nargs='?', help='WAV file (optional with --contour)')
    _add_pipeline_flags(transcribe)
    transcribe.add_argument('--out', type=Path, help='Notes CSV')
    transcribe.add_argument('--midi', type=Path, help='Standard MIDI file')
    transcribe.add_argument('--diag', type=Path,
                            help='Diagnostics JSON lines (default next to --out, else DATA_DIR/diagnostics)')
    transcribe.add_argument('--features', type=Path, help='Frame feature dump CSV')
    transcribe.add_argument('--vocal', type=Path, help='Vocal detection dump CSV')
    transcribe.add_argument('--onsets', type=Path, help='Detected onsets CSV')

    evaluate = sub.add_parser('evaluate', help='Score a transcription against ground truth')
    evaluate.add_argument('notes', type=Path, help='Estimated notes CSV')
    evaluate.add_argument('gt', type=Path, help='Ground-truth notes CSV')
    evaluate.add_argument('--report', type=Path, help='Report CSV')

    batch = sub.add_parser('batch', help='Transcribe and score every manifest row')
    _add_batch_flags(batch)
    _add_pipeline_flags(batch)
    batch.add_argument('--report', type=Path, help='Report CSV')

    components = sub.add_parser('components', help='Run the batch once per component-analysis setup')
    _add_batch_flags(components)
    _add_pipeline_flags(components)
    components.add_argument('--setups', nargs='+', default=['P', 'P-CF', 'P-CS', 'P-PP'],
                            choices=list(SETUPS), help='Setups to run')
    components.add_argument('--report-dir', type=Path, help='Directory for one report CSV per setup')

    segment = sub.add_parser('segment-eval', help='Score the onsets found by segmenting a given contour')
    segment.add_argument('contour', type=Path, help='Pitch contour CSV (time_s,f0_hz)')
    segment.add_argument('gt', type=Path, help='Ground-truth notes CSV')
    segment.add_argument('--report', type=Path, help='Report CSV')

    return parser


def resolve_settings(args: argparse.Namespace) -> Dict[str, object]:
    """Config file values overlaid with the flags given on the command line"""
    settings = parse_config_values(load_config_file(args.config)) if args.config else {}
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def print_report(name: str, report: EvalReport):
    metrics = report.metrics()
    print(f"{name}: " + ' '.join(f"{m}={metrics[m]:.3f}" for m in METRIC_FIELDS)
          + f" transposition={report.transposition_applied:+d}")


def store_results(db_path: Path, setup: str, pipeline_config: PipelineConfig, result: BatchResult):
    db = ResultsDatabase(db_path)
    run_id = db.start_run(setup, pipeline_config)
    for track in result.tracks:
        db.add_track_result(run_id, track)


def cmd_transcribe(args, settings) -> int:
    cfg = PipelineConfig.from_parsed(settings)
    if args.audio is None and cfg.contour_path is None:
        raise ConfigError("transcribe needs an audio file or --contour")
    if cfg.diagnostics_path is None:
        track = args.audio if args.audio is not None else cfg.contour_path
        cfg = replace(cfg, diagnostics_path=default_diagnostics_path(track, cfg.notes_path))
    result = transcribe_track(args.audio, cfg)
    for note in result.notes:
        print(f"{note.onset_s:.3f}\t{note.duration_s:.3f}\t{note.midi}")
    logger.info(f"Transcribed {len(result.notes)} notes")
    return EXIT_OK


def cmd_evaluate(args, settings) -> int:
    report = transposition_corrected_eval(read_notes_csv(args.notes), read_notes_csv(args.gt))
    print_report(args.notes.stem, report)
    report_path = settings.get('report')
    if report_path is not None:
        write_report_csv([TrackReport(args.notes.stem, 'ok', report)], report_path)
    return EXIT_OK


def cmd_batch(args, settings) -> int:
    cfg = PipelineConfig.from_parsed(settings)
    entries = read_manifest(args.manifest)
    result = run_batch(entries, cfg, show_progress=not args.no_progress, workers=settings.get('workers'))
    if settings.get('report') is not None:
        write_report_csv(result.tracks, settings['report'])
    if settings.get('db') is not None:
        store_results(settings['db'], 'batch', cfg, result)
    if result.succeeded:
        print_report('MEAN', result.mean)
    for track in result.failed:
        print(f"FAILED {track.track}: {track.error}")
    return EXIT_TRACK_FAILED if result.failed else EXIT_OK


def cmd_components(args, settings) -> int:
    base = PipelineConfig.from_parsed(settings)
    entries = read_manifest(args.manifest)
    results = run_components(entries, args.setups, base, show_progress=not args.no_progress,
                             workers=settings.get('workers'))
    if args.report_dir is not None:
        args.report_dir.mkdir(parents=True, exist_ok=True)
    failed = False
    for name, result in results.items():
        print_report(name, result.mean)
        failed = failed or bool(result.failed)
        if args.report_dir is not None:
            write_report_csv(result.tracks, args.report_dir / f"{name}.csv")
        if settings.get('db') is not None:
            store_results(settings['db'], name, replace(base, **SETUPS[name]), result)
    return EXIT_TRACK_FAILED if failed else EXIT_OK


def cmd_segment_eval(args, settings) -> int:
    report = evaluate_segmentation(load_contour(args.contour), read_notes_csv(args.gt))
    print(f"{args.contour.stem}: Pr_On={report.Pr_On:.3f} Rec_On={report.Rec_On:.3f} FM_On={report.FM_On:.3f}")
    if settings.get('report') is not None:
        write_report_csv([TrackReport(args.contour.stem, 'ok', report)], settings['report'])
    return EXIT_OK


COMMANDS = {
    'transcribe': cmd_transcribe,
    'evaluate': cmd_evaluate,
    'batch': cmd_batch,
    'components': cmd_components,
    'segment-eval': cmd_segment_eval,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and return the exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    setup_logging(args.log_level)
    try:
        settings = resolve_settings(args)
        return COMMANDS[args.command](args, settings)
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_USAGE
    except FileNotFoundError as e:
        logger.error(f"File not found: {e}")
        return EXIT_USAGE
    except TranscriptionError as e:
        logger.error(f"Transcription failed: {e}")
        return EXIT_TRACK_FAILED


if __name__ == '__main__':
    sys.exit(main())
