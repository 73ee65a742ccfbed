"""
Batch transcription and evaluation over a manifest of tracks
"""
import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from threading import Lock
from typing import Callable, Dict, List, Optional, Sequence, Union
import logging

from tqdm import tqdm

from transcriber import config
from transcriber.errors import ContourFileError
from transcriber.evaluation import EvalReport, METRIC_FIELDS, transposition_corrected_eval
from transcriber.note_io import read_notes_csv
from transcriber.pipeline import PipelineConfig, setup_config, transcribe_track

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ['track', 'status'] + list(METRIC_FIELDS) + ['transposition_applied']


@dataclass
class ManifestEntry:
    audio_path: Optional[Path]
    gt_path: Path
    contour_path: Optional[Path] = None

    @property
    def name(self) -> str:
        return (self.audio_path or self.contour_path).stem


@dataclass
class TrackReport:
    """Outcome of one manifest row"""
    track: str
    status: str  # 'ok' or 'failed'
    report: Optional[EvalReport] = None
    error: Optional[str] = None
    num_notes: int = 0


@dataclass
class BatchResult:
    tracks: List[TrackReport] = field(default_factory=list)

    @property
    def succeeded(self) -> List[TrackReport]:
        return [t for t in self.tracks if t.status == 'ok']

    @property
    def failed(self) -> List[TrackReport]:
        return [t for t in self.tracks if t.status != 'ok']

    @property
    def mean(self) -> EvalReport:
        return EvalReport.mean([t.report for t in self.succeeded])


def read_manifest(path: Union[str, Path]) -> List[ManifestEntry]:
    """
    Read audio_path,gt_path[,contour_path] rows

    Relative paths are resolved against the manifest's directory. The header
    row is optional. audio_path may be left empty when a contour is given.
    """
    path = Path(path)
    base = path.parent
    entries = []
    with open(path, newline='') as f:
        for line_no, row in enumerate(csv.reader(f), start=1):
            row = [cell.strip() for cell in row]
            if not row or not any(row):
                continue
            if line_no == 1 and row[0].lower() == 'audio_path':
                continue
            if len(row) < 2:
                raise ContourFileError(f"manifest row {line_no} in {path} needs audio_path,gt_path")
            audio = base / row[0] if row[0] else None
            contour = base / row[2] if len(row) > 2 and row[2] else None
            if audio is None and contour is None:
                raise ContourFileError(f"manifest row {line_no} in {path} has neither audio nor contour")
            entries.append(ManifestEntry(audio, base / row[1], contour))
    return entries


class BatchRunner:
    """
    Transcribe and evaluate manifest rows on a thread pool
    A failing track is logged, flagged and skipped.
    """

    def __init__(self, pipeline_config: Optional[PipelineConfig] = None,
                 workers: Optional[int] = None, show_progress: bool = True):
        self.pipeline_config = (pipeline_config or PipelineConfig()).without_outputs()
        self.workers = max(1, workers or config.BATCH_WORKERS)
        self.show_progress = show_progress
        self.callbacks: List[Callable] = []
        self.lock = Lock()

        logger.info(f"Batch runner initialized with {self.workers} workers")

    def register_callback(self, callback: Callable):
        """
        Register a function called after every track
        Callback signature: callback(track_report: TrackReport)
        """
        self.callbacks.append(callback)

    def _process(self, entry: ManifestEntry) -> TrackReport:
        try:
            cfg = self.pipeline_config
            if entry.contour_path is not None:
                cfg = replace(cfg, contour_path=entry.contour_path)
            result = transcribe_track(entry.audio_path, cfg)
            gt_notes = read_notes_csv(entry.gt_path)
            report = transposition_corrected_eval(result.notes, gt_notes)
            return TrackReport(entry.name, 'ok', report, num_notes=len(result.notes))
        except Exception as e:
            logger.error(f"Track {entry.name} failed: {e}")
            return TrackReport(entry.name, 'failed', error=str(e))

    def run(self, entries: Sequence[ManifestEntry]) -> BatchResult:
        """Process every entry; results keep the manifest order"""
        slots: Dict[int, TrackReport] = {}

        def work(index: int, entry: ManifestEntry):
            track = self._process(entry)
            with self.lock:
                slots[index] = track
                for callback in self.callbacks:
                    try:
                        callback(track)
                    except Exception as e:
                        logger.error(f"Error in batch callback: {e}")
            return track

        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            futures = [pool.submit(work, i, entry) for i, entry in enumerate(entries)]
            for future in tqdm(futures, total=len(futures), desc='Transcribing',
                               disable=not self.show_progress):
                future.result()

        result = BatchResult([slots[i] for i in range(len(entries))])
        logger.info(f"Batch finished: {len(result.succeeded)} ok, {len(result.failed)} failed")
        return result


def run_batch(manifest: Union[str, Path, Sequence[ManifestEntry]],
              pipeline_config: Optional[PipelineConfig] = None,
              workers: Optional[int] = None, show_progress: bool = True) -> BatchResult:
    """Transcribe and evaluate every row of a manifest"""
    entries = read_manifest(manifest) if isinstance(manifest, (str, Path)) else list(manifest)
    return BatchRunner(pipeline_config, workers, show_progress).run(entries)


def run_components(manifest: Union[str, Path, Sequence[ManifestEntry]],
                   setups: Sequence[str] = ('P', 'P-CF', 'P-CS', 'P-PP'),
                   base: Optional[PipelineConfig] = None,
                   workers: Optional[int] = None, show_progress: bool = True) -> Dict[str, BatchResult]:
    """Run the batch once per component-analysis setup"""
    entries = read_manifest(manifest) if isinstance(manifest, (str, Path)) else list(manifest)
    results = {}
    for name in setups:
        logger.info(f"Component analysis: setup {name}")
        results[name] = run_batch(entries, setup_config(name, base), workers, show_progress)
    return results


def _format(value: float) -> str:
    return f"{value:.6f}"


def write_report_csv(tracks: Sequence[TrackReport], path: Union[str, Path]):
    """One row per track plus a MEAN row over the successful ones"""
    ok = [t.report for t in tracks if t.status == 'ok']
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(REPORT_COLUMNS)
        for track in tracks:
            if track.report is None:
                writer.writerow([track.track, track.status] + [''] * (len(REPORT_COLUMNS) - 2))
                continue
            metrics = track.report.metrics()
            writer.writerow([track.track, track.status] + [_format(metrics[m]) for m in METRIC_FIELDS]
                            + [track.report.transposition_applied])
        if ok:
            mean = EvalReport.mean(ok).metrics()
            writer.writerow(['MEAN', 'ok'] + [_format(mean[m]) for m in METRIC_FIELDS] + [''])
    logger.info(f"Wrote report for {len(tracks)} tracks to {path}")
