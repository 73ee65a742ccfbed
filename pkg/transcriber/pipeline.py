"""
End-to-end transcription: channel selection, predominant melody, contour
filtering, segmentation, labelling and post-processing
"""
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Union
import json
import logging

import numpy as np
from dotenv import dotenv_values

from transcriber import config
from transcriber.audio_io import AudioClip, BARK_GRID, MELODY_GRID, RMS_GRID, load_audio
from transcriber.errors import ConfigError, StageError, TranscriptionError
from transcriber.evaluation import EvalReport, evaluate_onsets_only
from transcriber.labelling import (NoteEvent, estimate_tuning, global_pitch_classes,
                                   remap_to_tuned_cents, transcribe_segments, uniform_pitch_classes)
from transcriber.melody import PitchContour, extract_predominant, load_contour
from transcriber.note_io import write_midi, write_notes_csv
from transcriber.segmentation import (DETECTORS, RMS_DECAY, OnsetSet, segment_track, write_onset_csv)
from transcriber.spectral import (bark_energies, chroma_track, rms_track, select_channel,
                                  compute_frame_features, write_feature_csv)
from transcriber.vocal_filter import apply_vocal_filter, write_vocal_csv

logger = logging.getLogger(__name__)

# Config file keys, mirroring the CLI flags
BOOL_KEYS = {'mono', 'no_channel_select', 'no_contour_filter', 'no_global_pitch'}
FLOAT_KEYS = {'tau_v'}
INT_KEYS = {'workers'}
PATH_KEYS = {'contour', 'out', 'midi', 'diag', 'features', 'vocal', 'onsets', 'report', 'db'}
CONFIG_KEYS = BOOL_KEYS | FLOAT_KEYS | INT_KEYS | PATH_KEYS

TRUE_VALUES = {'1', 'true', 'yes', 'on'}
FALSE_VALUES = {'0', 'false', 'no', 'off'}


@dataclass
class PipelineConfig:
    """Stage switches, thresholds and output paths of one transcription run"""
    tau_v: float = config.TAU_V_POLYPHONIC
    mono_mode: bool = False
    disable_channel_selection: bool = False
    disable_contour_filter: bool = False
    disable_global_pitch_prob: bool = False
    contour_path: Optional[Path] = None

    notes_path: Optional[Path] = None
    midi_path: Optional[Path] = None
    diagnostics_path: Optional[Path] = None
    features_path: Optional[Path] = None
    vocal_path: Optional[Path] = None
    onsets_path: Optional[Path] = None

    def __post_init__(self):
        lo, hi = config.TAU_V_RANGE
        if not lo <= self.tau_v <= hi:
            raise ConfigError(f"tau_v {self.tau_v} outside [{lo}, {hi}]")

    @property
    def effective_tau_v(self) -> float:
        return config.TAU_V_MONOPHONIC if self.mono_mode else self.tau_v

    @property
    def skip_channel_selection(self) -> bool:
        return self.mono_mode or self.disable_channel_selection

    @property
    def skip_contour_filter(self) -> bool:
        return self.mono_mode or self.disable_contour_filter

    @classmethod
    def from_mapping(cls, values: Dict[str, str]) -> 'PipelineConfig':
        """
        Build a config from flat key/value strings

        Keys follow the CLI flags (tau_v, mono, no_channel_select, ...).
        Keys that only concern batch runs (workers, report, db) are ignored.
        """
        return cls.from_parsed(parse_config_values(values))

    @classmethod
    def from_parsed(cls, parsed: Dict[str, object]) -> 'PipelineConfig':
        """Build a config from values already converted by parse_config_values"""
        kwargs = {}
        mapping = {
            'tau_v': 'tau_v', 'mono': 'mono_mode', 'no_channel_select': 'disable_channel_selection',
            'no_contour_filter': 'disable_contour_filter', 'no_global_pitch': 'disable_global_pitch_prob',
            'contour': 'contour_path', 'out': 'notes_path', 'midi': 'midi_path',
            'diag': 'diagnostics_path', 'features': 'features_path', 'vocal': 'vocal_path',
            'onsets': 'onsets_path',
        }
        for key, attr in mapping.items():
            if key in parsed:
                kwargs[attr] = parsed[key]
        return cls(**kwargs)

    def without_outputs(self) -> 'PipelineConfig':
        """Same switches with every output path cleared"""
        return replace(self, notes_path=None, midi_path=None, diagnostics_path=None,
                       features_path=None, vocal_path=None, onsets_path=None)


# Component analysis setups
SETUPS = {
    'P': {},
    'P-CF': {'disable_contour_filter': True},
    'P-CS': {'disable_channel_selection': True},
    'P-PP': {'disable_global_pitch_prob': True},
    'P-Mono': {'mono_mode': True},
    'P-RawPM': {'disable_channel_selection': True, 'disable_contour_filter': True},
}


def setup_config(name: str, base: Optional[PipelineConfig] = None) -> PipelineConfig:
    """Config of a named component-analysis setup, on top of base"""
    if name not in SETUPS:
        raise ConfigError(f"unknown setup '{name}', expected one of {', '.join(SETUPS)}")
    return replace(base or PipelineConfig(), **SETUPS[name])


def parse_config_values(values: Dict[str, Optional[str]]) -> Dict[str, object]:
    """Validate and convert flat config strings"""
    parsed = {}
    for key, raw in values.items():
        key = key.strip().lower().replace('-', '_')
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key '{key}'")
        value = (raw or '').strip()
        if key in BOOL_KEYS:
            if value.lower() in TRUE_VALUES:
                parsed[key] = True
            elif value.lower() in FALSE_VALUES:
                parsed[key] = False
            else:
                raise ConfigError(f"invalid boolean for '{key}': {raw!r}")
        elif key in FLOAT_KEYS or key in INT_KEYS:
            try:
                parsed[key] = float(value) if key in FLOAT_KEYS else int(value)
            except ValueError:
                raise ConfigError(f"invalid number for '{key}': {raw!r}")
        else:
            parsed[key] = Path(value) if value else None
    return parsed


def load_config_file(path: Union[str, Path]) -> Dict[str, Optional[str]]:
    """Read a KEY=value experiment file; keys are checked, values stay strings"""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    values = dotenv_values(path)
    parse_config_values(values)
    return {k.strip().lower().replace('-', '_'): v for k, v in values.items()}


@dataclass
class TrackResult:
    """Notes and per-stage diagnostics of one transcription"""
    notes: List[NoteEvent]
    diagnostics: List[Dict] = field(default_factory=list)
    contour: Optional[PitchContour] = None
    onset_sets: List[OnsetSet] = field(default_factory=list)

    def stage(self, name: str) -> Dict:
        for entry in self.diagnostics:
            if entry['stage'] == name:
                return entry
        raise KeyError(name)


@contextmanager
def pipeline_stage(name: str):
    """Tag any error raised inside a stage with the stage name"""
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        raise StageError(name, e) from e


def downmix(clip: AudioClip) -> AudioClip:
    """Mean over channels as a mono clip"""
    if clip.num_channels == 1:
        return clip
    return AudioClip(clip.channels.mean(axis=0)[np.newaxis, :], clip.sample_rate)


def transcribe_track(audio_path: Optional[Union[str, Path]],
                     cfg: Optional[PipelineConfig] = None,
                     clip: Optional[AudioClip] = None) -> TrackResult:
    """
    Transcribe one recording, or one external contour when no audio is given

    Args:
        audio_path: WAV file; may be None when cfg.contour_path is set
        cfg: Pipeline configuration
        clip: Already decoded audio, used instead of audio_path

    Returns:
        TrackResult with the post-processed notes and the diagnostics
    """
    cfg = cfg or PipelineConfig()
    diagnostics: List[Dict] = []

    def record(stage: str, status: str, **counts):
        entry = {'stage': stage, 'status': status}
        entry.update(counts)
        diagnostics.append(entry)

    with pipeline_stage('input'):
        if clip is None and audio_path is not None:
            clip = load_audio(audio_path)
        if clip is None and cfg.contour_path is None:
            raise TranscriptionError("no audio and no contour given")
        record('input', 'ok',
               channels=clip.num_channels if clip is not None else 0,
               duration_s=round(clip.duration, 6) if clip is not None else 0.0)

    with pipeline_stage('channel_selection'):
        if clip is None:
            record('channel_selection', 'skipped', channel=None)
            analysis = None
        elif cfg.skip_channel_selection:
            analysis = downmix(clip)
            record('channel_selection', 'skipped', channel=None)
        else:
            channel = select_channel(clip)
            analysis = clip.mono(channel)
            record('channel_selection', 'ok', channel=channel)

    with pipeline_stage('melody'):
        if cfg.contour_path is not None:
            num_frames = MELODY_GRID.num_frames(analysis.num_samples) if analysis is not None else None
            contour = load_contour(cfg.contour_path, MELODY_GRID, num_frames)
            status = 'external'
        else:
            contour = extract_predominant(analysis, 0, cfg.effective_tau_v)
            status = 'ok'
        record('melody', status, tau_v=cfg.effective_tau_v, frames=contour.num_frames,
               voiced_frames=contour.num_voiced, contours=len(contour.contours))

    with pipeline_stage('contour_filter'):
        if cfg.skip_contour_filter:
            record('contour_filter', 'disabled', contours_in=len(contour.contours),
                   contours_out=len(contour.contours))
        elif analysis is None:
            record('contour_filter', 'skipped', contours_in=len(contour.contours),
                   contours_out=len(contour.contours))
        else:
            bark = BARK_GRID.centred(bark_energies(analysis, 0))
            filtered, prediction = apply_vocal_filter(contour, bark)
            record('contour_filter', 'ok' if prediction is not None else 'degenerate',
                   contours_in=len(contour.contours), contours_out=len(filtered.contours),
                   voiced_frames=filtered.num_voiced)
            if prediction is not None and cfg.vocal_path is not None:
                write_vocal_csv(prediction, cfg.vocal_path, analysis.sample_rate)
            contour = filtered

    with pipeline_stage('tuning'):
        tuning = estimate_tuning(contour)
        record('tuning', 'ok', delta_t=round(tuning.delta_t, 6), a4_hz=round(tuning.a4, 6))

    with pipeline_stage('segmentation'):
        if analysis is not None:
            rms = RMS_GRID.centred(rms_track(analysis, 0))
            detectors = DETECTORS
        else:
            rms = np.zeros(contour.num_frames)
            detectors = tuple(d for d in DETECTORS if d != RMS_DECAY)
        segments, onset_sets = segment_track(contour, rms, detectors)
        record('segmentation', 'ok', contours=len(contour.contours), detectors=list(detectors),
               onsets=sum(len(o.onsets) for o in onset_sets), segments=len(segments))
        if cfg.onsets_path is not None:
            write_onset_csv(onset_sets, cfg.onsets_path)

    with pipeline_stage('labelling'):
        if cfg.disable_global_pitch_prob or analysis is None:
            l_global = uniform_pitch_classes()
            global_status = 'disabled' if cfg.disable_global_pitch_prob else 'skipped'
        else:
            l_global = global_pitch_classes(chroma_track(analysis, 0, tuning.a4))
            global_status = 'ok'
        notes = transcribe_segments(segments, remap_to_tuned_cents(contour, tuning), tuning, l_global)
        record('labelling', 'ok', global_pitch=global_status, notes=len(notes))

    if cfg.features_path is not None and analysis is not None:
        write_feature_csv(compute_frame_features(analysis, 0, tuning.a4), cfg.features_path,
                          analysis.sample_rate)

    result = TrackResult(notes=notes, diagnostics=diagnostics, contour=contour, onset_sets=onset_sets)
    write_outputs(result, cfg)
    return result


def write_diagnostics(diagnostics: List[Dict], path: Union[str, Path]):
    """One JSON object per stage and line"""
    with open(path, 'w') as f:
        for entry in diagnostics:
            f.write(json.dumps(entry, sort_keys=True) + '\n')


def read_diagnostics(path: Union[str, Path]) -> List[Dict]:
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]


def default_diagnostics_path(track: Path, notes_path: Optional[Path] = None) -> Path:
    """
    Where transcribe writes diagnostics when --diag is not given

    Next to the notes CSV when there is one, otherwise under
    DATA_DIR/diagnostics named after the track.
    """
    if notes_path is not None:
        return Path(notes_path).with_suffix('.diag.jsonl')
    directory = Path(config.DATA_DIR) / 'diagnostics'
    directory.mkdir(parents=True, exist_ok=True)
    return directory / f"{Path(track).stem}.diag.jsonl"


def write_outputs(result: TrackResult, cfg: PipelineConfig):
    if cfg.notes_path is not None:
        write_notes_csv(result.notes, cfg.notes_path)
    if cfg.midi_path is not None:
        write_midi(result.notes, cfg.midi_path)
    if cfg.diagnostics_path is not None:
        write_diagnostics(result.diagnostics, cfg.diagnostics_path)


def evaluate_segmentation(contour: PitchContour, gt_notes: List[NoteEvent],
                          rms: Optional[np.ndarray] = None) -> EvalReport:
    """
    Score only the note onsets found by segmenting a given contour

    Every retained segment start counts as an onset. Without an RMS track
    the RMS-decay detector is not used.
    """
    if rms is None:
        rms = np.zeros(contour.num_frames)
        detectors = tuple(d for d in DETECTORS if d != RMS_DECAY)
    else:
        detectors = DETECTORS
    segments, _ = segment_track(contour, rms, detectors)
    onsets = [float(contour.grid.frame_time(start, contour.sample_rate)) for start, _ in segments]
    return evaluate_onsets_only(onsets, gt_notes)
