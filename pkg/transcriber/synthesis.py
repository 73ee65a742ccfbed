"""
Deterministic synthetic performances for tests and installation checks
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from transcriber import config
from transcriber.audio_io import AudioClip, FrameGrid, MELODY_GRID
from transcriber.labelling import NoteEvent
from transcriber.melody import PitchContour

VOICE_MAX_FREQ = 4000.0
GUITAR_MAX_FREQ = 600.0


@dataclass
class SyntheticPerformance:
    clip: AudioClip
    notes: List[NoteEvent]
    voice_channel: int


def midi_to_hz(midi, tuning_cents: float = 0.0):
    return config.CENT_REFERENCE_HZ * 2.0 ** ((np.asarray(midi, dtype=np.float64) - config.MIDI_A4) / 12.0
                                              + tuning_cents / 1200.0)


def legato_notes(pitches: Sequence[int], onsets: Sequence[float], end: float) -> List[NoteEvent]:
    """Notes that each last until the next onset"""
    bounds = list(onsets) + [end]
    return [NoteEvent(float(bounds[i]), float(bounds[i + 1] - bounds[i]), int(p))
            for i, p in enumerate(pitches)]


def pitch_track(notes: Sequence[NoteEvent], times: np.ndarray, tuning_cents: float = 0.0,
                vibrato_rate: float = 5.0, vibrato_depth: float = 0.0) -> np.ndarray:
    """
    f0 in Hz at the given times, 0 outside every note

    Vibrato is a sinusoid of vibrato_depth cents with its phase taken from
    absolute time, so it runs continuously across legato notes.
    """
    f0 = np.zeros(len(times))
    vibrato = vibrato_depth * np.sin(2.0 * np.pi * vibrato_rate * times)
    for note in notes:
        active = (times >= note.onset_s) & (times < note.offset_s)
        f0[active] = midi_to_hz(note.midi, tuning_cents) * 2.0 ** (vibrato[active] / 1200.0)
    return f0


def contour_from_notes(notes: Sequence[NoteEvent], num_frames: Optional[int] = None,
                       tuning_cents: float = 0.0, vibrato_rate: float = 5.0,
                       vibrato_depth: float = 0.0, grid: FrameGrid = MELODY_GRID,
                       sample_rate: int = config.SAMPLE_RATE) -> PitchContour:
    """Frame-level pitch contour of a note sequence"""
    if num_frames is None:
        end = max((n.offset_s for n in notes), default=0.0)
        num_frames = int(np.ceil(end * sample_rate / grid.hop_size)) + 1
    times = grid.times(num_frames, sample_rate)
    return PitchContour(pitch_track(notes, times, tuning_cents, vibrato_rate, vibrato_depth),
                        grid, sample_rate)


def harmonic_tone(f0: np.ndarray, sample_rate: int = config.SAMPLE_RATE,
                  max_freq: float = VOICE_MAX_FREQ) -> np.ndarray:
    """Sum of harmonics with 1/k amplitudes below max_freq, following a per-sample f0"""
    phase = 2.0 * np.pi * np.cumsum(f0) / sample_rate
    signal = np.zeros(len(f0))
    top = f0.max() if len(f0) else 0.0
    if top <= 0:
        return signal
    lowest = f0[f0 > 0].min()
    for k in range(1, int(max_freq // lowest) + 1):
        audible = (k * f0 < max_freq) & (f0 > 0)
        signal += np.where(audible, np.sin(k * phase) / k, 0.0)
    return signal


def fade_edges(gain: np.ndarray, active: np.ndarray, sample_rate: int, fade_s: float = 0.01) -> np.ndarray:
    """Linear fades at the edges of active regions"""
    length = max(int(fade_s * sample_rate), 1)
    ramp = np.convolve(active.astype(np.float64), np.ones(length) / length, mode='same')
    return gain * np.minimum(ramp, 1.0) * active


def voice_signal(notes: Sequence[NoteEvent], num_samples: int, sample_rate: int = config.SAMPLE_RATE,
                 tuning_cents: float = 0.0, vibrato_rate: float = 5.0, vibrato_depth: float = 0.0,
                 notch_depth: float = 0.05, notch_s: float = 0.12) -> np.ndarray:
    """
    Sung line with harmonics up to 4 kHz

    Consecutive notes of equal pitch get an amplitude notch of notch_s
    seconds at their boundary.
    """
    times = np.arange(num_samples) / sample_rate
    f0 = pitch_track(notes, times, tuning_cents, vibrato_rate, vibrato_depth)
    gain = fade_edges(np.ones(num_samples), f0 > 0, sample_rate)

    ordered = sorted(notes)
    for previous, current in zip(ordered[:-1], ordered[1:]):
        if previous.midi == current.midi and abs(previous.offset_s - current.onset_s) < 1e-9:
            notch = np.abs(times - current.onset_s) < notch_s / 2
            gain[notch] *= notch_depth
    return gain * harmonic_tone(f0, sample_rate, VOICE_MAX_FREQ)


def guitar_signal(plucks: Sequence[Tuple[float, float]], num_samples: int,
                  sample_rate: int = config.SAMPLE_RATE, decay: float = 3.0,
                  until: Optional[Sequence[float]] = None) -> np.ndarray:
    """
    Plucked low-band tones with harmonics up to 600 Hz

    Args:
        plucks: (onset_s, fundamental_hz) pairs
        until: Optional end time per pluck, defaults to the next pluck
    """
    times = np.arange(num_samples) / sample_rate
    signal = np.zeros(num_samples)
    ordered = sorted(plucks)
    for i, (onset, freq) in enumerate(ordered):
        end = until[i] if until is not None else (ordered[i + 1][0] if i + 1 < len(ordered) else times[-1] + 1)
        active = (times >= onset) & (times < end)
        t = times[active] - onset
        envelope = np.exp(-decay * t) * np.minimum(t / 0.005, 1.0)
        tone = sum(np.sin(2.0 * np.pi * k * freq * t) / k
                   for k in range(1, int(GUITAR_MAX_FREQ // freq) + 1))
        signal[active] += envelope * tone
    return signal


def normalise(signal: np.ndarray, peak: float = 0.9) -> np.ndarray:
    top = np.abs(signal).max() if len(signal) else 0.0
    return signal if top == 0 else signal * (peak / top)


def synthesize_performance(pitches: Sequence[int], onsets: Sequence[float], end: float,
                           duration: Optional[float] = None, tuning_cents: float = 20.0,
                           vibrato_rate: float = 5.0, vibrato_depth: float = 30.0,
                           accompaniment: Sequence[Tuple[float, float]] = (),
                           crosstalk: float = 0.2, stereo: bool = True,
                           sample_rate: int = config.SAMPLE_RATE) -> SyntheticPerformance:
    """
    Voice + accompaniment mix with the voice panned to channel 0

    Args:
        pitches, onsets, end: Legato note sequence of the voice
        duration: Clip length in seconds, defaults to end + 0.5
        tuning_cents: Offset of the performance from A4 = 440 Hz
        accompaniment: (onset_s, fundamental_hz) plucks panned to channel 1
        crosstalk: Level of each source in the other channel
        stereo: False returns a mono mix

    Returns:
        SyntheticPerformance with the clip and the ground-truth notes
    """
    duration = duration if duration is not None else end + 0.5
    num_samples = int(round(duration * sample_rate))
    notes = legato_notes(pitches, onsets, end)

    voice = voice_signal(notes, num_samples, sample_rate, tuning_cents, vibrato_rate, vibrato_depth)
    guitar = guitar_signal(accompaniment, num_samples, sample_rate) if accompaniment else np.zeros(num_samples)

    if stereo:
        left = voice + crosstalk * guitar
        right = guitar + crosstalk * voice
        peak = max(np.abs(left).max(), np.abs(right).max(), 1e-12)
        channels = np.vstack([left, right]) * (0.9 / peak)
    else:
        channels = normalise(voice + guitar)[np.newaxis, :]
    return SyntheticPerformance(AudioClip(channels, sample_rate), notes, voice_channel=0)


# Reference melody: repeated pitches, rising and falling semitone steps,
# irregular note lengths so onsets meet the vibrato at every phase
REFERENCE_PITCHES = (64, 66, 66, 64, 63, 64, 66, 66, 65, 64, 65, 67, 68, 66, 64)
REFERENCE_DURATIONS = (1.8, 1.6, 2.0, 1.9, 1.7, 2.1, 1.5, 1.9, 1.8, 2.0, 1.6, 1.9, 2.1, 1.7, 1.9)
REFERENCE_START_S = 1.0
REFERENCE_GUITAR_HZ = (73.42, 82.41, 98.0, 110.0)


def reference_performance(duration: float = 30.0, vibrato_depth: float = 50.0,
                          tuning_cents: float = 20.0, crosstalk: float = 0.1,
                          pluck_every: float = 0.6) -> SyntheticPerformance:
    """
    30 s stereo voice + guitar performance used for end-to-end accuracy checks

    Fifteen legato notes with 5 Hz vibrato start at 1 s; low guitar plucks
    run through the whole clip, so the first second and the tail after the
    last note are accompaniment only.
    """
    onsets = REFERENCE_START_S + np.concatenate(([0.0], np.cumsum(REFERENCE_DURATIONS[:-1])))
    end = REFERENCE_START_S + sum(REFERENCE_DURATIONS)
    plucks = [(round(float(t), 6), REFERENCE_GUITAR_HZ[i % len(REFERENCE_GUITAR_HZ)])
              for i, t in enumerate(np.arange(0.0, duration, pluck_every))]
    return synthesize_performance(REFERENCE_PITCHES, onsets.tolist(), end, duration=duration,
                                  tuning_cents=tuning_cents, vibrato_depth=vibrato_depth,
                                  accompaniment=plucks, crosstalk=crosstalk)


@dataclass
class AlternatingPerformance:
    """Mono clip of sung sections separated by a guitar interlude"""
    clip: AudioClip
    voice_spans: List[Tuple[float, float]]
    guitar_span: Tuple[float, float]
    voice_hz: float
    guitar_hz: float


def steady_voice(spans: Sequence[Tuple[float, float]], voice_hz: float, num_samples: int,
                 sample_rate: int = config.SAMPLE_RATE) -> np.ndarray:
    """Constant-pitch voice-band tone inside each (start_s, end_s) span"""
    times = np.arange(num_samples) / sample_rate
    f0 = np.zeros(num_samples)
    for start, end in spans:
        f0[(times >= start) & (times < end)] = voice_hz
    return fade_edges(np.ones(num_samples), f0 > 0, sample_rate) * harmonic_tone(f0, sample_rate, VOICE_MAX_FREQ)


def alternating_voice_guitar(voice_spans: Sequence[Tuple[float, float]] = ((0.5, 3.5), (6.5, 9.5)),
                             guitar_span: Tuple[float, float] = (3.5, 6.5), duration: float = 10.0,
                             voice_hz: float = 300.0, guitar_hz: float = 110.0,
                             pluck_every: float = 0.5,
                             sample_rate: int = config.SAMPLE_RATE) -> AlternatingPerformance:
    """
    Voice-band harmonic tone alternating with a low-band plucked tone

    The voice has harmonics up to 4 kHz, the guitar stops at 600 Hz and is
    re-plucked every pluck_every seconds inside guitar_span.
    """
    num_samples = int(round(duration * sample_rate))
    voice = steady_voice(voice_spans, voice_hz, num_samples, sample_rate)

    onsets = np.arange(guitar_span[0], guitar_span[1] - 1e-9, pluck_every)
    ends = [min(t + pluck_every, guitar_span[1]) for t in onsets]
    guitar = guitar_signal([(float(t), guitar_hz) for t in onsets], num_samples, sample_rate, until=ends)

    clip = AudioClip(normalise(voice + guitar)[np.newaxis, :], sample_rate)
    return AlternatingPerformance(clip, [tuple(s) for s in voice_spans], tuple(guitar_span),
                                  voice_hz, guitar_hz)


def voice_with_melodic_guitar(voice_spans: Sequence[Tuple[float, float]] = ((0.5, 3.5), (10.0, 13.0)),
                              held_span: Tuple[float, float] = (4.5, 6.0), ringing_at: float = 7.0,
                              ringing_s: float = 2.0, duration: float = 13.5,
                              voice_hz: float = 293.66, guitar_hz: float = 196.0,
                              sample_rate: int = config.SAMPLE_RATE) -> AlternatingPerformance:
    """
    Mono clip where the guitar plays inside the melody pitch range

    A held guitar tone in held_span is salient enough to pass voicing and
    enter the melody. A louder pluck of the same tone at ringing_at decays
    over ringing_s and falls below the voicing threshold, so frames with the
    guitar's timbre also reach the non-vocal class.
    """
    num_samples = int(round(duration * sample_rate))
    voice = steady_voice(voice_spans, voice_hz, num_samples, sample_rate)

    held = guitar_signal([(held_span[0], guitar_hz)], num_samples, sample_rate, decay=0.0,
                         until=[held_span[1]])
    ringing = 1.5 * guitar_signal([(ringing_at, guitar_hz)], num_samples, sample_rate,
                                  until=[ringing_at + ringing_s])

    clip = AudioClip(normalise(voice + held + ringing)[np.newaxis, :], sample_rate)
    return AlternatingPerformance(clip, [tuple(s) for s in voice_spans], tuple(held_span),
                                  voice_hz, guitar_hz)


def span_contour(spans: Sequence[Tuple[float, float, float]], num_frames: int,
                 grid: FrameGrid = MELODY_GRID, sample_rate: int = config.SAMPLE_RATE) -> PitchContour:
    """Contour that is f0 inside each (start_s, end_s, f0_hz) span and unvoiced elsewhere"""
    times = grid.times(num_frames, sample_rate)
    f0 = np.zeros(num_frames)
    for start, end, hz in spans:
        f0[(times >= start) & (times < end)] = hz
    return PitchContour(f0, grid, sample_rate)
