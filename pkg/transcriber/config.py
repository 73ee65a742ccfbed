"""
Configuration settings for the singing transcription toolkit
"""
import os
from pathlib import Path

# Base directory
BASE_DIR = Path(__file__).resolve().parent.parent

# Audio Settings
SAMPLE_RATE = 44100  # All window and hop sizes below are tied to this rate
MAX_CHANNELS = 2

# Channel Selection (spectral band ratio)
SBR_WINDOW_SIZE = 4096
SBR_HOP_SIZE = 1024
SBR_ZERO_PAD = 2
SBR_UPPER_BAND = (500.0, 6000.0)  # Hz, vocal presence
SBR_LOWER_BAND = (80.0, 400.0)  # Hz, guitar body

# Predominant Melody Settings
MELODY_WINDOW_SIZE = 4096
MELODY_HOP_SIZE = 128
MELODY_ZERO_PAD = 2
MELODY_MIN_F0 = 120.0  # Hz
MELODY_MAX_F0 = 720.0  # Hz
MELODY_BIN_CENTS = 10.0  # Resolution of the salience candidate grid
MELODY_NUM_HARMONICS = 8
MELODY_HARMONIC_WEIGHT = 0.8  # Weight of harmonic i is 0.8^(i-1)
MELODY_PEAK_THRESHOLD_DB = 30.0  # Spectral peaks this far below the frame maximum are ignored
MELODY_MAX_PEAKS = 20  # Strongest spectral peaks considered per frame
MELODY_CANDIDATE_RATIO = 0.5  # Salience peaks below this fraction of the frame maximum are not tracked
MELODY_MAX_CANDIDATES = 3  # Pitch candidates tracked per frame
MELODY_LINK_CENTS = 80.0  # Max pitch jump between adjacent frames of one contour
MELODY_MIN_CONTOUR_S = 0.05  # Shorter runs of linked peaks are not contours
TAU_V_POLYPHONIC = 0.2
TAU_V_MONOPHONIC = 3.0
TAU_V_RANGE = (-2.0, 3.0)
CONTOUR_SPACING_TOLERANCE = 0.10  # Allowed relative deviation of contour file spacing

# Contour Filtering (bark band classifier)
BARK_WINDOW_SIZE = 1024
BARK_HOP_SIZE = 128
BARK_ZERO_PAD = 1
BARK_BAND_EDGES = (0.0, 50.0, 100.0, 150.0, 200.0, 300.0, 400.0,
                   510.0, 630.0, 770.0, 920.0, 1080.0, 1270.0)
MIN_CLASS_FRAMES = 13  # One more than the feature dimension
COVARIANCE_REGULARISATION = 1e-6  # Scaled by trace / 12
VOCAL_SMOOTHING_S = 1.0
VOCAL_SMOOTHING_THRESHOLD = 0.5

# RMS Settings
RMS_WINDOW_SIZE = 4096
RMS_HOP_SIZE = 128

# Chroma Settings
CHROMA_WINDOW_SIZE = 4096
CHROMA_HOP_SIZE = 1024
CHROMA_ZERO_PAD = 2
CHROMA_MIN_FREQ = 80.0  # Hz
CHROMA_MAX_FREQ = 5000.0  # Hz

# Segmentation Settings
CENT_REFERENCE_HZ = 440.0
ENVELOPE_MIN_JUMP_CENTS = 80.0
ENVELOPE_MAX_GAP_S = 0.25
GAUSS_SIGMA_S = 0.0435
GAUSS_SUPPORT_S = 0.150  # One-sided, effective filter length 300 ms
GAUSS_MIN_SLOPE = 4.0  # Cents per frame of the smoothed contour
RMS_LOCAL_HALF_WIDTH = 50  # Frames on each side for the local RMS mean
RMS_DECAY_THRESHOLD_DB = -10.0
PITCH_DIP_Z_THRESHOLD = -2.0
PITCH_DIP_EDGE_S = 0.125  # Minima this close to a segment end are transitions
MIN_NOTE_DURATION_S = 0.05
ONSET_MERGE_S = 0.05

# Pitch Labelling Settings
LOCAL_PITCH_SIGMA = 0.5  # Semitones, a quarter tone
LOCAL_PITCH_MARGIN = 3  # Extra semitone bins on each side of the histogram
PITCH_RANGE_SEMITONES = 8  # Around the track median
TUNING_SMOOTHING_S = 0.2  # One period of 5 Hz vibrato
MIDI_A4 = 69

# Export Settings
MIDI_TEMPO = 120.0
MIDI_VELOCITY = 80
MIDI_PROGRAM = 52  # Choir Aahs
CSV_TIME_DECIMALS = 6

# Evaluation Settings
ONSET_TOLERANCE_S = 0.15
DURATION_TOLERANCE = 0.30  # Relative to the ground truth duration
TRANSPOSITIONS = (0, -1, 1)  # Ties resolve to the first entry

# Batch Settings
BATCH_WORKERS = int(os.environ.get('TRANSCRIBER_WORKERS', 2))

# Logging Settings
LOG_LEVEL = os.environ.get('TRANSCRIBER_LOG_LEVEL', 'INFO')

# Storage Settings
DATA_DIR = Path(os.environ.get('TRANSCRIBER_DATA_DIR', BASE_DIR / 'data'))
LOG_DIR = DATA_DIR / 'logs'
LOG_FILE = LOG_DIR / 'transcriber.log'
DATABASE_PATH = DATA_DIR / 'results.db'
