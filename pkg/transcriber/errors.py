"""
Exceptions raised by the transcription toolkit
"""


class TranscriptionError(Exception):
    """Base class for all toolkit errors"""


class AudioFormatError(TranscriptionError):
    """Audio file cannot be used (unreadable, bad encoding, wrong rate)"""


class ContourFileError(TranscriptionError):
    """Pitch contour or note file is malformed"""


class DegenerateClassError(TranscriptionError):
    """A vocal / non-vocal class has too few frames to fit a Gaussian"""

    def __init__(self, label: str, count: int, required: int):
        super().__init__(f"class '{label}' has {count} frames, need at least {required}")
        self.label = label
        self.count = count
        self.required = required


class ConfigError(TranscriptionError):
    """Invalid configuration key or value"""


class StageError(TranscriptionError):
    """Error raised inside a pipeline stage, tagged with the stage name"""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
