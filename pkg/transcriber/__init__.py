"""
Singing transcription toolkit - note-level transcription of ornamented
singing from voice + guitar recordings
"""

__version__ = '1.0.0'
__author__ = 'Singing Transcription Toolkit'

import logging
from typing import Optional

from transcriber import config

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(level: Optional[str] = None, log_to_file: bool = True):
    """
    Configure root logging for command line use

    Args:
        level: Logging level name, defaults to config.LOG_LEVEL
        log_to_file: Also write to config.LOG_FILE
    """
    handlers = [logging.StreamHandler()]
    if log_to_file:
        config.LOG_DIR.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(config.LOG_FILE))

    logging.basicConfig(
        level=getattr(logging, (level or config.LOG_LEVEL).upper()),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True
    )
    logging.getLogger(__name__).info(f"Singing transcription toolkit v{__version__} initialized")
