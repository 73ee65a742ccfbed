"""
Contour tracking: link per-frame pitch candidates into pitch contours
"""
import numpy as np
from typing import Dict, List
from dataclasses import dataclass, field
import logging
from scipy.spatial import distance as dist

from transcriber import config

logger = logging.getLogger(__name__)


@dataclass
class PitchCandidate:
    """A salience peak in one frame"""
    frame: int
    cents: float  # Relative to 440 Hz
    freq: float
    salience: float


@dataclass
class TrackedContour:
    """Pitch candidates linked across consecutive frames"""
    contour_id: int
    start_frame: int
    freqs: List[float] = field(default_factory=list)
    cents: List[float] = field(default_factory=list)
    saliences: List[float] = field(default_factory=list)
    is_active: bool = True

    @property
    def end_frame(self) -> int:
        return self.start_frame + len(self.freqs) - 1

    @property
    def length(self) -> int:
        return len(self.freqs)

    @property
    def last_cents(self) -> float:
        return self.cents[-1]

    @property
    def mean_salience(self) -> float:
        return float(np.mean(self.saliences)) if self.saliences else 0.0

    def append(self, candidate: PitchCandidate):
        self.freqs.append(candidate.freq)
        self.cents.append(candidate.cents)
        self.saliences.append(candidate.salience)


class ContourTracker:
    """
    Track pitch candidates frame by frame
    A contour continues while a candidate in the next frame lies within
    max_distance cents of its last pitch; otherwise it is closed.
    """

    def __init__(self, max_distance: float = config.MELODY_LINK_CENTS):
        """
        Initialize the contour tracker

        Args:
            max_distance: Maximum pitch jump in cents between adjacent frames
        """
        self.next_contour_id = 1
        self.active: Dict[int, TrackedContour] = {}
        self.finished: List[TrackedContour] = []
        self.max_distance = max_distance

    def register(self, candidate: PitchCandidate) -> TrackedContour:
        """Start a new contour at a candidate"""
        contour = TrackedContour(contour_id=self.next_contour_id, start_frame=candidate.frame)
        contour.append(candidate)
        self.next_contour_id += 1
        self.active[contour.contour_id] = contour
        return contour

    def deregister(self, contour_id: int):
        """Close an active contour"""
        contour = self.active.pop(contour_id, None)
        if contour is not None:
            contour.is_active = False
            self.finished.append(contour)

    def update(self, candidates: List[PitchCandidate]) -> Dict[int, TrackedContour]:
        """
        Extend active contours with the candidates of the next frame

        Args:
            candidates: Pitch candidates of a single frame

        Returns:
            Dictionary of contour_id -> active TrackedContour
        """
        if len(candidates) == 0:
            for contour_id in list(self.active.keys()):
                self.deregister(contour_id)
            return self.active

        if len(self.active) == 0:
            for candidate in candidates:
                self.register(candidate)
            return self.active

        contour_ids = list(self.active.keys())
        last_cents = np.array([[self.active[c].last_cents] for c in contour_ids])
        input_cents = np.array([[c.cents] for c in candidates])

        D = dist.cdist(last_cents, input_cents, metric='cityblock')

        # Closest pairs first
        rows = D.min(axis=1).argsort()
        cols = D.argmin(axis=1)[rows]

        used_rows = set()
        used_cols = set()

        for (row, col) in zip(rows, cols):
            if row in used_rows or col in used_cols:
                continue
            if D[row, col] > self.max_distance:
                continue
            self.active[contour_ids[row]].append(candidates[col])
            used_rows.add(row)
            used_cols.add(col)

        for row in set(range(D.shape[0])) - used_rows:
            self.deregister(contour_ids[row])

        for col in sorted(set(range(D.shape[1])) - used_cols):
            self.register(candidates[col])

        return self.active

    def close(self) -> List[TrackedContour]:
        """Close all active contours and return every contour, ordered by start frame"""
        for contour_id in list(self.active.keys()):
            self.deregister(contour_id)
        contours = sorted(self.finished, key=lambda c: (c.start_frame, c.contour_id))
        logger.debug(f"Tracked {len(contours)} contours")
        return contours
