"""
Test suite for contour tracking
"""
import pytest

from transcriber.contour_tracker import ContourTracker, PitchCandidate


def candidate(frame, cents, salience=1.0):
    return PitchCandidate(frame=frame, cents=cents, freq=440.0 * 2 ** (cents / 1200), salience=salience)


@pytest.fixture
def tracker():
    """Create a contour tracker instance"""
    return ContourTracker(max_distance=80.0)


def test_tracker_initialization(tracker):
    """Test tracker initializes correctly"""
    assert tracker.next_contour_id == 1
    assert len(tracker.active) == 0
    assert tracker.finished == []


def test_register_candidate(tracker):
    """Test registering a new contour"""
    contour = tracker.register(candidate(0, -500))

    assert contour.contour_id == 1
    assert contour.is_active is True
    assert contour.start_frame == 0
    assert contour.length == 1
    assert len(tracker.active) == 1


def test_link_within_distance(tracker):
    """Test small pitch steps extend the same contour"""
    for frame, cents in enumerate([-500, -470, -430, -420]):
        tracker.update([candidate(frame, cents)])

    contours = tracker.close()
    assert len(contours) == 1
    assert contours[0].length == 4
    assert contours[0].end_frame == 3


def test_jump_breaks_contour(tracker):
    """Test a jump beyond the limit starts a new contour"""
    tracker.update([candidate(0, 0)])
    tracker.update([candidate(1, 10)])
    tracker.update([candidate(2, 200)])

    contours = tracker.close()
    assert [c.length for c in contours] == [2, 1]
    assert contours[1].start_frame == 2


def test_empty_frame_closes_contours(tracker):
    """Test a frame without candidates closes every active contour"""
    tracker.update([candidate(0, 0), candidate(0, 700)])
    tracker.update([])

    assert len(tracker.active) == 0
    assert len(tracker.finished) == 2
    assert all(not c.is_active for c in tracker.finished)


def test_parallel_contours(tracker):
    """Test two simultaneous lines are tracked separately"""
    for frame in range(5):
        tracker.update([candidate(frame, 700 + frame, 0.5), candidate(frame, 0 - frame, 1.0)])

    contours = tracker.close()
    assert len(contours) == 2
    assert all(c.length == 5 for c in contours)
    means = sorted(c.mean_salience for c in contours)
    assert means == [pytest.approx(0.5), pytest.approx(1.0)]


def test_close_orders_by_start(tracker):
    """Test close returns contours ordered by start frame"""
    tracker.update([candidate(0, 0)])
    tracker.update([candidate(1, 500)])
    tracker.update([candidate(2, 505), candidate(2, -900)])

    starts = [c.start_frame for c in tracker.close()]
    assert starts == sorted(starts)
    assert starts == [0, 1, 2]
